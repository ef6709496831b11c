"""Experiment config files: INI-style text with one section per strategy.

Example::

    [experiment]
    name = fig1
    variant = plain
    H = 20
    n = 6
    p_max = 1.0
    sigma2 = 10.0
    K = 100
    runs = 200
    seed = 20260810
    prior_alpha_mean = 7.5
    prior_alpha_var = 10.0
    prior_beta_mean = -4.0
    prior_beta_var = 10.0
    prior_phi_mean = 0.0
    prior_phi_var = 10.0

    [strategy:TP]
    kind = tp

    [strategy:weak-ts]
    kind = weak-ts

An optional ``sweep_n = 2,6,10,14`` key expands into one experiment per
value (CSV experiment labels ``n=2`` etc.); an optional ``[async]``
section with ``schedule = t,H[,z...];...`` switches to the
overlapping-life-cycle runner.  Hashing canonicalizes the parsed
key/values (sorted sections and keys, normalized numerals) so equivalent
files hash identically.
"""

from __future__ import annotations

import configparser
import hashlib
import re
from dataclasses import dataclass, replace

import numpy as np

from .harness import ExperimentConfig, LaunchEvent
from .model import ModelSpec, Variant
from .strategies import StrategyConfig


class ConfigError(ValueError):
    """Invalid experiment config; carries a line-anchored message."""


_EXPERIMENT_KEYS = {
    "name", "variant", "H", "n", "q", "m", "p_max", "sigma2", "K", "runs",
    "seed", "sweep_n",
    "prior_alpha_mean", "prior_alpha_var", "prior_beta_mean",
    "prior_beta_var", "prior_phi_mean", "prior_phi_var",
}
_STRATEGY_KEYS = {"kind", "epsilon", "nsd_resample_limit"}


def _key_line(text: str, section: str, key: str) -> int:
    """Best-effort line number of ``key`` inside ``[section]`` (1-based)."""
    in_section = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("["):
            in_section = stripped == f"[{section}]"
            continue
        if in_section and re.match(rf"^\s*{re.escape(key)}\s*[=:]", line,
                                   re.IGNORECASE):
            return lineno
    return 0


@dataclass
class ParsedConfig:
    """A validated config file plus its canonical hash."""

    name: str
    spec: ModelSpec
    K: int
    runs: int
    seed: int
    prior_hyper: dict[str, float]
    strategies: list[tuple[str, StrategyConfig]]
    sweep_n: list[int] | None
    launch_schedule: list[LaunchEvent] | None
    config_hash: str

    def build_prior(self, spec: ModelSpec) -> tuple[np.ndarray, np.ndarray]:
        """Diagonal prior implied by the per-block hyperparameters."""
        hp = self.prior_hyper
        n, q, m = spec.n, spec.q, spec.m
        if spec.variant is Variant.PLAIN:
            sizes = [1, 1]
        elif spec.variant is Variant.COVARIATE:
            sizes = [1, m]
        else:
            sizes = [q, q * q]
        n_phi = spec.param_dim - sum(sizes)
        mu = np.concatenate([
            np.full(sizes[0], hp["prior_alpha_mean"]),
            np.full(sizes[1], hp["prior_beta_mean"]),
            np.full(n_phi, hp["prior_phi_mean"]),
        ])
        var = np.concatenate([
            np.full(sizes[0], hp["prior_alpha_var"]),
            np.full(sizes[1], hp["prior_beta_var"]),
            np.full(n_phi, hp["prior_phi_var"]),
        ])
        return mu, np.diag(var)

    def experiments(self):
        """Yield (experiment_label, ExperimentConfig) pairs."""
        if self.sweep_n is None:
            mu, sigma = self.build_prior(self.spec)
            yield self.name, ExperimentConfig(
                spec=self.spec, prior_mu=mu, prior_sigma=sigma,
                strategies=self.strategies, K=self.K, runs=self.runs,
                seed=self.seed, launch_schedule=self.launch_schedule)
            return
        for n in self.sweep_n:
            spec = replace(self.spec, n=n)
            mu, sigma = self.build_prior(spec)
            yield f"n={n}", ExperimentConfig(
                spec=spec, prior_mu=mu, prior_sigma=sigma,
                strategies=self.strategies, K=self.K, runs=self.runs,
                seed=self.seed, launch_schedule=self.launch_schedule)


def _canonical_value(value: str) -> str:
    v = " ".join(value.split())
    try:
        return str(int(v))
    except ValueError:
        pass
    try:
        return repr(float(v))
    except ValueError:
        return v


def canonical_text(sections: dict[str, dict[str, str]]) -> str:
    lines = []
    for section in sorted(sections):
        lines.append(f"[{section}]")
        for key in sorted(sections[section]):
            lines.append(f"{key}={_canonical_value(sections[section][key])}")
    return "\n".join(lines) + "\n"


def config_hash(sections: dict[str, dict[str, str]]) -> str:
    return hashlib.sha256(canonical_text(sections).encode("utf-8")).hexdigest()


def _fail(path: str, text: str, section: str, key: str, msg: str):
    lineno = _key_line(text, section, key)
    anchor = f"{path}:{lineno}" if lineno else path
    raise ConfigError(f"{anchor}: [{section}] {key}: {msg}")


def _get_typed(path, text, section, items, key, cast, default=None,
               required=False):
    lookup = key.lower()
    if lookup not in items:
        if required:
            _fail(path, text, section, key, "missing required key")
        return default
    raw = items[lookup]
    try:
        return cast(raw)
    except (TypeError, ValueError):
        _fail(path, text, section, key,
              f"cannot parse {raw!r} as {cast.__name__}")


def _parse_schedule(raw: str) -> list[LaunchEvent]:
    events = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [float(x) for x in chunk.split(",")]
        if len(parts) < 2:
            raise ValueError("schedule entries need at least t,H")
        t, H = int(parts[0]), int(parts[1])
        z = np.array(parts[2:]) if len(parts) > 2 else None
        events.append(LaunchEvent(t=t, H=H, z=z))
    if not events:
        raise ValueError("empty schedule")
    return events


def parse_config(path: str, text: str | None = None) -> ParsedConfig:
    """Parse and validate a config file (raises ConfigError with location)."""
    if text is None:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    sections = {name: dict(cp.items(name)) for name in cp.sections()}
    if "experiment" not in sections:
        raise ConfigError(f"{path}: missing [experiment] section")
    exp = sections["experiment"]
    for key in exp:
        if key.lower() not in {k.lower() for k in _EXPERIMENT_KEYS}:
            _fail(path, text, "experiment", key, "unknown key")

    name = exp.get("name", "experiment")
    variant_raw = exp.get("variant", "plain").strip().lower()
    try:
        variant = Variant(variant_raw)
    except ValueError:
        _fail(path, text, "experiment", "variant",
              f"unknown variant {variant_raw!r}")
    g = lambda key, cast, default=None, required=False: _get_typed(
        path, text, "experiment", exp, key, cast, default, required)
    H = g("H", int, required=True)
    n = g("n", int, required=True)
    q = g("q", int, 1)
    m = g("m", int, 1)
    p_max = g("p_max", float, 1.0)
    sigma2 = g("sigma2", float, 1.0)
    K = g("K", int, required=True)
    runs = g("runs", int, required=True)
    seed = g("seed", int, required=True)
    if K < 1:
        _fail(path, text, "experiment", "K", f"must be >= 1, got {K}")
    if runs < 1:
        _fail(path, text, "experiment", "runs", f"must be >= 1, got {runs}")
    try:
        spec = ModelSpec(variant=variant, H=H, n=n, q=q, m=m,
                         p_max=p_max, sigma2=sigma2)
    except ValueError as exc:
        _fail(path, text, "experiment", "variant", str(exc))

    prior_hyper = {}
    for key in ("prior_alpha_mean", "prior_alpha_var", "prior_beta_mean",
                "prior_beta_var", "prior_phi_mean", "prior_phi_var"):
        default = 0.0 if key.endswith("mean") else 1.0
        prior_hyper[key] = g(key, float, default)
        if key.endswith("var") and prior_hyper[key] <= 0:
            _fail(path, text, "experiment", key,
                  f"must be positive, got {prior_hyper[key]}")

    sweep_n = None
    if "sweep_n" in exp:
        try:
            sweep_n = [int(x) for x in exp["sweep_n"].split(",") if x.strip()]
        except ValueError:
            _fail(path, text, "experiment", "sweep_n",
                  "expected comma-separated integers")
        if not sweep_n:
            _fail(path, text, "experiment", "sweep_n", "empty sweep")
        for nv in sweep_n:
            if not 0 <= nv < H:
                _fail(path, text, "experiment", "sweep_n",
                      f"swept n={nv} must satisfy 0 <= n < H={H}")

    strategies: list[tuple[str, StrategyConfig]] = []
    for section in cp.sections():
        if not section.startswith("strategy:"):
            continue
        label = section.split(":", 1)[1].strip()
        items = sections[section]
        for key in items:
            if key not in _STRATEGY_KEYS:
                _fail(path, text, section, key, "unknown key")
        kind = items.get("kind", label).strip().lower()
        epsilon = _get_typed(path, text, section, items, "epsilon", float, 0.0)
        limit = _get_typed(path, text, section, items, "nsd_resample_limit",
                           int, 100)
        try:
            strategies.append((label, StrategyConfig(
                kind=kind, epsilon=epsilon, nsd_resample_limit=limit)))
        except ValueError as exc:
            _fail(path, text, section, "kind", str(exc))
    if not strategies:
        raise ConfigError(f"{path}: no [strategy:...] sections")

    launch_schedule = None
    if "async" in sections:
        raw = sections["async"].get("schedule", "")
        try:
            launch_schedule = _parse_schedule(raw)
        except ValueError as exc:
            _fail(path, text, "async", "schedule", str(exc))
        if len(launch_schedule) != K:
            _fail(path, text, "experiment", "K",
                  f"K={K} must equal the {len(launch_schedule)} schedule "
                  "entries")
        if sweep_n is not None:
            _fail(path, text, "experiment", "sweep_n",
                  "sweeps cannot be combined with [async]")

    parsed = ParsedConfig(
        name=name, spec=spec, K=K, runs=runs, seed=seed,
        prior_hyper=prior_hyper, strategies=strategies, sweep_n=sweep_n,
        launch_schedule=launch_schedule, config_hash=config_hash(sections))
    # surface deeper validation problems (prior dims, n vs H, schedule)
    try:
        for _label, _cfg in parsed.experiments():
            pass
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parsed
