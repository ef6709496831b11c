/**
 * plotgen <figure-spec.json>
 *
 * Reads one JSON figure spec and renders an SVG chart from the
 * simulator's regret CSVs.  Relative paths inside the spec resolve
 * against the working directory.  Nothing is written unless rendering
 * succeeds, and a rerun on unchanged inputs reproduces the same bytes.
 */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { dirname, resolve } from "node:path";

import { renderChart, Series } from "./chart.js";
import { CsvError, parseRegretCsv, RegretRow } from "./csv.js";

const GROUP_KEYS = ["strategy", "n", "experiment"] as const;
type GroupKey = (typeof GROUP_KEYS)[number];

export interface FigureSpec {
    csv: string[];
    group_by: GroupKey;
    log_y: boolean;
    out: string;
    title?: string;
}

export function loadSpec(path: string): FigureSpec {
    let raw: unknown;
    try {
        raw = JSON.parse(readFileSync(path, "utf-8"));
    } catch (e) {
        throw new Error(`${path}: ${(e as Error).message}`);
    }
    const spec = raw as Partial<FigureSpec>;
    if (!Array.isArray(spec.csv) || spec.csv.length === 0 ||
        !spec.csv.every((p) => typeof p === "string")) {
        throw new Error(`${path}: 'csv' must be a non-empty list of paths`);
    }
    if (!GROUP_KEYS.includes(spec.group_by as GroupKey)) {
        throw new Error(
            `${path}: 'group_by' must be one of ${GROUP_KEYS.join(", ")}`,
        );
    }
    if (typeof spec.log_y !== "boolean") {
        throw new Error(`${path}: 'log_y' must be a boolean`);
    }
    if (typeof spec.out !== "string" || spec.out.length === 0) {
        throw new Error(`${path}: 'out' must be an output path`);
    }
    return {
        csv: spec.csv,
        group_by: spec.group_by as GroupKey,
        log_y: spec.log_y,
        out: spec.out,
        title: typeof spec.title === "string" ? spec.title : "per-episode regret",
    };
}

/**
 * Group rows into plot series.  "strategy" keys on the strategy column;
 * "n" and "experiment" key on the experiment column (sweep runs label
 * experiments "n=2", "n=6", ... so the memory-duration figure groups by
 * that column).  Series keep first-appearance order.
 */
export function groupSeries(rows: RegretRow[], key: GroupKey): Series[] {
    const labelOf = (r: RegretRow): string =>
        key === "strategy" ? r.strategy : r.experiment;
    const order: string[] = [];
    const byLabel = new Map<string, RegretRow[]>();
    for (const row of rows) {
        const label = labelOf(row);
        if (!byLabel.has(label)) {
            byLabel.set(label, []);
            order.push(label);
        }
        byLabel.get(label)!.push(row);
    }
    return order.map((label) => {
        const rs = byLabel.get(label)!.slice().sort((a, b) => a.episode - b.episode);
        return {
            label,
            episodes: rs.map((r) => r.episode),
            mean: rs.map((r) => r.mean),
            stderr: rs.map((r) => r.stderr),
        };
    });
}

export function run(specPath: string): string {
    const spec = loadSpec(specPath);
    const rows: RegretRow[] = [];
    for (const csvPath of spec.csv) {
        const full = resolve(csvPath);
        let text: string;
        try {
            text = readFileSync(full, "utf-8");
        } catch (e) {
            throw new Error(`${csvPath}: ${(e as Error).message}`);
        }
        rows.push(...parseRegretCsv(text, csvPath));
    }
    const series = groupSeries(rows, spec.group_by);
    const svg = renderChart(series, {
        title: spec.title ?? "per-episode regret",
        logY: spec.log_y,
    });
    const outPath = resolve(spec.out);
    mkdirSync(dirname(outPath), { recursive: true });
    writeFileSync(outPath, svg, "utf-8");
    return outPath;
}

export function main(): void {
    const arg = process.argv[2];
    if (!arg) {
        console.error("usage: plotgen <figure-spec.json>");
        process.exit(2);
    }
    try {
        const out = run(arg);
        console.log(`wrote ${out}`);
    } catch (e) {
        const msg = e instanceof CsvError || e instanceof Error
            ? (e as Error).message
            : String(e);
        console.error(`plotgen: ${msg}`);
        process.exit(1);
    }
}
