/**
 * Deterministic SVG line chart: one line per series with a +/-1
 * standard-error band.  No timestamps, no randomness -- the same input
 * always renders to the same bytes.
 */

export interface Series {
    label: string;
    episodes: number[];
    mean: number[];
    stderr: number[];
}

export interface ChartOptions {
    title: string;
    logY: boolean;
    width?: number;
    height?: number;
}

const PALETTE = [
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
];

const MARGIN = { top: 44, right: 24, bottom: 46, left: 64 };

function fmt(v: number): string {
    if (v === 0) return "0";
    const a = Math.abs(v);
    if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
    return String(Number(v.toPrecision(4)));
}

function px(v: number): string {
    return v.toFixed(2);
}

function linearTicks(lo: number, hi: number, count = 6): number[] {
    if (hi <= lo) return [lo];
    const span = hi - lo;
    const step0 = span / count;
    const mag = Math.pow(10, Math.floor(Math.log10(step0)));
    const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= count) ?? mag * 10;
    const ticks: number[] = [];
    for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-12 * span; t += step) {
        ticks.push(Math.abs(t) < step * 1e-9 ? 0 : t);
    }
    return ticks;
}

function logTicks(lo: number, hi: number): number[] {
    const ticks: number[] = [];
    for (let e = Math.ceil(Math.log10(lo)); Math.pow(10, e) <= hi * (1 + 1e-12); e++) {
        ticks.push(Math.pow(10, e));
    }
    return ticks.length > 0 ? ticks : [lo, hi];
}

export function renderChart(series: Series[], opts: ChartOptions): string {
    if (series.length === 0) {
        throw new Error("nothing to plot: no series");
    }
    const width = opts.width ?? 860;
    const height = opts.height ?? 520;
    const plotW = width - MARGIN.left - MARGIN.right;
    const plotH = height - MARGIN.top - MARGIN.bottom;

    const xs = series.flatMap((s) => s.episodes);
    const xMin = Math.min(...xs);
    const xMax = Math.max(...xs);
    const allVals = series.flatMap((s) =>
        s.mean.flatMap((m, i) => [m - s.stderr[i], m + s.stderr[i]]),
    );

    let yMin: number;
    let yMax: number;
    let floor = 0;
    if (opts.logY) {
        const positives = allVals.filter((v) => v > 0);
        if (positives.length === 0) {
            throw new Error("log scale needs at least one positive value");
        }
        floor = Math.min(...positives) / 2;
        yMin = floor;
        yMax = Math.max(...positives);
    } else {
        yMin = Math.min(...allVals);
        yMax = Math.max(...allVals);
        if (yMin === yMax) {
            yMin -= 1;
            yMax += 1;
        }
    }

    const xScale = (x: number): number =>
        MARGIN.left + ((x - xMin) / Math.max(xMax - xMin, 1e-12)) * plotW;
    const yScale = (y: number): number => {
        let t: number;
        if (opts.logY) {
            const clamped = Math.max(y, floor);
            t = (Math.log10(clamped) - Math.log10(yMin)) /
                (Math.log10(yMax) - Math.log10(yMin));
        } else {
            t = (y - yMin) / (yMax - yMin);
        }
        return MARGIN.top + (1 - t) * plotH;
    };

    const parts: string[] = [];
    parts.push(
        `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
        `height="${height}" viewBox="0 0 ${width} ${height}" ` +
        `font-family="Helvetica, Arial, sans-serif">`,
    );
    parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
    parts.push(
        `<text x="${width / 2}" y="24" text-anchor="middle" font-size="16" ` +
        `fill="#222">${escapeXml(opts.title)}</text>`,
    );

    const yTicks = opts.logY ? logTicks(yMin, yMax) : linearTicks(yMin, yMax);
    for (const t of yTicks) {
        const y = yScale(t);
        parts.push(
            `<line x1="${px(MARGIN.left)}" y1="${px(y)}" ` +
            `x2="${px(width - MARGIN.right)}" y2="${px(y)}" ` +
            `stroke="#e5e5e5" stroke-width="1"/>`,
        );
        parts.push(
            `<text x="${px(MARGIN.left - 8)}" y="${px(y + 4)}" ` +
            `text-anchor="end" font-size="11" fill="#555">${fmt(t)}</text>`,
        );
    }
    for (const t of linearTicks(xMin, xMax, 8)) {
        const x = xScale(t);
        parts.push(
            `<line x1="${px(x)}" y1="${px(height - MARGIN.bottom)}" ` +
            `x2="${px(x)}" y2="${px(height - MARGIN.bottom + 5)}" ` +
            `stroke="#555" stroke-width="1"/>`,
        );
        parts.push(
            `<text x="${px(x)}" y="${px(height - MARGIN.bottom + 18)}" ` +
            `text-anchor="middle" font-size="11" fill="#555">${fmt(t)}</text>`,
        );
    }
    parts.push(
        `<line x1="${px(MARGIN.left)}" y1="${px(height - MARGIN.bottom)}" ` +
        `x2="${px(width - MARGIN.right)}" y2="${px(height - MARGIN.bottom)}" ` +
        `stroke="#333" stroke-width="1"/>`,
    );
    parts.push(
        `<line x1="${px(MARGIN.left)}" y1="${px(MARGIN.top)}" ` +
        `x2="${px(MARGIN.left)}" y2="${px(height - MARGIN.bottom)}" ` +
        `stroke="#333" stroke-width="1"/>`,
    );
    parts.push(
        `<text x="${px(MARGIN.left + plotW / 2)}" y="${px(height - 10)}" ` +
        `text-anchor="middle" font-size="12" fill="#333">episode</text>`,
    );
    parts.push(
        `<text x="16" y="${px(MARGIN.top + plotH / 2)}" font-size="12" ` +
        `fill="#333" transform="rotate(-90 16 ${px(MARGIN.top + plotH / 2)})" ` +
        `text-anchor="middle">per-episode regret</text>`,
    );

    series.forEach((s, si) => {
        const color = PALETTE[si % PALETTE.length];
        const upper = s.episodes.map(
            (x, i) => `${px(xScale(x))},${px(yScale(s.mean[i] + s.stderr[i]))}`,
        );
        const lower = s.episodes.map(
            (x, i) => `${px(xScale(x))},${px(yScale(s.mean[i] - s.stderr[i]))}`,
        );
        parts.push(
            `<path d="M${upper.join(" L")} L${lower.reverse().join(" L")} Z" ` +
            `fill="${color}" fill-opacity="0.15" stroke="none"/>`,
        );
        const line = s.episodes.map(
            (x, i) => `${px(xScale(x))},${px(yScale(s.mean[i]))}`,
        );
        parts.push(
            `<polyline points="${line.join(" ")}" fill="none" ` +
            `stroke="${color}" stroke-width="1.8"/>`,
        );
        const ly = MARGIN.top + 10 + si * 18;
        const lx = width - MARGIN.right - 170;
        parts.push(
            `<line x1="${px(lx)}" y1="${px(ly)}" x2="${px(lx + 22)}" ` +
            `y2="${px(ly)}" stroke="${color}" stroke-width="2.5"/>`,
        );
        parts.push(
            `<text x="${px(lx + 28)}" y="${px(ly + 4)}" font-size="12" ` +
            `fill="#222">${escapeXml(s.label)}</text>`,
        );
    });

    parts.push("</svg>");
    return parts.join("\n") + "\n";
}

function escapeXml(s: string): string {
    return s
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;");
}
