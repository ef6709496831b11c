/**
 * Parser for the simulator's regret CSV contract:
 * experiment,strategy,episode,mean_regret,stderr,cum_regret
 */

export const CSV_COLUMNS = [
    "experiment",
    "strategy",
    "episode",
    "mean_regret",
    "stderr",
    "cum_regret",
] as const;

export interface RegretRow {
    experiment: string;
    strategy: string;
    episode: number;
    mean: number;
    stderr: number;
    cum: number;
}

export class CsvError extends Error {}

export function parseRegretCsv(text: string, source: string): RegretRow[] {
    const lines = text.split(/\r?\n/).filter((l) => l.trim().length > 0);
    if (lines.length === 0) {
        throw new CsvError(`${source}: empty CSV`);
    }
    const header = lines[0].split(",").map((h) => h.trim());
    for (const col of CSV_COLUMNS) {
        if (!header.includes(col)) {
            throw new CsvError(`${source}: missing column '${col}'`);
        }
    }
    const idx = Object.fromEntries(
        CSV_COLUMNS.map((c) => [c, header.indexOf(c)]),
    ) as Record<(typeof CSV_COLUMNS)[number], number>;

    const rows: RegretRow[] = [];
    for (let i = 1; i < lines.length; i++) {
        const parts = lines[i].split(",");
        if (parts.length < header.length) {
            throw new CsvError(`${source}:${i + 1}: expected ${header.length} fields`);
        }
        const num = (col: (typeof CSV_COLUMNS)[number]): number => {
            const v = Number(parts[idx[col]]);
            if (!Number.isFinite(v)) {
                throw new CsvError(`${source}:${i + 1}: bad number in '${col}'`);
            }
            return v;
        };
        rows.push({
            experiment: parts[idx.experiment],
            strategy: parts[idx.strategy],
            episode: num("episode"),
            mean: num("mean_regret"),
            stderr: num("stderr"),
            cum: num("cum_regret"),
        });
    }
    if (rows.length === 0) {
        throw new CsvError(`${source}: no data rows`);
    }
    return rows;
}
