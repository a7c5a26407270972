/**
 * Reader for the solver CLI's CSV artifacts.
 *
 * The artifact format is fixed by the producer: `# key = value` metadata
 * lines (insertion order), one line of comma-separated column names, then
 * numeric rows printed with 17 significant digits.
 */

export interface Artifact {
  /** Where the text came from; used in error messages only. */
  source: string;
  meta: Record<string, string>;
  columns: string[];
  /** Row-major numeric block, one entry per column. */
  rows: number[][];
}

/** Raised when an artifact does not have the columns a figure requires. */
export class SchemaError extends Error {}

/** Parse artifact text into metadata, columns and a numeric block. */
export function parseArtifact(text: string, source = "<text>"): Artifact {
  const lines = text.split("\n");
  const meta: Record<string, string> = {};
  let at = 0;
  for (; at < lines.length; at++) {
    const line = lines[at] ?? "";
    if (!line.startsWith("#")) break;
    const body = line.slice(1);
    const eq = body.indexOf("=");
    if (eq < 0) continue;
    meta[body.slice(0, eq).trim()] = body.slice(eq + 1).trim();
  }
  const header = lines[at];
  if (header === undefined || header.trim() === "") {
    throw new SchemaError(`${source}: missing column header line`);
  }
  const columns = header.split(",");
  const rows: number[][] = [];
  for (const line of lines.slice(at + 1)) {
    if (line === "") continue;
    const cells = line.split(",");
    if (cells.length !== columns.length) {
      throw new SchemaError(
        `${source}: row with ${cells.length} cells under ` +
          `${columns.length} columns`,
      );
    }
    rows.push(cells.map(Number));
  }
  return { source, meta, columns, rows };
}

/** Assert the artifact has every named column; name the first one missing. */
export function requireColumns(
  artifact: Artifact,
  names: string[],
  kind: string,
): void {
  for (const name of names) {
    if (!artifact.columns.includes(name)) {
      throw new SchemaError(
        `${artifact.source}: ${kind} input is missing column "${name}"`,
      );
    }
  }
}

/** Column values by name (requireColumns first for a good error). */
export function column(artifact: Artifact, name: string): number[] {
  const at = artifact.columns.indexOf(name);
  if (at < 0) {
    throw new SchemaError(
      `${artifact.source}: missing column "${name}"`,
    );
  }
  return artifact.rows.map((row) => row[at] as number);
}

/** Metadata value as a float, or undefined when absent. */
export function metaFloat(artifact: Artifact, key: string): number | undefined {
  const raw = artifact.meta[key];
  if (raw === undefined) return undefined;
  const value = Number(raw);
  return Number.isFinite(value) ? value : undefined;
}

/** Space-separated metadata list (e.g. the solution grid) as floats. */
export function metaFloats(artifact: Artifact, key: string): number[] | undefined {
  const raw = artifact.meta[key];
  if (raw === undefined) return undefined;
  return raw.split(/\s+/).filter((s) => s !== "").map(Number);
}
