import type { StrategyRow } from "./viewstate";
import { FLAG_LIMITED_ACCURACY_BRANCH } from "./types";

/**
 * Extract the literal bytes of a top-level field from a raw JSON body.
 *
 * The strategy table renders physiology numbers from the server's own
 * bytes, so a cell can never disagree with the payload by formatting.
 * Only fields whose name is unique up to its first occurrence at the top
 * level may be read this way (true for the simulate payload).
 */
export function rawToken(raw: string, field: string): string {
  const pattern = new RegExp(
    `"${field}"\\s*:\\s*(-?\\d+(?:\\.\\d+)?(?:[eE][+-]?\\d+)?|\\[[^\\]]*\\]|"(?:[^"\\\\]|\\\\.)*"|true|false|null)`,
  );
  const match = pattern.exec(raw);
  if (!match) throw new Error(`field ${field} not found in payload`);
  return match[1]!;
}

export type StrategyCells = {
  qfr_pre: string;
  qfr_post: string;
  delta_qfr: string;
  flags: string[];
};

/** Display cells for one saved strategy, numbers verbatim from the body. */
export function strategyCells(row: StrategyRow): StrategyCells {
  return {
    qfr_pre: rawToken(row.raw, "pre_qfr"),
    qfr_post: rawToken(row.raw, "residual_qfr"),
    delta_qfr: rawToken(row.raw, "delta_qfr"),
    flags: row.result.flags,
  };
}

/** Warning badge text for a strategy, or null when none applies. */
export function warningBadge(row: StrategyRow): string | null {
  if (row.result.flags.includes(FLAG_LIMITED_ACCURACY_BRANCH)) {
    return "limited accuracy: span covers a branch";
  }
  return null;
}
