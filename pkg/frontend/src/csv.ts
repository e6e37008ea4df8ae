/**
 * Labeled-instance CSV export.
 *
 * The backend's own CSV export formats floats with Python's repr
 * (shortest round-trip, always a decimal point or exponent, scientific
 * notation outside [1e-4, 1e16)). The exported selection has to be
 * byte-identical to what the backend would write for the same
 * instances, so the formatting here reproduces those rules exactly
 * rather than using Number.prototype.toString directly.
 */

import type { GeoInstance } from "./types.js";

export const ANOMALY_COLUMN = "anomaly";

/** Format a double exactly as Python's repr() would. */
export function pyFloatRepr(x: number): string {
  if (Number.isNaN(x)) return "nan";
  if (x === Infinity) return "inf";
  if (x === -Infinity) return "-inf";
  if (x === 0) return Object.is(x, -0) ? "-0.0" : "0.0";

  const sign = x < 0 ? "-" : "";
  // JS toString already yields the shortest round-trip digits; peel
  // them apart so we can re-apply Python's positional/scientific rules.
  const s = Math.abs(x).toString();
  let digits: string;
  let exp: number; // value = d[0].d[1:] * 10^exp
  const sci = s.match(/^(\d+)(?:\.(\d+))?e([+-]\d+)$/);
  if (sci) {
    digits = sci[1]! + (sci[2] ?? "");
    exp = parseInt(sci[3]!, 10) + sci[1]!.length - 1;
  } else {
    const dot = s.indexOf(".");
    const intPart = dot === -1 ? s : s.slice(0, dot);
    const all = dot === -1 ? s : intPart + s.slice(dot + 1);
    const lead = all.search(/[1-9]/);
    digits = all.slice(lead).replace(/0+$/, "");
    exp = intPart.length - 1 - lead;
  }
  if (digits === "") digits = "0";

  if (exp >= 16 || exp < -4) {
    const mantissa = digits.length > 1 ? `${digits[0]}.${digits.slice(1)}` : digits;
    const expSign = exp < 0 ? "-" : "+";
    const expDigits = String(Math.abs(exp)).padStart(2, "0");
    return `${sign}${mantissa}e${expSign}${expDigits}`;
  }
  if (exp >= 0) {
    const intDigits = digits.padEnd(exp + 1, "0").slice(0, exp + 1);
    const fracDigits = digits.slice(exp + 1) || "0";
    return `${sign}${intDigits}.${fracDigits}`;
  }
  return `${sign}0.${"0".repeat(-exp - 1)}${digits}`;
}

/** Minimal CSV quoting, matching Python's csv.writer defaults. */
function csvCell(value: string): string {
  if (/[",\n\r]/.test(value)) return `"${value.replace(/"/g, '""')}"`;
  return value;
}

function formatValue(v: number | string | null | undefined): string {
  if (v === null || v === undefined) return "";
  if (typeof v === "number") {
    // JSON has no int/float distinction; measurement values are floats
    return pyFloatRepr(v);
  }
  return String(v);
}

/**
 * Serialize instances in the exchange format the rest of the toolkit
 * reads and writes: ts,node,iface,<features...>,anomaly with one row
 * per instance, floats repr-formatted, missing values empty.
 */
export function instancesToCsv(instances: GeoInstance[], featureNames?: string[]): string {
  let names = featureNames;
  if (names === undefined) {
    const seen = new Set<string>();
    for (const inst of instances) for (const key of Object.keys(inst.values)) seen.add(key);
    names = [...seen].sort();
  }
  const lines = [["ts", "node", "iface", ...names, ANOMALY_COLUMN].map(csvCell).join(",")];
  for (const inst of instances) {
    const row = [String(inst.ts_ns), inst.node, inst.iface];
    for (const name of names) row.push(formatValue(inst.values[name]));
    row.push(inst.label ?? "");
    lines.push(row.map(csvCell).join(","));
  }
  return lines.join("\n") + "\n";
}
