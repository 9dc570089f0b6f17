/**
 * Client-side mirror of the weekly matching constraints: at most one
 * location per day and each location at most once. The server is the
 * source of truth; this mirror only lets the UI reject bad clicks with an
 * explanation before a request is wasted.
 */

export interface Assignment {
  day: number;
  location: string;
}

export type Verdict = { ok: true } | { ok: false; reason: string };

export function checkChoice(
  chosen: Record<string, string>,
  day: number,
  location: string,
  nDays: number,
  locations: string[],
): Verdict {
  if (!Number.isInteger(day) || day < 1 || day > nDays) {
    return { ok: false, reason: `day must be between 1 and ${nDays}` };
  }
  if (!locations.includes(location)) {
    return { ok: false, reason: `unknown location ${location}` };
  }
  if (chosen[String(day)] !== undefined) {
    return { ok: false, reason: `day ${day} already has a visit (${chosen[String(day)]})` };
  }
  if (Object.values(chosen).includes(location)) {
    return { ok: false, reason: `location ${location} is already visited this week` };
  }
  return { ok: true };
}

export function feasible(chosen: Record<string, string>, nDays: number): boolean {
  const days = Object.keys(chosen).map(Number);
  const locs = Object.values(chosen);
  const daysUnique = new Set(days).size === days.length;
  const locsUnique = new Set(locs).size === locs.length;
  const daysInRange = days.every((d) => Number.isInteger(d) && d >= 1 && d <= nDays);
  return daysUnique && locsUnique && daysInRange;
}
