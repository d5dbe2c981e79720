/** Display formatting only — numbers come straight from API payloads. */

export function fmtMinutes(minutes: number | null): string {
  if (minutes === null) return "never";
  if (minutes < 90) return `${minutes.toFixed(1)} min`;
  return `${(minutes / 60).toFixed(1)} h`;
}

export function fmtShare(share: number): string {
  return `${(share * 100).toFixed(1)}%`;
}

export function fmtNumber(x: number): string {
  return Number.isInteger(x) ? String(x) : x.toFixed(2);
}
