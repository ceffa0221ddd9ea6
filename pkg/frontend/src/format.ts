// Money and badge formatting shared by the view and tests.

import type { Act } from "./api.js";

export function formatCents(cents: number): string {
  const sign = cents < 0 ? "-" : "";
  const abs = Math.abs(cents);
  const whole = Math.floor(abs / 100);
  const frac = abs % 100;
  const grouped = whole.toLocaleString("en-US");
  return frac === 0
    ? `${sign}$${grouped}`
    : `${sign}$${grouped}.${String(frac).padStart(2, "0")}`;
}

export function actBadge(act: Act): string {
  switch (act.kind) {
    case "counteroffer":
      return `counteroffer ${formatCents(act.price_cents ?? 0)}`;
    case "accept":
      return "accept";
    case "reject":
      return "reject";
    default:
      return "no counteroffer";
  }
}
