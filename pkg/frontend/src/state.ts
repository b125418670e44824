import type { DrawItem, EstimatesPayload, RegionEstimate } from "./types.js";

export interface SeriesPoint {
  labeled: number;
  value: number;
  ciLow: number | null;
  ciHigh: number | null;
  empty: boolean;
}

export interface LabeledEntry {
  unitId: string;
  g: number;
  f: number;
  confirmed: boolean;
}

export type CountCheck = { ok: true; f: number } | { ok: false; reason: string };

/** Client-side screen of a typed count; the server re-validates. */
export function validateCount(raw: string): CountCheck {
  const text = raw.trim();
  if (text === "") {
    return { ok: false, reason: "enter a count" };
  }
  const f = Number(text);
  if (!Number.isFinite(f)) {
    return { ok: false, reason: "not a number" };
  }
  if (f < 0) {
    return { ok: false, reason: "counts cannot be negative" };
  }
  return { ok: true, f };
}

/**
 * Mirror of one screening session as the dashboard sees it.
 *
 * Holds the pending queue, labeled history, and the per-region estimate
 * series that the convergence panel draws. Every number in here came off the
 * wire; nothing is estimated locally. Submission goes through a begin/
 * complete/fail cycle keyed on unit id, so a double-click cannot post the
 * same label twice.
 */
export class SessionView {
  pending: DrawItem[] = [];
  labeled: LabeledEntry[] = [];
  latest: EstimatesPayload | null = null;
  series = new Map<string, SeriesPoint[]>();
  stopTargets: Record<string, number> = {};
  lastError: { message: string; retryable: boolean } | null = null;

  private inFlight = new Set<string>();
  private known = new Set<string>();

  constructor(
    public readonly sessionId: string,
    public readonly regionNames: string[],
  ) {
    for (const name of regionNames) {
      this.series.set(name, []);
    }
  }

  /** Queue fresh draws; repeats and already-labeled units never re-enter. */
  applyDraws(items: DrawItem[]): number {
    let queued = 0;
    for (const item of items) {
      if (item.already_labeled || this.known.has(item.unit_id)) {
        continue;
      }
      this.known.add(item.unit_id);
      this.pending.push(item);
      queued += 1;
    }
    return queued;
  }

  pendingItem(unitId: string): DrawItem | undefined {
    return this.pending.find((item) => item.unit_id === unitId);
  }

  /** Claim a unit for submission; false means it is not submittable now. */
  beginSubmit(unitId: string): boolean {
    if (this.inFlight.has(unitId) || !this.pendingItem(unitId)) {
      return false;
    }
    this.inFlight.add(unitId);
    return true;
  }

  completeSubmit(unitId: string, f: number, estimates: EstimatesPayload): void {
    const item = this.pendingItem(unitId);
    this.inFlight.delete(unitId);
    this.pending = this.pending.filter((p) => p.unit_id !== unitId);
    if (item) {
      this.labeled.push({ unitId, g: item.g, f, confirmed: f === item.g });
    }
    this.lastError = null;
    this.applyEstimates(estimates);
  }

  failSubmit(unitId: string, message: string): void {
    this.inFlight.delete(unitId);
    this.lastError = { message, retryable: true };
  }

  /** Fold in an estimates payload; one series point per new labeled count. */
  applyEstimates(estimates: EstimatesPayload): void {
    const labeled = estimates.effort.labeled_draws;
    if (this.latest && labeled < this.latest.effort.labeled_draws) {
      return; // a slow poll losing the race to a fresher label ack
    }
    this.latest = estimates;
    for (const [name, est] of Object.entries(estimates.regions)) {
      const points = this.series.get(name);
      if (!points) {
        continue;
      }
      const last = points[points.length - 1];
      if (last && last.labeled === labeled) {
        points[points.length - 1] = this.toPoint(labeled, est);
      } else {
        points.push(this.toPoint(labeled, est));
      }
    }
  }

  private toPoint(labeled: number, est: RegionEstimate): SeriesPoint {
    return {
      labeled,
      value: est.value,
      ciLow: est.ci_low,
      ciHigh: est.ci_high,
      empty: est.empty,
    };
  }

  clearError(): void {
    this.lastError = null;
  }
}
