import { describe, expect, it } from "vitest";

import { renderConvergence, renderEffort, renderError, renderQueue } from "../src/panels.js";
import { SessionView } from "../src/state.js";
import type { DrawItem, EstimatesPayload, RegionEstimate } from "../src/types.js";

function draw(unitId: string, g: number, url: string | null = null): DrawItem {
  return { unit_id: unitId, g, already_labeled: false, f: null, url };
}

function est(value: number, over: Partial<RegionEstimate> = {}): RegionEstimate {
  return {
    value,
    n_region: 4,
    ci_low: value - 0.5,
    ci_high: value + 0.5,
    empty: false,
    stop_ok: null,
    ...over,
  };
}

function payload(
  regions: Record<string, RegionEstimate>,
  over: Partial<EstimatesPayload["effort"]> = {},
): EstimatesPayload {
  return {
    regions,
    f_hat_omega: 12.5,
    effort: {
      distinct_labeled: 4,
      labeled_draws: 5,
      total_draws: 9,
      effort_pct: 8.333,
      ...over,
    },
  };
}

describe("renderQueue", () => {
  it("invites a draw when nothing is pending", () => {
    const view = new SessionView("s", ["S"]);
    expect(renderQueue(view)).toContain("Draw a batch");
  });

  it("prefills the count input with the detector score", () => {
    const view = new SessionView("s", ["S"]);
    view.applyDraws([draw("u7", 1.75)]);
    const html = renderQueue(view);
    expect(html).toContain(`value="1.75"`);
    expect(html).toContain(`data-count="u7"`);
    expect(html).toContain(`data-action="confirm" data-unit="u7"`);
    expect(html).not.toContain("<a ");
  });

  it("links the unit when the dataset carries urls", () => {
    const view = new SessionView("s", ["S"]);
    view.applyDraws([draw("u1", 1, "http://imgs/u1.png")]);
    const html = renderQueue(view);
    expect(html).toContain(`href="http://imgs/u1.png"`);
    expect(html).toContain(`rel="noopener"`);
  });

  it("escapes hostile unit ids", () => {
    const view = new SessionView("s", ["S"]);
    view.applyDraws([draw(`<img src=x onerror=alert(1)>`, 1)]);
    const html = renderQueue(view);
    expect(html).not.toContain("<img");
    expect(html).toContain("&lt;img");
  });

  it("pins a validation message to the offending row", () => {
    const view = new SessionView("s", ["S"]);
    view.applyDraws([draw("u1", 1), draw("u2", 2)]);
    const html = renderQueue(view, { unitId: "u2", message: "counts cannot be negative" });
    expect(html).toContain("counts cannot be negative");
    expect(html.indexOf("row-error")).toBeGreaterThan(html.indexOf("u1"));
  });
});

describe("renderConvergence", () => {
  it("reports regions with no samples instead of drawing", () => {
    const view = new SessionView("s", ["S"]);
    view.applyEstimates(payload({ S: est(0, { empty: true, ci_low: null, ci_high: null, n_region: 0 }) }));
    const html = renderConvergence(view);
    expect(html).toContain("no samples yet");
    expect(html).not.toContain("<svg");
  });

  it("charts a region once estimates arrive", () => {
    const view = new SessionView("s", ["S"]);
    view.applyEstimates(payload({ S: est(3.0) }, { labeled_draws: 1 }));
    view.applyEstimates(payload({ S: est(3.4) }, { labeled_draws: 2 }));
    const html = renderConvergence(view);
    expect(html).toContain("<svg");
    expect(html).toContain(`class="line"`);
    expect(html).toContain(`class="band"`);
    expect(html).toContain("3.4000 (n=4)");
  });

  it("draws the stop band when a target is set", () => {
    const view = new SessionView("s", ["S"]);
    view.stopTargets = { S: 0.3 };
    view.applyEstimates(payload({ S: est(3.0) }, { labeled_draws: 1 }));
    view.applyEstimates(payload({ S: est(3.4) }, { labeled_draws: 2 }));
    expect(renderConvergence(view)).toContain(`class="target"`);
  });
});

describe("renderEffort", () => {
  it("holds a placeholder until the first payload lands", () => {
    const view = new SessionView("s", ["S"]);
    expect(renderEffort(view)).toContain("waiting for the session");
  });

  it("shows a fresh session at zero effort", () => {
    const view = new SessionView("s", ["S"]);
    view.applyEstimates(
      payload(
        { S: est(0, { empty: true, n_region: 0 }) },
        { distinct_labeled: 0, labeled_draws: 0, total_draws: 0, effort_pct: 0 },
      ),
    );
    expect(renderEffort(view)).toContain("0.0%");
  });

  it("badges each region by its stopping state", () => {
    const view = new SessionView("s", ["A", "B", "C"]);
    view.stopTargets = { A: 0.2, B: 0.2 };
    view.applyEstimates(
      payload({
        A: est(3, { stop_ok: true }),
        B: est(4, { stop_ok: false }),
        C: est(5),
      }),
    );
    const html = renderEffort(view);
    expect(html).toContain(`badge done">done`);
    expect(html).toContain(`badge run">sampling`);
    expect(html).toContain(`badge">no target`);
    expect(html).toContain("8.3%");
  });
});

describe("renderError", () => {
  it("renders nothing while the session is healthy", () => {
    const view = new SessionView("s", ["S"]);
    expect(renderError(view)).toBe("");
  });

  it("offers a retry only when the action can be retried", () => {
    const view = new SessionView("s", ["S"]);
    view.lastError = { message: "service unavailable", retryable: true };
    const html = renderError(view);
    expect(html).toContain("service unavailable");
    expect(html).toContain(`data-action="retry"`);
    expect(html).toContain(`data-action="dismiss"`);

    view.lastError = { message: "stop target must be a positive width ratio", retryable: false };
    expect(renderError(view)).not.toContain(`data-action="retry"`);
  });
});
