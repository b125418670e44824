import { convergenceGeometry, type ChartGeometry } from "./chart.js";
import type { SessionView } from "./state.js";

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export interface QueueNote {
  unitId: string;
  message: string;
}

export function renderQueue(view: SessionView, note: QueueNote | null = null): string {
  if (view.pending.length === 0) {
    return `<p class="muted">Queue empty. Draw a batch to continue.</p>`;
  }
  const rows = view.pending
    .map((item) => {
      const id = esc(item.unit_id);
      const name = item.url
        ? `<a href="${esc(item.url)}" target="_blank" rel="noopener">${id}</a>`
        : id;
      const warn =
        note && note.unitId === item.unit_id
          ? `<span class="row-error">${esc(note.message)}</span>`
          : "";
      return `<tr>
        <td>${name}</td>
        <td class="num">${esc(String(item.g))}</td>
        <td><input data-count="${id}" value="${esc(String(item.g))}" inputmode="decimal" size="9"></td>
        <td>
          <button data-action="confirm" data-unit="${id}">confirm</button>
          <button data-action="submit" data-unit="${id}">submit</button>
          ${warn}
        </td>
      </tr>`;
    })
    .join("");
  return `<table class="queue">
    <thead><tr><th>unit</th><th>detector</th><th>true count</th><th></th></tr></thead>
    <tbody>${rows}</tbody>
  </table>`;
}

function svgFromGeometry(geo: ChartGeometry): string {
  const axes = [
    ...geo.xTicks.map(
      (t) =>
        `<text class="tick" x="${t.x}" y="${geo.height - 6}" text-anchor="middle">${esc(t.label)}</text>`,
    ),
    ...geo.yTicks.map(
      (t) => `<text class="tick" x="4" y="${t.y + 3}">${esc(t.label)}</text>`,
    ),
  ].join("");
  const target = geo.target
    ? `<rect class="target" x="${46}" y="${geo.target.y0}" width="${geo.width - 56}" height="${Math.max(geo.target.y1 - geo.target.y0, 1)}"></rect>`
    : "";
  const band = geo.band ? `<path class="band" d="${geo.band}"></path>` : "";
  const markers = geo.markers
    .map(
      (m) =>
        `<circle class="${m.point ? "pt" : "mk"}" cx="${m.x}" cy="${m.y}" r="${m.point ? 3.5 : 2}"></circle>`,
    )
    .join("");
  return `<svg viewBox="0 0 ${geo.width} ${geo.height}" role="img">
    ${target}${band}<path class="line" d="${geo.line}"></path>${markers}${axes}
  </svg>`;
}

// The stopping rule compares CI width against target * F(Omega); the band
// drawn around the latest estimate is that allowance, straight from served
// numbers.
function targetBounds(view: SessionView, region: string): { low: number; high: number } | null {
  const target = view.stopTargets[region];
  const latest = view.latest;
  if (target === undefined || !latest || latest.f_hat_omega === null) {
    return null;
  }
  const est = latest.regions[region];
  if (!est || est.empty) {
    return null;
  }
  const half = (target * latest.f_hat_omega) / 2;
  return { low: est.value - half, high: est.value + half };
}

export function renderConvergence(view: SessionView): string {
  const blocks = view.regionNames.map((name) => {
    const points = view.series.get(name) ?? [];
    const latest = view.latest?.regions[name];
    const live = points.filter((p) => !p.empty);
    let body: string;
    if (!latest || latest.empty || live.length === 0) {
      body = `<p class="muted">no samples yet</p>`;
    } else {
      const geo = convergenceGeometry(live, targetBounds(view, name));
      body = geo ? svgFromGeometry(geo) : `<p class="muted">no samples yet</p>`;
    }
    const summary = latest && !latest.empty
      ? `${latest.value.toPrecision(5)} (n=${latest.n_region})`
      : "";
    return `<div class="chart-card">
      <h3>${esc(name)} <span class="muted">${esc(summary)}</span></h3>
      ${body}
    </div>`;
  });
  return blocks.join("");
}

export function renderEffort(view: SessionView): string {
  const latest = view.latest;
  if (!latest) {
    return `<p class="muted">waiting for the session...</p>`;
  }
  const effort = latest.effort;
  const whole =
    latest.f_hat_omega === null ? "&mdash;" : latest.f_hat_omega.toPrecision(6);
  const rows = Object.entries(latest.regions)
    .map(([name, est]) => {
      const target = view.stopTargets[name];
      let badge: string;
      if (est.stop_ok === true) {
        badge = `<span class="badge done">done</span>`;
      } else if (est.stop_ok === false) {
        badge = `<span class="badge run">sampling</span>`;
      } else {
        badge = `<span class="badge">no target</span>`;
      }
      return `<tr>
        <td>${esc(name)}</td>
        <td class="num">${est.empty ? "&mdash;" : est.value.toPrecision(5)}</td>
        <td class="num">${est.n_region}</td>
        <td class="num">${target === undefined ? "&mdash;" : esc(String(target))}</td>
        <td>${badge}</td>
      </tr>`;
    })
    .join("");
  return `<dl class="effort">
      <div><dt>distinct labels</dt><dd>${effort.distinct_labeled}</dd></div>
      <div><dt>labeled / drawn</dt><dd>${effort.labeled_draws} / ${effort.total_draws}</dd></div>
      <div><dt>effort</dt><dd>${effort.effort_pct.toFixed(1)}%</dd></div>
      <div><dt>whole-domain estimate</dt><dd>${whole}</dd></div>
    </dl>
    <table class="regions">
      <thead><tr><th>region</th><th>estimate</th><th>n</th><th>target</th><th>status</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>`;
}

export function renderError(view: SessionView): string {
  if (!view.lastError) {
    return "";
  }
  const retry = view.lastError.retryable
    ? `<button data-action="retry">retry</button>`
    : "";
  return `<div class="error-banner">
    ${esc(view.lastError.message)} ${retry}
    <button data-action="dismiss">dismiss</button>
  </div>`;
}
