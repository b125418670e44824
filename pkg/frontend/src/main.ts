import { ApiClient, ApiError } from "./api.js";
import { renderConvergence, renderEffort, renderError, renderQueue, type QueueNote } from "./panels.js";
import { SessionView, validateCount } from "./state.js";

const POLL_MS = 10_000;

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node;
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(location.search);
  const client = new ApiClient(params.get("api") ?? location.origin);
  const datasets = await client.listDatasets();
  const dataset = datasets[0];
  if (!dataset) {
    el("error").innerHTML = `<div class="error-banner">the service has no datasets</div>`;
    return;
  }

  let sessionId = params.get("session");
  if (!sessionId) {
    sessionId = await client.createSession({ method: "kDIS" });
    params.set("session", sessionId);
    history.replaceState(null, "", `?${params}`);
  }
  const view = new SessionView(sessionId, dataset.regions);

  // Rejoin restores served state; the pending queue refills from new draws.
  const record = await client.session(sessionId);
  view.stopTargets = { ...record.stop_targets };
  view.applyEstimates(record.estimates);

  el("dataset-info").textContent =
    `${dataset.name} · ${dataset.units} units · session ${sessionId.slice(0, 8)}`;
  const regionSelect = el("target-region") as HTMLSelectElement;
  regionSelect.innerHTML = dataset.regions
    .map((name) => `<option>${name}</option>`)
    .join("");

  let queueNote: QueueNote | null = null;
  let retryAction: (() => void) | null = null;
  // One submission at a time, in click order: responses then apply in the
  // same order the labels were sent, so the series never runs backwards.
  let submitChain: Promise<void> = Promise.resolve();

  function render(): void {
    el("error").innerHTML = renderError(view);
    el("queue").innerHTML = renderQueue(view, queueNote);
    el("charts").innerHTML = renderConvergence(view);
    el("effort").innerHTML = renderEffort(view);
  }

  async function submit(unitId: string, f: number): Promise<void> {
    if (!view.beginSubmit(unitId)) {
      return;
    }
    try {
      const estimates = await client.submitLabels(view.sessionId, [
        { unit_id: unitId, f },
      ]);
      queueNote = null;
      retryAction = null;
      view.completeSubmit(unitId, f, estimates);
    } catch (err) {
      if (err instanceof ApiError && err.code === "already_labeled") {
        // Labeled through another window; the label exists, so just resync.
        view.completeSubmit(unitId, f, await client.estimates(view.sessionId));
      } else {
        view.failSubmit(unitId, err instanceof Error ? err.message : String(err));
        retryAction = () => enqueueSubmit(unitId, f);
      }
    }
    render();
  }

  function enqueueSubmit(unitId: string, f: number): void {
    submitChain = submitChain.then(() => submit(unitId, f));
  }

  async function draw(): Promise<void> {
    const box = el("batch-size") as HTMLInputElement;
    const n = Math.max(1, Math.min(500, Number(box.value) || 10));
    try {
      const out = await client.drawBatch(view.sessionId, n);
      view.applyDraws(out.draws);
      retryAction = null;
      view.clearError();
    } catch (err) {
      view.lastError = {
        message: err instanceof Error ? err.message : String(err),
        retryable: true,
      };
      retryAction = draw;
    }
    render();
  }

  async function setTarget(): Promise<void> {
    const region = regionSelect.value;
    const box = el("target-value") as HTMLInputElement;
    const raw = box.value.trim();
    const value = raw === "" ? null : Number(raw);
    if (value !== null && (!Number.isFinite(value) || value <= 0)) {
      view.lastError = { message: "stop target must be a positive width ratio", retryable: false };
      render();
      return;
    }
    try {
      const estimates = await client.setStopTargets(view.sessionId, { [region]: value });
      if (value === null) {
        delete view.stopTargets[region];
      } else {
        view.stopTargets[region] = value;
      }
      view.applyEstimates(estimates);
      view.clearError();
    } catch (err) {
      view.lastError = {
        message: err instanceof Error ? err.message : String(err),
        retryable: false,
      };
    }
    render();
  }

  document.addEventListener("click", (event) => {
    const button = (event.target as HTMLElement).closest("button[data-action]");
    if (!button) {
      return;
    }
    const action = button.getAttribute("data-action");
    const unitId = button.getAttribute("data-unit");
    if (action === "draw") {
      void draw();
    } else if (action === "set-target") {
      void setTarget();
    } else if (action === "retry") {
      view.clearError();
      const pending = retryAction;
      retryAction = null;
      if (pending) {
        pending();
      } else {
        render();
      }
    } else if (action === "dismiss") {
      view.clearError();
      render();
    } else if (action === "confirm" && unitId) {
      const item = view.pendingItem(unitId);
      if (item) {
        queueNote = null;
        enqueueSubmit(unitId, item.g);
      }
    } else if (action === "submit" && unitId) {
      const input = document.querySelector<HTMLInputElement>(
        `input[data-count="${CSS.escape(unitId)}"]`,
      );
      const check = validateCount(input ? input.value : "");
      if (!check.ok) {
        queueNote = { unitId, message: check.reason };
        render();
        return;
      }
      queueNote = null;
      enqueueSubmit(unitId, check.f);
    }
  });

  // The input arrives prefilled with g, so a bare Enter is a one-keystroke
  // confirm; after editing it submits the correction.
  document.addEventListener("keydown", (event) => {
    if (event.key !== "Enter") {
      return;
    }
    const input = event.target as HTMLElement;
    const unitId = input.getAttribute?.("data-count");
    if (!unitId) {
      return;
    }
    const check = validateCount((input as HTMLInputElement).value);
    if (!check.ok) {
      queueNote = { unitId, message: check.reason };
      render();
      return;
    }
    queueNote = null;
    enqueueSubmit(unitId, check.f);
  });

  window.setInterval(async () => {
    try {
      view.applyEstimates(await client.estimates(view.sessionId));
      render();
    } catch {
      // transient poll failures are retried on the next tick
    }
  }, POLL_MS);

  render();
}

void boot().catch((err) => {
  el("error").innerHTML = `<div class="error-banner">failed to start: ${
    err instanceof Error ? err.message : String(err)
  }</div>`;
});
