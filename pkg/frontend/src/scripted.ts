/**
 * Headless driver that exercises the dashboard's session flow end to end:
 * create a session, draw a batch, then confirm or correct every queued unit
 * against the dataset's labeled column, going through the same SessionView
 * state machine the browser uses. Prints a JSON transcript on stdout.
 *
 * Usage: node dist/scripted.js <base-url> <dataset.csv> [batch=20]
 */
import { readFileSync } from "node:fs";
import process from "node:process";

import { ApiClient } from "./api.js";
import { SessionView } from "./state.js";

function oracleFromCsv(path: string): Map<string, number> {
  // The dataset column layout: a header row naming id/g/f, plain values.
  const lines = readFileSync(path, "utf8").split(/\r?\n/).filter((l) => l !== "");
  const header = lines[0].split(",");
  const idCol = header.indexOf("id");
  const fCol = header.indexOf("f");
  if (idCol < 0 || fCol < 0) {
    throw new Error(`${path}: need id and f columns, got [${header.join(", ")}]`);
  }
  const out = new Map<string, number>();
  for (const line of lines.slice(1)) {
    const cells = line.split(",");
    out.set(cells[idCol], Number(cells[fCol]));
  }
  return out;
}

async function run(): Promise<void> {
  const [base, csvPath, batchArg] = process.argv.slice(2);
  if (!base || !csvPath) {
    throw new Error("usage: scripted.js <base-url> <dataset.csv> [batch]");
  }
  const batch = batchArg ? Number(batchArg) : 20;

  const client = new ApiClient(base);
  const datasets = await client.listDatasets();
  if (datasets.length === 0) {
    throw new Error("service has no datasets");
  }
  const oracle = oracleFromCsv(csvPath);

  const sessionId = await client.createSession({ method: "kDIS" });
  const view = new SessionView(sessionId, datasets[0].regions);

  const drawn = await client.drawBatch(sessionId, batch);
  view.applyDraws(drawn.draws);

  let confirmed = 0;
  let corrected = 0;
  for (const item of [...view.pending]) {
    const truth = oracle.get(item.unit_id);
    if (truth === undefined) {
      throw new Error(`unit ${item.unit_id} not in ${csvPath}`);
    }
    if (!view.beginSubmit(item.unit_id)) {
      continue;
    }
    const estimates = await client.submitLabels(sessionId, [
      { unit_id: item.unit_id, f: truth },
    ]);
    view.completeSubmit(item.unit_id, truth, estimates);
    if (truth === item.g) {
      confirmed += 1;
    } else {
      corrected += 1;
    }
  }

  const series: Record<string, unknown> = {};
  const seriesLengths: Record<string, number> = {};
  for (const [region, points] of view.series) {
    series[region] = points;
    seriesLengths[region] = points.length;
  }

  process.stdout.write(
    JSON.stringify({
      sessionId,
      drawCount: drawn.draws.length,
      submissions: view.labeled.length,
      confirmed,
      corrected,
      estimates: view.latest,
      seriesLengths,
      series,
    }) + "\n",
  );
}

run().catch((err) => {
  console.error(err instanceof Error ? err.message : String(err));
  process.exit(1);
});
