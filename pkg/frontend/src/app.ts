/** DOM wiring: poll loop, deploy/signal buttons, what-if slider. */

import { Client } from "./api.js";
import { deploySensor, fetchSweep, pollOnce, resetSession, sendSignal } from "./controller.js";
import { renderBanner, renderDeployed, renderRankingTable, renderSweep, renderTimeline } from "./render.js";
import { initialState, setRatio, type ViewState } from "./state.js";

const POLL_INTERVAL_MS = 1000;

function apiBase(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? "http://127.0.0.1:8000";
}

function element(id: string): HTMLElement {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing #${id}`);
  return found;
}

const client = new Client(apiBase());
let state: ViewState = initialState();

function paint(): void {
  element("banner").innerHTML = renderBanner(state);
  element("rankings").innerHTML = renderRankingTable(state.rankings, state.pending);
  element("deployed").innerHTML = renderDeployed(state.rankings, state.pending);
  element("timeline").innerHTML = renderTimeline(state.signals);
  element("status").textContent = state.rankings ? `session: ${state.rankings.status}` : "";
}

async function refreshSweep(): Promise<void> {
  try {
    const doc = await fetchSweep(client, state.ratio);
    element("sweep").innerHTML = renderSweep(doc, state.ratio);
  } catch (err) {
    element("sweep").innerHTML = `<p class="empty">${err instanceof Error ? err.message : err}</p>`;
  }
}

async function tick(): Promise<void> {
  state = await pollOnce(client, state);
  paint();
}

function wire(): void {
  element("rankings").addEventListener("click", async (event) => {
    const target = event.target as HTMLElement;
    if (!target.matches("button.deploy")) return;
    const sensor = target.dataset.sensor;
    if (!sensor) return;
    state = await deploySensor(client, state, sensor);
    paint();
    void refreshSweep();
  });

  element("deployed").addEventListener("click", async (event) => {
    const target = event.target as HTMLElement;
    if (!target.matches("button.signal")) return;
    const sensor = target.dataset.sensor;
    if (!sensor) return;
    state = await sendSignal(client, state, sensor, target.dataset.signal === "true");
    paint();
  });

  const slider = element("ratio") as HTMLInputElement;
  const readout = element("ratio-value");
  slider.addEventListener("input", () => {
    state = setRatio(state, Number(slider.value));
    readout.textContent = `P/R = ${slider.value}`;
    paint();
    void refreshSweep();
  });

  element("reset").addEventListener("click", async () => {
    state = await resetSession(client, state);
    paint();
    void refreshSweep();
  });
}

wire();
void tick().then(refreshSweep);
window.setInterval(() => void tick(), POLL_INTERVAL_MS);
