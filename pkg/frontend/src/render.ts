/** HTML-string renderers, kept free of DOM APIs so they test in plain node.
 *
 * Rows keep the order the server ranked them in. The top candidate is the
 * recommendation and gets the `recommended` class; negative-EVSI rows get
 * `negative` so the stylesheet can visibly deprecate them.
 */

import type { RankingsView, SweepDoc } from "./api.js";
import type { SignalEventView, ViewState } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function formatEvsi(value: number): string {
  return (value >= 0 ? "+" : "") + value.toFixed(4);
}

export function renderRankingTable(view: RankingsView | null, pending: boolean): string {
  if (view === null) {
    return '<p class="loading">waiting for the service…</p>';
  }
  if (view.rankings.length === 0) {
    return '<p class="empty">no candidates remaining</p>';
  }
  const rows = view.rankings
    .map((row, index) => {
      const classes = ["row"];
      if (index === 0 && row.evsi > 0) classes.push("recommended");
      if (row.evsi < 0) classes.push("negative");
      const label = escapeHtml(row.sensor);
      return `<tr class="${classes.join(" ")}">
        <td class="sensor">${label}</td>
        <td class="evsi">${formatEvsi(row.evsi)}</td>
        <td>${escapeHtml(row.action_on_signal)}</td>
        <td>${escapeHtml(row.action_on_no_signal)}</td>
        <td><button class="deploy" data-sensor="${label}"${pending ? " disabled" : ""}>Deploy</button></td>
      </tr>`;
    })
    .join("\n");
  return `<table class="rankings">
    <thead><tr><th>sensor</th><th>EVSI</th><th>Action (Signal)</th><th>Action (No Signal)</th><th></th></tr></thead>
    <tbody>${rows}</tbody>
  </table>`;
}

export function renderDeployed(view: RankingsView | null, pending: boolean): string {
  if (!view || view.deployed.length === 0) {
    return '<p class="empty">nothing deployed yet</p>';
  }
  const items = view.deployed
    .map((label) => {
      const safe = escapeHtml(label);
      return `<li>
        <span class="sensor">${safe}</span>
        <button class="signal" data-sensor="${safe}" data-signal="true"${pending ? " disabled" : ""}>signal</button>
        <button class="signal" data-sensor="${safe}" data-signal="false"${pending ? " disabled" : ""}>quiet</button>
      </li>`;
    })
    .join("\n");
  return `<ul class="deployed">${items}</ul>`;
}

export function renderTimeline(events: SignalEventView[]): string {
  if (events.length === 0) {
    return '<p class="empty">no signals recorded</p>';
  }
  const items = events
    .map(
      (event) => `<li class="event ${event.recommendedAction}">
        ${escapeHtml(event.at)} — ${escapeHtml(event.sensor)} ${event.signal ? "fired" : "quiet"}
        → recommended: <strong>${escapeHtml(event.recommendedAction)}</strong>
      </li>`,
    )
    .join("\n");
  return `<ol class="timeline">${items}</ol>`;
}

export function renderSweep(doc: SweepDoc, ratio: number): string {
  const section = doc.sections.find((s) => s.ratio === ratio) ?? doc.sections[0];
  if (!section) {
    return '<p class="empty">no sweep data</p>';
  }
  const saturated = section.rows.every(
    (row) => row.action_on_signal === "fix" && row.action_on_no_signal === "fix",
  );
  const rows = section.rows
    .map(
      (row) => `<tr>
        <td>${escapeHtml(row.sensor)}</td>
        <td>${formatEvsi(row.evsi)}</td>
        <td>${escapeHtml(row.action_on_signal)}</td>
        <td>${escapeHtml(row.action_on_no_signal)}</td>
      </tr>`,
    )
    .join("\n");
  const note = saturated
    ? '<p class="note saturated">every sensor saturated at this ratio: always Fix, information adds nothing</p>'
    : "";
  return `<h3>what-if at P/R = ${section.ratio}</h3>
  <table class="sweep"><thead><tr><th>sensor</th><th>EVSI</th><th>Action (Signal)</th><th>Action (No Signal)</th></tr></thead>
  <tbody>${rows}</tbody></table>${note}`;
}

export function renderBanner(state: ViewState): string {
  if (!state.error) return "";
  return `<div class="banner error">${escapeHtml(state.error)}</div>`;
}
