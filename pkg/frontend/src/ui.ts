// DOM skeleton and render helpers for the sideline console.
//
// The skeleton is exported as a template string so tests can mount the same
// markup the page uses. Render functions only copy server values into the
// document; formatting is display-only (toFixed), never arithmetic on the
// probabilities themselves.

import type { ForecastBody, SituationBody, Violation } from "./api.js";
import type { ConsoleState } from "./state.js";
import { formatAccuracy, runningAccuracy } from "./state.js";

export const CONSOLE_HTML = `
<header class="topbar">
  <h1>playcall console</h1>
  <span class="stat">team <b id="header-team">-</b></span>
  <span class="stat">plays <b id="history-count">0</b></span>
  <span class="stat">forecast accuracy <b id="accuracy">-</b></span>
  <span class="stat" id="session-tag"></span>
</header>

<section id="start-panel">
  <form id="start-form">
    <label>team <input id="team" name="team" maxlength="3" required></label>
    <label><input type="checkbox" id="home"> home side</label>
    <button type="submit" id="start-button">start session</button>
  </form>
  <p class="error" id="start-error"></p>
</section>

<section id="console-panel" hidden>
  <form id="situation-form">
    <fieldset>
      <legend>situation</legend>
      <label>down
        <input type="number" id="down" min="1" max="4" value="1">
        <span class="error" data-error-for="down"></span>
      </label>
      <label>to go
        <input type="number" id="ydstogo" min="1" value="10">
        <span class="error" data-error-for="ydstogo"></span>
      </label>
      <label>yardline
        <input type="number" id="yardline_100" min="0" max="100" value="75">
        <span class="error" data-error-for="yardline_100"></span>
      </label>
      <label>us
        <input type="number" id="own_score" min="0" value="0">
        <span class="error" data-error-for="own_score"></span>
      </label>
      <label>them
        <input type="number" id="opp_score" min="0" value="0">
        <span class="error" data-error-for="opp_score"></span>
      </label>
      <label><input type="checkbox" id="shotgun"> shotgun</label>
      <label><input type="checkbox" id="no_huddle"> no-huddle</label>
      <label><input type="checkbox" id="goaltogo"> goal-to-go</label>
    </fieldset>
    <button type="submit" id="forecast-button">forecast</button>
  </form>
  <p class="error" id="console-error"></p>

  <div id="forecast-panel" hidden>
    <div class="bar" id="prob-bar">
      <div class="bar-run" id="bar-run"></div>
      <div class="bar-pass" id="bar-pass"></div>
      <div class="bar-mark" id="mark-low"></div>
      <div class="bar-mark" id="mark-high"></div>
    </div>
    <p>
      run <b id="run-prob">-</b>
      / pass <b id="pass-prob">-</b>
      &rarr; <b id="predicted-call">-</b>
      <span id="advice-badge" class="badge"></span>
    </p>
  </div>

  <div class="record">
    <span>actual call:</span>
    <button id="record-run">run</button>
    <button id="record-pass">pass</button>
  </div>

  <table id="log-table">
    <thead>
      <tr><th>#</th><th>situation</th><th>forecast</th><th>predicted</th>
          <th>actual</th><th></th></tr>
    </thead>
    <tbody id="play-log"></tbody>
  </table>

  <p class="help">keys: 1-4 down &middot; s shotgun &middot; n no-huddle
     &middot; g goal-to-go &middot; f forecast &middot; r/p record run/pass</p>
</section>
`;

function byId<T extends HTMLElement>(root: ParentNode, id: string): T {
  const el = root.querySelector(`#${id}`);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

export function ordinal(down: number): string {
  return ["1st", "2nd", "3rd", "4th"][down - 1] ?? `${down}th`;
}

export function situationSummary(s: SituationBody): string {
  let text = `${ordinal(s.down)} & ${s.ydstogo} @ ${s.yardline_100}`;
  if (s.shotgun) text += " SG";
  if (s.no_huddle) text += " NH";
  if (s.goaltogo) text += " GTG";
  return text;
}

export function renderForecast(
  root: ParentNode,
  forecast: ForecastBody,
  threshold: number,
): void {
  byId(root, "forecast-panel").hidden = false;
  byId(root, "pass-prob").textContent = forecast.pass_prob.toFixed(3);
  byId(root, "run-prob").textContent = forecast.run_prob.toFixed(3);
  byId(root, "predicted-call").textContent = forecast.predicted_call;
  const badge = byId(root, "advice-badge");
  const consult = forecast.threshold_advice === "consult";
  badge.textContent = consult ? "consult" : "low confidence";
  badge.className = consult ? "badge badge-consult" : "badge badge-low";
  byId(root, "bar-run").style.width = `${100 * forecast.run_prob}%`;
  byId(root, "bar-pass").style.width = `${100 * forecast.pass_prob}%`;
  byId(root, "mark-low").style.left = `${100 * (1 - threshold)}%`;
  byId(root, "mark-high").style.left = `${100 * threshold}%`;
}

export function clearForecastPanel(root: ParentNode): void {
  byId(root, "forecast-panel").hidden = true;
}

export function renderHeader(root: ParentNode, state: ConsoleState): void {
  byId(root, "header-team").textContent = state.team;
  byId(root, "history-count").textContent = String(state.serverHistory);
  byId(root, "accuracy").textContent = formatAccuracy(runningAccuracy(state.log));
  byId(root, "session-tag").textContent = `session ${state.sessionId}`;
}

export function renderLog(root: ParentNode, state: ConsoleState): void {
  const body = byId<HTMLTableSectionElement>(root, "play-log");
  body.textContent = "";
  state.log.forEach((row, i) => {
    const tr = document.createElement("tr");
    const cells: string[] = [String(i + 1)];
    if (row.situation === null && row.actual === null) {
      cells.push("(restored)", "", "", "", "");
    } else {
      cells.push(
        row.situation ? situationSummary(row.situation) : "",
        row.forecast ? row.forecast.pass_prob.toFixed(3) : "unforecast",
        row.forecast ? row.forecast.predicted_call : "",
        row.actual ?? "",
        row.forecast && row.actual
          ? row.forecast.predicted_call === row.actual
            ? "✓"
            : "✗"
          : "",
      );
    }
    for (const text of cells) {
      const td = document.createElement("td");
      td.textContent = text;
      tr.appendChild(td);
    }
    body.appendChild(tr);
  });
}

export function renderFieldErrors(root: ParentNode, violations: Violation[]): void {
  root.querySelectorAll<HTMLElement>("[data-error-for]").forEach((el) => {
    el.textContent = "";
  });
  for (const violation of violations) {
    const el = root.querySelector<HTMLElement>(
      `[data-error-for="${violation.field}"]`,
    );
    if (el) el.textContent = violation.message;
  }
}

export function showStartError(root: ParentNode, message: string): void {
  byId(root, "start-error").textContent = message;
}

export function showConsoleError(root: ParentNode, message: string): void {
  byId(root, "console-error").textContent = message;
}

export function showConsolePanel(root: ParentNode): void {
  byId(root, "start-panel").hidden = true;
  byId(root, "console-panel").hidden = false;
}
