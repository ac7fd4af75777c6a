// Console state and its pure transitions.
//
// Nothing in this module talks to the network or the DOM; every function is
// deterministic so the invariants (log mirrors server history, accuracy is
// the tick ratio, stale responses never apply) can be unit tested directly.

import type { Call, ForecastBody, SituationBody, Violation } from "./api.js";

export interface LogRow {
  // null situation/actual marks a play restored from the server after a
  // reload: the server knows it happened but not what we showed for it
  situation: SituationBody | null;
  forecast: ForecastBody | null;
  actual: Call | null;
}

export interface ConsoleState {
  sessionId: string;
  team: string;
  home: boolean;
  latestForecast: ForecastBody | null;
  log: LogRow[];
  serverHistory: number;
}

export function newConsole(
  sessionId: string,
  team: string,
  home: boolean,
  nHistory: number,
): ConsoleState {
  return {
    sessionId,
    team,
    home,
    latestForecast: null,
    // pad with restored rows so the log length always mirrors the server
    log: Array.from({ length: nHistory }, () => ({
      situation: null,
      forecast: null,
      actual: null,
    })),
    serverHistory: nHistory,
  };
}

// -- form validation (same domains the server enforces) ----------------------

export function validateForm(form: SituationBody): Violation[] {
  const errors: Violation[] = [];
  const intField = (field: string, value: number, min: number, max: number) => {
    if (!Number.isInteger(value) || value < min || value > max) {
      errors.push({ field, message: `must be an integer in ${min}..${max}` });
    }
  };
  intField("down", form.down, 1, 4);
  if (!Number.isInteger(form.ydstogo) || form.ydstogo < 1) {
    errors.push({ field: "ydstogo", message: "must be an integer >= 1" });
  }
  intField("yardline_100", form.yardline_100, 0, 100);
  intField("own_score", form.own_score, 0, 200);
  intField("opp_score", form.opp_score, 0, 200);
  return errors;
}

// -- log transitions ---------------------------------------------------------

export function applyForecast(
  state: ConsoleState,
  forecast: ForecastBody,
): ConsoleState {
  return { ...state, latestForecast: forecast };
}

export function recordPlay(
  state: ConsoleState,
  situation: SituationBody,
  actual: Call,
  serverHistory: number,
): ConsoleState {
  const row: LogRow = {
    situation,
    forecast: state.latestForecast,
    actual,
  };
  const log = [...state.log, row];
  // if the server is ahead (plays recorded elsewhere), pad so the log keeps
  // mirroring its history length
  while (log.length < serverHistory) {
    log.push({ situation: null, forecast: null, actual: null });
  }
  return {
    ...state,
    latestForecast: null, // the forecast was for the play just recorded
    log,
    serverHistory,
  };
}

export function logMirrorsServer(state: ConsoleState): boolean {
  return state.log.length === state.serverHistory;
}

// -- running accuracy --------------------------------------------------------

export interface Accuracy {
  ticks: number;
  rows: number;
}

// a row earns a tick when its forecast's predicted call matched the actual;
// restored rows (unknown actual) stay out of the count entirely
export function runningAccuracy(log: LogRow[]): Accuracy {
  let ticks = 0;
  let rows = 0;
  for (const row of log) {
    if (row.actual === null) continue;
    rows += 1;
    if (row.forecast !== null && row.forecast.predicted_call === row.actual) {
      ticks += 1;
    }
  }
  return { ticks, rows };
}

export function formatAccuracy(acc: Accuracy): string {
  if (acc.rows === 0) return "-";
  const pct = ((100 * acc.ticks) / acc.rows).toFixed(1);
  return `${acc.ticks}/${acc.rows} (${pct}%)`;
}

// -- stale-response discard ----------------------------------------------------

// One session per tab, requests serialized by issue order: a response only
// applies when no newer request has been issued since.
export class SequenceGate {
  private issued = 0;

  next(): number {
    return ++this.issued;
  }

  isCurrent(seq: number): boolean {
    return seq === this.issued;
  }
}
