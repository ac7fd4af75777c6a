// Controller: wires the form, the API client, and the render helpers.
//
// One console per tab. Forecast requests go through a sequence gate so a
// response superseded by a newer request is discarded; play records disable
// their buttons while in flight so mutations stay strictly ordered.

import { ApiClient, ApiError } from "./api.js";
import type { Call, SituationBody } from "./api.js";
import {
  applyForecast,
  newConsole,
  recordPlay,
  SequenceGate,
  validateForm,
} from "./state.js";
import type { ConsoleState } from "./state.js";
import {
  clearForecastPanel,
  CONSOLE_HTML,
  renderFieldErrors,
  renderForecast,
  renderHeader,
  renderLog,
  showConsoleError,
  showConsolePanel,
  showStartError,
} from "./ui.js";

export interface ConsoleOptions {
  // display threshold for the bar marks; the server's health value is used
  // when not given explicitly
  threshold?: number;
}

// the spec'd concurrency model is one session per tab, so a re-mount evicts
// the previous console's keyboard handler
let activeKeyHandler: ((e: KeyboardEvent) => void) | null = null;

export class ConsoleApp {
  state: ConsoleState | null = null;
  threshold = 0.7;
  private thresholdPinned: boolean;
  private gate = new SequenceGate();

  constructor(
    readonly root: ParentNode,
    readonly api: ApiClient,
    opts: ConsoleOptions = {},
  ) {
    this.thresholdPinned = opts.threshold !== undefined;
    if (opts.threshold !== undefined) this.threshold = opts.threshold;
  }

  private el<T extends HTMLElement>(id: string): T {
    const node = this.root.querySelector(`#${id}`);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
  }

  mount(): void {
    const app = this.root.querySelector("#app");
    if (!app) throw new Error("missing #app container");
    app.innerHTML = CONSOLE_HTML;

    this.el<HTMLFormElement>("start-form").addEventListener("submit", (e) => {
      e.preventDefault();
      void this.start(
        this.el<HTMLInputElement>("team").value.trim().toUpperCase(),
        this.el<HTMLInputElement>("home").checked,
      );
    });
    this.el<HTMLFormElement>("situation-form").addEventListener("submit", (e) => {
      e.preventDefault();
      void this.submitForecast();
    });
    this.el<HTMLButtonElement>("record-run").addEventListener("click", () => {
      void this.record("run");
    });
    this.el<HTMLButtonElement>("record-pass").addEventListener("click", () => {
      void this.record("pass");
    });

    if (activeKeyHandler) document.removeEventListener("keydown", activeKeyHandler);
    activeKeyHandler = this.onKey;
    document.addEventListener("keydown", this.onKey);
  }

  // fetch the display threshold and restore a session from the URL fragment
  async init(): Promise<void> {
    if (!this.thresholdPinned) {
      try {
        this.threshold = (await this.api.health()).threshold;
      } catch {
        // health is advisory; the default threshold still renders
      }
    }
    const fragment = window.location.hash.slice(1);
    if (fragment) await this.restore(fragment);
  }

  async start(team: string, home: boolean): Promise<void> {
    try {
      const created = await this.api.createSession(team, home);
      this.state = newConsole(
        created.session_id,
        created.team,
        created.home,
        created.n_history,
      );
      window.location.hash = created.session_id;
      this.showConsole();
    } catch (error) {
      if (!(error instanceof ApiError)) throw error;
      showStartError(this.root, error.message);
    }
  }

  async restore(sessionId: string): Promise<void> {
    try {
      const summary = await this.api.getSession(sessionId);
      this.state = newConsole(
        summary.session_id,
        summary.team,
        summary.home,
        summary.n_history,
      );
      this.showConsole();
    } catch (error) {
      if (!(error instanceof ApiError)) throw error;
      showStartError(this.root, `could not restore session: ${error.message}`);
      window.location.hash = "";
    }
  }

  private showConsole(): void {
    showConsolePanel(this.root);
    this.refresh();
    this.el<HTMLInputElement>("down").focus();
  }

  private refresh(): void {
    if (!this.state) return;
    renderHeader(this.root, this.state);
    renderLog(this.root, this.state);
  }

  readForm(): SituationBody {
    const num = (id: string) => Number(this.el<HTMLInputElement>(id).value);
    const flag = (id: string) => this.el<HTMLInputElement>(id).checked;
    return {
      down: num("down"),
      ydstogo: num("ydstogo"),
      shotgun: flag("shotgun"),
      no_huddle: flag("no_huddle"),
      own_score: num("own_score"),
      opp_score: num("opp_score"),
      goaltogo: flag("goaltogo"),
      yardline_100: num("yardline_100"),
    };
  }

  // per-play fields reset after a recorded play; score and field position
  // carry over because they are game state, not play state
  private clearPerPlayFields(): void {
    this.el<HTMLInputElement>("down").value = "1";
    this.el<HTMLInputElement>("ydstogo").value = "10";
    for (const id of ["shotgun", "no_huddle", "goaltogo"]) {
      this.el<HTMLInputElement>(id).checked = false;
    }
  }

  async submitForecast(): Promise<void> {
    if (!this.state) return;
    showConsoleError(this.root, "");
    const form = this.readForm();
    const errors = validateForm(form);
    renderFieldErrors(this.root, errors);
    if (errors.length > 0) return; // invalid forms never leave the tab
    const seq = this.gate.next();
    try {
      const forecast = await this.api.forecast(this.state.sessionId, form);
      if (!this.gate.isCurrent(seq) || !this.state) return; // stale, discard
      this.state = applyForecast(this.state, forecast);
      renderForecast(this.root, forecast, this.threshold);
    } catch (error) {
      if (!(error instanceof ApiError)) throw error;
      if (!this.gate.isCurrent(seq)) return;
      if (error.status === 422) {
        renderFieldErrors(this.root, error.violations); // panel stays as-is
      } else {
        showConsoleError(this.root, error.message);
      }
    }
  }

  async record(call: Call): Promise<void> {
    if (!this.state) return;
    showConsoleError(this.root, "");
    const form = this.readForm();
    const errors = validateForm(form);
    renderFieldErrors(this.root, errors);
    if (errors.length > 0) return;
    const buttons = [
      this.el<HTMLButtonElement>("record-run"),
      this.el<HTMLButtonElement>("record-pass"),
    ];
    buttons.forEach((b) => (b.disabled = true));
    try {
      const result = await this.api.recordPlay(this.state.sessionId, form, call);
      this.state = recordPlay(this.state, form, call, result.n_history);
      clearForecastPanel(this.root);
      this.clearPerPlayFields();
      this.refresh();
    } catch (error) {
      if (!(error instanceof ApiError)) throw error;
      if (error.status === 422) {
        renderFieldErrors(this.root, error.violations);
      } else {
        showConsoleError(this.root, error.message);
      }
    } finally {
      buttons.forEach((b) => (b.disabled = false));
    }
  }

  private onKey = (event: KeyboardEvent): void => {
    const target = event.target as HTMLElement | null;
    if (target && ["INPUT", "TEXTAREA", "SELECT"].includes(target.tagName)) {
      return;
    }
    if (!this.state) return;
    const key = event.key.toLowerCase();
    if (key >= "1" && key <= "4") {
      this.el<HTMLInputElement>("down").value = key;
    } else if (key === "s") {
      this.toggle("shotgun");
    } else if (key === "n") {
      this.toggle("no_huddle");
    } else if (key === "g") {
      this.toggle("goaltogo");
    } else if (key === "f" || key === "enter") {
      void this.submitForecast();
    } else if (key === "r") {
      void this.record("run");
    } else if (key === "p") {
      void this.record("pass");
    }
  };

  private toggle(id: string): void {
    const box = this.el<HTMLInputElement>(id);
    box.checked = !box.checked;
  }
}

// page entry point; configuration is limited to the API base URL and an
// optional display threshold (?api=...&threshold=0.7)
export function boot(): void {
  const params = new URLSearchParams(window.location.search);
  const opts: ConsoleOptions = {};
  const threshold = params.get("threshold");
  if (threshold) opts.threshold = Number(threshold);
  const app = new ConsoleApp(document, new ApiClient(params.get("api") ?? ""), opts);
  app.mount();
  void app.init();
}
