/** Tuning-session state machine.
 *
 * Holds the selected pair, the K1 slider value (K2 = 1 - K1 is implied by
 * the single-slider invariant), the latest server solution and the accept
 * gate.  All solving happens server-side; the controller only schedules
 * requests and records responses.
 */

import { ApiClient, ApiError, GmmPayload, QpSolution } from "./api.js";

export interface TunerState {
  pair: [number, number];
  versus: [number, number];
  k1: number;
  solution: QpSolution | null;
  gmm: GmmPayload | null;
  gmmUnavailable: string | null;
  needsManualTuning: boolean;
  error: string | null;
  acceptEnabled: boolean;
  accepted: number | null;
  busy: boolean;
}

export interface RequestLogEntry {
  method: string;
  args: unknown[];
  omegaHat: number | null;
}

type Listener = (state: TunerState) => void;

export class TunerController {
  private state: TunerState;
  private listeners: Listener[] = [];
  private debounceHandle: ReturnType<typeof setTimeout> | null = null;
  private solveSeq = 0;
  /** every displayed estimate with the server call it came from */
  readonly requestLog: RequestLogEntry[] = [];

  constructor(
    private readonly api: ApiClient,
    readonly debounceMs = 150,
  ) {
    this.state = {
      pair: [2, 4],
      versus: [1, 4],
      k1: 0.5,
      solution: null,
      gmm: null,
      gmmUnavailable: null,
      needsManualTuning: false,
      error: null,
      acceptEnabled: false,
      accepted: null,
      busy: false,
    };
  }

  getState(): TunerState {
    return { ...this.state };
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private update(patch: Partial<TunerState>): void {
    this.state = { ...this.state, ...patch };
    for (const l of this.listeners) l(this.getState());
  }

  setPair(i: number, j: number): void {
    this.update({
      pair: [i, j],
      solution: null,
      gmm: null,
      gmmUnavailable: null,
      needsManualTuning: false,
      acceptEnabled: false,
      accepted: null,
      error: null,
    });
  }

  setVersus(k: number, l: number): void {
    this.update({ versus: [k, l] });
  }

  /** Slider handler: K1 in (0, 1); the solve is debounced. */
  setK1(k1: number): void {
    if (!(k1 > 0 && k1 < 1)) {
      this.update({ error: `K1 must lie strictly between 0 and 1, got ${k1}` });
      return;
    }
    this.update({ k1, error: null });
    if (this.debounceHandle !== null) clearTimeout(this.debounceHandle);
    if (this.debounceMs === 0) {
      void this.solveNow();
    } else {
      this.debounceHandle = setTimeout(() => void this.solveNow(), this.debounceMs);
    }
  }

  /** POST /api/qp for the current pair and slider position. */
  async solveNow(): Promise<QpSolution | null> {
    const seq = ++this.solveSeq;
    const [i, j] = this.state.pair;
    const k1 = this.state.k1;
    this.update({ busy: true });
    try {
      const sol = await this.api.qp(i, j, k1, 1 - k1);
      if (seq !== this.solveSeq) return null; // a newer slide superseded us
      this.requestLog.push({
        method: "qp",
        args: [i, j, k1, 1 - k1],
        omegaHat: sol.omega_hat,
      });
      this.update({
        solution: sol,
        needsManualTuning: sol.flag === "NEEDS_MANUAL_TUNING",
        acceptEnabled: sol.omega_hat !== null,
        error: null,
        busy: false,
      });
      return sol;
    } catch (err) {
      if (seq === this.solveSeq) {
        this.update({ error: describe(err), busy: false });
      }
      return null;
    }
  }

  /** Fetch the mixture comparison badge; absence is not an error state. */
  async fetchGmm(kmax = 3, seed = 0): Promise<void> {
    const [i, j] = this.state.pair;
    try {
      const gmm = await this.api.gmm(i, j, kmax, seed);
      this.requestLog.push({
        method: "gmm",
        args: [i, j, kmax, seed],
        omegaHat: gmm.report.estimate,
      });
      this.update({ gmm, gmmUnavailable: null });
    } catch (err) {
      this.update({ gmm: null, gmmUnavailable: describe(err) });
    }
  }

  /** Accept the latest solved estimate into the server ledger. */
  async accept(): Promise<boolean> {
    const sol = this.state.solution;
    if (!this.state.acceptEnabled || sol === null || sol.omega_hat === null) {
      this.update({ error: "nothing to accept: run a solve first" });
      return false;
    }
    const [i, j] = this.state.pair;
    try {
      await this.api.accept(i, j, sol.omega_hat);
      this.update({ accepted: sol.omega_hat, error: null });
      return true;
    } catch (err) {
      this.update({ error: describe(err) });
      return false;
    }
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  if (err instanceof Error) return err.message;
  return String(err);
}
