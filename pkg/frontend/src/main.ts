/** DOM wiring: pair switcher, K1 slider, panes, accept button, report. */

import { ApiClient } from "./api.js";
import { TunerController } from "./controller.js";
import { densitySvg, gmmBadge, scatterSvg } from "./render.js";

const api = new ApiClient("");
const controller = new TunerController(api);

const $ = (id: string): HTMLElement => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
};

async function refreshPanes(): Promise<void> {
  const { pair, versus, solution } = controller.getState();
  const [i, j] = pair;
  const [k, l] = versus;
  const [marginal, atoms] = await Promise.all([
    api.marginal(i, j, k, l),
    api.atoms(i, j),
  ]);
  const omega = solution?.omega_hat ?? null;
  $("scatter-pane").innerHTML = scatterSvg(marginal, omega);
  $("density-pane").innerHTML = densitySvg(marginal.histogram, atoms, omega);
}

async function refreshReport(): Promise<void> {
  const report = await api.report();
  $("report-pane").textContent = report.accepted
    .map((r) => `ω(${r.i}→${r.j}) = ${r.omega.toFixed(4)}`)
    .join("\n");
}

function renderState(): void {
  const s = controller.getState();
  const sol = s.solution;
  $("estimate").textContent =
    sol && sol.omega_hat !== null ? sol.omega_hat.toFixed(6) : "—";
  $("k1-value").textContent = `K1 = ${s.k1.toPrecision(3)}, K2 = ${(1 - s.k1).toPrecision(3)}`;
  ($("accept") as HTMLButtonElement).disabled = !s.acceptEnabled;
  $("banner").textContent = s.needsManualTuning ? "NEEDS_MANUAL_TUNING" : "";
  $("banner").classList.toggle("visible", s.needsManualTuning);
  $("error").textContent = s.error ?? "";
  $("gmm-badge").textContent = gmmBadge(
    s.gmm?.report.estimate ?? null,
    s.gmmUnavailable,
  );
  if (s.accepted !== null) {
    void refreshReport();
  }
}

async function populatePairSwitcher(): Promise<void> {
  const graph = await api.graph();
  const select = $("pair-select") as HTMLSelectElement;
  for (const e of graph.edges) {
    const opt = document.createElement("option");
    opt.value = `${e.i},${e.j}`;
    opt.textContent = `Y(${e.i}→${e.j})`;
    select.appendChild(opt);
  }
  select.addEventListener("change", () => {
    const [i, j] = select.value.split(",").map(Number);
    controller.setPair(i, j);
    void controller.solveNow().then(refreshPanes);
    void controller.fetchGmm();
  });
}

export async function boot(): Promise<void> {
  controller.subscribe(renderState);
  await populatePairSwitcher();

  // slider position p in [0, 1] maps to K1 = 10^(-7 + 7p): useful boundary
  // positions span several decades of K1 once the sample size is large
  const slider = $("k1-slider") as HTMLInputElement;
  slider.addEventListener("input", () => {
    const p = Number(slider.value);
    controller.setK1(Math.pow(10, -7 + 7 * p));
  });
  controller.subscribe((s) => {
    if (!s.busy && s.solution) void refreshPanes();
  });

  $("accept").addEventListener("click", () => void controller.accept());

  controller.setK1(0.5);
  void controller.fetchGmm();
  await refreshReport();
}

if (typeof document !== "undefined" && document.getElementById("k1-slider")) {
  void boot();
}
