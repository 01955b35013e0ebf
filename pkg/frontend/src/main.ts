/** DOM wiring for the ostium editor. */

import { ApiClient } from "./api.js";
import { EditorController } from "./controller.js";
import { LABEL_COLORS, LABEL_NAMES } from "./labels.js";
import type { Phase } from "./state.js";
import { Viewer } from "./viewer.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("viewport");
const viewer = new Viewer(canvas);

const seedInput = el<HTMLInputElement>("vessel-seed");
const btnVessel = el<HTMLButtonElement>("btn-vessel");
const btnAuto = el<HTMLButtonElement>("btn-auto-ostium");
const ringSlider = el<HTMLInputElement>("ring-radius");
const ringValue = el<HTMLSpanElement>("ring-radius-value");
const sacSeedInput = el<HTMLInputElement>("sac-seed");
const btnGenerate = el<HTMLButtonElement>("btn-generate");
const btnAccept = el<HTMLButtonElement>("btn-accept");
const btnExport = el<HTMLAnchorElement>("btn-export");
const btnReset = el<HTMLButtonElement>("btn-reset");
const banner = el<HTMLDivElement>("error-banner");
const bannerText = el<HTMLSpanElement>("error-text");
const bannerClose = el<HTMLButtonElement>("error-close");
const statusLine = el<HTMLSpanElement>("status-line");
const morphoPanel = el<HTMLDivElement>("morpho-panel");
const morphoBody = el<HTMLTableSectionElement>("morpho-body");
const legend = el<HTMLDivElement>("legend");

for (const [label, name] of Object.entries(LABEL_NAMES)) {
  const [r, g, b] = LABEL_COLORS[Number(label)];
  const item = document.createElement("span");
  item.className = "legend-item";
  item.innerHTML =
    `<span class="swatch" style="background: rgb(${r},${g},${b})"></span>` +
    `${label} ${name}`;
  legend.appendChild(item);
}

const controller = new EditorController(new ApiClient(""), {
  onPhase: updateControls,
  onVessel(v) {
    viewer.setVessel(v.mesh);
    statusLine.textContent =
      `vessel seed ${v.seed}, ${v.mesh.n_vertices} vertices`;
  },
  onOstium(o) {
    viewer.clearOverlays();
    viewer.setMarker(o.centroid);
    viewer.setRing(o.ring_preview);
    ringSlider.value = String(o.ring_radius);
    ringValue.textContent = o.ring_radius.toFixed(3);
    statusLine.textContent =
      `ostium at vertex ${o.vertex_index} (${o.strategy}), ` +
      `ring radius ${o.ring_radius.toFixed(3)}`;
  },
  onPreview(a) {
    viewer.setSacPreview(a.mesh);
    sacSeedInput.value = String(a.seed);
    statusLine.textContent =
      `aneurysm seed ${a.seed}` + (a.has_bleb ? " (with bleb)" : "");
  },
  onAssembled(a) {
    viewer.setLabeledMesh(a.mesh, a.labels);
    morphoBody.replaceChildren(
      ...Object.entries(a.morphometrics).map(([k, v]) => {
        const row = document.createElement("tr");
        row.innerHTML = `<td>${k}</td><td>${v.toPrecision(6)}</td>`;
        return row;
      }),
    );
    morphoPanel.hidden = false;
    const url = controller.exportUrl();
    if (url !== null) btnExport.href = url;
    statusLine.textContent =
      `assembled: ${a.mesh.n_vertices} vertices, ` +
      `ring of ${a.ring.vertex_ids.length}`;
  },
  onError(message) {
    bannerText.textContent = message;
    banner.hidden = false;
  },
});

function updateControls(phase: Phase): void {
  btnAuto.disabled = !controller.machine.can("ostiumSet");
  ringSlider.disabled = controller.ostium === null;
  btnGenerate.disabled = !controller.machine.can("previewReady");
  btnGenerate.textContent =
    phase === "preview" || phase === "assembled" ? "Regenerate" : "Generate";
  btnAccept.disabled = !controller.machine.can("assembled");
  btnReset.disabled = !controller.machine.can("reset");
  const exportable = phase === "assembled";
  btnExport.classList.toggle("disabled", !exportable);
  if (!exportable) {
    btnExport.removeAttribute("href");
    morphoPanel.hidden = true;
  }
}

bannerClose.addEventListener("click", () => {
  banner.hidden = true;
});

btnVessel.addEventListener("click", () => {
  const raw = seedInput.value.trim();
  const seed = raw === "" ? undefined : Number(raw);
  void controller.newVessel(seed);
});

canvas.addEventListener("pointerdown", (ev) => {
  (canvas as HTMLElement).dataset.downAt = `${ev.clientX},${ev.clientY}`;
});
canvas.addEventListener("pointerup", (ev) => {
  // distinguish a click from an orbit drag
  const down = (canvas as HTMLElement).dataset.downAt?.split(",").map(Number);
  if (!down) return;
  if (Math.hypot(ev.clientX - down[0], ev.clientY - down[1]) > 4) return;
  if (!controller.machine.can("ostiumSet")) return;
  const vertexId = viewer.pick(ev);
  if (vertexId !== null) void controller.pickVertex(vertexId);
});

ringSlider.addEventListener("input", () => {
  const radius = Number(ringSlider.value);
  ringValue.textContent = radius.toFixed(3);
  controller.adjustRing(radius);
});

btnAuto.addEventListener("click", () => {
  void controller.autoOstium();
});

sacSeedInput.addEventListener("change", () => {
  const raw = sacSeedInput.value.trim();
  controller.pinnedSeed = raw === "" ? null : Number(raw);
});

btnGenerate.addEventListener("click", () => {
  void controller.generatePreview();
});

btnAccept.addEventListener("click", () => {
  void controller.accept();
});

btnReset.addEventListener("click", () => {
  controller.reset();
  viewer.clearOverlays();
  viewer.showVessel();
  statusLine.textContent = "ostium cleared";
});

updateControls(controller.machine.phase);
