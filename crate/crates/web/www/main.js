import init, { classify_state, monotone_histogram, order_query } from "./pkg/entclass_web.js";

const SVG = "http://www.w3.org/2000/svg";
const h = Math.SQRT1_2;

const PRESETS = {
  ghz: { dims: [2, 2, 2], amplitudes: [[[0, 0, 0], 1], [[1, 1, 1], 1]] },
  w: { dims: [2, 2, 2], amplitudes: [[[0, 0, 1], 1], [[0, 1, 0], 1], [[1, 0, 0], 1]] },
  b3: { dims: [2, 2, 1], amplitudes: [[[0, 1, 0], 1], [[1, 0, 0], 1]] },
  c223: { dims: [2, 2, 3], amplitudes: [[[0, 0, 0], 1], [[0, 1, 1], h], [[1, 0, 1], h], [[1, 1, 2], 1]] },
  c224: { dims: [2, 2, 4], amplitudes: [[[0, 0, 0], 1], [[0, 1, 1], 1], [[1, 0, 2], 1], [[1, 1, 3], 1]] },
};

const LABELS = ["224-generic", "223-generic", "223-degenerate", "GHZ", "W", "B1", "B2", "B3", "separable"];

function presetText(p) {
  const amplitudes = p.amplitudes.map(([index, re]) => ({ index, re, im: 0 }));
  return JSON.stringify({ dims: p.dims, amplitudes }, null, 1);
}

function show(el, fn) {
  try {
    el.classList.remove("error");
    return fn();
  } catch (e) {
    el.classList.add("error");
    el.textContent = String(e.message ?? e);
  }
}

function svgEl(name, attrs, text) {
  const el = document.createElementNS(SVG, name);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, v);
  if (text !== undefined) el.textContent = text;
  return el;
}

function runClassify() {
  const out = document.getElementById("classify-out");
  show(out, () => {
    const r = JSON.parse(classify_state(document.getElementById("state").value));
    out.textContent = JSON.stringify(r, null, 2);
  });
}

function drawHistogram(r) {
  const svg = document.getElementById("histogram");
  svg.replaceChildren();
  const W = 720, H = 220, pad = 30;
  const max = Math.max(1, ...r.bins.map((b) => b.count));
  const bw = (W - 2 * pad) / r.bins.length;
  r.bins.forEach((b, i) => {
    const bh = ((H - 2 * pad) * b.count) / max;
    svg.append(svgEl("rect", { x: pad + i * bw + 1, y: H - pad - bh, width: bw - 2, height: bh, fill: "#4a7ab5" }));
    if (i % 4 === 0) svg.append(svgEl("text", { x: pad + i * bw, y: H - pad + 14 }, `1e${b.lo}`));
  });
  svg.append(svgEl("text", { x: W / 2 - 80, y: H - 4 }, "slack / |Det| (passing trials)"));
}

function runMonotone() {
  const summary = document.getElementById("monotone-summary");
  show(summary, () => {
    const measure = document.getElementById("measure").value;
    const trials = Number(document.getElementById("trials").value);
    const seed = Number(document.getElementById("seed").value);
    const r = JSON.parse(monotone_histogram(measure, trials, seed));
    summary.textContent =
      `${r.trials} trials, ${r.violations} violations, ` +
      `min slack/|Det| = ${r.min_rel_slack.toExponential(3)}, ${r.below_range} below the plotted range`;
    drawHistogram(r);
  });
}

function drawDiagram(r) {
  const svg = document.getElementById("diagram");
  svg.replaceChildren();
  const byGrade = new Map();
  for (const node of r.order.nodes) {
    if (!byGrade.has(node.grade)) byGrade.set(node.grade, []);
    byGrade.get(node.grade).push(node.label);
  }
  const pos = new Map();
  const grades = [...byGrade.keys()].sort((a, b) => b - a);
  grades.forEach((g, row) => {
    const labels = byGrade.get(g);
    labels.forEach((l, i) => pos.set(l, [(720 * (i + 1)) / (labels.length + 1), 30 + row * 65]));
  });
  const onPath = new Set();
  if (r.path) for (let i = 0; i + 1 < r.path.length; i++) onPath.add(`${r.path[i]}>${r.path[i + 1]}`);
  for (const [u, l] of r.order.edges) {
    const [x1, y1] = pos.get(u);
    const [x2, y2] = pos.get(l);
    const hot = onPath.has(`${u}>${l}`);
    svg.append(svgEl("line", { x1, y1, x2, y2, stroke: hot ? "#c33" : "#999", "stroke-width": hot ? 3 : 1 }));
  }
  for (const [label, [x, y]] of pos) {
    svg.append(svgEl("circle", { cx: x, cy: y, r: 6, fill: label === r.from || label === r.to ? "#c33" : "#333" }));
    svg.append(svgEl("text", { x: x + 9, y: y + 4 }, label));
  }
}

function runOrder() {
  const out = document.getElementById("order-out");
  show(out, () => {
    const r = JSON.parse(order_query(document.getElementById("from").value, document.getElementById("to").value));
    out.textContent = r.reachable
      ? `reachable: ${r.path.join(" -> ")}; witness output classified as ${r.witness_result}`
      : `not reachable from ${r.from} to ${r.to}`;
    drawDiagram(r);
  });
}

await init();

const state = document.getElementById("state");
state.value = presetText(PRESETS.ghz);
for (const b of document.querySelectorAll("[data-preset]")) {
  b.addEventListener("click", () => {
    state.value = presetText(PRESETS[b.dataset.preset]);
    runClassify();
  });
}
for (const id of ["from", "to"]) {
  const sel = document.getElementById(id);
  for (const l of LABELS) sel.append(new Option(l, l));
}
document.getElementById("to").value = "B3";
document.getElementById("run-classify").addEventListener("click", runClassify);
document.getElementById("run-monotone").addEventListener("click", runMonotone);
document.getElementById("run-order").addEventListener("click", runOrder);
runClassify();
runOrder();
