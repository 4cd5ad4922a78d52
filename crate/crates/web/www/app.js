import init, { greedyQueries, spectrum, candidateScores } from "./pkg/discrepal_web.js";

const canvas = document.getElementById("plot");
const ctx = canvas.getContext("2d");
const $ = (id) => document.getElementById(id);

// world coordinates span [-3, 3] on both axes
const SPAN = 3;
const toWorld = (px) => (px / canvas.width) * 2 * SPAN - SPAN;
const toPixel = (w) => ((w + SPAN) / (2 * SPAN)) * canvas.width;

let xs = [];
let ys = [];
let queries = [];
let seed = 0;

function settings() {
  return {
    criterion: $("criterion").value,
    sigma: Math.max(0, Number($("sigma").value) || 0),
    budget: Math.max(1, Math.floor(Number($("budget").value) || 1)),
  };
}

function report(err) {
  $("error").textContent = err ? String(err.message ?? err) : "";
}

function gaussian() {
  const u = 1 - Math.random();
  return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * Math.random());
}

function cloud() {
  xs = [];
  ys = [];
  for (let i = 0; i < 120; i++) {
    const c = i % 3;
    xs.push([-1.2, 1.0, 0.2][c] + 0.45 * gaussian());
    ys.push([-0.8, -0.6, 1.3][c] + 0.45 * gaussian());
  }
  queries = [];
  draw();
}

function shade(scores) {
  const finite = scores.filter(Number.isFinite);
  if (finite.length === 0) return () => null;
  const lo = Math.min(...finite);
  const hi = Math.max(...finite);
  return (v) => {
    if (!Number.isFinite(v)) return null;
    const t = hi > lo ? (v - lo) / (hi - lo) : 0;
    return `hsl(${Math.round(140 * (1 - t))}, 70%, 45%)`;
  };
}

function draw() {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const { criterion, sigma } = settings();
  let colour = () => null;
  if ($("heat").checked && criterion !== "random" && xs.length >= 2) {
    try {
      colour = shade(Array.from(candidateScores(xs, ys, Uint32Array.from(queries), criterion, sigma)));
    } catch (e) {
      report(e);
    }
  }
  for (let i = 0; i < xs.length; i++) {
    ctx.beginPath();
    ctx.arc(toPixel(xs[i]), toPixel(ys[i]), 4, 0, 2 * Math.PI);
    ctx.fillStyle = colour(i) ?? "#888";
    ctx.fill();
  }
  ctx.font = "12px system-ui";
  queries.forEach((q, k) => {
    const x = toPixel(xs[q]);
    const y = toPixel(ys[q]);
    ctx.beginPath();
    ctx.arc(x, y, 7, 0, 2 * Math.PI);
    ctx.strokeStyle = "#000";
    ctx.lineWidth = 2;
    ctx.stroke();
    ctx.fillStyle = "#000";
    ctx.fillText(String(k + 1), x + 9, y - 6);
  });
  showValues();
}

function showValues() {
  if (queries.length === 0 || xs.length < 2) {
    $("values").textContent = `${xs.length} pool points, nothing labeled`;
    return;
  }
  try {
    const out = spectrum(xs, ys, Uint32Array.from(queries), settings().sigma);
    const top = Array.from(out.slice(3, 8)).map((v) => v.toExponential(3)).join(" ");
    $("values").textContent =
      `${xs.length} pool points, ${queries.length} labeled\n` +
      `discrepancy ${out[0].toFixed(5)}\nmmd         ${out[1].toFixed(5)}\nnuclear     ${out[2].toFixed(5)}\n` +
      `largest |eigenvalues| ${top}`;
  } catch (e) {
    report(e);
  }
}

function select(budget, fresh) {
  report(null);
  if (fresh) seed = Math.floor(Math.random() * 2 ** 31);
  const { criterion, sigma } = settings();
  try {
    queries = Array.from(greedyQueries(xs, ys, criterion, sigma, budget, seed));
  } catch (e) {
    report(e);
  }
  draw();
}

canvas.addEventListener("click", (ev) => {
  const r = canvas.getBoundingClientRect();
  xs.push(toWorld(ev.clientX - r.left));
  ys.push(toWorld(ev.clientY - r.top));
  queries = [];
  draw();
});

$("cloud").addEventListener("click", cloud);
$("clear").addEventListener("click", () => {
  xs = [];
  ys = [];
  queries = [];
  draw();
});
$("select").addEventListener("click", () => select(settings().budget, true));
// same seed, so one more query extends the current sequence
$("step").addEventListener("click", () => select(queries.length + 1, false));
for (const id of ["criterion", "sigma", "heat"]) {
  $(id).addEventListener("change", draw);
}

await init();
cloud();
