import init, { classical_orbit, lyapunov, QuantumRun } from "./pkg/optomech_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

// rough extent of the g0 = 0.1 attractors; rescaled per plot when exceeded
let box = { qmin: -4, qmax: 4, pmin: -4, pmax: 4 };

function fit(xy) {
  let b = { qmin: Infinity, qmax: -Infinity, pmin: Infinity, pmax: -Infinity };
  for (let i = 0; i < xy.length; i += 2) {
    b.qmin = Math.min(b.qmin, xy[i]); b.qmax = Math.max(b.qmax, xy[i]);
    b.pmin = Math.min(b.pmin, xy[i + 1]); b.pmax = Math.max(b.pmax, xy[i + 1]);
  }
  const pad = 0.05 * Math.max(b.qmax - b.qmin, b.pmax - b.pmin, 1e-3);
  return { qmin: b.qmin - pad, qmax: b.qmax + pad, pmin: b.pmin - pad, pmax: b.pmax + pad };
}

function clear(canvas, label) {
  const g = canvas.getContext("2d");
  g.clearRect(0, 0, canvas.width, canvas.height);
  g.fillStyle = "#666";
  g.fillText(label, 6, 14);
  return g;
}

function polyline(canvas, xy, color, from = 0) {
  const g = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height;
  const X = (q) => ((q - box.qmin) / (box.qmax - box.qmin)) * w;
  const Y = (p) => h - ((p - box.pmin) / (box.pmax - box.pmin)) * h;
  g.strokeStyle = color;
  g.lineWidth = 0.7;
  g.beginPath();
  for (let i = from; i < xy.length; i += 2) {
    if (i === from) g.moveTo(X(xy[i]), Y(xy[i + 1]));
    else g.lineTo(X(xy[i]), Y(xy[i + 1]));
  }
  g.stroke();
}

// q against time, scrolling over the last `span` samples
function series(canvas, qs, label) {
  const g = clear(canvas, label);
  const w = canvas.width, h = canvas.height;
  const span = Math.min(qs.length, 4000);
  const tail = qs.slice(qs.length - span);
  g.strokeStyle = "#1b5e9b";
  g.beginPath();
  tail.forEach((q, i) => {
    const x = (i / Math.max(span - 1, 1)) * w;
    const y = h - ((q - box.qmin) / (box.qmax - box.qmin)) * h;
    if (i === 0) g.moveTo(x, y); else g.lineTo(x, y);
  });
  g.stroke();
}

function drawOrbit() {
  try {
    const xy = classical_orbit(num("g0"), num("q0"), num("p0"), num("periods"), 10);
    // drop the first fifth so the plot shows the attractor rather than the approach
    const skip = 2 * Math.floor(xy.length / 10);
    box = fit(xy.subarray(skip));
    clear($("phase"), "mean-field (q, p)");
    polyline($("phase"), xy, "#b33", skip);
    const qs = [];
    for (let i = skip; i < xy.length; i += 2) qs.push(xy[i]);
    series($("series"), qs, "q(τ), mean field");
  } catch (e) {
    $("lyap-out").textContent = String(e);
  }
}

function runLyapunov() {
  $("lyap-out").textContent = "integrating…";
  // let the label paint before the blocking computation
  setTimeout(() => {
    try {
      const [lam, se] = lyapunov(num("g0"), num("q0"), num("p0"));
      const kind = lam > 3 * se ? "chaotic" : "regular";
      $("lyap-out").textContent = `λ = ${lam.toFixed(4)} ± ${se.toFixed(4)} (${kind})`;
    } catch (e) {
      $("lyap-out").textContent = String(e);
    }
  }, 20);
}

let run = null;
let timer = null;
let trace = [];

function stopQuantum() {
  if (timer !== null) cancelAnimationFrame(timer);
  timer = null;
  $("stop").disabled = true;
  $("qsd").disabled = false;
}

function frame() {
  try {
    const fresh = run.advance(Math.PI, 5);
    const start = Math.max(trace.length - 2, 0);
    trace.push(...fresh);
    polyline($("phase"), trace, "#1b5e9b", start);
    const qs = [];
    for (let i = 0; i < trace.length; i += 2) qs.push(trace[i]);
    series($("series"), qs, "q(τ), quantum trajectory");
    const periods = run.tau() / (2 * Math.PI);
    const esc = run.escape_tau();
    const state = Number.isNaN(esc) ? "chaotic" : `escaped at ${(esc / (2 * Math.PI)).toFixed(1)} periods`;
    $("qsd-out").textContent =
      `${periods.toFixed(1)} periods, ${state}, top population ${run.top_population().toExponential(1)}`;
    timer = requestAnimationFrame(frame);
  } catch (e) {
    $("qsd-out").textContent = String(e);
    stopQuantum();
  }
}

function startQuantum() {
  stopQuantum();
  try {
    if (run) run.free();
    run = new QuantumRun(num("g0"), BigInt(num("seed")), num("trunc"));
  } catch (e) {
    $("qsd-out").textContent = String(e);
    return;
  }
  trace = [];
  // the chaotic attractor at g0 = 0.1 sits well inside this box
  box = { qmin: -3, qmax: 3, pmin: -3, pmax: 3 };
  clear($("phase"), "quantum trajectory (q, p)");
  $("qsd").disabled = true;
  $("stop").disabled = false;
  timer = requestAnimationFrame(frame);
}

await init();
$("orbit").onclick = drawOrbit;
$("lyap").onclick = runLyapunov;
$("qsd").onclick = startQuantum;
$("stop").onclick = stopQuantum;
drawOrbit();
