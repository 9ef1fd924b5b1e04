// Demo page wiring: three wasm calls, three canvas plots, no dependencies.

import init, { sweep, simulate_maneuver, monte_carlo_compare } from "./pkg/attsim_wasm.js";

const $ = (id) => document.getElementById(id);

const COLORS = { blue: "#0b6e99", red: "#c2452d", grid: "#e4e8ec", ink: "#5c6670" };
const PAD = { left: 48, right: 12, top: 12, bottom: 28 };

function plotArea(canvas) {
  return {
    x: PAD.left,
    y: PAD.top,
    w: canvas.width - PAD.left - PAD.right,
    h: canvas.height - PAD.top - PAD.bottom,
  };
}

function clearCanvas(canvas) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  return ctx;
}

function niceTicks(lo, hi, count = 5) {
  if (!(hi > lo)) hi = lo + 1;
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = span / (count * step);
  const mult = err >= 7.5 ? 10 : err >= 3 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const ticks = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + s * 1e-9; v += s) ticks.push(v);
  return ticks;
}

function fmtTick(v) {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1000 || a < 0.01) return v.toExponential(0);
  return +v.toFixed(3) + "";
}

// Draws axes plus one or more {xs, ys, color} series on a shared scale.
function drawChart(canvas, seriesList, xLabel) {
  const ctx = clearCanvas(canvas);
  const area = plotArea(canvas);

  let xMin = Infinity, xMax = -Infinity, yMin = 0, yMax = -Infinity;
  for (const s of seriesList) {
    for (const x of s.xs) { xMin = Math.min(xMin, x); xMax = Math.max(xMax, x); }
    for (const y of s.ys) { yMin = Math.min(yMin, y); yMax = Math.max(yMax, y); }
  }
  if (yMax <= yMin) yMax = yMin + 1;
  yMax *= 1.05;

  const sx = (x) => area.x + ((x - xMin) / (xMax - xMin)) * area.w;
  const sy = (y) => area.y + area.h - ((y - yMin) / (yMax - yMin)) * area.h;

  ctx.strokeStyle = COLORS.grid;
  ctx.fillStyle = COLORS.ink;
  ctx.font = "11px system-ui, sans-serif";
  ctx.lineWidth = 1;
  for (const t of niceTicks(yMin, yMax)) {
    ctx.beginPath();
    ctx.moveTo(area.x, sy(t));
    ctx.lineTo(area.x + area.w, sy(t));
    ctx.stroke();
    ctx.textAlign = "right";
    ctx.fillText(fmtTick(t), area.x - 6, sy(t) + 4);
  }
  for (const t of niceTicks(xMin, xMax, 8)) {
    ctx.textAlign = "center";
    ctx.fillText(fmtTick(t), sx(t), area.y + area.h + 16);
  }
  ctx.textAlign = "center";
  ctx.fillText(xLabel, area.x + area.w / 2, canvas.height - 4);
  ctx.strokeStyle = COLORS.ink;
  ctx.strokeRect(area.x, area.y, area.w, area.h);

  for (const s of seriesList) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 1.75;
    ctx.beginPath();
    s.xs.forEach((x, i) => {
      const px = sx(x), py = sy(s.ys[i]);
      if (i === 0) ctx.moveTo(px, py); else ctx.lineTo(px, py);
    });
    ctx.stroke();
  }
}

function parseAxis(text) {
  const parts = text.split(",").map((p) => Number(p.trim()));
  if (parts.length !== 3 || parts.some((p) => !Number.isFinite(p))) {
    throw new Error(`axis must be three comma-separated numbers, got "${text}"`);
  }
  return parts;
}

async function guard(button, readout, work) {
  button.disabled = true;
  try {
    await work();
  } catch (err) {
    readout.textContent = `error: ${err.message ?? err}`;
  } finally {
    button.disabled = false;
  }
}

function runSweep() {
  guard($("run-sweep"), $("sweep-readout"), async () => {
    const resp = sweep({
      axis: parseAxis($("sweep-axis").value),
      weights: [Number($("k1").value), Number($("k2").value), Number($("k3").value)],
      points: 361,
    });
    drawChart($("sweep-canvas"), [
      { xs: resp.beta_deg, ys: resp.qnorm, color: COLORS.blue },
      { xs: resp.beta_deg, ys: resp.ernorm, color: COLORS.red },
    ], "error angle β (degrees)");
    const qPeak = Math.max(...resp.qnorm);
    const ePeak = Math.max(...resp.ernorm);
    $("sweep-readout").textContent =
      `peaks: quaternion term ${qPeak.toFixed(4)}, rotation-matrix term ${ePeak.toFixed(4)}; ` +
      `both terms vanish again at 180°.`;
  });
}

function runManeuver() {
  guard($("run-maneuver"), $("maneuver-readout"), async () => {
    const resp = simulate_maneuver({
      angle_deg: Number($("angle").value),
      representation: $("representation").value,
      pseudo: $("pseudo").checked,
      noise: $("noise").checked,
      seed: BigInt(Math.max(0, Math.trunc(Number($("seed").value)))),
      dt: 1e-3,
      duration: 20.0,
    });
    drawChart($("maneuver-canvas"), [
      { xs: resp.t, ys: resp.psi, color: COLORS.blue },
      { xs: resp.t, ys: resp.ew_norm, color: COLORS.red },
    ], "time (s)");
    const kicks = resp.pseudo_active.filter(Boolean).length;
    const fate = resp.converged
      ? `settled at t = ${resp.t_converge.toFixed(2)} s`
      : "did not settle within 20 s";
    $("maneuver-readout").textContent =
      `${fate}; substitution active on ${kicks} of ${resp.pseudo_active.length} plotted samples.`;
  });
}

function drawDotStrips(canvas, tOn, tOff, medianOn, medianOff, duration) {
  const ctx = clearCanvas(canvas);
  const area = plotArea(canvas);
  const xMax = duration;
  const sx = (t) => area.x + (Math.min(t, xMax) / xMax) * area.w;
  const rows = [
    { label: "on", times: tOn, median: medianOn, color: COLORS.blue, y: area.y + area.h * 0.3 },
    { label: "off", times: tOff, median: medianOff, color: COLORS.red, y: area.y + area.h * 0.7 },
  ];

  ctx.font = "11px system-ui, sans-serif";
  ctx.fillStyle = COLORS.ink;
  for (const t of niceTicks(0, xMax, 8)) {
    ctx.strokeStyle = COLORS.grid;
    ctx.beginPath();
    ctx.moveTo(sx(t), area.y);
    ctx.lineTo(sx(t), area.y + area.h);
    ctx.stroke();
    ctx.textAlign = "center";
    ctx.fillText(fmtTick(t), sx(t), area.y + area.h + 16);
  }
  ctx.textAlign = "center";
  ctx.fillText("settling time (s)", area.x + area.w / 2, canvas.height - 4);
  ctx.strokeStyle = COLORS.ink;
  ctx.strokeRect(area.x, area.y, area.w, area.h);

  for (const row of rows) {
    ctx.fillStyle = row.color;
    ctx.globalAlpha = 0.55;
    for (const t of row.times) {
      ctx.beginPath();
      ctx.arc(sx(t), row.y, 4, 0, Math.PI * 2);
      ctx.fill();
    }
    ctx.globalAlpha = 1;
    ctx.strokeStyle = row.color;
    ctx.lineWidth = 2.5;
    ctx.beginPath();
    ctx.moveTo(sx(row.median), row.y - 14);
    ctx.lineTo(sx(row.median), row.y + 14);
    ctx.stroke();
    ctx.textAlign = "left";
    ctx.fillText(row.label, area.x + 6, row.y - 12);
  }
}

function runMonteCarlo() {
  guard($("run-mc"), $("mc-readout"), async () => {
    $("mc-readout").textContent = "running…";
    // Let the browser paint the readout before the long synchronous call.
    await new Promise((resolve) => setTimeout(resolve, 20));
    const seeds = Math.min(50, Math.max(2, Math.trunc(Number($("mc-seeds").value))));
    const duration = 20.0;
    const resp = monte_carlo_compare({ seeds: BigInt(seeds), dt: 1e-3, duration });
    drawDotStrips($("mc-canvas"), resp.t_on, resp.t_off, resp.median_on, resp.median_off, duration);
    $("mc-readout").textContent =
      `medians: ${resp.median_on.toFixed(2)} s with substitution, ` +
      `${resp.median_off.toFixed(2)} s without (${seeds} paired seeds, σ = 0.01).`;
  });
}

async function main() {
  await init();
  $("status").textContent = "";
  $("run-sweep").addEventListener("click", runSweep);
  $("run-maneuver").addEventListener("click", runManeuver);
  $("run-mc").addEventListener("click", runMonteCarlo);
  runSweep();
}

main().catch((err) => {
  $("status").textContent =
    `Failed to load the WebAssembly module: ${err.message ?? err}. ` +
    `Build it with wasm-pack first (see the repository README).`;
});
