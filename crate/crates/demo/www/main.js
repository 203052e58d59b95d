import init, { Session, synthCloud, strokeToCloud } from "./pkg/ipia_demo.js";

const canvas = document.getElementById("view");
const ctx = canvas.getContext("2d");
const stats = document.getElementById("stats");
const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

const VIEW = 1.6;
let cloud = null;
let session = null;
let running = false;
let stroke = null;

const toCanvas = (x, y) => [
  ((x + VIEW) / (2 * VIEW)) * canvas.width,
  ((VIEW - y) / (2 * VIEW)) * canvas.height,
];
const toWorld = (px, py) => [
  (px / canvas.width) * 2 * VIEW - VIEW,
  VIEW - (py / canvas.height) * 2 * VIEW,
];

function restart() {
  if (!cloud) return;
  try {
    if (session) session.free();
    session = new Session(cloud, num("grid"), num("sigma"), num("noise"), 7);
  } catch (e) {
    session = null;
    stats.textContent = String(e.message ?? e);
    return;
  }
  draw();
}

function loadShape() {
  try {
    cloud = synthCloud($("shape").value, num("count"), num("gap"), num("gap-angle"), 0);
  } catch (e) {
    stats.textContent = String(e.message ?? e);
    return;
  }
  restart();
}

function drawField(res) {
  const values = session.field(res);
  const [x0, y0, x1, y1] = session.bounds();
  const scale = 2 * Math.max(...values.map(Math.abs), 1e-12);
  const cw = ((x1 - x0) / (res - 1)) * canvas.width / (2 * VIEW);
  const ch = ((y1 - y0) / (res - 1)) * canvas.height / (2 * VIEW);
  for (let i = 0; i < res; i++) {
    for (let j = 0; j < res; j++) {
      const v = values[i * res + j] / scale;
      const x = x0 + ((x1 - x0) * i) / (res - 1);
      const y = y0 + ((y1 - y0) * j) / (res - 1);
      const [px, py] = toCanvas(x, y);
      const a = Math.min(1, Math.abs(v) * 4);
      ctx.fillStyle = v < 0 ? `rgba(40,90,220,${a})` : `rgba(220,80,40,${a})`;
      ctx.fillRect(px - cw / 2, py - ch / 2, cw + 1, ch + 1);
    }
  }
}

function drawCurves() {
  const flat = session.curves(4 * num("grid"));
  ctx.strokeStyle = "#111";
  ctx.lineWidth = 2;
  let i = 0;
  let count = 0;
  while (i < flat.length) {
    const closed = flat[i] === 1;
    const n = flat[i + 1];
    ctx.beginPath();
    for (let k = 0; k < n; k++) {
      const [px, py] = toCanvas(flat[i + 2 + 2 * k], flat[i + 3 + 2 * k]);
      k === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
    }
    if (closed) ctx.closePath();
    ctx.stroke();
    i += 2 + 2 * n;
    count++;
  }
  return count;
}

function draw() {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  let curves = 0;
  if (session) {
    if ($("show-field").checked) drawField(96);
    if ($("show-offsets").checked) {
      const off = session.offsets();
      for (let k = 0; k < off.length; k += 3) {
        const [px, py] = toCanvas(off[k], off[k + 1]);
        ctx.fillStyle = off[k + 2] > 0 ? "#c43" : "#36c";
        ctx.fillRect(px - 1, py - 1, 2, 2);
      }
    }
    curves = drawCurves();
  }
  if (cloud) {
    ctx.fillStyle = "#0a0";
    for (let k = 0; k < cloud.length; k += 4) {
      const [px, py] = toCanvas(cloud[k], cloud[k + 1]);
      ctx.fillRect(px - 1.5, py - 1.5, 3, 3);
    }
  }
  if (stroke) {
    ctx.strokeStyle = "#0a0";
    ctx.beginPath();
    stroke.forEach(([x, y], k) => {
      const [px, py] = toCanvas(x, y);
      k === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
    });
    ctx.stroke();
  }
  if (session) {
    stats.textContent =
      `iterations  ${session.iterations()}\n` +
      `objective   ${session.objective().toExponential(4)}\n` +
      `max error   ${session.maxError().toExponential(4)}\n` +
      `mu          ${session.mu().toExponential(4)}\n` +
      `curves      ${curves}`;
  }
}

function step(n) {
  if (!session) return;
  session.step(n);
  draw();
}

function run() {
  running = !running;
  $("run").textContent = running ? "Stop" : "Run";
  const tick = () => {
    if (!running || !session) return;
    step(5);
    requestAnimationFrame(tick);
  };
  tick();
}

canvas.addEventListener("pointerdown", (e) => {
  stroke = [toWorld(e.offsetX, e.offsetY)];
  canvas.setPointerCapture(e.pointerId);
});
canvas.addEventListener("pointermove", (e) => {
  if (!stroke) return;
  stroke.push(toWorld(e.offsetX, e.offsetY));
  draw();
});
canvas.addEventListener("pointerup", () => {
  if (!stroke) return;
  const drawn = stroke;
  stroke = null;
  if (drawn.length < 8) return draw();
  try {
    cloud = strokeToCloud(new Float64Array(drawn.flat()), num("count"));
  } catch (e) {
    stats.textContent = String(e.message ?? e);
    return;
  }
  restart();
});

$("load").addEventListener("click", loadShape);
$("refit").addEventListener("click", restart);
$("run").addEventListener("click", run);
$("show-field").addEventListener("change", draw);
$("show-offsets").addEventListener("change", draw);
document.querySelectorAll("[data-steps]").forEach((b) =>
  b.addEventListener("click", () => step(Number(b.dataset.steps))),
);

await init();
loadShape();
