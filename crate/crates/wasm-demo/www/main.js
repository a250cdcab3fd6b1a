import init, { responseCurve, trainRun, fieldFrame } from "./pkg/magneto_perceptron_wasm.js";

const $ = (id) => document.getElementById(id);
const COLORS = { z: "#888", v: "#c33", n: "#36c" };

function axes(ctx, w, h) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(40, 10);
  ctx.lineTo(40, h - 20);
  ctx.lineTo(w - 10, h - 20);
  ctx.stroke();
}

function drawCurve() {
  const dead = +$("dead").value;
  const sat = Math.max(+$("sat").value, dead + 1);
  $("deadv").textContent = dead;
  $("satv").textContent = sat;
  const c = $("curve");
  const ctx = c.getContext("2d");
  axes(ctx, c.width, c.height);
  let pts;
  try {
    pts = responseCurve(dead, sat, $("shape").value, 10, 1200);
  } catch (e) {
    ctx.fillText(String(e), 50, 30);
    return;
  }
  const x = (i) => 40 + (i / 1200) * (c.width - 50);
  const y = (m) => c.height - 20 - m * (c.height - 30);
  ctx.strokeStyle = "#c33";
  ctx.beginPath();
  pts.forEach((m, i) => (i ? ctx.lineTo(x(i), y(m)) : ctx.moveTo(x(i), y(m))));
  ctx.stroke();
  ctx.fillStyle = "#444";
  [0, 300, 600, 900, 1200].forEach((p) => ctx.fillText(p, x(p) - 8, c.height - 6));
}

function drawTraining(view) {
  const lc = $("lc");
  const ctx = lc.getContext("2d");
  axes(ctx, lc.width, lc.height);
  const n = view.steps.length;
  const all = view.steps.flatMap((s) => [s.output, s.threshold]);
  const lo = Math.min(0, ...all);
  const hi = Math.max(...all) * 1.05;
  const x = (i) => 40 + (i / Math.max(n - 1, 1)) * (lc.width - 50);
  const y = (v) => lc.height - 20 - ((v - lo) / (hi - lo)) * (lc.height - 30);
  view.steps.forEach((s, i) => {
    ctx.fillStyle = COLORS[s.class];
    ctx.fillRect(x(i) - 1, y(s.output) - 1, 2, 2);
  });
  ctx.strokeStyle = "#000";
  ctx.beginPath();
  view.steps.forEach((s, i) => (i ? ctx.lineTo(x(i), y(s.threshold)) : ctx.moveTo(x(i), y(s.threshold))));
  ctx.stroke();

  const bars = $("bars");
  const b = bars.getContext("2d");
  axes(b, bars.width, bars.height);
  const vals = view.bars.flatMap((r) => [r.initial, r.last, view.final_threshold]);
  const top = Math.max(...vals) * 1.05;
  const bw = (bars.width - 50) / view.bars.length;
  const by = (v) => bars.height - 20 - (v / top) * (bars.height - 30);
  view.bars.forEach((r, i) => {
    const x0 = 42 + i * bw;
    b.fillStyle = COLORS[r.class] + "55";
    b.fillRect(x0, by(r.initial), bw * 0.45, by(0) - by(r.initial));
    b.fillStyle = COLORS[r.class];
    b.fillRect(x0 + bw * 0.45, by(r.last), bw * 0.45, by(0) - by(r.last));
    if (r.test) {
      b.strokeStyle = "#000";
      b.strokeRect(x0, by(Math.max(r.initial, r.last)), bw * 0.9, by(0) - by(Math.max(r.initial, r.last)));
    }
  });
  b.strokeStyle = "#000";
  b.setLineDash([4, 3]);
  b.beginPath();
  b.moveTo(40, by(view.final_threshold));
  b.lineTo(bars.width - 10, by(view.final_threshold));
  b.stroke();
  b.setLineDash([]);
}

function train() {
  $("status").textContent = "training…";
  setTimeout(() => {
    try {
      const view = JSON.parse(trainRun(+$("seed").value >>> 0, +$("eta").value, $("emu").checked));
      drawTraining(view);
      $("status").textContent =
        `${view.converged ? "converged" : "not converged"} after ${view.steps.length} steps, ` +
        `${view.raises} threshold raises, ${view.test_correct}/3 test patterns correct`;
    } catch (e) {
      $("status").textContent = String(e);
    }
  }, 0);
}

function drawField() {
  $("erasev").textContent = $("erase").value;
  const data = fieldFrame(+$("fseed").value >>> 0, +$("erase").value);
  const [w, h] = [data[0], data[1]];
  const counts = data.subarray(2);
  let max = 1;
  for (const v of counts) max = Math.max(max, v);
  const img = new ImageData(w, h);
  for (let i = 0; i < w * h; i++) {
    const g = Math.round((counts[i] / max) * 255);
    img.data.set([g, g, g, 255], i * 4);
  }
  const off = new OffscreenCanvas(w, h);
  off.getContext("2d").putImageData(img, 0, 0);
  const ctx = $("field").getContext("2d");
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, 0, 0, $("field").width, $("field").height);
}

await init();
["dead", "sat", "shape"].forEach((id) => $(id).addEventListener("input", drawCurve));
$("train").addEventListener("click", train);
["fseed", "erase"].forEach((id) => $(id).addEventListener("input", drawField));
drawCurve();
drawField();
train();
