import init, { beam_pattern, relay_diagnosis, channel_estimation } from "./pkg/relaycs_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const seed = (id) => BigInt(Math.max(0, Math.floor(num(id))));

function guard(out, fn) {
  try {
    fn();
  } catch (e) {
    out.innerHTML = `<span class="err">${e.message ?? e}</span>`;
  }
}

function axes(ctx, w, h) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#ccc";
  ctx.strokeRect(0.5, 0.5, w - 1, h - 1);
}

function line(ctx, xs, ys, x0, x1, y0, y1, w, h, color) {
  ctx.strokeStyle = color;
  ctx.beginPath();
  xs.forEach((x, i) => {
    const px = ((x - x0) / (x1 - x0)) * w;
    const py = h - ((ys[i] - y0) / (y1 - y0)) * h;
    i ? ctx.lineTo(px, py) : ctx.moveTo(px, py);
  });
  ctx.stroke();
}

function drawPattern() {
  guard($("bp-out"), () => {
    const r = JSON.parse(beam_pattern(num("bp-n"), num("bp-s"), $("bp-kind").value, num("bp-steer"), seed("bp-seed")));
    const c = $("bp-canvas"), ctx = c.getContext("2d");
    const top = Math.max(...r.ideal_db) + 3;
    axes(ctx, c.width, c.height);
    line(ctx, r.angles, r.ideal_db, -90, 90, -40, top, c.width, c.height, "#888");
    line(ctx, r.angles, r.faulty_db, -90, 90, -40, top, c.width, c.height, "#c33");
    const i = r.angles.reduce((b, a, k) => (Math.abs(a - num("bp-steer")) < Math.abs(r.angles[b] - num("bp-steer")) ? k : b), 0);
    $("bp-out").textContent =
      `gray: fault-free, red: blocked. Main-lobe loss ${(r.ideal_db[i] - r.faulty_db[i]).toFixed(2)} dB; blocked elements [${r.blocked.join(", ")}]`;
  });
}

function drawDiagnosis() {
  guard($("dg-out"), () => {
    const r = JSON.parse(relay_diagnosis(num("dg-n"), num("dg-m"), num("dg-s"), $("dg-kind").value, num("dg-snr"), seed("dg-seed")));
    const c = $("dg-canvas"), ctx = c.getContext("2d");
    axes(ctx, c.width, c.height);
    const n = r.true_magnitude.length, bw = c.width / n;
    r.true_magnitude.forEach((m, i) => {
      ctx.fillStyle = "#bbb";
      ctx.fillRect(i * bw + 1, c.height * (1 - m / 1.2), bw / 2 - 1, (c.height * m) / 1.2);
      const e = Math.min(r.estimated_magnitude[i], 1.2);
      ctx.fillStyle = r.estimated_blocked.includes(i) ? "#c33" : "#38c";
      ctx.fillRect(i * bw + bw / 2, c.height * (1 - e / 1.2), bw / 2 - 1, (c.height * e) / 1.2);
    });
    const cls = r.success ? "ok" : "err";
    $("dg-out").innerHTML =
      `<span class="${cls}">${r.success ? "exact support" : "support error"}</span>: ${r.missed} missed, ${r.false_alarm} false alarms. ` +
      `Bars: |b_i| true (gray) and estimated (blue, red if flagged).`;
  });
}

function runEstimation() {
  guard($("ce-out"), () => {
    const r = JSON.parse(channel_estimation(num("ce-nbs"), num("ce-nms"), num("ce-mbs"), num("ce-mms"), num("ce-s"), num("ce-snr"), seed("ce-seed")));
    const rows = r.results.map((x) => `<tr><td>${x.regime}</td><td>${x.nmse_db.toFixed(2)}</td></tr>`).join("");
    $("ce-out").innerHTML =
      `<table><tr><th>regime</th><th>NMSE (dB)</th></tr>${rows}</table>` +
      `<p>relay diagnosis ${r.diagnosis_success ? "exact" : "inexact"}</p>`;
  });
}

await init();
$("status").textContent = "ready";
$("bp-run").onclick = drawPattern;
$("dg-run").onclick = drawDiagnosis;
$("ce-run").onclick = runEstimation;
drawPattern();
drawDiagnosis();
runEstimation();
