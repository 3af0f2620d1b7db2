import init, { presets, visit_curves, budget_sweep, simulate } from "./pkg/mulane_demo.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"];
const $ = (id) => document.getElementById(id);

// Draws each series [{label, xs, ys, band?}] on a canvas with simple axes.
function plot(canvas, series, { xLabel, yLabel, yMax }) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = { l: 50, r: 12, t: 10, b: 32 };
  ctx.clearRect(0, 0, w, h);
  const xs = series.flatMap((s) => s.xs);
  const ys = series.flatMap((s) => (s.band ? s.band[1] : s.ys));
  const x0 = Math.min(...xs), x1 = Math.max(...xs);
  const y1 = yMax ?? Math.max(1e-9, ...ys);
  const px = (x) => pad.l + ((x - x0) / Math.max(1e-9, x1 - x0)) * (w - pad.l - pad.r);
  const py = (y) => h - pad.b - (y / y1) * (h - pad.t - pad.b);

  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#444";
  ctx.font = "11px system-ui";
  ctx.beginPath();
  ctx.moveTo(pad.l, pad.t);
  ctx.lineTo(pad.l, h - pad.b);
  ctx.lineTo(w - pad.r, h - pad.b);
  ctx.stroke();
  for (let i = 0; i <= 4; i++) {
    const y = (y1 * i) / 4;
    ctx.fillText(y.toFixed(y1 < 10 ? 2 : 0), 4, py(y) + 4);
  }
  ctx.fillText(String(x0), pad.l, h - 14);
  ctx.fillText(String(x1), w - pad.r - 24, h - 14);
  ctx.fillText(xLabel, w / 2 - 20, h - 4);
  ctx.save();
  ctx.translate(12, h / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(yLabel, 0, 0);
  ctx.restore();

  series.forEach((s, k) => {
    const color = COLORS[k % COLORS.length];
    if (s.band) {
      ctx.fillStyle = color + "33";
      ctx.beginPath();
      s.xs.forEach((x, i) => ctx.lineTo(px(x), py(s.band[1][i])));
      [...s.xs].reverse().forEach((x, i) => ctx.lineTo(px(x), py(s.band[0][s.xs.length - 1 - i])));
      ctx.fill();
    }
    ctx.strokeStyle = color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    s.xs.forEach((x, i) => (i ? ctx.lineTo(px(x), py(s.ys[i])) : ctx.moveTo(px(x), py(s.ys[i]))));
    ctx.stroke();
  });
}

function legend(el, labels) {
  el.innerHTML = labels.map((l, k) => `<span style="color:${COLORS[k % COLORS.length]}">&#9632; ${l}</span>`).join("");
}

function guard(el, f) {
  try {
    f();
  } catch (e) {
    el.innerHTML = `<span class="err">${e.message ?? e}</span>`;
  }
}

function drawCurves() {
  guard($("curves-legend"), () => {
    const data = JSON.parse(visit_curves($("preset").value, Number($("cap").value)));
    const series = data.layers.flatMap((layer) =>
      layer.curves.map((c) => ({ label: `${layer.name}: ${c.node}`, xs: c.values.map((_, b) => b), ys: c.values })),
    );
    plot($("curves"), series, { xLabel: "steps b", yLabel: "P(b)", yMax: 1 });
    legend($("curves-legend"), series.map((s) => s.label));
  });
}

function drawSweep() {
  guard($("sweep-legend"), () => {
    const data = JSON.parse(budget_sweep($("preset").value, Number($("max-budget").value), $("algos").value));
    const series = data.series.map((s) => ({
      label: s.algo,
      xs: s.points.map((p) => p.budget),
      ys: s.points.map((p) => p.reward),
    }));
    plot($("sweep"), series, { xLabel: "budget B", yLabel: "reward" });
    legend($("sweep-legend"), series.map((s) => s.label));
  });
}

function drawRegret() {
  guard($("sim-info"), () => {
    const data = JSON.parse(
      simulate(
        $("preset").value,
        $("policy").value,
        Number($("budget").value),
        Number($("rounds").value),
        Number($("runs").value),
        BigInt($("seed").value),
      ),
    );
    const xs = data.mean_regret.map((_, t) => t + 1);
    plot($("regret"), [{ label: data.algo, xs, ys: data.mean_regret, band: [data.ci_low, data.ci_high] }], {
      xLabel: "round",
      yLabel: "regret",
    });
    const last = data.mean_regret.length - 1;
    $("sim-info").textContent =
      `best allocation [${data.reference_allocation}] with reward ${data.reference_reward.toFixed(3)}; ` +
      `final regret ${data.mean_regret[last].toFixed(2)} (${data.ci_low[last].toFixed(2)} to ${data.ci_high[last].toFixed(2)})`;
  });
}

await init();
for (const name of JSON.parse(presets())) {
  $("preset").add(new Option(name, name));
}
$("preset").value = "overlap";
$("curves-go").onclick = drawCurves;
$("sweep-go").onclick = drawSweep;
$("sim-go").onclick = drawRegret;
$("preset").onchange = () => {
  drawCurves();
  drawSweep();
};
drawCurves();
drawSweep();
