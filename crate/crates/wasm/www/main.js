import init, { preset_names, igwExplore, simulatePreset, budgetFrontier } from "./pkg/ccb_wasm.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

function axes(ctx, w, h, pad) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad / 2, h - pad);
  ctx.stroke();
}

function lineChart(canvas, xs, series, labels) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 50;
  axes(ctx, w, h, pad);
  const all = series.flat();
  let lo = Math.min(0, ...all), hi = Math.max(...all);
  if (hi === lo) hi = lo + 1;
  const xmax = xs[xs.length - 1] || 1;
  const px = (x) => pad + (x / xmax) * (w - 1.5 * pad);
  const py = (y) => h - pad - ((y - lo) / (hi - lo)) * (h - 1.5 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(hi.toPrecision(3), 2, py(hi) + 4);
  ctx.fillText(lo.toPrecision(3), 2, py(lo));
  ctx.fillText(String(xmax), w - pad, h - pad + 14);
  if (lo < 0) {
    ctx.strokeStyle = "#ddd";
    ctx.beginPath();
    ctx.moveTo(pad, py(0));
    ctx.lineTo(w - pad / 2, py(0));
    ctx.stroke();
  }
  series.forEach((ys, i) => {
    ctx.strokeStyle = COLORS[i % COLORS.length];
    ctx.beginPath();
    ys.forEach((y, j) => (j ? ctx.lineTo(px(xs[j]), py(y)) : ctx.moveTo(px(xs[j]), py(y))));
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle;
    ctx.fillText(labels[i], pad + 10 + 110 * i, 14);
  });
}

function barChart(canvas, values, highlight) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 30;
  axes(ctx, w, h, pad);
  const bw = (w - 2 * pad) / values.length;
  values.forEach((v, i) => {
    const bh = v * (h - 1.5 * pad);
    ctx.fillStyle = i === highlight ? COLORS[1] : COLORS[0];
    ctx.fillRect(pad + i * bw + 8, h - pad - bh, bw - 16, bh);
    ctx.fillStyle = "#222";
    ctx.fillText(v.toFixed(3), pad + i * bw + bw / 2 - 14, h - pad - bh - 4);
    ctx.fillText(`a${i}`, pad + i * bw + bw / 2 - 6, h - pad + 14);
  });
}

function guard(info, fn) {
  try {
    info.classList.remove("err");
    fn();
  } catch (e) {
    info.classList.add("err");
    info.textContent = String(e.message || e);
  }
}

function setupIgw() {
  const box = document.getElementById("igw-losses");
  const gamma = document.getElementById("igw-gamma");
  const info = document.getElementById("igw-info");
  const start = [0.0, 0.3, 0.6, 0.9];
  const sliders = start.map((v, i) => {
    const label = document.createElement("label");
    label.textContent = `loss a${i} `;
    const input = Object.assign(document.createElement("input"), { type: "range", min: "-1", max: "1", step: "0.01", value: String(v) });
    label.appendChild(input);
    box.appendChild(label);
    input.addEventListener("input", draw);
    return input;
  });
  gamma.addEventListener("input", draw);
  function draw() {
    guard(info, () => {
      const g = Math.pow(10, Number(gamma.value));
      document.getElementById("igw-gamma-val").textContent = g.toFixed(2);
      const losses = Float64Array.from(sliders.map((s) => Number(s.value)));
      const r = JSON.parse(igwExplore(losses, g));
      barChart(document.getElementById("igw-canvas"), r.probs, r.greedy);
      info.textContent = `lambda = ${r.lambda.toFixed(6)}, greedy action a${r.greedy}`;
    });
  }
  draw();
}

function setupSimulation(names) {
  const select = document.getElementById("sim-preset");
  names.forEach((n) => select.add(new Option(n, n)));
  const info = document.getElementById("sim-info");
  document.getElementById("sim-run").addEventListener("click", () =>
    guard(info, () => {
      const horizon = Number(document.getElementById("sim-horizon").value);
      const seed = Number(document.getElementById("sim-seed").value);
      const stride = Math.max(1, Math.floor(horizon / 400));
      const r = JSON.parse(simulatePreset(select.value, horizon, seed, stride));
      lineChart(document.getElementById("sim-canvas"), r.t, [r.regret, r.ccv, r.queue], ["regret", "cumulative cost", "queue"]);
      const s = r.summary;
      info.textContent = `final regret ${s.regret.toFixed(1)}, CCV ${s.ccv.toFixed(1)}, U_T ${s.u_t.toFixed(2)}` +
        (s.budget === null ? "" : `, budget ${s.budget.toFixed(1)}`);
    })
  );
}

function setupFrontier(names) {
  const select = document.getElementById("fr-preset");
  names.forEach((n) => select.add(new Option(n, n)));
  select.value = "cbwlc";
  const info = document.getElementById("fr-info");
  document.getElementById("fr-run").addEventListener("click", () =>
    guard(info, () => {
      const r = JSON.parse(budgetFrontier(select.value, 60));
      const lo = r.budget[0];
      const xs = r.budget.map((b) => b - lo);
      lineChart(document.getElementById("fr-canvas"), xs, [r.value], ["benchmark value"]);
      info.textContent = `per-round budget from ${lo.toFixed(3)} to ${r.budget[r.budget.length - 1].toFixed(3)}; ` +
        `at most ${Math.max(...r.randomized_contexts)} randomized context`;
    })
  );
}

await init();
const names = JSON.parse(preset_names());
setupIgw();
setupSimulation(names);
setupFrontier(names);
