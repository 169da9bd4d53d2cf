import init, { BloodExplorer, FusionExplorer, roc_json } from "./pkg/vsd_wasm.js";

const $ = (id) => document.getElementById(id);
const CHANNELS = ["audio", "blood", "motion", "concepts"];
const SEED = 7n;

function report(el, fn) {
  try {
    fn();
    el.classList.remove("err");
  } catch (e) {
    el.textContent = String(e.message ?? e);
    el.classList.add("err");
  }
}

// ---- blood map ----

function drawScene(ctx, w, h) {
  ctx.fillStyle = "#8a8f96";
  ctx.fillRect(0, 0, w, h);
  ctx.fillStyle = "#d9a07f";
  ctx.beginPath();
  ctx.ellipse(w * 0.3, h * 0.45, 28, 36, 0, 0, 2 * Math.PI);
  ctx.fill();
  for (let i = 0; i < 4; i++) {
    ctx.fillStyle = `rgb(${130 + Math.random() * 50},${Math.random() * 30},${Math.random() * 30})`;
    ctx.beginPath();
    ctx.ellipse(w * (0.45 + Math.random() * 0.45), h * (0.2 + Math.random() * 0.6),
      6 + Math.random() * 16, 4 + Math.random() * 10, Math.random() * 3, 0, 2 * Math.PI);
    ctx.fill();
  }
}

function setupBlood() {
  const explorer = new BloodExplorer(SEED);
  const frame = $("frame").getContext("2d");
  const overlay = $("overlay").getContext("2d");
  const { width: w, height: h } = $("frame");

  const run = () => report($("bfeat"), () => {
    const thr = Number($("bthr").value);
    $("bthr-v").textContent = thr.toFixed(2);
    const pixels = frame.getImageData(0, 0, w, h).data;
    const analysis = explorer.analyze(new Uint8Array(pixels.buffer), w, h, thr);
    overlay.putImageData(new ImageData(new Uint8ClampedArray(analysis.overlay()), w, h), 0, 0);
    const s = JSON.parse(analysis.summary_json());
    analysis.free();
    const names = ["blood ratio", "mean p", "p variance", "max p", "p ratio", "largest area",
      "second area", "component density", "largest fill", "centroid x", "centroid y",
      "compactness", "row variance", "column variance"];
    $("bfeat").textContent = `${s.blood_pixels} blood pixels\n` +
      names.map((n, i) => `${n.padEnd(18)} ${s.features[i].toFixed(4)}`).join("\n");
  });

  $("regen").onclick = () => { drawScene(frame, w, h); run(); };
  $("bthr").oninput = run;
  $("upload").onchange = (ev) => {
    const file = ev.target.files[0];
    if (!file) return;
    const img = new Image();
    img.onload = () => { frame.drawImage(img, 0, 0, w, h); run(); };
    img.src = URL.createObjectURL(file);
  };
  drawScene(frame, w, h);
  run();
}

// ---- fusion ----

function sliders(container, prefix, values, max, step) {
  container.innerHTML = "";
  return CHANNELS.map((name, i) => {
    const label = document.createElement("label");
    label.innerHTML = `${name.padEnd(9)} <input type="range" min="0" max="${max}" step="${step}" value="${values[i]}"> <span></span>`;
    container.appendChild(label);
    const input = label.querySelector("input");
    input.id = `${prefix}-${name}`;
    return input;
  });
}

// largest-remainder rounding onto multiples of 1/20
function toGrid(raw) {
  const total = raw.reduce((a, b) => a + b, 0);
  const shares = total > 0 ? raw.map((x) => (x / total) * 20) : [5, 5, 5, 5];
  const units = shares.map(Math.floor);
  let left = 20 - units.reduce((a, b) => a + b, 0);
  const order = shares.map((s, i) => [s - Math.floor(s), i]).sort((a, b) => b[0] - a[0]);
  for (const [, i] of order) {
    if (left-- <= 0) break;
    units[i] += 1;
  }
  return units.map((u) => u / 20);
}

function setupFusion() {
  const sepInputs = sliders($("seps"), "sep", [2, 1, 0, 0.5], 3, 0.1);
  const wInputs = sliders($("weights"), "w", [1, 1, 1, 1], 1, 0.05);
  let explorer = null;
  let searched = "";

  const rebuild = () => report($("fout"), () => {
    if (explorer) explorer.free();
    const seps = sepInputs.map((el) => Number(el.value));
    sepInputs.forEach((el, i) => { el.nextElementSibling.textContent = seps[i].toFixed(1); });
    explorer = new FusionExplorer(SEED, 400, new Float64Array(seps));
    searched = "";
    evaluate();
  });

  const evaluate = () => report($("fout"), () => {
    const weights = toGrid(wInputs.map((el) => Number(el.value)));
    wInputs.forEach((el, i) => { el.nextElementSibling.textContent = weights[i].toFixed(2); });
    const r = JSON.parse(explorer.evaluate(new Float64Array(weights)));
    $("fout").textContent = `manual weights ${r.weights.map((x) => x.toFixed(2)).join(" ")}\n` +
      `fused EER        ${r.eer.toFixed(4)}\n` + searched;
  });

  $("search").onclick = () => report($("fout"), () => {
    const r = JSON.parse(explorer.search());
    searched = `\nsearch over ${r.tuples_evaluated} tuples\n` +
      `best weights     ${r.best.weights.map((x) => x.toFixed(2)).join(" ")}\n` +
      `best EER         ${r.best.eer.toFixed(4)}\n` +
      CHANNELS.map((c, i) => `${c.padEnd(9)} alone    ${r.single_channel_eer[i].toFixed(4)}`).join("\n");
    evaluate();
  });
  sepInputs.forEach((el) => { el.oninput = rebuild; });
  wInputs.forEach((el) => { el.oninput = evaluate; });
  rebuild();
}

// ---- ROC ----

function setupRoc() {
  const ctx = $("roc").getContext("2d");
  const size = $("roc").width;
  const run = () => report($("rout"), () => {
    const sep = Number($("rsep").value);
    const prev = Number($("rprev").value);
    const thr = Number($("rthr").value);
    $("rsep-v").textContent = sep.toFixed(1);
    $("rprev-v").textContent = prev.toFixed(2);
    $("rthr-v").textContent = thr.toFixed(2);
    const view = JSON.parse(roc_json(SEED, 1000, sep, prev, thr));

    ctx.clearRect(0, 0, size, size);
    ctx.strokeStyle = "#bbb";
    ctx.beginPath();
    ctx.moveTo(0, size); ctx.lineTo(size, 0);
    ctx.moveTo(0, 0); ctx.lineTo(size, size);
    ctx.stroke();
    ctx.strokeStyle = "#c22";
    ctx.lineWidth = 2;
    ctx.beginPath();
    view.points.forEach(([f, t], i) => {
      const [x, y] = [f * size, (1 - t) * size];
      if (i === 0) ctx.moveTo(x, y); else ctx.lineTo(x, y);
    });
    ctx.stroke();
    ctx.lineWidth = 1;
    const e = view.metrics.eer;
    ctx.fillStyle = "#225";
    ctx.beginPath();
    ctx.arc(e * size, e * size, 4, 0, 2 * Math.PI);
    ctx.fill();

    const m = view.metrics;
    $("rout").textContent = [
      `AUC        ${m.auc.toFixed(4)}`,
      `EER        ${m.eer.toFixed(4)}`,
      `AP         ${m.ap.toFixed(4)}`,
      `at score > ${thr.toFixed(2)}:`,
      `precision  ${m.precision.toFixed(4)}`,
      `recall     ${m.recall.toFixed(4)}`,
      `accuracy   ${m.accuracy.toFixed(4)}`,
    ].join("\n");
  });
  for (const id of ["rsep", "rprev", "rthr"]) $(id).oninput = run;
  run();
}

init().then(() => {
  $("status").textContent = "Everything runs locally in WebAssembly.";
  setupBlood();
  setupFusion();
  setupRoc();
}).catch((e) => {
  $("status").textContent = `Failed to load the module: ${e}`;
  $("status").classList.add("err");
});
