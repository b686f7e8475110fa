import init, { familiarity_sweep, preprocess_digit, DigitField } from "./pkg/macfield_wasm_demo.js";

const $ = (id) => document.getElementById(id);
const status = (msg) => { $("status").textContent = msg; };
const num = (id) => Number($(id).value);

function drawSweep(rows) {
  const c = $("plot");
  const ctx = c.getContext("2d");
  const pad = 40;
  const w = c.width - 2 * pad;
  const h = c.height - 2 * pad;
  ctx.clearRect(0, 0, c.width, c.height);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w, h);
  ctx.fillStyle = "#222";
  ctx.fillText("overlap", pad + w / 2 - 20, c.height - 10);
  ctx.fillText("0", pad - 4, pad + h + 14);
  ctx.fillText("1", pad + w - 4, pad + h + 14);
  ctx.fillText("1", pad - 14, pad + 4);
  ctx.fillText("0", pad - 14, pad + h);
  const series = [[1, "#1f77b4"], [2, "#ff7f0e"]];
  for (const [col, color] of series) {
    ctx.strokeStyle = color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    rows.forEach((r, i) => {
      const x = pad + r[0] * w;
      const y = pad + (1 - r[col]) * h;
      if (i === 0) ctx.moveTo(x, y); else ctx.lineTo(x, y);
    });
    ctx.stroke();
  }
}

function runSweep() {
  try {
    const flat = familiarity_sweep(num("q"), num("k"), num("nu"), num("active"), num("trials"), 1);
    const rows = [];
    for (let i = 0; i < flat.length; i += 3) rows.push([flat[i], flat[i + 1], flat[i + 2]]);
    drawSweep(rows);
    status("");
  } catch (e) {
    status(String(e));
  }
}

const pad = $("pad");
const padCtx = pad.getContext("2d");
let drawing = false;

function clearPad() {
  padCtx.fillStyle = "#000";
  padCtx.fillRect(0, 0, pad.width, pad.height);
}

function stroke(ev) {
  const r = pad.getBoundingClientRect();
  const x = ev.clientX - r.left;
  const y = ev.clientY - r.top;
  padCtx.fillStyle = "#fff";
  padCtx.beginPath();
  padCtx.arc(x, y, 11, 0, 2 * Math.PI);
  padCtx.fill();
}

pad.addEventListener("pointerdown", (ev) => { drawing = true; stroke(ev); });
pad.addEventListener("pointermove", (ev) => { if (drawing) stroke(ev); });
window.addEventListener("pointerup", () => { drawing = false; });

// Box-average the drawing pad down to 28x28 grayscale.
function digitPixels() {
  const side = 28;
  const cell = pad.width / side;
  const data = padCtx.getImageData(0, 0, pad.width, pad.height).data;
  const out = new Uint8Array(side * side);
  for (let gy = 0; gy < side; gy++) {
    for (let gx = 0; gx < side; gx++) {
      let sum = 0;
      for (let y = gy * cell; y < (gy + 1) * cell; y++) {
        for (let x = gx * cell; x < (gx + 1) * cell; x++) sum += data[(y * pad.width + x) * 4];
      }
      out[gy * side + gx] = Math.round(sum / (cell * cell));
    }
  }
  return out;
}

function showFrame(bits) {
  const c = $("frame");
  const ctx = c.getContext("2d");
  const cw = 16, ch = 24, s = c.width / cw;
  ctx.fillStyle = "#fff";
  ctx.fillRect(0, 0, c.width, c.height);
  ctx.fillStyle = "#000";
  for (let y = 0; y < ch; y++) {
    for (let x = 0; x < cw; x++) if (bits[y * cw + x]) ctx.fillRect(x * s, y * s, s, s);
  }
}

function runPreprocess() {
  try {
    showFrame(preprocess_digit(digitPixels(), num("threshold")));
    status("");
  } catch (e) {
    status(String(e));
  }
}

let field = null;

function teach() {
  try {
    const macs = field.teach(digitPixels(), num("label"));
    $("taught").textContent = `${field.taught()} taught (${macs} macs active)`;
    runPreprocess();
  } catch (e) {
    status(String(e));
  }
}

function recall() {
  try {
    const scores = Array.from(field.recall(digitPixels()));
    const best = scores.indexOf(Math.max(...scores));
    $("prediction").textContent = field.taught() === 0
      ? "Nothing taught yet."
      : `Predicted label: ${best}`;
    $("scores").innerHTML =
      "<tr><th>label</th>" + scores.map((_, i) => `<td>${i}</td>`).join("") + "</tr>" +
      "<tr><th>score</th>" + scores.map((s) => `<td>${s}</td>`).join("") + "</tr>";
    runPreprocess();
    status("");
  } catch (e) {
    status(String(e));
  }
}

await init();
field = new DigitField(1);
clearPad();
$("sweep").onclick = runSweep;
$("clear").onclick = clearPad;
$("preprocess").onclick = runPreprocess;
$("teach").onclick = teach;
$("recall").onclick = recall;
status("");
runSweep();
