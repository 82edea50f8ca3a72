import init, { papOverlay, kernelSweep, samplePaths } from "./pkg/wmc_web.js";

const PAD = 42;

function values(section) {
  const out = {};
  for (const el of section.querySelectorAll("input, select")) {
    if (el.type === "checkbox") out[el.name] = el.checked;
    else if (el.type === "number") out[el.name] = Number(el.value);
    else out[el.name] = el.value;
  }
  return out;
}

function frame(canvas, xs, ys) {
  const ctx = canvas.getContext("2d");
  const finite = (v) => v.filter(Number.isFinite);
  const [x0, x1] = [Math.min(...finite(xs)), Math.max(...finite(xs))];
  let [y0, y1] = [Math.min(...finite(ys)), Math.max(...finite(ys))];
  if (y1 === y0) { y0 -= 1; y1 += 1; }
  const w = canvas.width - 2 * PAD, h = canvas.height - 2 * PAD;
  const sx = (x) => PAD + ((x - x0) / (x1 - x0 || 1)) * w;
  const sy = (y) => canvas.height - PAD - ((y - y0) / (y1 - y0)) * h;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(PAD, PAD, w, h);
  ctx.fillStyle = "#444";
  ctx.font = "12px system-ui";
  ctx.fillText(x0.toPrecision(3), PAD, canvas.height - PAD + 16);
  ctx.fillText(x1.toPrecision(3), PAD + w - 30, canvas.height - PAD + 16);
  ctx.fillText(y1.toPrecision(3), 2, PAD + 4);
  ctx.fillText(y0.toPrecision(3), 2, canvas.height - PAD);
  return { ctx, sx, sy };
}

function line(ctx, pts, color, width = 1.5) {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  let pen = false;
  for (const [x, y] of pts) {
    if (!Number.isFinite(y)) { pen = false; continue; }
    pen ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
    pen = true;
  }
  ctx.stroke();
}

function wire(id, run) {
  const section = document.getElementById(id);
  const status = section.querySelector(".status");
  section.querySelector("button").addEventListener("click", () => {
    status.className = "status";
    status.textContent = "running...";
    // let the status repaint before the blocking call
    setTimeout(() => {
      const start = performance.now();
      try {
        const note = run(values(section), section.querySelector("canvas"));
        status.textContent = `${note} (${((performance.now() - start) / 1000).toFixed(2)} s)`;
      } catch (e) {
        status.className = "status error";
        status.textContent = String(e.message ?? e);
      }
    }, 10);
  });
}

function drawPaths(req, canvas) {
  const res = JSON.parse(samplePaths(JSON.stringify(req)));
  const time = res.u.map((u) => u * req.time);
  const { ctx, sx, sy } = frame(canvas, time, res.paths.flat());
  res.paths.forEach((p, i) => {
    line(ctx, p.map((x, k) => [sx(time[k]), sy(x)]), `hsl(${(i * 47) % 360} 60% 45%)`, 1);
  });
  return `${res.paths.length} trajectories, x(0) = x(T) = 0`;
}

function drawOverlay(req, canvas) {
  const res = JSON.parse(papOverlay(JSON.stringify(req)));
  const { ctx, sx, sy } = frame(canvas, res.centers, [0, ...res.empirical, ...res.analytic]);
  const half = res.centers.length > 1 ? (res.centers[1] - res.centers[0]) / 2 : 0.5;
  ctx.fillStyle = "rgba(70, 120, 200, 0.45)";
  res.centers.forEach((c, i) => {
    const x = sx(c - half), top = sy(res.empirical[i]);
    ctx.fillRect(x, top, sx(c + half) - x - 1, sy(0) - top);
  });
  line(ctx, res.centers.map((c, i) => [sx(c), sy(res.analytic[i])]), "#c0392b", 2);
  const verdict = res.ks_pass ? "accepted" : "rejected";
  return `family ${res.family}: KS D = ${res.ks_statistic.toFixed(4)} vs ${res.ks_threshold.toFixed(4)}, ${verdict}`;
}

const POTENTIALS = {
  harmonic: { kind: "harmonic", omega: 1 },
  poschl_teller: { kind: "poschl_teller", alpha: 1 },
  absolute: { kind: "absolute", g: 0.5 },
  free: { kind: "free" },
};

function drawSweep(req, canvas) {
  const { kind, ...rest } = req;
  const rows = JSON.parse(kernelSweep(JSON.stringify({ ...rest, potential: POTENTIALS[kind] })));
  const t = rows.map((r) => r.time);
  const ys = rows.flatMap((r) => [r.log_k, r.exact_log_k]).filter((v) => v !== null);
  const { ctx, sx, sy } = frame(canvas, t, ys);
  if (rows.some((r) => r.exact_log_k !== null)) {
    line(ctx, rows.map((r) => [sx(r.time), sy(r.exact_log_k ?? NaN)]), "#c0392b", 1.5);
  }
  ctx.strokeStyle = "#1f4e99";
  ctx.fillStyle = "#1f4e99";
  for (const r of rows) {
    if (r.log_k === null) continue;
    const x = sx(r.time);
    ctx.beginPath();
    ctx.moveTo(x, sy(r.log_k - r.log_k_err));
    ctx.lineTo(x, sy(r.log_k + r.log_k_err));
    ctx.stroke();
    ctx.beginPath();
    ctx.arc(x, sy(r.log_k), 3, 0, 2 * Math.PI);
    ctx.fill();
  }
  const failed = rows.filter((r) => r.log_k === null).length;
  return `${rows.length - failed} of ${rows.length} points with a resolvable logarithm`;
}

await init();
wire("paths", drawPaths);
wire("overlay", drawOverlay);
wire("sweep", drawSweep);
