import init, { bow_geometry, classify_frame, simulate_feedback } from "./pkg/cellist_web.js";

const $ = (id) => document.getElementById(id);
const PALETTE = { blue: "#1f5fd1", orange: "#e8780c", none: "#777" };
const num = (id) => parseFloat($(id).value);

function call(fn, ...args) {
  try {
    return JSON.parse(fn(...args));
  } catch (e) {
    return { error: String(e.message ?? e) };
  }
}

function polygon(ctx, pts, scale, style) {
  ctx.beginPath();
  pts.forEach(([x, y], i) => (i ? ctx.lineTo(x * scale, y * scale) : ctx.moveTo(x * scale, y * scale)));
  ctx.closePath();
  ctx.strokeStyle = style;
  ctx.lineWidth = 2;
  ctx.stroke();
}

function updateBow() {
  const bow = { cx: num("bow-cx"), cy: num("bow-cy"), w: 0.6, h: 0.02, theta_deg: num("bow-theta") };
  const strings = { cx: 0.5, cy: 0.5, w: 0.7, h: 0.12, theta_deg: num("str-theta") };
  const cfg = { angle_tolerance_deg: num("tol") };
  const r = call(bow_geometry, JSON.stringify(bow), JSON.stringify(strings), JSON.stringify(cfg));
  const ctx = $("bow-canvas").getContext("2d");
  const s = $("bow-canvas").width;
  ctx.clearRect(0, 0, s, s);
  if (r.error) {
    $("bow-out").textContent = r.error;
    return;
  }
  const a = r.assessment;
  const ok = a.in_zone && a.height === "ok" && a.angle === "correct";
  polygon(ctx, r.strings_corners, s, "#555");
  const [bridge, board] = r.zone_axis;
  ctx.fillStyle = "#999";
  ctx.fillText("bridge", bridge[0] * s + 4, bridge[1] * s);
  ctx.fillText("fingerboard", board[0] * s + 4, board[1] * s);
  polygon(ctx, r.bow_corners, s, ok ? PALETTE.blue : a.in_zone ? PALETTE.orange : PALETTE.none);
  $("bow-out").textContent = JSON.stringify(
    { intersects: r.intersects, height: a.height, angle: a.angle, zone_position: a.zone_position, deviation_deg: a.deviation_deg },
    null,
    2,
  );
}

function updateFrame() {
  const rad = (d) => (d * Math.PI) / 180;
  const shoulder = [0.3, 0.3, 0];
  const drop = rad(num("upper"));
  const elbow = [shoulder[0] + 0.25 * Math.cos(drop), shoulder[1] + 0.25 * Math.sin(drop), 0];
  // forearm angle is the interior angle at the elbow
  const dir = drop + Math.PI - rad(num("forearm"));
  const wrist = [elbow[0] + 0.22 * Math.cos(dir), elbow[1] + 0.22 * Math.sin(dir), 0];
  const packet = { t_ms: 0, pose: { shoulder, elbow, wrist } };
  const r = call(classify_frame, JSON.stringify(packet), "");
  const ctx = $("pose-canvas").getContext("2d");
  const s = $("pose-canvas").width;
  ctx.clearRect(0, 0, s, s);
  const color = PALETTE[r.colors?.elbow] ?? PALETTE.none;
  ctx.strokeStyle = color;
  ctx.lineWidth = 4;
  ctx.beginPath();
  [shoulder, elbow, wrist].forEach(([x, y], i) => (i ? ctx.lineTo(x * s, y * s) : ctx.moveTo(x * s, y * s)));
  ctx.stroke();
  $("frame-out").textContent = r.error
    ? r.error
    : JSON.stringify({ elbow: r.result.elbow, elbow_angle_deg: r.elbow_angle_deg, errors: r.errors }, null, 2);
}

const DEFAULT_SCRIPT = {
  frame_ms: 33,
  segments: [
    { from_ms: 0, to_ms: 9000, active: ["elbow_too_low"] },
    { from_ms: 2000, to_ms: 4000, active: ["bow_angle_off"] },
    { from_ms: 4300, to_ms: 12000, active: ["bow_angle_off"] },
    { from_ms: 6000, to_ms: 14000, active: ["wrist_supinated"] },
    { from_ms: 14000, to_ms: 20000 },
  ],
};

function runFeedback() {
  const r = call(simulate_feedback, $("script").value, "");
  $("feedback-out").textContent = r.error
    ? r.error
    : r.changes
        .map((c) => `${String(c.t_ms).padStart(6)} ms  ${c.shown.map((s) => s.category).join(", ") || "(none)"}`)
        .join("\n");
}

await init();
for (const id of ["bow-cx", "bow-cy", "bow-theta", "str-theta", "tol"]) $(id).addEventListener("input", updateBow);
for (const id of ["forearm", "upper"]) $(id).addEventListener("input", updateFrame);
$("script").value = JSON.stringify(DEFAULT_SCRIPT, null, 2);
$("run").addEventListener("click", runFeedback);
updateBow();
updateFrame();
runFeedback();
