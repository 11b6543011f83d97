// DOM wiring. All state lives in ConsoleState; all geometry comes from
// project.ts/compass.ts. This file only moves values into elements.

import { ApiClient, ApiError, type Frame, type StreamHandle, type StreamStatus } from "./api.js";
import { cardinalName, needleAngle } from "./compass.js";
import { computeView, pathPoints, polylinePoints, sparklinePoints, worldToPx, DEFAULT_SCALE, type MapView } from "./project.js";
import { ConsoleState } from "./state.js";

const $ = <T extends HTMLElement = HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};
const svg = (id: string): SVGElement => $(id) as unknown as SVGElement;

const MAP_W = 480;
const MAP_H = 480;

const state = new ConsoleState();
let client: ApiClient | null = null;
let stream: StreamHandle | null = null;
let driveInFlight = false;
let pathInFlight = false;
let eventsInFlight = false;

// ---- session ----------------------------------------------------------

$("loginForm").addEventListener("submit", (ev) => {
  ev.preventDefault();
  const token = ($("tokenInput") as HTMLInputElement).value.trim();
  if (!token) return;
  void connect(token);
});

$("logoutBtn").addEventListener("click", () => {
  stream?.stop();
  stream = null;
  client = null;
  $("consoleMain").classList.add("hidden");
  $("sessionBox").classList.add("hidden");
  $("loginForm").classList.remove("hidden");
  setStatus("stale", "disconnected");
});

async function connect(token: string): Promise<void> {
  const candidate = new ApiClient(token);
  try {
    // /api/path requires auth, so a bad token fails here and we never
    // tear down the login form
    const [info, path] = await Promise.all([candidate.info(), candidate.path()]);
    state.applyInfo(info);
    state.applyPath(path);
    $("robotName").textContent = `${info.name} ${info.version}`;
  } catch (err) {
    showBanner(err);
    return;
  }
  client = candidate;
  clearBanner();
  $("loginForm").classList.add("hidden");
  $("sessionBox").classList.remove("hidden");
  $("consoleMain").classList.remove("hidden");
  renderMap();
  stream = client.streamTelemetry(onFrame, onStreamStatus);
  void refreshEvents();
}

// ---- telemetry stream --------------------------------------------------

function onFrame(frame: Frame): void {
  state.applyFrame(frame);
  $("simTime").textContent = `${frame.t.toFixed(2)} s`;
  $("frameSeq").textContent = String(frame.seq);
  renderCompass(frame);
  renderMap();
  renderTiles();
  renderFeed();
  renderDriveState(frame);
  renderCamera(frame);
  // the polyline and event log come from their own routes; refresh them
  // as frames arrive, skipping while a fetch is already out
  void refreshPath();
  void refreshEvents();
}

function onStreamStatus(status: StreamStatus): void {
  if (status === "live") setStatus("live", "live");
  else if (status === "connecting") setStatus("connecting", "connecting...");
  else setStatus("stale", "stale (reconnecting)");
}

function setStatus(cls: string, text: string): void {
  $("statusDot").className = `dot ${cls}`;
  $("statusText").textContent = text;
}

async function refreshPath(): Promise<void> {
  if (!client || pathInFlight) return;
  pathInFlight = true;
  try {
    state.applyPath(await client.path());
  } catch {
    // transient; the next frame retries
  } finally {
    pathInFlight = false;
  }
}

async function refreshEvents(): Promise<void> {
  if (!client || eventsInFlight) return;
  eventsInFlight = true;
  try {
    state.applyEvents((await client.events()).events);
    renderEventLog();
  } catch {
    // transient; the next frame retries
  } finally {
    eventsInFlight = false;
  }
}

// ---- drive pad ---------------------------------------------------------

for (const btn of Array.from(document.querySelectorAll<HTMLButtonElement>(".drive"))) {
  btn.addEventListener("click", () => {
    const cmd = btn.dataset.cmd;
    if (cmd) void sendDrive(cmd);
  });
}

async function sendDrive(command: string): Promise<void> {
  if (!client || driveInFlight) return;
  const nudge = ($("nudgeMs") as HTMLInputElement).value.trim();
  let duration: number | null = null;
  if (command !== "stop" && nudge !== "") duration = Number(nudge);
  driveInFlight = true;
  setPadEnabled(false);
  try {
    const res = await client.drive(command, duration);
    clearBanner();
    $("driveState").textContent = `#${res.command_id} ${res.status}: ${command}${duration !== null ? ` (${duration} ms)` : ""}`;
  } catch (err) {
    showBanner(err);
  } finally {
    driveInFlight = false;
    setPadEnabled(true);
  }
}

function setPadEnabled(enabled: boolean): void {
  for (const btn of Array.from(document.querySelectorAll<HTMLButtonElement>(".drive"))) {
    btn.disabled = !enabled;
  }
}

function renderDriveState(frame: Frame): void {
  if (driveInFlight) return; // sendDrive owns the line while a post is out
  if (frame.active_command) {
    const q = frame.queue_depth > 0 ? `, ${frame.queue_depth} queued` : "";
    $("driveState").textContent = `running #${frame.active_command.command_id} ${frame.active_command.command}${q}`;
  } else {
    $("driveState").textContent = frame.queue_depth > 0 ? `${frame.queue_depth} queued` : "idle";
  }
}

// ---- banner ------------------------------------------------------------

function showBanner(err: unknown): void {
  const el = $("banner");
  el.textContent = err instanceof ApiError ? `${err.status}: ${err.detail}` : String(err);
  el.classList.remove("hidden");
}

function clearBanner(): void {
  $("banner").classList.add("hidden");
}

$("banner").addEventListener("click", clearBanner);

// ---- map ---------------------------------------------------------------

function renderMap(): void {
  const doc = state.path;
  const live = state.latestFrame?.pose ?? null;
  const points = doc ? pathPoints(doc) : [];
  const viewPoints = live ? [...points, live] : [...points];
  if (viewPoints.length === 0) viewPoints.push({ x: 0, y: 0, heading: 0 });
  const view = computeView(viewPoints, MAP_W, MAP_H);
  drawGrid(view);

  const track = svg("track");
  track.setAttribute("points", points.length >= 2 ? polylinePoints(view, points) : "");

  const origin = worldToPx(view, doc ? doc.origin : { x: 0, y: 0 });
  svg("originMark").setAttribute("cx", String(origin.x));
  svg("originMark").setAttribute("cy", String(origin.y));

  const wayDots = svg("wayDots");
  wayDots.replaceChildren();
  if (doc) {
    for (const wp of doc.waypoints) {
      const dot = document.createElementNS("http://www.w3.org/2000/svg", "circle");
      const p = worldToPx(view, wp);
      dot.setAttribute("cx", String(p.x));
      dot.setAttribute("cy", String(p.y));
      dot.setAttribute("r", "2.5");
      wayDots.appendChild(dot);
    }
  }

  const cursorWorld = live ?? (doc ? doc.cursor : { x: 0, y: 0, heading: 0 });
  const cursor = worldToPx(view, cursorWorld);
  svg("cursorMark").setAttribute("cx", String(cursor.x));
  svg("cursorMark").setAttribute("cy", String(cursor.y));
  const headRad = ((cursorWorld.heading ?? 0) * Math.PI) / 180;
  svg("cursorHeading").setAttribute("x1", String(cursor.x));
  svg("cursorHeading").setAttribute("y1", String(cursor.y));
  svg("cursorHeading").setAttribute("x2", String(cursor.x + 10 * Math.sin(headRad)));
  svg("cursorHeading").setAttribute("y2", String(cursor.y - 10 * Math.cos(headRad)));

  if (doc && (doc.segments.length > 0 || doc.turns.length > 0)) {
    const { total_distance_m, net_displacement_m } = doc.totals;
    $("mapCaption").innerHTML =
      `total <b>${total_distance_m.toFixed(3)} m</b>, net <b>${net_displacement_m.toFixed(3)} m</b>, ` +
      `scale <b>${view.scale.toFixed(0)} px/m</b>`;
  } else {
    $("mapCaption").textContent = "no path yet";
  }
}

function drawGrid(view: MapView): void {
  const grid = svg("mapGrid");
  grid.replaceChildren();
  const stepM = view.scale >= 12 ? 1 : view.scale >= DEFAULT_SCALE / 20 ? 5 : 0;
  if (!stepM) return;
  const halfW = MAP_W / 2 / view.scale;
  const halfH = MAP_H / 2 / view.scale;
  const ns = "http://www.w3.org/2000/svg";
  for (let gx = Math.ceil((view.cx - halfW) / stepM) * stepM; gx <= view.cx + halfW; gx += stepM) {
    const p = worldToPx(view, { x: gx, y: view.cy });
    const line = document.createElementNS(ns, "line");
    line.setAttribute("x1", String(p.x));
    line.setAttribute("x2", String(p.x));
    line.setAttribute("y1", "0");
    line.setAttribute("y2", String(MAP_H));
    grid.appendChild(line);
  }
  for (let gy = Math.ceil((view.cy - halfH) / stepM) * stepM; gy <= view.cy + halfH; gy += stepM) {
    const p = worldToPx(view, { x: view.cx, y: gy });
    const line = document.createElementNS(ns, "line");
    line.setAttribute("y1", String(p.y));
    line.setAttribute("y2", String(p.y));
    line.setAttribute("x1", "0");
    line.setAttribute("x2", String(MAP_W));
    grid.appendChild(line);
  }
}

// ---- compass -----------------------------------------------------------

function renderCompass(frame: Frame): void {
  const angle = needleAngle(frame.compass_deg);
  svg("needle").setAttribute("transform", `rotate(${angle} 80 80)`);
  $("compassDeg").textContent = `${frame.compass_deg.toFixed(1)}°`;
  $("compassCard").textContent = cardinalName(frame.compass_deg);
}

// ---- sensor tiles ------------------------------------------------------

function renderTiles(): void {
  const container = $("tiles");
  container.replaceChildren();
  for (const tile of state.tiles()) {
    const div = document.createElement("div");
    div.className = tile.highlighted ? "tile warn" : "tile";
    div.dataset.sensor = tile.sensorId;
    const name = document.createElement("div");
    name.className = "name";
    name.textContent = tile.sensorId;
    div.appendChild(name);
    const value = document.createElement("div");
    value.className = "value";
    value.innerHTML =
      tile.value !== null
        ? `${tile.value.toFixed(1)} <span class="unit">${tile.unit}</span>`
        : "--";
    div.appendChild(value);
    if (!tile.configured) {
      const tag = document.createElement("div");
      tag.className = "unconfigured";
      tag.textContent = "unconfigured";
      div.appendChild(tag);
    }
    const spark = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    spark.setAttribute("viewBox", "0 0 100 28");
    spark.setAttribute("preserveAspectRatio", "none");
    const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
    line.setAttribute("points", sparklinePoints(tile.spark, 100, 28));
    spark.appendChild(line);
    div.appendChild(spark);
    container.appendChild(div);
  }
}

// ---- feeds -------------------------------------------------------------

function renderFeed(): void {
  const feed = $("warnFeed");
  if (state.feed.length === 0) {
    feed.innerHTML = '<div class="empty">no warnings</div>';
    return;
  }
  feed.replaceChildren();
  for (const entry of state.feed) {
    const row = document.createElement("div");
    row.className = "feed-entry";
    const cleared = entry.clearedAt !== null;
    row.innerHTML =
      `<span class="t">${entry.raisedAt.toFixed(2)}s</span>` +
      `<span class="sev ${entry.severity}">${entry.severity}</span>` +
      `<span>${entry.sensorId} peak ${entry.peakValue.toFixed(1)}</span>` +
      (cleared
        ? `<span class="state-cleared">cleared ${entry.clearedAt!.toFixed(2)}s</span>`
        : '<span class="state-active">active</span>');
    feed.appendChild(row);
  }
  feed.scrollTop = feed.scrollHeight;
}

function renderEventLog(): void {
  const log = $("eventLog");
  const events = state.commandLog.slice(-50);
  if (events.length === 0) {
    log.innerHTML = '<div class="empty">no commands yet</div>';
    return;
  }
  log.replaceChildren();
  for (const ev of events) {
    const row = document.createElement("div");
    row.className = "feed-entry";
    row.innerHTML =
      `<span class="t">${ev.t.toFixed(2)}s</span>` +
      `<span class="ev-kind">${ev.kind}</span>` +
      `<span>#${ev.command_id} ${ev.command}${ev.duration_ms !== null ? ` (${ev.duration_ms} ms)` : ""}</span>`;
    log.appendChild(row);
  }
  log.scrollTop = log.scrollHeight;
}

// ---- camera ------------------------------------------------------------

function renderCamera(frame: Frame): void {
  $("cameraNote").textContent = frame.camera.available ? "live" : frame.camera.note;
}
