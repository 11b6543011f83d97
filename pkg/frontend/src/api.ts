// Typed client for the robot service. Every request the console makes goes
// through this file; nothing else touches the network.

export interface Pose {
  x: number;
  y: number;
  heading: number;
}

export interface SensorReading {
  raw: number;
  value: number;
  unit: string;
}

export interface ActiveWarning {
  event_id: number;
  sensor_id: string;
  severity: string;
  raised_at: number;
  cleared_at: number | null;
  peak_value: number;
}

export interface Frame {
  seq: number;
  t: number;
  pose: Pose;
  compass_deg: number;
  motors: { left: string; right: string };
  sensors: Record<string, SensorReading>;
  warnings: ActiveWarning[];
  camera: { available: boolean; note: string };
  active_command: { command_id: number; command: string } | null;
  queue_depth: number;
}

export interface PathSegment {
  t_start: number;
  t_end: number;
  heading_deg: number;
  distance_m: number;
}

export interface PathDoc {
  origin: Pose;
  segments: PathSegment[];
  waypoints: Pose[];
  turns: { t_start: number; t_end: number; sweep_deg: number; dx: number; dy: number }[];
  cursor: Pose;
  totals: { total_distance_m: number; net_displacement_m: number };
}

export interface InfoDoc {
  name: string;
  version: string;
  profile: {
    sensors: string[];
    wheel_radius_m: number;
    track_width_m: number;
    wheel_speed_mps: number;
    ticks_per_revolution: number;
    tick_ms: number;
    poll_hz: number;
  };
  packages: { name: string; version: string }[];
}

export interface CommandEvent {
  t: number;
  kind: string;
  command_id: number;
  command: string;
  duration_ms: number | null;
}

export interface DataSample {
  t: number;
  raw: number;
  filtered: number;
  min: number;
  max: number;
}

export interface DataSeries {
  sensor: string;
  unit: string;
  samples: DataSample[];
}

export interface DriveResult {
  command_id: number;
  status: string;
}

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`${status}: ${detail}`);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export type StreamStatus = "connecting" | "live" | "stale";

export interface StreamHandle {
  stop(): void;
}

const RECONNECT_DELAY_MS = 1000;

export class ApiClient {
  private fetchImpl: FetchLike;

  constructor(
    public token: string,
    fetchImpl?: FetchLike,
    private base = "",
  ) {
    this.fetchImpl = fetchImpl ?? ((url, init) => globalThis.fetch(url, init));
  }

  private headers(): Record<string, string> {
    return { Authorization: `Bearer ${this.token}` };
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.base + path, {
      ...init,
      headers: { ...this.headers(), ...(init?.headers as Record<string, string>) },
    });
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = await resp.json();
        if (body && typeof body.detail === "string") detail = body.detail;
        else if (body && body.detail !== undefined) detail = JSON.stringify(body.detail);
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  info(): Promise<InfoDoc> {
    return this.request<InfoDoc>("/api/info");
  }

  drive(command: string, durationMs: number | null): Promise<DriveResult> {
    const body: { command: string; duration_ms?: number } = { command };
    if (durationMs !== null) body.duration_ms = durationMs;
    return this.request<DriveResult>("/api/control/drive", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  telemetry(): Promise<Frame> {
    return this.request<Frame>("/api/telemetry");
  }

  path(): Promise<PathDoc> {
    return this.request<PathDoc>("/api/path");
  }

  data(sensorId: string, t1?: number, t2?: number, stride?: number): Promise<DataSeries> {
    const params = new URLSearchParams();
    if (t1 !== undefined) params.set("t1", String(t1));
    if (t2 !== undefined) params.set("t2", String(t2));
    if (stride !== undefined) params.set("stride", String(stride));
    const qs = params.toString();
    return this.request<DataSeries>(`/api/data/${sensorId}${qs ? "?" + qs : ""}`);
  }

  events(): Promise<{ events: CommandEvent[] }> {
    return this.request("/api/events");
  }

  // The push stream is read with fetch rather than EventSource: EventSource
  // cannot send the bearer header the service requires.
  streamTelemetry(
    onFrame: (frame: Frame) => void,
    onStatus: (status: StreamStatus) => void,
  ): StreamHandle {
    let stopped = false;
    let timer: ReturnType<typeof setTimeout> | null = null;

    const connect = async () => {
      onStatus("connecting");
      try {
        const resp = await this.fetchImpl(this.base + "/api/telemetry/stream", {
          headers: this.headers(),
        });
        if (!resp.ok || !resp.body) {
          throw new ApiError(resp.status, resp.statusText);
        }
        onStatus("live");
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        let buffer = "";
        for (;;) {
          const { done, value } = await reader.read();
          if (stopped) {
            reader.cancel().catch(() => {});
            return;
          }
          if (done) break;
          buffer += decoder.decode(value, { stream: true });
          let sep;
          while ((sep = buffer.indexOf("\n\n")) >= 0) {
            const block = buffer.slice(0, sep);
            buffer = buffer.slice(sep + 2);
            for (const line of block.split("\n")) {
              if (line.startsWith("data:")) {
                onFrame(JSON.parse(line.slice(5)) as Frame);
              }
              // lines starting with ":" are keep-alive comments
            }
          }
        }
      } catch (err) {
        if (err instanceof ApiError && err.status === 401) {
          onStatus("stale");
          return; // a bad token will not get better by retrying
        }
      }
      if (stopped) return;
      onStatus("stale");
      timer = setTimeout(connect, RECONNECT_DELAY_MS);
    };

    void connect();
    return {
      stop() {
        stopped = true;
        if (timer !== null) clearTimeout(timer);
      },
    };
  }
}
