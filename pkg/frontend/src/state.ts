// Console state. Everything in here was confirmed by the server: frames,
// path documents, and command events go in; view models come out. The
// console never invents robot state on its own.

import type {
  ActiveWarning,
  CommandEvent,
  Frame,
  InfoDoc,
  PathDoc,
} from "./api.js";

export interface FeedEntry {
  eventId: number;
  sensorId: string;
  severity: string;
  raisedAt: number;
  clearedAt: number | null;
  peakValue: number;
}

export interface TileModel {
  sensorId: string;
  value: number | null;
  unit: string;
  configured: boolean;
  highlighted: boolean;
  spark: number[];
}

const SPARK_CAP = 200;

export class ConsoleState {
  info: InfoDoc | null = null;
  latestFrame: Frame | null = null;
  path: PathDoc | null = null;
  commandLog: CommandEvent[] = [];
  feed: FeedEntry[] = [];
  private feedById = new Map<number, FeedEntry>();
  private sparks = new Map<string, number[]>();

  applyInfo(info: InfoDoc): void {
    this.info = info;
  }

  applyFrame(frame: Frame): void {
    this.latestFrame = frame;
    for (const [sid, reading] of Object.entries(frame.sensors)) {
      let buf = this.sparks.get(sid);
      if (!buf) {
        buf = [];
        this.sparks.set(sid, buf);
      }
      buf.push(reading.value);
      if (buf.length > SPARK_CAP) buf.shift();
    }
    this.reconcileWarnings(frame);
  }

  // The frame lists the warnings that are active right now. A warning we
  // have not seen before has just been raised; one we track that is no
  // longer listed has cleared, and the frame's own timestamp is the
  // moment the server stopped reporting it.
  private reconcileWarnings(frame: Frame): void {
    const seen = new Set<number>();
    for (const w of frame.warnings) {
      seen.add(w.event_id);
      if (!this.feedById.has(w.event_id)) {
        this.insertFeedEntry(toFeedEntry(w));
      }
    }
    for (const entry of this.feed) {
      if (entry.clearedAt === null && !seen.has(entry.eventId)) {
        entry.clearedAt = frame.t;
      }
    }
  }

  private insertFeedEntry(entry: FeedEntry): void {
    this.feedById.set(entry.eventId, entry);
    let i = this.feed.length;
    while (i > 0 && this.feed[i - 1].raisedAt > entry.raisedAt) i--;
    this.feed.splice(i, 0, entry);
  }

  applyPath(doc: PathDoc): void {
    this.path = doc;
  }

  applyEvents(events: CommandEvent[]): void {
    this.commandLog = events;
  }

  activeWarningSensors(): Set<string> {
    const out = new Set<string>();
    if (this.latestFrame) {
      for (const w of this.latestFrame.warnings) out.add(w.sensor_id);
    }
    return out;
  }

  // One tile per configured sensor, in profile order; sensors that show
  // up in telemetry without being in the profile get an unconfigured
  // tile rather than breaking the dashboard.
  tiles(): TileModel[] {
    const profile = this.info?.profile.sensors ?? [];
    const frameSensors = this.latestFrame?.sensors ?? {};
    const highlighted = this.activeWarningSensors();
    const out: TileModel[] = [];
    for (const sid of profile) {
      out.push(this.tileFor(sid, frameSensors[sid], true, highlighted.has(sid)));
    }
    const extras = Object.keys(frameSensors)
      .filter((sid) => !profile.includes(sid))
      .sort();
    for (const sid of extras) {
      out.push(this.tileFor(sid, frameSensors[sid], false, highlighted.has(sid)));
    }
    return out;
  }

  private tileFor(
    sensorId: string,
    reading: { value: number; unit: string } | undefined,
    configured: boolean,
    isHighlighted: boolean,
  ): TileModel {
    return {
      sensorId,
      value: reading ? reading.value : null,
      unit: reading ? reading.unit : "",
      configured,
      highlighted: isHighlighted,
      spark: this.sparks.get(sensorId) ?? [],
    };
  }
}

function toFeedEntry(w: ActiveWarning): FeedEntry {
  return {
    eventId: w.event_id,
    sensorId: w.sensor_id,
    severity: w.severity,
    raisedAt: w.raised_at,
    clearedAt: w.cleared_at,
    peakValue: w.peak_value,
  };
}
