// Single state store: every UI update flows through set()/update() so
// views render from one consistent snapshot.

import type {
  BuildingModel,
  InspectionRecord,
  PendingDrp,
  ProgressEvent,
} from "./types";

export const TWIN_STALE_MS = 2000;

export interface TwinState {
  x: number;
  y: number;
  theta: number;
  degraded: boolean;
  lastSeen: number; // ms timestamp of the last pose event
}

export interface MissionProgress {
  missionId: string;
  drpsDone: number;
  nDrps: number;
  waypointIndex: number;
  nWaypoints: number;
}

export interface ConsoleState {
  model: BuildingModel | null;
  pendingDrps: PendingDrp[];
  twin: TwinState | null;
  missionActive: boolean;
  progress: MissionProgress | null;
  dates: string[];
  selectedDate: string | null;
  records: InspectionRecord[];
  selectedCapture: string | null;
  banner: string | null;
  view: "plan" | "panorama";
}

export function initialState(): ConsoleState {
  return {
    model: null,
    pendingDrps: [],
    twin: null,
    missionActive: false,
    progress: null,
    dates: [],
    selectedDate: null,
    records: [],
    selectedCapture: null,
    banner: null,
    view: "plan",
  };
}

type Listener = (state: ConsoleState) => void;

export class Store {
  private state: ConsoleState = initialState();
  private listeners: Listener[] = [];
  private drpCounter = 0;

  get(): ConsoleState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  update(patch: Partial<ConsoleState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  // -- actions --------------------------------------------------------------

  placeDrp(x: number, y: number): PendingDrp {
    this.drpCounter += 1;
    const drp = { id: `drp-${this.drpCounter}`, x, y };
    this.update({ pendingDrps: [...this.state.pendingDrps, drp] });
    return drp;
  }

  clearPendingDrps(): void {
    this.update({ pendingDrps: [] });
  }

  dispatchSucceeded(missionId: string, nDrps: number): void {
    // markers clear only once the gateway accepted the mission
    this.update({
      pendingDrps: [],
      missionActive: true,
      banner: null,
      progress: {
        missionId,
        drpsDone: 0,
        nDrps,
        waypointIndex: 0,
        nWaypoints: 0,
      },
    });
  }

  dispatchFailed(message: string): void {
    // markers are preserved so the user can retry
    this.update({ banner: message, missionActive: false });
  }

  progressEvent(event: ProgressEvent, now: number): void {
    this.update({
      twin: {
        x: event.x,
        y: event.y,
        theta: event.theta,
        degraded: event.degraded,
        lastSeen: now,
      },
      progress: {
        missionId: event.mission_id,
        drpsDone: event.drps_done,
        nDrps: event.n_drps,
        waypointIndex: event.waypoint_index,
        nWaypoints: event.n_waypoints,
      },
    });
  }

  missionFinished(): void {
    this.update({ missionActive: false, progress: null });
  }

  twinVisible(now: number): boolean {
    const twin = this.state.twin;
    return twin !== null && now - twin.lastSeen <= TWIN_STALE_MS;
  }

  /** Capture markers for the floor plan, in gateway record order. */
  captureMarkers(): { captureId: string; drpId: string; x: number; y: number }[] {
    const markers = [];
    for (const record of this.state.records) {
      for (const capture of record.captures) {
        markers.push({
          captureId: capture.capture_id,
          drpId: capture.drp_id,
          x: capture.pose?.x ?? 0,
          y: capture.pose?.y ?? 0,
        });
      }
    }
    return markers;
  }
}
