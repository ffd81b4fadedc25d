// Gateway API shapes, mirrored from the backend wire formats.

export interface ModelElement {
  id: string;
  layer: "wall" | "floor" | "door" | "furniture" | "other";
  footprint: [number, number][];
  height: number;
}

export interface FiducialSpec {
  id: string;
  pose: { x: number; y: number; theta: number };
  orientation_error?: number;
}

export interface BuildingModel {
  units: string;
  bounds: [number, number, number, number];
  elements: ModelElement[];
  fiducials: FiducialSpec[];
}

export interface ProgressEvent {
  mission_id: string;
  t: number;
  x: number;
  y: number;
  theta: number;
  degraded: boolean;
  waypoint_index: number;
  n_waypoints: number;
  drps_done: number;
  n_drps: number;
  phase: string;
}

export interface ResultEvent {
  mission_id: string;
  inspection_date: string;
  n_captures: number;
}

export interface CaptureEntry {
  capture_id: string;
  drp_id: string;
  order_index: number;
  pose: { x: number; y: number; theta: number } | null;
  timestamp: number;
  image_url: string;
}

export interface InspectionRecord {
  mission_id: string;
  inspection_date: string;
  captures: CaptureEntry[];
}

export interface SessionView {
  robot_pose: {
    x: number;
    y: number;
    theta: number;
    degraded?: boolean;
    t?: number;
  } | null;
  robot_pose_at: number | null;
  active_mission: {
    mission_id: string;
    waypoint_index: number;
    n_waypoints: number;
    drps_done: number;
    n_drps: number;
  } | null;
  mission_active: boolean;
}

export interface PendingDrp {
  id: string;
  x: number;
  y: number;
}
