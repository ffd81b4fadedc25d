// Console wiring: floor plan interaction, dispatch, live twin, and the
// date-indexed capture browser.

import { GatewayClient, GatewayError, streamEvents } from "./api";
import { renderFloorplan } from "./floorplan";
import { fitProjection, screenToWorld, type Projection } from "./projection";
import { PanoramaViewer } from "./panorama";
import { Store } from "./store";
import type { ProgressEvent, ResultEvent } from "./types";

export class ConsoleApp {
  store = new Store();
  private projection: Projection | null = null;
  private viewer: PanoramaViewer | null = null;

  constructor(
    private client: GatewayClient,
    private root: Document = document,
  ) {}

  async start(): Promise<void> {
    const model = await this.client.fetchModel();
    this.store.update({ model });
    this.projection = fitProjection(
      model.bounds,
      this.canvas().width,
      this.canvas().height,
    );
    await this.refreshDates();

    const state = await this.client.fetchState();
    if (state.robot_pose) {
      this.store.update({
        twin: {
          x: state.robot_pose.x,
          y: state.robot_pose.y,
          theta: state.robot_pose.theta,
          degraded: state.robot_pose.degraded ?? false,
          lastSeen: Date.now(),
        },
        missionActive: state.mission_active,
      });
    }

    this.bindUi();
    this.store.subscribe(() => this.render());
    streamEvents(this.client.eventsUrl(), {
      onEvent: (name, data) => this.handleEvent(name, data),
    });
    // periodic repaint hides the twin once telemetry goes stale
    setInterval(() => this.render(), 500);
    this.render();
  }

  private canvas(): HTMLCanvasElement {
    return this.root.getElementById("floorplan") as HTMLCanvasElement;
  }

  private bindUi(): void {
    this.canvas().addEventListener("click", (e) => {
      const rect = this.canvas().getBoundingClientRect();
      this.handleCanvasClick(e.clientX - rect.left, e.clientY - rect.top);
    });
    this.button("dispatch").addEventListener("click", () => {
      void this.dispatch();
    });
    this.button("clear-drps").addEventListener("click", () => {
      this.store.clearPendingDrps();
    });
    this.button("show-plan").addEventListener("click", () => {
      this.store.update({ view: "plan", selectedCapture: null });
    });
    const dateSelect = this.root.getElementById("dates") as HTMLSelectElement;
    dateSelect.addEventListener("change", () => {
      void this.selectDate(dateSelect.value || null);
    });
  }

  private button(id: string): HTMLButtonElement {
    return this.root.getElementById(id) as HTMLButtonElement;
  }

  handleCanvasClick(sx: number, sy: number): void {
    if (!this.projection || this.store.get().view !== "plan") {
      return;
    }
    const state = this.store.get();
    if (state.missionActive) {
      return;
    }
    // clicking a capture marker opens it; empty floor places a new point
    const markers = this.store.captureMarkers();
    for (const marker of markers) {
      const [mx, my] = worldToScreenSafe(this.projection, marker.x, marker.y);
      if (Math.hypot(mx - sx, my - sy) <= 9) {
        void this.openCapture(marker.captureId);
        return;
      }
    }
    const [wx, wy] = screenToWorld(this.projection, sx, sy);
    this.store.placeDrp(wx, wy);
  }

  async dispatch(): Promise<void> {
    const state = this.store.get();
    if (state.missionActive || state.pendingDrps.length === 0) {
      return;
    }
    try {
      const result = await this.client.dispatch(state.pendingDrps);
      this.store.dispatchSucceeded(result.mission_id, result.n_drps);
    } catch (err) {
      if (err instanceof GatewayError) {
        this.store.dispatchFailed(err.message);
      } else {
        this.store.dispatchFailed(String(err));
      }
    }
  }

  handleEvent(name: string, data: unknown): void {
    if (name === "progress") {
      this.store.progressEvent(data as ProgressEvent, Date.now());
    } else if (name === "result") {
      const result = data as ResultEvent;
      this.store.missionFinished();
      void this.refreshDates().then(() =>
        this.selectDate(result.inspection_date),
      );
    } else if (name === "error") {
      const body = data as { code?: string; detail?: string };
      this.store.update({
        banner: body.code ?? "relay error",
        missionActive: false,
      });
    }
  }

  async refreshDates(): Promise<void> {
    const dates = await this.client.fetchDates();
    this.store.update({ dates });
  }

  async selectDate(date: string | null): Promise<void> {
    if (date === null) {
      this.store.update({ selectedDate: null, records: [] });
      return;
    }
    const records = await this.client.fetchCaptures(date);
    this.store.update({ selectedDate: date, records });
  }

  async openCapture(captureId: string): Promise<void> {
    const entry = this.findCapture(captureId);
    if (!entry) {
      return;
    }
    this.store.update({ selectedCapture: captureId, view: "panorama" });
    if (!this.viewer) {
      this.viewer = new PanoramaViewer(
        this.root.getElementById("panorama") as HTMLCanvasElement,
      );
    }
    await this.viewer.load(this.client.imageUrl(entry));
  }

  private findCapture(captureId: string) {
    for (const record of this.store.get().records) {
      for (const capture of record.captures) {
        if (capture.capture_id === captureId) {
          return capture;
        }
      }
    }
    return null;
  }

  /** Thumbnail list data in gateway record order (the path order). */
  thumbnails(): { captureId: string; drpId: string; url: string }[] {
    const items = [];
    for (const record of this.store.get().records) {
      for (const capture of record.captures) {
        items.push({
          captureId: capture.capture_id,
          drpId: capture.drp_id,
          url: this.client.imageUrl(capture),
        });
      }
    }
    return items;
  }

  render(): void {
    const state = this.store.get();
    const canvas = this.canvas();
    const ctx = canvas.getContext("2d");
    if (ctx && this.projection) {
      renderFloorplan(
        ctx,
        state,
        this.projection,
        canvas.width,
        canvas.height,
        Date.now(),
      );
    }
    this.renderChrome();
  }

  private renderChrome(): void {
    const state = this.store.get();
    const banner = this.root.getElementById("banner") as HTMLElement;
    banner.textContent = state.banner ?? "";
    banner.style.display = state.banner ? "block" : "none";

    const progress = this.root.getElementById("progress") as HTMLElement;
    if (state.progress) {
      progress.textContent =
        `capturing ${state.progress.drpsDone}/${state.progress.nDrps} ` +
        `(waypoint ${state.progress.waypointIndex}/${state.progress.nWaypoints})`;
    } else {
      progress.textContent = state.missionActive ? "dispatching..." : "";
    }

    this.button("dispatch").disabled =
      state.missionActive || state.pendingDrps.length === 0;

    const dateSelect = this.root.getElementById("dates") as HTMLSelectElement;
    const options = ["<option value=''>live</option>"]
      .concat(
        state.dates.map(
          (d) =>
            `<option value="${d}" ${d === state.selectedDate ? "selected" : ""}>${d}</option>`,
        ),
      )
      .join("");
    if (dateSelect.innerHTML !== options) {
      dateSelect.innerHTML = options;
    }

    const strip = this.root.getElementById("thumbnails") as HTMLElement;
    const thumbs = this.thumbnails();
    const html = thumbs
      .map(
        (t) =>
          `<figure class="thumb" data-capture="${t.captureId}">` +
          `<img src="${t.url}" alt="${t.drpId}"><figcaption>${t.drpId}</figcaption></figure>`,
      )
      .join("");
    if (strip.innerHTML !== html) {
      strip.innerHTML = html;
      strip.querySelectorAll(".thumb").forEach((el) => {
        el.addEventListener("click", () => {
          void this.openCapture((el as HTMLElement).dataset.capture ?? "");
        });
      });
    }

    const planPane = this.root.getElementById("plan-pane") as HTMLElement;
    const panoPane = this.root.getElementById("pano-pane") as HTMLElement;
    planPane.style.display = state.view === "plan" ? "block" : "none";
    panoPane.style.display = state.view === "panorama" ? "block" : "none";
  }
}

function worldToScreenSafe(
  projection: Projection,
  x: number,
  y: number,
): [number, number] {
  return [
    x * projection.scale + projection.offsetX,
    projection.height - (y * projection.scale + projection.offsetY),
  ];
}

if (typeof document !== "undefined" && document.getElementById("floorplan")) {
  const app = new ConsoleApp(new GatewayClient(""));
  void app.start();
}
