import { ApiError, CoroflowClient } from "./api";
import { CoregistrationMap } from "./coregistration";
import type {
  AnalysisOptions,
  OpenCaseResponse,
  SimulateResponse,
  StentPlanPayload,
} from "./types";

export type Cursor = {
  sampleIndex: number;
  pixel: [number, number];
};

export type DraftPlan = {
  xProxMm: number | null;
  xDistMm: number | null;
  dMaxMm: number;
  edgeLenMm: number;
};

export type InlineError = {
  message: string;
  cause: string | null;
};

/** One saved what-if strategy. `raw` holds the server's response bytes
 *  verbatim; `result` is parsed from exactly those bytes. */
export type StrategyRow = {
  id: number;
  version: number;
  result: SimulateResponse;
  raw: string;
};

export type OverlayToggles = {
  mask: boolean;
  centerline: boolean;
  heatmap: boolean;
  preRfc: boolean;
  postRfc: boolean;
};

const DEFAULT_D_MAX_MM = 3.5;
const DEFAULT_EDGE_LEN_MM = 1.5;

/**
 * Client-side state of the workbench: the open session, the co-registered
 * cursor, the draft stent plan, and the saved strategy table.
 *
 * All physiology values displayed from this state are server payload fields;
 * the only local arithmetic is coordinate mapping (sample index <-> mm).
 */
export class ViewState {
  session: OpenCaseResponse | null = null;
  coreg: CoregistrationMap | null = null;
  cursor: Cursor | null = null;
  /** Visual hint after a click that hit background; cleared on the next hit. */
  hint: string | null = null;
  draft: DraftPlan = {
    xProxMm: null,
    xDistMm: null,
    dMaxMm: DEFAULT_D_MAX_MM,
    edgeLenMm: DEFAULT_EDGE_LEN_MM,
  };
  draftError: InlineError | null = null;
  strategies: StrategyRow[] = [];
  toggles: OverlayToggles = {
    mask: true,
    centerline: true,
    heatmap: false,
    preRfc: true,
    postRfc: true,
  };

  private nextRowId = 1;
  private inflight: Promise<void> | null = null;
  private queuedPlan: StentPlanPayload | null = null;

  constructor(private readonly client: CoroflowClient) {}

  /** Open a case and load its co-registration map. Snapshots are immutable
   *  and plans are not portable across cases, so the strategy table,
   *  cursor, and draft are cleared. */
  async openCase(path: string, options?: AnalysisOptions): Promise<OpenCaseResponse> {
    const session = await this.client.openCaseByPath(path, options);
    const coreg = await this.client.getCoregistration(session.session_id);
    this.session = session;
    this.coreg = new CoregistrationMap(coreg);
    this.cursor = null;
    this.hint = null;
    this.draft = {
      xProxMm: null,
      xDistMm: null,
      dMaxMm: DEFAULT_D_MAX_MM,
      edgeLenMm: DEFAULT_EDGE_LEN_MM,
    };
    this.draftError = null;
    this.strategies = [];
    this.queuedPlan = null;
    return session;
  }

  get stepMm(): number {
    return this.session?.report.rfc.step_mm ?? 1.0;
  }

  /** Click on curve sample k: the image cursor lands on the mapped pixel. */
  clickCurve(k: number): void {
    if (!this.coreg) return;
    this.cursor = { sampleIndex: k, pixel: this.coreg.curveToPixel(k) };
    this.hint = null;
  }

  /** Click on an image pixel: foreground moves both cursors, background is
   *  a no-op apart from the hint. */
  clickImage(row: number, col: number): void {
    if (!this.coreg) return;
    const sample = this.coreg.pixelToCurve(row, col);
    if (sample === null) {
      this.hint = "click inside the vessel to co-register";
      return;
    }
    this.cursor = { sampleIndex: sample, pixel: [row, col] };
    this.hint = null;
  }

  /** Record a landing point at an arclength position; the first click sets
   *  the proximal edge, the second the distal one, further clicks restart. */
  placeLanding(xMm: number): void {
    if (this.draft.xProxMm === null) {
      this.draft.xProxMm = xMm;
    } else if (this.draft.xDistMm === null) {
      this.draft.xDistMm = xMm;
    } else {
      this.draft.xProxMm = xMm;
      this.draft.xDistMm = null;
    }
    this.draftError = null;
  }

  placeLandingFromCurve(k: number): void {
    this.placeLanding(k * this.stepMm);
  }

  placeLandingFromImage(row: number, col: number): boolean {
    const sample = this.coreg?.pixelToCurve(row, col) ?? null;
    if (sample === null) {
      this.hint = "landing points must be inside the vessel";
      return false;
    }
    this.placeLanding(sample * this.stepMm);
    return true;
  }

  setDMax(mm: number): void {
    this.draft.dMaxMm = mm;
  }

  setEdgeLen(mm: number): void {
    this.draft.edgeLenMm = mm;
  }

  /** The draft as a server plan, or null while only one landing point is
   *  placed. The first click is the proximal landing; the plan is posted as
   *  placed and the server decides validity. */
  buildPlan(): StentPlanPayload | null {
    const { xProxMm, xDistMm, dMaxMm, edgeLenMm } = this.draft;
    if (xProxMm === null || xDistMm === null) return null;
    return {
      x_prox_mm: xProxMm,
      x_dist_mm: xDistMm,
      d_max_mm: dMaxMm,
      edge_len_mm: edgeLenMm,
    };
  }

  /**
   * Post the draft plan and append the result to the strategy table.
   *
   * At most one simulate request is in flight; edits made meanwhile are
   * queued and only the latest queued plan is sent afterwards. A 400 from
   * the server is rendered inline at the draft instead of thrown.
   */
  async simulateDraft(): Promise<void> {
    const plan = this.buildPlan();
    if (!this.session || !plan) {
      this.draftError = {
        message: "place a proximal and a distal landing point first",
        cause: null,
      };
      return;
    }
    this.queuedPlan = plan;
    if (this.inflight) return this.inflight;
    this.inflight = this.drainQueue();
    try {
      await this.inflight;
    } finally {
      this.inflight = null;
    }
  }

  private async drainQueue(): Promise<void> {
    while (this.queuedPlan !== null && this.session !== null) {
      const plan = this.queuedPlan;
      this.queuedPlan = null;
      try {
        const { data, raw } = await this.client.simulate(this.session.session_id, plan);
        this.strategies.push({
          id: this.nextRowId++,
          version: data.version,
          result: data,
          raw,
        });
        this.draftError = null;
      } catch (err) {
        if (err instanceof ApiError && err.status === 400) {
          this.draftError = { message: err.message, cause: err.cause_code };
        } else {
          throw err;
        }
      }
    }
  }

  /** Saved strategies for the current snapshot version only. */
  table(): StrategyRow[] {
    const version = this.session?.version;
    return this.strategies.filter((row) => row.version === version);
  }

  setOverlay(name: keyof OverlayToggles, on: boolean): void {
    this.toggles[name] = on;
  }
}
