import type {
  AnalysisOptions,
  CoregistrationPayload,
  ErrorDetail,
  OpenCaseResponse,
  Report,
  RfcBlock,
  SimulateResponse,
  StentPlanPayload,
} from "./types";

export class ApiError extends Error {
  readonly status: number;
  readonly cause_code: string | null;

  constructor(status: number, detail: ErrorDetail | string) {
    const message =
      typeof detail === "string" ? detail : detail.message ?? "request failed";
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.cause_code = typeof detail === "string" ? null : detail.cause ?? null;
  }
}

/** A parsed response together with the exact bytes the server sent.
 *  Displayed values must come from `data`; `raw` lets callers prove no
 *  client-side recomputation happened. */
export type Exchange<T> = {
  data: T;
  raw: string;
};

async function readError(response: Response): Promise<never> {
  let detail: ErrorDetail | string;
  try {
    const body = (await response.json()) as { detail?: ErrorDetail | string };
    detail = body.detail ?? { message: response.statusText };
  } catch {
    detail = { message: response.statusText };
  }
  throw new ApiError(response.status, detail);
}

async function exchange<T>(input: string, init?: RequestInit): Promise<Exchange<T>> {
  const response = await fetch(input, init);
  if (!response.ok) await readError(response);
  const raw = await response.text();
  return { data: JSON.parse(raw) as T, raw };
}

/**
 * Typed client for the physiology service. Every number shown in the UI
 * originates from one of these calls; no physiology is computed locally.
 */
export class CoroflowClient {
  constructor(private readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  /** Open a case from a directory the server can reach. */
  async openCaseByPath(path: string, options?: AnalysisOptions): Promise<OpenCaseResponse> {
    const body = JSON.stringify({ path, ...(options ?? {}) });
    const ex = await exchange<OpenCaseResponse>(this.url("/cases"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body,
    });
    return ex.data;
  }

  /** Open a case by uploading a zipped bundle. */
  async openCaseUpload(bundle: Blob, options?: AnalysisOptions): Promise<OpenCaseResponse> {
    const form = new FormData();
    form.append("bundle", bundle, "bundle.zip");
    if (options) form.append("options", JSON.stringify(options));
    const ex = await exchange<OpenCaseResponse>(this.url("/cases"), {
      method: "POST",
      body: form,
    });
    return ex.data;
  }

  async getReport(sessionId: string): Promise<Report> {
    const ex = await exchange<Report>(this.url(`/cases/${sessionId}/report`));
    return ex.data;
  }

  async getRfc(sessionId: string): Promise<RfcBlock> {
    const ex = await exchange<RfcBlock>(this.url(`/cases/${sessionId}/rfc`));
    return ex.data;
  }

  async getCoregistration(sessionId: string): Promise<CoregistrationPayload> {
    const ex = await exchange<CoregistrationPayload>(
      this.url(`/cases/${sessionId}/coregistration`),
    );
    return ex.data;
  }

  heatmapUrl(sessionId: string): string {
    return this.url(`/cases/${sessionId}/heatmap.png`);
  }

  frameUrl(sessionId: string, index: number): string {
    return this.url(`/cases/${sessionId}/frame/${index}.png`);
  }

  /** Evaluate a stent plan. Returns the parsed payload plus the raw body so
   *  the strategy table can store the server's bytes verbatim. */
  async simulate(sessionId: string, plan: StentPlanPayload): Promise<Exchange<SimulateResponse>> {
    return exchange<SimulateResponse>(this.url(`/cases/${sessionId}/simulate`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(plan),
    });
  }
}
