/** Server payload shapes, mirrored field for field. */

export type GeometryBlock = {
  d_mm: number[];
  d_ref_mm: number;
  length_mm: number;
  step_mm: number;
};

export type RfcBlock = {
  values: number[];
  nadir_index: number;
  nadir_value: number;
  step_mm: number;
};

export type PatternBlock = {
  label: "focal" | "diffuse" | "none";
  width_mm: number;
  nadir_index: number | null;
  start_index: number | null;
  end_index: number | null;
};

export type TransitBlock = {
  front_mm: (number | null)[];
  t_prox_s: number;
  t_dist_s: number;
  dt_s: number;
  path_length_mm: number;
  frame_interval_s: number;
};

export type FlowBlock = {
  a_ref_mm2: number;
  v_rest_mm_s: number;
  q_rest_mm3_s: number;
  q_hyp_mm3_s: number;
  kappa: number;
};

export type QfrBlock = {
  value: number;
  p_dist_mmhg: number;
  dp_total_mmhg: number;
  dp_visc_mmhg: number[];
  dp_loc_mmhg: number[];
  flags: string[];
};

export type ParamsBlock = {
  kappa: number;
  mu_pa_s: number;
  rho_kg_m3: number;
  p_prox_mmhg: number;
};

export type Report = {
  case_id: string;
  autocompleted: boolean;
  geometry: GeometryBlock;
  rfc: RfcBlock;
  pattern: PatternBlock;
  transit: TransitBlock | null;
  flow: FlowBlock;
  qfr: QfrBlock;
  params: ParamsBlock;
  timings_ms: Record<string, number>;
};

export type OpenCaseResponse = {
  session_id: string;
  version: number;
  case_id: string;
  n_frames: number;
  report: Report;
};

/** Arclength sample -> centreline pixel, plus the inverse over every
 *  foreground pixel (columnar, one entry per pixel). */
export type CoregistrationPayload = {
  n_samples: number;
  curve_to_pixel: [number, number][];
  pixel_to_curve: {
    rows: number[];
    cols: number[];
    sample: number[];
  };
};

export type StentPlanPayload = {
  x_prox_mm: number;
  x_dist_mm: number;
  d_max_mm: number;
  edge_len_mm: number;
};

export type SimulateResponse = {
  session_id: string;
  version: number;
  plan: StentPlanPayload;
  pre_qfr: number;
  residual_qfr: number;
  delta_qfr: number;
  flags: string[];
  post: {
    d_mm: number[];
    rfc_values: number[];
    rfc_nadir_index: number;
    rfc_nadir_value: number;
    p_dist_mmhg: number;
    dp_total_mmhg: number;
    flags: string[];
  };
};

export type AnalysisOptions = {
  kappa?: number;
  p_prox_mmhg?: number;
  d_ref_mm?: number;
  step_mm?: number;
};

export type ErrorDetail = {
  cause?: string;
  message?: string;
};

/** Simulation results whose span covers a declared branch carry this flag;
 *  the frozen-flow model is least trustworthy there. */
export const FLAG_LIMITED_ACCURACY_BRANCH = "LimitedAccuracyBranch";
