export { ApiError, CoroflowClient } from "./api";
export type { Exchange } from "./api";
export { CoregistrationMap } from "./coregistration";
export {
  capacityColor,
  curveIndexAtX,
  curveXY,
  drawImageCursor,
  drawRfcCurve,
  drawStentSpan,
  legendStops,
} from "./render";
export type { Box, Canvas2D, CurveOptions } from "./render";
export { rawToken, strategyCells, warningBadge } from "./table";
export type { StrategyCells } from "./table";
export * from "./types";
export { ViewState } from "./viewstate";
export type {
  Cursor,
  DraftPlan,
  InlineError,
  OverlayToggles,
  StrategyRow,
} from "./viewstate";
