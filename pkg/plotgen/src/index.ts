export { CsvError, parseCsv, columnIndex, numericColumn, stringColumn } from "./csv";
export {
  FIGURE_KINDS,
  FigureKind,
  FigureOptions,
  chiVsCutoff,
  chiVsSweeps,
  fitParams,
  heatmapInfidelity,
  heatmapNorm,
  renderFigure,
} from "./figures";
export { PALETTE, SvgDocument, heatColor, linearScale, ticks } from "./svg";
