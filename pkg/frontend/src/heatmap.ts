// Coverage histogram -> renderable heatmap cells with hover readouts.

import { CoverageDoc } from "./api.js";

export type HeatCell = {
  thetaBin: number;
  phiBin: number;
  count: number;
  /** count / max over the map; 0 when the whole map is empty */
  heat: number;
  isGap: boolean;
  color: string;
};

export type HoverReadout = {
  thetaDeg: number; // bin center, degrees in [-180, 180)
  phiDeg: number; // bin center, degrees in [0, 180]
  count: number;
};

export type Heatmap = {
  cells: HeatCell[][]; // [phiBin][thetaBin], same layout as the payload
  maxCount: number;
  empty: boolean; // true -> render the "no coverage" banner
};

/** Cold blue through warm red; gaps get rendered with an outline on top. */
export function heatColor(heat: number): string {
  const h = Math.max(0, Math.min(1, heat));
  const hue = 220 - 220 * h;
  const light = 18 + 42 * h;
  return `hsl(${Math.round(hue)}, 80%, ${Math.round(light)}%)`;
}

export function buildHeatmap(doc: CoverageDoc): Heatmap {
  let max = 0;
  for (const row of doc.counts) for (const c of row) max = Math.max(max, c);
  const gapSet = new Set(doc.gaps.map((g) => `${g.theta_bin},${g.phi_bin}`));
  const cells = doc.counts.map((row, p) =>
    row.map((count, t) => {
      const heat = max === 0 ? 0 : count / max;
      return {
        thetaBin: t,
        phiBin: p,
        count,
        heat,
        isGap: gapSet.has(`${t},${p}`),
        color: heatColor(heat),
      };
    }),
  );
  return { cells, maxCount: max, empty: max === 0 };
}

export function hoverReadout(doc: CoverageDoc, thetaBin: number, phiBin: number): HoverReadout {
  const thetaW = 360 / doc.theta_bins;
  const phiW = 180 / doc.phi_bins;
  return {
    thetaDeg: -180 + (thetaBin + 0.5) * thetaW,
    phiDeg: (phiBin + 0.5) * phiW,
    count: doc.counts[phiBin][thetaBin],
  };
}
