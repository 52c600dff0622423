// Canvas skeleton rendering: two orthographic projections of the arm
// (side x-z and top x-y) drawn from the FK frame origins.

import { Skeleton, Vec3 } from "./math.js";

export interface View {
  /** Project a base-frame point to canvas [px, py]. */
  project(p: Vec3): [number, number];
  label: string;
}

export function makeViews(width: number, height: number, reach = 0.3): View[] {
  const half = width / 2;
  const scale = (Math.min(half, height) * 0.8) / (2 * reach);
  const sideCx = half / 2;
  const topCx = half + half / 2;
  const cy = height / 2;
  return [
    {
      label: "side (x-z)",
      project: (p) => [sideCx + p[0] * scale, cy + reach * scale - p[2] * scale],
    },
    {
      label: "top (x-y)",
      project: (p) => [topCx + p[0] * scale, cy - p[1] * scale],
    },
  ];
}

export function drawSkeleton(
  ctx: CanvasRenderingContext2D,
  skeleton: Skeleton,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = "#445";
  ctx.strokeRect(0, 0, width / 2, height);
  ctx.strokeRect(width / 2, 0, width / 2, height);

  for (const view of makeViews(width, height)) {
    ctx.fillStyle = "#889";
    ctx.font = "12px sans-serif";
    const origin = view.project([0, 0, 0]);
    ctx.fillText(view.label, origin[0] - 30, 16);

    ctx.beginPath();
    ctx.strokeStyle = "#3a7";
    ctx.lineWidth = 3;
    skeleton.points.forEach((p, i) => {
      const [x, y] = view.project(p);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();

    ctx.fillStyle = "#e74";
    for (const p of skeleton.points) {
      const [x, y] = view.project(p);
      ctx.beginPath();
      ctx.arc(x, y, 4, 0, 2 * Math.PI);
      ctx.fill();
    }
    ctx.lineWidth = 1;
  }
}
