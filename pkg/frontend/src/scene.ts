/** SVG scene rendering: decision surface, points, rings, selection badges.
 *
 * The scene is a pure function of the model; re-rendering with the same
 * model produces the same element tree.  Zoom and pan only change the
 * viewport transform, never the payload-derived geometry.
 */

import { classColor } from "./palette.js";
import { PayloadPoint, VisPayload, validatePayload } from "./types.js";

export interface Viewport {
	center: { x: number; y: number };
	scale: number;
}

export interface SceneModel {
	payload: VisPayload;
	viewport: Viewport;
	/** ids in user click order; badge numbers follow this order */
	selection: string[];
	activeRegion?: { x_min: number; x_max: number; y_min: number; y_max: number };
}

export const SCENE_SIZE = 720;
export const POINT_RADIUS = 5;
export const RING_RADIUS = 10;

const SVG_NS = "http://www.w3.org/2000/svg";

export function defaultViewport(payload: VisPayload): Viewport {
	const grid = payload.grid;
	return {
		center: {
			x: grid.x0 + (grid.width * grid.dx) / 2,
			y: grid.y0 + (grid.height * grid.dy) / 2,
		},
		scale: 1,
	};
}

export function newSceneModel(doc: unknown): SceneModel {
	const payload = validatePayload(doc);
	return { payload, viewport: defaultViewport(payload), selection: [] };
}

/** World-to-screen transform for the current viewport. */
export function projectToScreen(model: SceneModel, x: number, y: number): { px: number; py: number } {
	const grid = model.payload.grid;
	const extentX = grid.width * grid.dx;
	const extentY = grid.height * grid.dy;
	const base = SCENE_SIZE / Math.max(extentX, extentY);
	const s = base * model.viewport.scale;
	const px = SCENE_SIZE / 2 + (x - model.viewport.center.x) * s;
	const py = SCENE_SIZE / 2 - (y - model.viewport.center.y) * s;
	return { px, py };
}

function el(tag: string, attrs: Record<string, string | number>): SVGElement {
	const node = document.createElementNS(SVG_NS, tag);
	for (const [key, value] of Object.entries(attrs)) {
		node.setAttribute(key, String(value));
	}
	return node;
}

function pointLabel(p: PayloadPoint): number {
	return p.true_label ?? p.predicted;
}

/** Build the full scene as an <svg> element. */
export function renderScene(model: SceneModel): SVGSVGElement {
	const { payload } = model;
	const grid = payload.grid;
	const svg = el("svg", {
		width: SCENE_SIZE,
		height: SCENE_SIZE,
		viewBox: `0 0 ${SCENE_SIZE} ${SCENE_SIZE}`,
	}) as SVGSVGElement;
	svg.classList.add("scene");

	const cells = el("g", {});
	cells.classList.add("cells");
	const cellScreen = (ix: number, iy: number) =>
		projectToScreen(model, grid.x0 + ix * grid.dx, grid.y0 + iy * grid.dy);
	for (let iy = 0; iy < grid.height; iy++) {
		for (let ix = 0; ix < grid.width; ix++) {
			const idx = iy * grid.width + ix;
			const corner = cellScreen(ix, iy + 1); // top-left on screen
			const opposite = cellScreen(ix + 1, iy);
			const rect = el("rect", {
				x: corner.px,
				y: corner.py,
				width: opposite.px - corner.px,
				height: opposite.py - corner.py,
				fill: classColor(grid.labels[idx]),
				"fill-opacity": grid.certainty[idx],
			});
			rect.classList.add("cell");
			cells.appendChild(rect);
		}
	}
	svg.appendChild(cells);

	if (model.activeRegion) {
		const a = projectToScreen(model, model.activeRegion.x_min, model.activeRegion.y_max);
		const b = projectToScreen(model, model.activeRegion.x_max, model.activeRegion.y_min);
		const region = el("rect", {
			x: a.px, y: a.py, width: b.px - a.px, height: b.py - a.py,
			fill: "none", stroke: "#333", "stroke-dasharray": "6 3",
		});
		region.classList.add("active-region");
		svg.appendChild(region);
	}

	const rings = el("g", {});
	rings.classList.add("rings");
	for (const p of payload.points) {
		if (!p.mismatch) continue;
		const { px, py } = projectToScreen(model, p.x, p.y);
		const ring = el("circle", {
			cx: px, cy: py, r: RING_RADIUS,
			fill: "none", stroke: classColor(p.predicted), "stroke-width": 2,
		});
		ring.classList.add("ring");
		ring.setAttribute("data-id", p.id);
		rings.appendChild(ring);
	}
	svg.appendChild(rings);

	const dots = el("g", {});
	dots.classList.add("points");
	for (const p of payload.points) {
		const { px, py } = projectToScreen(model, p.x, p.y);
		const dot = el("circle", {
			cx: px, cy: py, r: POINT_RADIUS, fill: classColor(pointLabel(p)),
		});
		dot.classList.add("point");
		dot.setAttribute("data-id", p.id);
		dots.appendChild(dot);
	}
	svg.appendChild(dots);

	const badges = el("g", {});
	badges.classList.add("badges");
	model.selection.forEach((id, order) => {
		const point = payload.points.find((p) => p.id === id);
		if (!point) return;
		const { px, py } = projectToScreen(model, point.x, point.y);
		const badge = el("text", {
			x: px + POINT_RADIUS + 2,
			y: py - POINT_RADIUS - 2,
			"font-size": 13,
			"font-family": "sans-serif",
		});
		badge.classList.add("badge");
		badge.setAttribute("data-id", id);
		badge.textContent = String(order + 1);
		badges.appendChild(badge);
	});
	svg.appendChild(badges);

	return svg;
}

/** Append a point to the selection unless already present. */
export function select(model: SceneModel, pointId: string): SceneModel {
	if (model.selection.includes(pointId)) return model;
	return { ...model, selection: [...model.selection, pointId] };
}

export function zoom(model: SceneModel, factor: number): SceneModel {
	return {
		...model,
		viewport: { ...model.viewport, scale: model.viewport.scale * factor },
	};
}

export function focusOn(model: SceneModel, x: number, y: number, scale?: number): SceneModel {
	return {
		...model,
		viewport: { center: { x, y }, scale: scale ?? model.viewport.scale },
	};
}
