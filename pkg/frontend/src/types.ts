/** Shapes of the JSON artifacts served by the backend. */

export interface PayloadPoint {
	id: string;
	x: number;
	y: number;
	predicted: number;
	prob_max: number;
	mismatch: boolean;
	true_label?: number;
}

export interface PayloadGrid {
	x0: number;
	y0: number;
	dx: number;
	dy: number;
	width: number;
	height: number;
	labels: number[];
	certainty: number[];
}

export interface VisPayload {
	points: PayloadPoint[];
	grid: PayloadGrid;
	class_names: string[];
	metrics: { q_knn_error: number; q_data_error: number };
	provenance: Record<string, unknown>;
}

export interface PointRecord {
	id: string;
	text?: string;
	label?: number;
	dataset_tag?: string;
	predicted?: number;
}

export interface RegionBox {
	x_min: number;
	x_max: number;
	y_min: number;
	y_max: number;
}

export interface RegionEntry {
	id: string;
	x: number;
	y: number;
	mismatch: boolean;
	cell_certainty: number;
}

export interface RunConfigBody {
	metric: { lambda: number; n_segments: number };
	seed?: number;
}

/** Cell index under the same floor-and-clamp rule the backend uses. */
export function cellIndex(grid: PayloadGrid, x: number, y: number): number {
	const ix = Math.min(Math.max(Math.floor((x - grid.x0) / grid.dx), 0), grid.width - 1);
	const iy = Math.min(Math.max(Math.floor((y - grid.y0) / grid.dy), 0), grid.height - 1);
	return iy * grid.width + ix;
}

export class PayloadSchemaError extends Error {}

/** Structural validation; throws PayloadSchemaError with the failing field. */
export function validatePayload(doc: unknown): VisPayload {
	const payload = doc as VisPayload;
	if (typeof payload !== "object" || payload === null) {
		throw new PayloadSchemaError("payload is not an object");
	}
	for (const key of ["points", "grid", "class_names", "metrics"] as const) {
		if (!(key in payload)) {
			throw new PayloadSchemaError(`payload is missing "${key}"`);
		}
	}
	const grid = payload.grid;
	const cells = grid.width * grid.height;
	if (!Array.isArray(grid.labels) || grid.labels.length !== cells) {
		throw new PayloadSchemaError("grid labels do not match resolution");
	}
	if (!Array.isArray(grid.certainty) || grid.certainty.length !== cells) {
		throw new PayloadSchemaError("grid certainty does not match resolution");
	}
	if (!Array.isArray(payload.points)) {
		throw new PayloadSchemaError("points is not an array");
	}
	for (const p of payload.points) {
		if (typeof p.id !== "string" || typeof p.x !== "number" || typeof p.y !== "number") {
			throw new PayloadSchemaError("malformed point entry");
		}
	}
	return payload;
}
