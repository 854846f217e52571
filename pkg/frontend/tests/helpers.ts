import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { FetchFn } from "../src/api.js";
import { PointRecord, RegionEntry, VisPayload } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

export function loadFixture<T>(name: string): T {
	return JSON.parse(readFileSync(join(here, "fixtures", name), "utf-8")) as T;
}

export const fixturePayload = (): VisPayload => loadFixture<VisPayload>("payload.json");
export const fixtureRecords = (): Record<string, PointRecord> =>
	loadFixture<Record<string, PointRecord>>("records.json");
export const fixtureRegion = (): { box: Record<string, number>; points: RegionEntry[] } =>
	loadFixture("region_order.json");

function jsonResponse(status: number, body: unknown): Response {
	return new Response(JSON.stringify(body), {
		status,
		headers: { "content-type": "application/json" },
	});
}

export interface MockBackendOptions {
	regionPoints?: RegionEntry[];
	runConflict?: boolean;
	newPayload?: VisPayload;
	offline?: boolean;
}

/** In-memory stand-in for the backend API, driven by the fixtures. */
export function mockBackend(options: MockBackendOptions = {}): { fetchFn: FetchFn; calls: string[] } {
	const records = fixtureRecords();
	const region = options.regionPoints ?? fixtureRegion().points;
	const calls: string[] = [];

	const fetchFn: FetchFn = async (input, init) => {
		calls.push(`${init?.method ?? "GET"} ${input}`);
		if (options.offline) {
			throw new TypeError("network down");
		}
		const url = new URL(input, "http://testserver");
		const path = url.pathname;
		const pointMatch = path.match(/\/points\/([^/]+)$/);
		if (pointMatch) {
			const record = records[decodeURIComponent(pointMatch[1])];
			return record === undefined
				? jsonResponse(404, { error: "unknown point" })
				: jsonResponse(200, record);
		}
		if (path.endsWith("/region-query")) {
			const box = JSON.parse(String(init?.body));
			if (box.x_min > box.x_max || box.y_min > box.y_max) {
				return jsonResponse(400, { error: "inverted box" });
			}
			const inside = region.filter(
				(p) => p.x >= box.x_min && p.x <= box.x_max && p.y >= box.y_min && p.y <= box.y_max,
			);
			return jsonResponse(200, { points: inside });
		}
		if (path.endsWith("/runs") && init?.method === "POST") {
			if (options.runConflict) return jsonResponse(409, { error: "run active" });
			const config = JSON.parse(String(init?.body));
			if (config.metric.lambda < 0 || config.metric.lambda > 1) {
				return jsonResponse(400, { error: "lambda out of range" });
			}
			return jsonResponse(201, { run_id: "run-next" });
		}
		if (path.match(/\/runs\/[^/]+$/)) {
			return jsonResponse(200, options.newPayload ?? fixturePayload());
		}
		return jsonResponse(404, { error: `unhandled ${path}` });
	};
	return { fetchFn, calls };
}
