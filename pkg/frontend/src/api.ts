/** Thin client for the backend JSON API; the fetch function is injectable
 * so tests run without a server. */

import { PointRecord, RegionBox, RegionEntry, RunConfigBody, VisPayload } from "./types.js";

export type FetchFn = (input: string, init?: RequestInit) => Promise<Response>;

export class BackendError extends Error {
	constructor(public status: number, message: string) {
		super(message);
	}
}

export class RunConflictError extends BackendError {
	constructor(message: string) {
		super(409, message);
	}
}

export class ApiClient {
	constructor(
		private readonly base: string,
		private readonly projectId: string,
		private readonly fetchFn: FetchFn = (input, init) => fetch(input, init),
	) {}

	private url(path: string): string {
		return `${this.base}/api/projects/${this.projectId}${path}`;
	}

	private async request(path: string, init?: RequestInit): Promise<Response> {
		let resp: Response;
		try {
			resp = await this.fetchFn(this.url(path), init);
		} catch (err) {
			throw new BackendError(0, `backend unreachable: ${String(err)}`);
		}
		return resp;
	}

	async getPoint(pointId: string): Promise<PointRecord | null> {
		const resp = await this.request(`/points/${encodeURIComponent(pointId)}`);
		if (resp.status === 404) return null;
		if (!resp.ok) throw new BackendError(resp.status, `point lookup failed (${resp.status})`);
		return (await resp.json()) as PointRecord;
	}

	async regionQuery(runId: string, box: RegionBox): Promise<RegionEntry[]> {
		const resp = await this.request(`/runs/${runId}/region-query`, {
			method: "POST",
			headers: { "content-type": "application/json" },
			body: JSON.stringify(box),
		});
		if (!resp.ok) throw new BackendError(resp.status, `region query failed (${resp.status})`);
		const doc = (await resp.json()) as { points: RegionEntry[] };
		return doc.points;
	}

	async startRun(config: RunConfigBody): Promise<string> {
		const resp = await this.request(`/runs`, {
			method: "POST",
			headers: { "content-type": "application/json" },
			body: JSON.stringify(config),
		});
		if (resp.status === 409) throw new RunConflictError("run in progress");
		if (!resp.ok) throw new BackendError(resp.status, `run rejected (${resp.status})`);
		const doc = (await resp.json()) as { run_id: string };
		return doc.run_id;
	}

	/** Poll a run until its payload is served; the status document while
	 * running is {"status": "running"}. */
	async waitForRun(runId: string, intervalMs = 500, timeoutMs = 300000): Promise<VisPayload> {
		const deadline = Date.now() + timeoutMs;
		for (;;) {
			const resp = await this.request(`/runs/${runId}`);
			if (resp.status === 500) {
				const doc = await resp.json();
				throw new BackendError(500, `run failed: ${doc.error ?? ""}`);
			}
			if (!resp.ok) throw new BackendError(resp.status, `run fetch failed (${resp.status})`);
			const doc = await resp.json();
			if (!(typeof doc === "object" && doc !== null && doc.status === "running")) {
				return doc as VisPayload;
			}
			if (Date.now() > deadline) throw new BackendError(0, "run timed out");
			await new Promise((resolve) => setTimeout(resolve, intervalMs));
		}
	}
}
