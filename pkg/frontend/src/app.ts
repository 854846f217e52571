/** Explorer wiring: scene, detail panel, region triage, re-runs.
 *
 * The UI is a pure view over (payload, interaction state): every derived
 * value on screen is recomputable from the payload plus the recorded
 * clicks, and no action mutates payload data.
 */

import { ApiClient, BackendError, RunConflictError } from "./api.js";
import { focusOn, newSceneModel, renderScene, SceneModel, select } from "./scene.js";
import { cellIndex, PayloadSchemaError, RegionBox, VisPayload } from "./types.js";

export class Explorer {
	model: SceneModel | null = null;
	runId: string | null = null;

	private readonly sceneHost: HTMLElement;
	private readonly banner: HTMLElement;
	private readonly detail: HTMLElement;
	private readonly triage: HTMLElement;
	private readonly status: HTMLElement;
	private readonly provenance: HTMLElement;

	constructor(
		private readonly root: HTMLElement,
		private readonly api: ApiClient,
	) {
		root.innerHTML = `
			<div class="banner" hidden></div>
			<div class="layout">
				<div class="scene-host"></div>
				<aside class="side">
					<div class="status" hidden></div>
					<section class="detail"><h3>Point</h3><div class="detail-body">click a point</div></section>
					<section class="triage"><h3>Region triage</h3><div class="triage-body">drag a box or query a region</div></section>
					<form class="rerun">
						<h3>Re-run</h3>
						<label>lambda <input name="lambda" type="number" min="0" max="1" step="0.1" value="0.8"></label>
						<label>segments <input name="segments" type="number" min="1" step="1" value="5"></label>
						<button type="submit">run</button>
						<span class="rerun-note" hidden></span>
					</form>
					<section class="provenance-box" hidden><h3>Provenance</h3><pre class="provenance"></pre></section>
				</aside>
			</div>`;
		this.sceneHost = root.querySelector(".scene-host")!;
		this.banner = root.querySelector(".banner")!;
		this.detail = root.querySelector(".detail-body")!;
		this.triage = root.querySelector(".triage-body")!;
		this.status = root.querySelector(".status")!;
		this.provenance = root.querySelector(".provenance")!;
		this.wireRerunForm();
	}

	showBanner(message: string): void {
		this.banner.textContent = message;
		this.banner.hidden = false;
	}

	clearBanner(): void {
		this.banner.hidden = true;
		this.banner.textContent = "";
	}

	loadPayload(doc: unknown, runId: string | null = null): void {
		try {
			this.model = newSceneModel(doc);
		} catch (err) {
			if (err instanceof PayloadSchemaError) {
				this.showBanner(`payload rejected: ${err.message}`);
				return;
			}
			throw err;
		}
		this.runId = runId;
		this.clearBanner();
		this.showProvenance();
		this.redraw();
	}

	redraw(): void {
		if (!this.model) return;
		this.sceneHost.replaceChildren(renderScene(this.model));
		for (const dot of this.sceneHost.querySelectorAll("circle.point")) {
			dot.addEventListener("click", () => {
				void this.onPointClick((dot as SVGElement).getAttribute("data-id")!);
			});
		}
	}

	async onPointClick(pointId: string): Promise<void> {
		if (!this.model) return;
		const payload = this.model.payload;
		const point = payload.points.find((p) => p.id === pointId);
		if (!point) return;
		let recordHtml: string;
		try {
			const record = await this.api.getPoint(pointId);
			if (record === null) {
				recordHtml = `<em>record unavailable</em>`;
			} else {
				const text = record.text ?? "(no text)";
				recordHtml = `<blockquote class="record-text">${escapeHtml(text)}</blockquote>`;
			}
		} catch (err) {
			if (err instanceof BackendError) {
				this.showBanner(err.message);
				recordHtml = `<em>record unavailable</em>`;
			} else {
				throw err;
			}
		}
		const certainty = payload.grid.certainty[cellIndex(payload.grid, point.x, point.y)];
		const name = (label: number | undefined) =>
			label === undefined ? "?" : payload.class_names[label] ?? String(label);
		this.detail.innerHTML = `
			<div class="record-id">${escapeHtml(pointId)}</div>
			${recordHtml}
			<dl>
				<dt>true label</dt><dd class="true-label">${escapeHtml(name(point.true_label))}</dd>
				<dt>predicted</dt><dd class="predicted-label">${escapeHtml(name(point.predicted))}</dd>
				<dt>cell certainty</dt><dd class="cell-certainty">${certainty.toFixed(3)}</dd>
			</dl>`;
		this.model = select(this.model, pointId);
		this.redraw();
	}

	async regionTriage(box: RegionBox): Promise<void> {
		if (!this.model || !this.runId) return;
		let entries;
		try {
			entries = await this.api.regionQuery(this.runId, box);
		} catch (err) {
			if (err instanceof BackendError) {
				this.showBanner(err.message);
				return;
			}
			throw err;
		}
		this.model = { ...this.model, activeRegion: box };
		if (entries.length === 0) {
			this.triage.innerHTML = `<em class="no-points">no points in region</em>`;
			this.redraw();
			return;
		}
		const list = document.createElement("ol");
		list.className = "triage-list";
		for (const entry of entries) {
			const row = document.createElement("li");
			row.setAttribute("data-id", entry.id);
			row.innerHTML =
				`<span class="triage-id">${escapeHtml(entry.id)}</span>` +
				`<span class="triage-certainty">${entry.cell_certainty.toFixed(3)}</span>` +
				(entry.mismatch ? `<span class="triage-mismatch">ring</span>` : "");
			row.addEventListener("click", () => {
				if (!this.model) return;
				this.model = focusOn(this.model, entry.x, entry.y, 4);
				void this.onPointClick(entry.id);
			});
			list.appendChild(row);
		}
		this.triage.replaceChildren(list);
		this.redraw();
	}

	private wireRerunForm(): void {
		const form = this.root.querySelector("form.rerun") as HTMLFormElement;
		form.addEventListener("submit", (event) => {
			event.preventDefault();
			const lambda = Number((form.elements.namedItem("lambda") as HTMLInputElement).value);
			const segments = Number((form.elements.namedItem("segments") as HTMLInputElement).value);
			void this.requestRerun(lambda, segments);
		});
	}

	async requestRerun(lambda: number, segments: number): Promise<void> {
		const note = this.root.querySelector(".rerun-note") as HTMLElement;
		if (!(lambda >= 0 && lambda <= 1)) {
			note.textContent = "lambda must be in [0, 1]";
			note.hidden = false;
			return;
		}
		if (!(Number.isInteger(segments) && segments >= 1)) {
			note.textContent = "segments must be a positive integer";
			note.hidden = false;
			return;
		}
		note.hidden = true;
		const button = this.root.querySelector("form.rerun button") as HTMLButtonElement;
		button.disabled = true;
		this.status.textContent = "running...";
		this.status.hidden = false;
		try {
			const runId = await this.api.startRun({ metric: { lambda, n_segments: segments } });
			const payload = await this.api.waitForRun(runId);
			this.loadPayload(payload as VisPayload, runId);
			this.triage.innerHTML = "";
		} catch (err) {
			if (err instanceof RunConflictError) {
				note.textContent = "run in progress";
				note.hidden = false;
			} else if (err instanceof BackendError) {
				this.showBanner(err.message);
			} else {
				throw err;
			}
		} finally {
			button.disabled = false;
			this.status.hidden = true;
		}
	}

	private showProvenance(): void {
		if (!this.model) return;
		const box = this.root.querySelector(".provenance-box") as HTMLElement;
		this.provenance.textContent = JSON.stringify(this.model.payload.provenance, null, 1);
		box.hidden = false;
	}
}

function escapeHtml(text: string): string {
	return text
		.replaceAll("&", "&amp;")
		.replaceAll("<", "&lt;")
		.replaceAll(">", "&gt;")
		.replaceAll('"', "&quot;");
}
