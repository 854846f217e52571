/** Browser bootstrap: read project/run from the query string, attach the
 * explorer, and load the run's payload. */

import { ApiClient } from "./api.js";
import { Explorer } from "./app.js";

async function boot(): Promise<void> {
	const params = new URLSearchParams(window.location.search);
	const projectId = params.get("project");
	const runId = params.get("run");
	const root = document.getElementById("app");
	if (!root) return;
	if (!projectId) {
		root.textContent = "missing ?project=<id> (and optionally &run=<id>)";
		return;
	}
	const api = new ApiClient("", projectId);
	const explorer = new Explorer(root, api);
	if (runId) {
		try {
			const payload = await api.waitForRun(runId);
			explorer.loadPayload(payload, runId);
		} catch (err) {
			explorer.showBanner(String(err));
		}
	}
}

void boot();
