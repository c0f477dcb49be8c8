// DOM wiring for the dispatcher console.  All state transitions go through
// the service; the page re-renders only after a confirmed response.

import { ApiClient, ApiError } from "./client.js";
import {
  buildViewModel,
  checkDraft,
  Draft,
  draftToAction,
  ViewModel,
} from "./viewmodel.js";
import {
  renderGeneratorTable,
  renderLineTable,
  renderNetworkSvg,
  renderPreview,
  renderScoreHeader,
  renderStorageTable,
} from "./render.js";
import type { EpisodeState, GridInfo, StepResponse } from "./types.js";

const qs = new URLSearchParams(window.location.search);
const apiBase = qs.get("api") ?? "http://127.0.0.1:8321";
const client = new ApiClient(apiBase);

let grid: GridInfo;
let schema: Record<string, unknown>;
let episodeId: string | null = null;
let vm: ViewModel | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setBanner(text: string, isError = false) {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = text;
  banner.className = isError ? "error" : "info";
}

function currentDraft(): Draft {
  const kind = (el<HTMLSelectElement>("action-kind")).value as Draft["kind"];
  if (kind === "set_line_status") {
    return {
      kind,
      line: el<HTMLSelectElement>("line-select").value,
      lineStatus: el<HTMLSelectElement>("line-status").value === "on",
    };
  }
  if (kind === "set_busbar") {
    const assignments: Record<string, number> = {};
    const raw = el<HTMLTextAreaElement>("busbar-assignments").value.trim();
    if (raw) {
      for (const piece of raw.split(/[\n,]+/)) {
        const [key, bb] = piece.split("=").map((s) => s.trim());
        if (key) assignments[key] = Number(bb);
      }
    }
    return { kind, substation: el<HTMLInputElement>("busbar-substation").value.trim(), assignments };
  }
  if (kind === "curtail_storage") {
    const caps: Record<string, number> = {};
    const powerMw: Record<string, number> = {};
    for (const gen of vm?.generators ?? []) {
      if (!gen.renewable) continue;
      const input = document.getElementById(`cap-${gen.id}`) as HTMLInputElement | null;
      if (input && input.value !== "") caps[gen.id] = Number(input.value);
    }
    for (const sto of vm?.storages ?? []) {
      const input = document.getElementById(`power-${sto.id}`) as HTMLInputElement | null;
      if (input && input.value !== "") powerMw[sto.id] = Number(input.value);
    }
    return { kind, caps, powerMw };
  }
  return { kind: "do_nothing" };
}

function renderActionInputs() {
  if (!vm) return;
  const lineSelect = el<HTMLSelectElement>("line-select");
  lineSelect.innerHTML = vm.lines
    .map((l) => `<option value="${l.id}">${l.id} (${l.status ? "on" : "off"})</option>`)
    .join("");
  const sliders = el<HTMLDivElement>("curtail-inputs");
  sliders.innerHTML = vm.generators
    .filter((g) => g.renewable)
    .map(
      (g) =>
        `<label>${g.id} cap <input id="cap-${g.id}" type="number" min="0" max="1" ` +
        `step="0.05" placeholder="${g.curtail_cap ?? 1}"></label>`
    )
    .join("") +
    vm.storages
      .map(
        (s) =>
          `<label>${s.id} MW <input id="power-${s.id}" type="number" ` +
          `min="${-s.p_max_mw}" max="${s.p_max_mw}" step="0.5" placeholder="0"></label>`
      )
      .join("");
}

function repaint() {
  if (!vm) return;
  el("score-header").innerHTML = renderScoreHeader(vm);
  el("network").innerHTML = renderNetworkSvg(grid, vm);
  el("line-table").innerHTML = renderLineTable(vm);
  el("generator-table").innerHTML = renderGeneratorTable(vm);
  el("storage-table").innerHTML = renderStorageTable(vm);
  el("preview").innerHTML = renderPreview(vm);
  for (const id of ["btn-simulate", "btn-step", "btn-suggest"]) {
    (el<HTMLButtonElement>(id)).disabled = !vm.controlsEnabled;
  }
}

function adopt(state: EpisodeState, preview: StepResponse | null = null) {
  vm = buildViewModel(state, preview);
  renderActionInputs();
  repaint();
}

async function sendDraft(mode: "simulate" | "step") {
  if (!episodeId || !vm) return;
  const draft = currentDraft();
  const problems = checkDraft(draft, schema);
  if (problems.length) {
    setBanner(`not sent – ${problems.join("; ")}`, true);
    return;
  }
  const action = draftToAction(draft);
  try {
    if (mode === "simulate") {
      const result = await client.simulate(episodeId, action);
      adopt(await client.state(episodeId), result);
      setBanner(`simulated ${action.type}: predicted reward ${result.reward.toFixed(3)}`);
    } else {
      const result = await client.step(episodeId, action);
      adopt(result.observation, null);
      const info = result.info as { illegal_action?: boolean; illegal_reason?: string };
      setBanner(
        info.illegal_action
          ? `step committed, but the action was illegal (${info.illegal_reason}); applied do-nothing`
          : `step ${result.observation.step} committed (${action.type})`
      );
    }
  } catch (err) {
    // surface service errors (409/422 detail) and malformed payloads alike
    setBanner(err instanceof Error ? err.message : String(err), true);
  }
}

async function start() {
  try {
    grid = await client.grid();
    schema = await client.actionSchema();
    const scenario = el<HTMLInputElement>("scenario-name").value || "default";
    const created = await client.createEpisode(scenario);
    episodeId = created.episode_id;
    adopt(created.observation);
    setBanner(`episode ${episodeId} started on '${scenario}'`);
  } catch (err) {
    setBanner(err instanceof Error ? err.message : String(err), true);
  }
}

function wire() {
  el("btn-start").addEventListener("click", () => void start());
  el("btn-simulate").addEventListener("click", () => void sendDraft("simulate"));
  el("btn-step").addEventListener("click", () => void sendDraft("step"));
  el("btn-suggest").addEventListener("click", async () => {
    if (!episodeId) return;
    try {
      const agent = el<HTMLSelectElement>("suggest-agent").value;
      const suggestion = await client.suggest(episodeId, agent);
      setBanner(`${agent} suggests: ${JSON.stringify(suggestion.action)}`);
      const kindSelect = el<HTMLSelectElement>("action-kind");
      const doc = suggestion.action as Record<string, unknown>;
      if (doc.type === "set_line_status") {
        kindSelect.value = "set_line_status";
        el<HTMLSelectElement>("line-select").value = String(doc.line);
        el<HTMLSelectElement>("line-status").value = doc.status ? "on" : "off";
      } else if (doc.type === "composite" || doc.type === "curtail" || doc.type === "set_storage") {
        kindSelect.value = "curtail_storage";
        const caps = (doc.caps ?? {}) as Record<string, number>;
        for (const [gid, value] of Object.entries(caps)) {
          const input = document.getElementById(`cap-${gid}`) as HTMLInputElement | null;
          if (input) input.value = String(value);
        }
        const powers = (doc.power_mw ?? {}) as Record<string, number>;
        for (const [sid, value] of Object.entries(powers)) {
          const input = document.getElementById(`power-${sid}`) as HTMLInputElement | null;
          if (input) input.value = String(value);
        }
      } else {
        kindSelect.value = "do_nothing";
      }
      kindSelect.dispatchEvent(new Event("change"));
    } catch (err) {
      if (err instanceof ApiError) setBanner(err.message, true);
    }
  });
  el("action-kind").addEventListener("change", () => {
    const kind = el<HTMLSelectElement>("action-kind").value;
    for (const [panel, match] of [
      ["panel-line", "set_line_status"],
      ["panel-busbar", "set_busbar"],
      ["panel-curtail", "curtail_storage"],
    ] as const) {
      el(panel).style.display = kind === match ? "block" : "none";
    }
  });
}

wire();
