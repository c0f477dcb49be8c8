// Pure presentation logic: no DOM, no physics.  Every displayed number comes
// verbatim from a service payload; this module only arranges and classifies.

import type { ActionDoc, EpisodeState, StepResponse } from "./types.js";
import { validateAction } from "./validate.js";

export type RhoClass = "ok" | "warn" | "over" | "out";

/** Loading color buckets: green below 0.9, orange below 1, red at or above 1. */
export function rhoClass(rho: number, inService: boolean): RhoClass {
  if (!inService) return "out";
  if (rho < 0.9) return "ok";
  if (rho < 1.0) return "warn";
  return "over";
}

export interface LineRow {
  id: string;
  from: string;
  to: string;
  status: boolean;
  rhoDisplay: string; // service string, passed through untouched
  rho: number;
  cls: RhoClass;
  flowMw: number;
  cooldown: number;
}

export interface ViewModel {
  episodeId: string;
  scenario: string;
  step: number;
  nSteps: number;
  done: boolean;
  scoreSoFar: number;
  costSoFar: number;
  maxRho: number;
  lines: LineRow[];
  generators: EpisodeState["generators"];
  loads: EpisodeState["loads"];
  storages: EpisodeState["storages"];
  margins: EpisodeState["margins"];
  lastInfo: Record<string, unknown> | null;
  controlsEnabled: boolean;
  preview: StepResponse | null; // most recent simulate result, if any
}

export function buildViewModel(state: EpisodeState, preview: StepResponse | null = null): ViewModel {
  return {
    episodeId: state.episode_id,
    scenario: state.scenario,
    step: state.step,
    nSteps: state.n_steps,
    done: state.done,
    scoreSoFar: state.score_so_far,
    costSoFar: state.cost_so_far,
    maxRho: state.max_rho,
    lines: state.lines.map((l) => ({
      id: l.id,
      from: l.from,
      to: l.to,
      status: l.status,
      rhoDisplay: l.rho_display,
      rho: l.rho,
      cls: rhoClass(l.rho, l.status),
      flowMw: l.p_flow_mw,
      cooldown: l.cooldown,
    })),
    generators: state.generators,
    loads: state.loads,
    storages: state.storages,
    margins: state.margins,
    lastInfo: state.last_info,
    controlsEnabled: !state.done,
    preview,
  };
}

// -- draft actions ----------------------------------------------------------

export interface Draft {
  kind: "do_nothing" | "set_line_status" | "set_busbar" | "curtail_storage";
  line?: string;
  lineStatus?: boolean;
  substation?: string;
  assignments?: Record<string, number>;
  caps?: Record<string, number>;
  powerMw?: Record<string, number>;
}

/** Assemble the wire document for a draft; shape only, no validation. */
export function draftToAction(draft: Draft): ActionDoc {
  switch (draft.kind) {
    case "do_nothing":
      return { type: "do_nothing" };
    case "set_line_status":
      return { type: "set_line_status", line: draft.line ?? "", status: draft.lineStatus ?? true };
    case "set_busbar":
      return {
        type: "set_busbar",
        substation: draft.substation ?? "",
        assignments: draft.assignments ?? {},
      };
    case "curtail_storage": {
      const caps = draft.caps ?? {};
      const powerMw = draft.powerMw ?? {};
      const hasCaps = Object.keys(caps).length > 0;
      const hasPower = Object.keys(powerMw).length > 0;
      if (hasCaps && !hasPower) return { type: "curtail", caps };
      if (!hasCaps && hasPower) return { type: "set_storage", power_mw: powerMw };
      const doc: ActionDoc = { type: "composite" };
      if (hasCaps) doc.caps = caps;
      if (hasPower) doc.power_mw = powerMw;
      return doc;
    }
  }
}

/** Validate a draft against the shared contract; [] means sendable. */
export function checkDraft(draft: Draft, schema: Record<string, unknown>): string[] {
  return validateAction(draftToAction(draft), schema);
}

/** All rho strings the console displays, keyed by line id (for audits). */
export function displayedRho(vm: ViewModel): Record<string, string> {
  const out: Record<string, string> = {};
  for (const line of vm.lines) out[line.id] = line.rhoDisplay;
  return out;
}
