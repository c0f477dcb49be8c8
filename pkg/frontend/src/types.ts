// Shapes of the service payloads the console consumes.

export interface LineState {
  id: string;
  from: string;
  to: string;
  status: boolean;
  rho: number;
  rho_display: string;
  p_flow_mw: number;
  cooldown: number;
  thermal_limit_mw: number;
}

export interface GeneratorState {
  id: string;
  type: string;
  renewable: boolean;
  p_mw: number;
  p_max_mw: number;
  potential_mw: number | null;
  curtail_cap: number | null;
}

export interface LoadState {
  id: string;
  p_mw: number;
}

export interface StorageState {
  id: string;
  energy_mwh: number;
  e_max_mwh: number;
  power_mw: number;
  p_max_mw: number;
}

export interface EpisodeState {
  episode_id: string;
  scenario: string;
  step: number;
  n_steps: number;
  done: boolean;
  score_so_far: number;
  cost_so_far: number;
  max_rho: number;
  lines: LineState[];
  generators: GeneratorState[];
  loads: LoadState[];
  storages: StorageState[];
  margins: { up_mw: number; down_mw: number };
  last_info: Record<string, unknown> | null;
}

export interface StepResponse {
  observation: EpisodeState;
  reward: number;
  done: boolean;
  info: Record<string, unknown>;
}

export interface GridInfo {
  substations: string[];
  lines: { id: string; from: string; to: string; thermal_limit_mw: number }[];
  coords: { substations?: Record<string, [number, number]> };
}

// Action documents mirror the shared JSON schema one-to-one.
export type ActionDoc =
  | { type: "do_nothing" }
  | { type: "set_line_status"; line: string; status: boolean }
  | { type: "set_busbar"; substation: string; assignments: Record<string, number> }
  | { type: "curtail"; caps: Record<string, number> }
  | { type: "set_storage"; power_mw: Record<string, number> }
  | { type: "composite"; caps?: Record<string, number>; power_mw?: Record<string, number> };
