import type { EpisodeState } from "../src/types.js";

export function fakeState(overrides: Partial<EpisodeState> = {}): EpisodeState {
  const base: EpisodeState = {
    episode_id: "ep1",
    scenario: "default",
    step: 3,
    n_steps: 2015,
    done: false,
    score_so_far: 1.25,
    cost_so_far: 420.5,
    max_rho: 0.82,
    lines: [
      {
        id: "L01", from: "S01", to: "S02", status: true, rho: 0.42,
        rho_display: "0.42", p_flow_mw: 56.7, cooldown: 0, thermal_limit_mw: 135,
      },
      {
        id: "L02", from: "S01", to: "S05", status: true, rho: 0.95,
        rho_display: "0.95", p_flow_mw: 80.75, cooldown: 0, thermal_limit_mw: 85,
      },
      {
        id: "L03", from: "S02", to: "S03", status: true, rho: 1.05,
        rho_display: "1.05", p_flow_mw: 102.9, cooldown: 0, thermal_limit_mw: 98,
      },
      {
        id: "L04", from: "S02", to: "S04", status: false, rho: 0.0,
        rho_display: "0.0", p_flow_mw: 0.0, cooldown: 2, thermal_limit_mw: 88,
      },
    ],
    generators: [
      { id: "GEN_WND1", type: "wind", renewable: true, p_mw: 61.0, p_max_mw: 170,
        potential_mw: 64.2, curtail_cap: 1.0 },
      { id: "GEN_NUC1", type: "nuclear", renewable: false, p_mw: 150.0, p_max_mw: 160,
        potential_mw: null, curtail_cap: null },
    ],
    loads: [{ id: "LD02", p_mw: 21.4 }],
    storages: [
      { id: "BAT1", energy_mwh: 10.0, e_max_mwh: 20.0, power_mw: 0.0, p_max_mw: 10.0 },
    ],
    margins: { up_mw: 80.0, down_mw: 60.0 },
    last_info: null,
  };
  return { ...base, ...overrides };
}
