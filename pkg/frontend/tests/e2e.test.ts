// End-to-end differential test against the real service: a 20-step session
// driven through the console's code path must match, field for field, a
// twin episode driven with raw HTTP calls, and every rho the console would
// display must equal the service JSON byte for byte.

import { spawn, ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ApiClient } from "../src/client.js";
import { buildViewModel, displayedRho } from "../src/viewmodel.js";
import { validateAction } from "../src/validate.js";
import type { ActionDoc, EpisodeState } from "../src/types.js";

const PORT = 8399;
const BASE = `http://127.0.0.1:${PORT}`;
let service: ChildProcess;

async function waitForService(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const r = await fetch(`${BASE}/grid`);
      if (r.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  service = spawn("python3", ["-m", "gridmdp.cli", "serve", "--port", String(PORT)], {
    stdio: "ignore",
  });
  await waitForService();
}, 60_000);

afterAll(() => {
  service?.kill();
});

const ACTIONS: ActionDoc[] = [
  { type: "do_nothing" },
  { type: "set_storage", power_mw: { BAT1: 4.0 } },
  { type: "curtail", caps: { GEN_WND1: 0.8 } },
  { type: "do_nothing" },
  { type: "composite", caps: { GEN_SOL1: 0.9 }, power_mw: { BAT2: 2.0 } },
  { type: "set_line_status", line: "L09", status: false },
  { type: "do_nothing" },
  { type: "set_storage", power_mw: { BAT1: -2.0, BAT2: -1.0 } },
  { type: "do_nothing" },
  { type: "curtail", caps: { GEN_WND1: 1.0, GEN_SOL1: 1.0 } },
  { type: "do_nothing" },
  { type: "do_nothing" },
  { type: "set_line_status", line: "L09", status: true },
  { type: "do_nothing" },
  { type: "set_storage", power_mw: { BAT1: 6.0 } },
  { type: "do_nothing" },
  { type: "set_busbar", substation: "S06", assignments: { "gen:GEN_WND1": 2, "line_to:L10": 2 } },
  { type: "do_nothing" },
  { type: "set_storage", power_mw: { BAT1: -3.0 } },
  { type: "do_nothing" },
];

function stripIdentity(state: EpisodeState): Omit<EpisodeState, "episode_id"> {
  const { episode_id, ...rest } = state;
  return rest;
}

describe("console vs raw service", () => {
  it("a 20-step UI-driven session matches a raw twin episode exactly", async () => {
    const schema = await (await fetch(`${BASE}/schemas/action`)).json();
    const client = new ApiClient(BASE);

    // UI path: client wrapper + client-side validation + view models
    const uiEpisode = await client.createEpisode("default");
    // raw path: plain fetch, no console code involved
    const rawCreate = await (
      await fetch(`${BASE}/episodes`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ scenario: "default" }),
      })
    ).json();
    const rawId = rawCreate.episode_id as string;

    expect(stripIdentity(uiEpisode.observation)).toEqual(
      stripIdentity(rawCreate.observation as EpisodeState)
    );

    for (const action of ACTIONS) {
      expect(validateAction(action, schema)).toEqual([]);

      const uiResult = await client.step(uiEpisode.episode_id, action);
      const vm = buildViewModel(uiResult.observation);

      const rawResponse = await fetch(`${BASE}/episodes/${rawId}/step`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(action),
      });
      expect(rawResponse.status).toBe(200);
      const raw = await rawResponse.json();

      // identical service states on both sides
      expect(stripIdentity(uiResult.observation)).toEqual(
        stripIdentity(raw.observation as EpisodeState)
      );
      expect(uiResult.reward).toBe(raw.reward);
      expect(uiResult.done).toBe(raw.done);

      // every rho string the console displays equals the service JSON value
      const shown = displayedRho(vm);
      for (const line of (raw.observation as EpisodeState).lines) {
        expect(shown[line.id]).toBe(line.rho_display);
        expect(line.rho_display).toBe(JSON.parse(JSON.stringify(line.rho_display)));
      }
      expect(vm.done).toBe(false);
    }

    // simulate through the console must not advance the committed timeline
    const before = await client.state(uiEpisode.episode_id);
    await client.simulate(uiEpisode.episode_id, { type: "do_nothing" });
    const after = await client.state(uiEpisode.episode_id);
    expect(after.step).toBe(before.step);

    await client.deleteEpisode(uiEpisode.episode_id);
  }, 120_000);

  it("server rejects what client-side validation rejects", async () => {
    const schema = await (await fetch(`${BASE}/schemas/action`)).json();
    const client = new ApiClient(BASE);
    const episode = await client.createEpisode("default");
    const bad = { type: "curtail", caps: { GEN_SOL1: 1.2 } } as unknown as ActionDoc;
    expect(validateAction(bad, schema)).not.toEqual([]);
    await expect(client.step(episode.episode_id, bad)).rejects.toMatchObject({ status: 422 });
    await client.deleteEpisode(episode.episode_id);
  }, 60_000);
});
