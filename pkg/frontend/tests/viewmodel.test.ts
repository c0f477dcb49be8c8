import { describe, expect, it } from "vitest";
import schema from "../src/action-schema.json";
import {
  buildViewModel,
  checkDraft,
  displayedRho,
  draftToAction,
  rhoClass,
} from "../src/viewmodel.js";
import { fakeState } from "./helpers.js";

describe("rho classes", () => {
  it("buckets by the 0.9 / 1.0 thresholds", () => {
    expect(rhoClass(0.0, true)).toBe("ok");
    expect(rhoClass(0.8999, true)).toBe("ok");
    expect(rhoClass(0.9, true)).toBe("warn");
    expect(rhoClass(0.999, true)).toBe("warn");
    expect(rhoClass(1.0, true)).toBe("over");
    expect(rhoClass(1.4, true)).toBe("over");
    expect(rhoClass(0.5, false)).toBe("out");
  });
});

describe("view model", () => {
  it("classifies lines and passes rho strings through verbatim", () => {
    const vm = buildViewModel(fakeState());
    expect(vm.lines.map((l) => l.cls)).toEqual(["ok", "warn", "over", "out"]);
    expect(displayedRho(vm)).toEqual({
      L01: "0.42", L02: "0.95", L03: "1.05", L04: "0.0",
    });
    expect(vm.controlsEnabled).toBe(true);
  });

  it("disables controls on the terminal state", () => {
    const vm = buildViewModel(fakeState({ done: true }));
    expect(vm.controlsEnabled).toBe(false);
  });

  it("keeps the simulate preview when provided", () => {
    const preview = {
      observation: fakeState({ step: 4 }),
      reward: 0.5,
      done: false,
      info: {},
    };
    const vm = buildViewModel(fakeState(), preview);
    expect(vm.preview?.observation.step).toBe(4);
  });
});

describe("drafts", () => {
  it("assembles the wire documents", () => {
    expect(draftToAction({ kind: "do_nothing" })).toEqual({ type: "do_nothing" });
    expect(
      draftToAction({ kind: "set_line_status", line: "L02", lineStatus: false })
    ).toEqual({ type: "set_line_status", line: "L02", status: false });
    expect(
      draftToAction({ kind: "curtail_storage", caps: { GEN_WND1: 0.4 } })
    ).toEqual({ type: "curtail", caps: { GEN_WND1: 0.4 } });
    expect(
      draftToAction({ kind: "curtail_storage", powerMw: { BAT1: 3 } })
    ).toEqual({ type: "set_storage", power_mw: { BAT1: 3 } });
    expect(
      draftToAction({ kind: "curtail_storage", caps: { GEN_WND1: 0.4 }, powerMw: { BAT1: 3 } })
    ).toEqual({ type: "composite", caps: { GEN_WND1: 0.4 }, power_mw: { BAT1: 3 } });
  });

  it("blocks invalid drafts before anything is sent", () => {
    const problems = checkDraft(
      { kind: "curtail_storage", caps: { GEN_SOL1: 1.2 } }, schema);
    expect(problems.length).toBeGreaterThan(0);
    expect(checkDraft({ kind: "do_nothing" }, schema)).toEqual([]);
  });
});
