import { describe, expect, it } from "vitest";
import schema from "../src/action-schema.json";
import { validateAction } from "../src/validate.js";

describe("action schema validation", () => {
  it("accepts every action kind", () => {
    const good = [
      { type: "do_nothing" },
      { type: "set_line_status", line: "L03", status: false },
      { type: "set_busbar", substation: "S06", assignments: { "gen:GEN_WND1": 2 } },
      { type: "curtail", caps: { GEN_SOL1: 0.5 } },
      { type: "set_storage", power_mw: { BAT1: -4.5 } },
      { type: "composite", caps: { GEN_WND1: 1 }, power_mw: { BAT2: 2 } },
    ];
    for (const doc of good) {
      expect(validateAction(doc, schema)).toEqual([]);
    }
  });

  it("rejects a cap ratio above one", () => {
    const errors = validateAction({ type: "curtail", caps: { GEN_SOL1: 1.2 } }, schema);
    expect(errors.length).toBeGreaterThan(0);
    expect(errors[0]).toMatch(/maximum/);
  });

  it("rejects a negative cap and non-numeric storage power", () => {
    expect(validateAction({ type: "curtail", caps: { g: -0.1 } }, schema)).not.toEqual([]);
    expect(
      validateAction({ type: "set_storage", power_mw: { BAT1: "lots" } }, schema)
    ).not.toEqual([]);
  });

  it("rejects missing fields and unknown action types", () => {
    expect(validateAction({ type: "set_line_status", line: "L01" }, schema)).not.toEqual([]);
    expect(validateAction({ type: "warp" }, schema)[0]).toMatch(/unknown action type/);
    expect(validateAction({}, schema)[0]).toMatch(/unknown action type/);
  });

  it("rejects busbar values outside {1, 2} and empty assignment sets", () => {
    expect(
      validateAction(
        { type: "set_busbar", substation: "S01", assignments: { "gen:G": 3 } },
        schema
      )[0]
    ).toMatch(/one of/);
    expect(
      validateAction({ type: "set_busbar", substation: "S01", assignments: {} }, schema)[0]
    ).toMatch(/at least 1/);
  });

  it("rejects stray fields", () => {
    expect(
      validateAction({ type: "do_nothing", extra: true }, schema)[0]
    ).toMatch(/unexpected field/);
  });
});
