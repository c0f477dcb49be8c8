import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";
import { describe, expect, it } from "vitest";

const here = dirname(fileURLToPath(import.meta.url));

describe("shared action contract", () => {
  it("frontend schema copy is byte-identical to the service schema", () => {
    const ours = readFileSync(join(here, "..", "src", "action-schema.json"), "utf8");
    const theirs = readFileSync(
      join(here, "..", "..", "src", "gridmdp", "schemas", "action.schema.json"),
      "utf8"
    );
    expect(ours).toBe(theirs);
  });
});
