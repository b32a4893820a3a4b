import { describe, expect, it } from "vitest";

import { keyAction } from "../src/keyboard.js";
import { STAGE1_FLAGS } from "../src/types.js";

describe("keyAction", () => {
  it("maps 1-4 to the four flags in order on stage 1", () => {
    const keys = ["1", "2", "3", "4"];
    const flags = keys.map((key) => {
      const action = keyAction(1, key);
      expect(action).not.toBeNull();
      expect(action!.kind).toBe("flag");
      return action!.kind === "flag" ? action!.flag : "";
    });
    expect(flags).toEqual([...STAGE1_FLAGS]);
  });

  it("ignores digits on stage 2", () => {
    for (const key of ["1", "2", "3", "4"]) {
      expect(keyAction(2, key)).toBeNull();
    }
  });

  it("ignores keys outside the map", () => {
    expect(keyAction(1, "5")).toBeNull();
    expect(keyAction(1, "0")).toBeNull();
    expect(keyAction(1, "a")).toBeNull();
    expect(keyAction(1, "F1")).toBeNull();
  });

  it("Enter submits on both stages", () => {
    expect(keyAction(1, "Enter")).toEqual({ kind: "submit" });
    expect(keyAction(2, "Enter")).toEqual({ kind: "submit" });
  });
});
