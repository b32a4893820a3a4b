// Keyboard map. Stage 1: digits 1-4 pick the four flags in display order.
// Enter submits on either stage (main.ts still checks canSubmit).

import { STAGE1_FLAGS } from "./types.js";
import type { Stage, Stage1Flag } from "./types.js";

export type KeyAction = { kind: "flag"; flag: Stage1Flag } | { kind: "submit" } | null;

export function keyAction(stage: Stage, key: string): KeyAction {
  if (key === "Enter") return { kind: "submit" };
  if (stage === 1 && key.length === 1 && key >= "1" && key <= "4") {
    return { kind: "flag", flag: STAGE1_FLAGS[Number(key) - 1] };
  }
  return null;
}
