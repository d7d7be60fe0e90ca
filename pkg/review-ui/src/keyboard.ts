/** Key-to-action mapping, kept pure so the bindings are testable. */

export type KeyAction =
  | { kind: "select"; category: string }
  | { kind: "submit" }
  | { kind: "next" }
  | { kind: "prev" }
  | { kind: "focus-note" }
  | { kind: "blur-note" }
  | { kind: "retry" };

/** Map one keypress to an action, or null to let the browser have it.
 *
 * While the note field is focused only Escape (leave the note) and
 * modifier+Enter (submit) act; plain keys must keep typing text.
 */
export function actionFor(key: string, inNote: boolean, withModifier = false): KeyAction | null {
  if (inNote) {
    if (key === "Enter" && withModifier) return { kind: "submit" };
    if (key === "Escape") return { kind: "blur-note" };
    return null;
  }
  if (key.length === 1) {
    const upper = key.toUpperCase();
    if (upper >= "A" && upper <= "F") return { kind: "select", category: upper };
  }
  if (key === "Enter") return { kind: "submit" };
  if (key === "ArrowRight" || key === "j") return { kind: "next" };
  if (key === "ArrowLeft" || key === "k") return { kind: "prev" };
  if (key === "n" || key === "N") return { kind: "focus-note" };
  if (key === "r" || key === "R") return { kind: "retry" };
  return null;
}
