/** Editor workflow state machine.
 *
 * Phases follow the backend session protocol: a vessel must exist before
 * an ostium can be placed, an ostium before an aneurysm preview, a preview
 * before assembly. Reset returns to the vessel phase (the vessel itself is
 * kept); newVessel starts over. Illegal transitions throw, so UI code can
 * simply disable buttons with `can(...)`.
 */

export type Phase = "empty" | "vessel" | "ostium" | "preview" | "assembled";

export type Action =
  | "vesselLoaded"
  | "ostiumSet"
  | "previewReady"
  | "assembled"
  | "reset"
  | "newVessel";

const TRANSITIONS: Record<Phase, Partial<Record<Action, Phase>>> = {
  empty: { vesselLoaded: "vessel" },
  vessel: { ostiumSet: "ostium", newVessel: "empty" },
  ostium: {
    ostiumSet: "ostium", // moving the ostium or adjusting the ring
    previewReady: "preview",
    reset: "vessel",
    newVessel: "empty",
  },
  preview: {
    ostiumSet: "ostium",
    previewReady: "preview", // regenerate
    assembled: "assembled",
    reset: "vessel",
    newVessel: "empty",
  },
  assembled: {
    ostiumSet: "ostium",
    previewReady: "preview",
    reset: "vessel",
    newVessel: "empty",
  },
};

export class StateMachine {
  private _phase: Phase = "empty";
  private listeners: Array<(phase: Phase) => void> = [];

  get phase(): Phase {
    return this._phase;
  }

  can(action: Action): boolean {
    return TRANSITIONS[this._phase][action] !== undefined;
  }

  apply(action: Action): Phase {
    const next = TRANSITIONS[this._phase][action];
    if (next === undefined) {
      throw new Error(`illegal action ${action} in phase ${this._phase}`);
    }
    this._phase = next;
    for (const fn of this.listeners) fn(next);
    return next;
  }

  onChange(fn: (phase: Phase) => void): void {
    this.listeners.push(fn);
  }
}
