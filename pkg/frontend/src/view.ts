// Pure view-model logic: everything the DOM layer renders is derived here,
// so the behaviour is unit-testable without a browser.

import type { Advisory, ApiError, OutputRecord, SessionState } from "./api.js";

export interface UiSessionView {
  id: string;
  base: string;
  lines: string[];
  outputs: OutputRecord[];
  advisories: Advisory[];
  nextLine: number;
  busy: boolean;
  errorLine: number | null;
  errorMessage: string | null;
}

export function emptyView(): UiSessionView {
  return {
    id: "",
    base: "",
    lines: [],
    outputs: [],
    advisories: [],
    nextLine: 1,
    busy: false,
    errorLine: null,
    errorMessage: null,
  };
}

export function fromSessionState(state: SessionState): UiSessionView {
  return {
    id: state.id,
    base: state.base,
    lines: state.lines.slice(),
    outputs: state.outputs.slice(),
    advisories: state.advisories.slice(),
    nextLine: state.next_line,
    busy: false,
    errorLine: null,
    errorMessage: null,
  };
}

// One output record renders as exactly the CLI's line, so the pane is
// byte-identical to `rv run` output for the same replay.
export function formatOutputLine(record: OutputRecord): string {
  return `[L${record.line}] ${record.text}`;
}

export function outputPaneText(outputs: OutputRecord[]): string {
  if (outputs.length === 0) return "";
  return outputs.map(formatOutputLine).join("\n") + "\n";
}

export function advisoryLine(a: Advisory): string {
  return `WARN ${a.code}: ${a.message} (line ${a.line})`;
}

export function advisoryPaneText(advisories: Advisory[]): string {
  if (advisories.length === 0) return "";
  return advisories.map(advisoryLine).join("\n") + "\n";
}

export function canRun(view: UiSessionView): boolean {
  return view.id !== "" && !view.busy && view.lines.length > 0;
}

export function canContinue(view: UiSessionView): boolean {
  return canRun(view) && view.nextLine <= view.lines.length;
}

export function runButtonLabel(view: UiSessionView): string {
  return view.nextLine > 1 && view.nextLine <= view.lines.length ? "Continue" : "Run";
}

// Marker arrow in the gutter: the next line the interpreter would execute.
export function isNextLine(view: UiSessionView, lineNo: number): boolean {
  return view.nextLine === lineNo;
}

export function applyError(view: UiSessionView, err: unknown): UiSessionView {
  const apiErr = err as ApiError;
  const line = typeof apiErr?.line === "number" ? apiErr.line : null;
  const message =
    apiErr instanceof Error ? apiErr.message : "server unreachable; is `rv serve` running?";
  return { ...view, busy: false, errorLine: line, errorMessage: message };
}

export function clearError(view: UiSessionView): UiSessionView {
  return { ...view, errorLine: null, errorMessage: null };
}

// through-line input parsing: blank means "to the end"
export function parseThrough(raw: string, lineCount: number): number | null | "invalid" {
  const trimmed = raw.trim();
  if (trimmed === "") return null;
  const n = Number(trimmed);
  if (!Number.isInteger(n) || n < 1 || n > lineCount) return "invalid";
  return n;
}
