// DOM layer: thin imperative rendering over the pure view-model. The UI
// never computes statistics; the output pane shows server text verbatim.

import { ApiError, Client, type BranchRecord } from "./api.js";
import {
  advisoryPaneText,
  applyError,
  canContinue,
  canRun,
  clearError,
  emptyView,
  fromSessionState,
  outputPaneText,
  parseThrough,
  runButtonLabel,
  type UiSessionView,
} from "./view.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class App {
  private view: UiSessionView = emptyView();
  private branches: BranchRecord[] = [];
  private editing: number | null = null;

  private codePane!: HTMLOListElement;
  private outputPane!: HTMLPreElement;
  private advisoryPane!: HTMLPreElement;
  private branchList!: HTMLUListElement;
  private statusBar!: HTMLDivElement;
  private runBtn!: HTMLButtonElement;
  private resetBtn!: HTMLButtonElement;
  private throughInput!: HTMLInputElement;
  private auditToggle!: HTMLInputElement;
  private pathInput!: HTMLInputElement;
  private textArea!: HTMLTextAreaElement;
  private branchDesc!: HTMLInputElement;

  constructor(
    private readonly client: Client,
    private readonly rootEl: HTMLElement,
  ) {}

  mount(): void {
    this.rootEl.replaceChildren(this.buildLoader(), this.buildWorkbench());
    this.render();
    const match = /s=([0-9a-f]+)/.exec(location.hash);
    if (match) void this.hydrate(match[1]);
  }

  private buildLoader(): HTMLElement {
    const bar = el("div", "loader");
    this.pathInput = el("input");
    this.pathInput.placeholder = "script path under server root, e.g. pima.rvl";
    const openBtn = el("button", "", "Load file");
    openBtn.addEventListener("click", () => void this.loadFromPath());
    this.textArea = el("textarea");
    this.textArea.placeholder = "…or paste RVL script text";
    this.textArea.rows = 2;
    const pasteBtn = el("button", "", "Load text");
    pasteBtn.addEventListener("click", () => void this.loadFromText());
    bar.append(this.pathInput, openBtn, this.textArea, pasteBtn);
    return bar;
  }

  private buildWorkbench(): HTMLElement {
    const grid = el("div", "workbench");

    const codeCol = el("section", "pane code");
    codeCol.append(el("h2", "", "script"));
    this.codePane = el("ol", "code-lines");
    codeCol.append(this.codePane);

    const controls = el("div", "controls");
    this.runBtn = el("button", "run", "Run");
    this.runBtn.addEventListener("click", () => void this.run());
    this.resetBtn = el("button", "", "Reset");
    this.resetBtn.addEventListener("click", () => void this.reset());
    this.throughInput = el("input", "through");
    this.throughInput.placeholder = "through line";
    this.throughInput.size = 10;
    this.auditToggle = el("input");
    this.auditToggle.type = "checkbox";
    const auditLabel = el("label", "", " audit");
    auditLabel.prepend(this.auditToggle);
    controls.append(this.runBtn, this.throughInput, auditLabel, this.resetBtn);
    codeCol.append(controls);

    const outCol = el("section", "pane output");
    outCol.append(el("h2", "", "output"));
    this.outputPane = el("pre", "output-pane");
    outCol.append(this.outputPane);
    outCol.append(el("h2", "", "audit"));
    this.advisoryPane = el("pre", "advisory-pane");
    outCol.append(this.advisoryPane);

    const branchCol = el("section", "pane branches");
    branchCol.append(el("h2", "", "branches"));
    this.branchDesc = el("input");
    this.branchDesc.placeholder = "description";
    const saveBtn = el("button", "", "Save branch");
    saveBtn.addEventListener("click", () => void this.saveBranch());
    this.branchList = el("ul", "branch-list");
    branchCol.append(this.branchDesc, saveBtn, this.branchList);

    this.statusBar = el("div", "status");
    grid.append(codeCol, outCol, branchCol, this.statusBar);
    return grid;
  }

  // -- data flows

  private async loadFromPath(): Promise<void> {
    const path = this.pathInput.value.trim();
    if (!path) return;
    await this.guard(async () => {
      const created = await this.client.createFromPath(path);
      await this.hydrate(created.id);
    });
  }

  private async loadFromText(): Promise<void> {
    const text = this.textArea.value;
    if (!text.trim()) return;
    await this.guard(async () => {
      const created = await this.client.createFromText(text);
      await this.hydrate(created.id);
    });
  }

  private async hydrate(id: string): Promise<void> {
    await this.guard(async () => {
      const state = await this.client.getSession(id);
      this.view = fromSessionState(state);
      location.hash = `s=${id}`;
      await this.refreshBranches();
    });
  }

  private async run(): Promise<void> {
    const through = parseThrough(this.throughInput.value, this.view.lines.length);
    if (through === "invalid") {
      this.view = { ...this.view, errorMessage: "through-line must be a line number" };
      this.render();
      return;
    }
    await this.guard(async () => {
      await this.client.run(this.view.id, {
        through: through ?? undefined,
        audit: this.auditToggle.checked,
      });
      const state = await this.client.getSession(this.view.id);
      this.view = fromSessionState(state);
    });
  }

  private async reset(): Promise<void> {
    await this.guard(async () => {
      await this.client.reset(this.view.id);
      const state = await this.client.getSession(this.view.id);
      this.view = fromSessionState(state);
    });
  }

  private async submitEdit(lineNo: number, text: string): Promise<void> {
    await this.guard(async () => {
      await this.client.editLine(this.view.id, lineNo, text);
      const state = await this.client.getSession(this.view.id);
      this.view = fromSessionState(state);
      this.editing = null;
    });
  }

  private async saveBranch(): Promise<void> {
    const description = this.branchDesc.value.trim();
    if (!description) return;
    await this.guard(async () => {
      await this.client.saveBranch(this.view.id, description);
      this.branchDesc.value = "";
      await this.refreshBranches();
    });
  }

  private async refreshBranches(): Promise<void> {
    if (!this.view.base) return;
    const listed = await this.client.listBranches(this.view.base);
    this.branches = listed.branches;
  }

  // one in-flight request per session; buttons disable while busy
  private async guard(work: () => Promise<void>): Promise<void> {
    if (this.view.busy) return;
    this.view = { ...clearError(this.view), busy: true };
    this.render();
    try {
      await work();
      this.view = { ...this.view, busy: false };
    } catch (err) {
      if (err instanceof ApiError || err instanceof Error) {
        this.view = applyError(this.view, err);
      } else {
        this.view = applyError(this.view, new Error(String(err)));
      }
    }
    this.render();
  }

  // -- rendering

  private render(): void {
    this.renderCode();
    this.outputPane.textContent = outputPaneText(this.view.outputs);
    this.advisoryPane.textContent = advisoryPaneText(this.view.advisories);
    this.runBtn.textContent = runButtonLabel(this.view);
    this.runBtn.disabled = !canRun(this.view) || !canContinue(this.view);
    this.resetBtn.disabled = !canRun(this.view);
    this.statusBar.textContent = this.view.errorMessage ?? (this.view.busy ? "…" : "");
    this.renderBranches();
  }

  private renderCode(): void {
    this.codePane.replaceChildren();
    this.view.lines.forEach((text, idx) => {
      const lineNo = idx + 1;
      const li = el("li", "code-line");
      if (this.view.errorLine === lineNo) li.classList.add("error");
      if (this.view.nextLine === lineNo) li.classList.add("next");
      const gutter = el("span", "gutter", String(lineNo));
      li.append(gutter);
      if (this.editing === lineNo) {
        const input = el("input", "edit");
        input.value = text;
        input.addEventListener("keydown", (ev) => {
          if (ev.key === "Enter") void this.submitEdit(lineNo, input.value);
          if (ev.key === "Escape") {
            this.editing = null;
            this.render();
          }
        });
        li.append(input);
        queueMicrotask(() => input.focus());
      } else {
        const span = el("span", "text", text);
        span.addEventListener("click", () => {
          if (this.view.busy) return;
          this.editing = lineNo;
          this.render();
        });
        li.append(span);
      }
      this.codePane.append(li);
    });
    // one phantom line so a click can append at the end
    const li = el("li", "code-line phantom");
    const lineNo = this.view.lines.length + 1;
    li.append(el("span", "gutter", String(lineNo)));
    if (this.editing === lineNo) {
      const input = el("input", "edit");
      input.addEventListener("keydown", (ev) => {
        if (ev.key === "Enter") void this.submitEdit(lineNo, input.value);
        if (ev.key === "Escape") {
          this.editing = null;
          this.render();
        }
      });
      li.append(input);
      queueMicrotask(() => input.focus());
    } else {
      const span = el("span", "text add", "+ add line");
      span.addEventListener("click", () => {
        if (this.view.id === "" || this.view.busy) return;
        this.editing = lineNo;
        this.render();
      });
      li.append(span);
    }
    this.codePane.append(li);
  }

  private renderBranches(): void {
    this.branchList.replaceChildren();
    for (const rec of this.branches) {
      const parent = rec.parent ? ` (parent ${rec.parent[0]}.${rec.parent[1]})` : "";
      const item = el(
        "li",
        "branch",
        `${rec.base}.${rec.number}${parent}: ${rec.description}`,
      );
      this.branchList.append(item);
    }
  }
}
