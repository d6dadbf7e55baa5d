// Typed client for the rvl session service. Every number shown in the UI
// arrives as server-produced text through these shapes; the client never
// reformats numeric values.

export interface OutputRecord {
  line: number;
  text: string;
}

export interface Advisory {
  code: string;
  message: string;
  line: number;
  subject: string;
}

export interface BranchRecord {
  base: string;
  number: number;
  description: string;
  parent: [string, number] | null;
  created_at: string;
  content_hash: string;
  file: string;
}

export interface CreatedSession {
  id: string;
  base: string;
  lines: string[];
}

export interface RunResult {
  outputs: OutputRecord[];
  advisories: Advisory[];
  next_line: number;
}

export interface SessionState {
  id: string;
  base: string;
  lines: string[];
  next_line: number;
  outputs: OutputRecord[];
  advisories: Advisory[];
}

export interface ErrorShape {
  code: string;
  message: string;
  line?: number;
}

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly line: number | null;

  constructor(status: number, err: ErrorShape) {
    super(err.message);
    this.status = status;
    this.code = err.code;
    this.line = err.line ?? null;
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(base + path, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const body = await resp.json().catch(() => null);
  if (!resp.ok) {
    const err: ErrorShape =
      body && typeof body === "object" && "error" in body
        ? (body as { error: ErrorShape }).error
        : { code: `http_${resp.status}`, message: resp.statusText };
    throw new ApiError(resp.status, err);
  }
  return body as T;
}

export class Client {
  constructor(private readonly base: string = "") {}

  createFromPath(scriptPath: string): Promise<CreatedSession> {
    return request(this.base, "/sessions", {
      method: "POST",
      body: JSON.stringify({ script_path: scriptPath }),
    });
  }

  createFromText(scriptText: string, base?: string): Promise<CreatedSession> {
    return request(this.base, "/sessions", {
      method: "POST",
      body: JSON.stringify({ script_text: scriptText, base }),
    });
  }

  getSession(id: string): Promise<SessionState> {
    return request(this.base, `/sessions/${id}`);
  }

  run(
    id: string,
    opts: { from?: number; through?: number; audit?: boolean } = {},
  ): Promise<RunResult> {
    return request(this.base, `/sessions/${id}/run`, {
      method: "POST",
      body: JSON.stringify(opts),
    });
  }

  editLine(id: string, lineNo: number, text: string): Promise<{ lines: string[]; next_line: number }> {
    return request(this.base, `/sessions/${id}/lines/${lineNo}`, {
      method: "PUT",
      body: JSON.stringify({ text }),
    });
  }

  reset(id: string): Promise<{ lines: string[]; next_line: number }> {
    return request(this.base, `/sessions/${id}/reset`, { method: "POST" });
  }

  saveBranch(id: string, description: string): Promise<BranchRecord> {
    return request(this.base, `/sessions/${id}/branches`, {
      method: "POST",
      body: JSON.stringify({ description }),
    });
  }

  listBranches(base: string): Promise<{ branches: BranchRecord[] }> {
    return request(this.base, `/branches?base=${encodeURIComponent(base)}`);
  }
}
