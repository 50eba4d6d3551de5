/**
 * Typed client for the wordaff HTTP service. Every call resolves with the
 * parsed JSON body or rejects with an ApiError carrying the server's
 * {code, message, field} body verbatim.
 */

export interface ErrorBody {
  code: string;
  message: string;
  field: string | null;
}

export class ApiError extends Error {
  constructor(public status: number, public body: ErrorBody) {
    super(body.message);
  }
}

export interface ClusterInfo {
  id: number;
  word_ids: number[];
  color: string;
}

export interface ClustersPayload {
  clusters: ClusterInfo[];
}

export interface ScatterPoint {
  word_id: number;
  x: number;
  y: number;
  cluster_id: number;
}

export interface ProjectionPayload {
  points: ScatterPoint[];
}

export interface ClusterSummary {
  n_clusters: number;
  n_words: number;
  clusters: ClusterInfo[];
}

export interface RunResult {
  clusters: ClusterSummary;
  report: Record<string, unknown>;
}

export interface RunAccepted {
  status: "running";
  poll: string;
}

export interface RunStatus {
  state: "new" | "running" | "ready" | "failed";
  clusters?: ClusterSummary;
  error?: string;
}

export interface ConstraintStats {
  stats: Record<string, number>;
}

export type Selection =
  | { kind: "must_group"; word_ids: number[] }
  | { kind: "cannot_group"; group_a: number[]; group_b: number[] };

export interface EditSpecPayload {
  kind: string;
  [param: string]: unknown;
}

export interface EditLogEntry {
  cluster_id: number;
  spec: EditSpecPayload;
  affected_word_ids: number[];
  skipped_word_ids: number[];
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(base + path, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  if (resp.status === 202) {
    return (await resp.json()) as T;
  }
  if (!resp.ok) {
    let body: ErrorBody;
    try {
      body = (await resp.json()) as ErrorBody;
    } catch {
      body = { code: "HTTP_" + resp.status, message: resp.statusText, field: null };
    }
    throw new ApiError(resp.status, body);
  }
  return (await resp.json()) as T;
}

export class WordaffClient {
  constructor(public base: string) {}

  uploadDocument(doc: unknown): Promise<{ doc_id: string }> {
    return request(this.base, "/documents", { method: "POST", body: JSON.stringify(doc) });
  }

  run(docId: string, overrides: Record<string, unknown> = {}): Promise<RunResult | RunAccepted> {
    return request(this.base, `/documents/${docId}/run`, {
      method: "POST",
      body: JSON.stringify(overrides),
    });
  }

  runStatus(docId: string): Promise<RunStatus> {
    return request(this.base, `/documents/${docId}/run/status`);
  }

  /** Poll run status until it leaves the running state. */
  async pollRun(docId: string, intervalMs = 300, timeoutMs = 120_000): Promise<RunStatus> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const status = await this.runStatus(docId);
      if (status.state !== "running") return status;
      if (Date.now() > deadline) throw new Error("run polling timed out");
      await new Promise((r) => setTimeout(r, intervalMs));
    }
  }

  clusters(docId: string): Promise<ClustersPayload> {
    return request(this.base, `/documents/${docId}/clusters`);
  }

  projection(docId: string): Promise<ProjectionPayload> {
    return request(this.base, `/documents/${docId}/projection`);
  }

  postConstraints(docId: string, selections: Selection[]): Promise<ConstraintStats> {
    return request(this.base, `/documents/${docId}/constraints`, {
      method: "POST",
      body: JSON.stringify(selections),
    });
  }

  refine(docId: string, epochs = 10): Promise<{ clusters: ClusterSummary }> {
    return request(this.base, `/documents/${docId}/refine`, {
      method: "POST",
      body: JSON.stringify({ epochs }),
    });
  }

  postEdit(docId: string, clusterId: number, spec: EditSpecPayload): Promise<{ entry: EditLogEntry }> {
    return request(this.base, `/documents/${docId}/edits`, {
      method: "POST",
      body: JSON.stringify({ cluster_id: clusterId, spec }),
    });
  }

  async renderSvg(docId: string): Promise<string> {
    const resp = await fetch(`${this.base}/documents/${docId}/render.svg`);
    if (!resp.ok) {
      throw new ApiError(resp.status, {
        code: "RENDER_FAILED",
        message: resp.statusText,
        field: null,
      });
    }
    return resp.text();
  }
}
