/**
 * Single-page app shell: wires the API client, the view-state reducers, and
 * the document/scatter panels together. All grouping math lives server-side;
 * this file only routes payloads and pointer events.
 */

import { ApiError, WordaffClient } from "./api.js";
import type { EditSpecPayload, RunAccepted } from "./api.js";
import { wordBoxesFromSvg } from "./dom.js";
import { lassoSelect, type Point, type WordBox } from "./geometry.js";
import { scatterSvg } from "./scatter.js";
import * as st from "./state.js";

const REFINE_EPOCHS = 10;

export class App {
  state = st.initialState();
  private words: WordBox[] = [];
  private lassoPoints: Point[] = [];

  constructor(
    private client: WordaffClient,
    private root: Document,
  ) {}

  private el<T extends HTMLElement>(id: string): T {
    const node = this.root.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
  }

  private setState(next: st.ViewState) {
    this.state = next;
    this.renderShell();
  }

  async init() {
    this.el<HTMLInputElement>("file-input").addEventListener("change", (ev) => {
      const file = (ev.target as HTMLInputElement).files?.[0];
      if (file) void this.uploadAndRun(file);
    });
    for (const mode of ["MUST", "CANNOT_A", "CANNOT_B", "EDIT"] as const) {
      this.el(`mode-${mode.toLowerCase()}`).addEventListener("click", () => {
        this.setState(st.setMode(this.state, mode));
      });
    }
    this.el("submit-btn").addEventListener("click", () => void this.submitConstraints());
    this.el("clear-btn").addEventListener("click", () => {
      this.lassoPoints = [];
      this.setState(st.clearPending(this.state));
    });
    this.el("edit-apply").addEventListener("click", () => void this.applyEdit());
    this.attachLasso();
    this.renderShell();
  }

  async uploadAndRun(file: File) {
    this.setState(st.setBusy(this.state, true));
    try {
      const doc = JSON.parse(await file.text());
      const { doc_id } = await this.client.uploadDocument(doc);
      const run = await this.client.run(doc_id);
      if ((run as RunAccepted).status === "running") {
        await this.client.pollRun(doc_id);
      }
      await this.loadDocument(doc_id);
    } catch (err) {
      this.handleError(err);
    } finally {
      this.setState(st.setBusy(this.state, false));
    }
  }

  /** Fetch the rendered document plus overlays and rebuild local state. */
  async loadDocument(docId: string) {
    const svg = await this.client.renderSvg(docId);
    let next = st.withDocument(this.state, docId, svg);
    const clusters = await this.client.clusters(docId);
    next = st.withClusters(next, clusters.clusters);
    const projection = await this.client.projection(docId);
    next = st.withScatter(next, projection.points);
    this.words = wordBoxesFromSvg(svg);
    this.setState(st.runSettled(next));
  }

  /** POST the pending selections, then refine and refresh from the server. */
  async submitConstraints() {
    if (!st.submitEnabled(this.state) || !this.state.docId) return;
    const docId = this.state.docId;
    this.setState(st.setBusy(this.state, true));
    try {
      await this.client.postConstraints(docId, st.pendingSelections(this.state));
      await this.client.refine(docId, REFINE_EPOCHS);
      this.setState(st.clearPending(this.state));
      await this.loadDocument(docId);
    } catch (err) {
      this.handleError(err);
    } finally {
      this.setState(st.setBusy(this.state, false));
    }
  }

  async applyEdit() {
    if (!this.state.docId || this.state.busy || this.state.runInFlight) return;
    const clusterId = Number(this.el<HTMLInputElement>("edit-cluster").value);
    let spec: EditSpecPayload;
    try {
      spec = JSON.parse(this.el<HTMLTextAreaElement>("edit-spec").value);
    } catch {
      this.setState({ ...this.state, toast: "edit spec must be JSON" });
      return;
    }
    this.setState(st.setBusy(this.state, true));
    try {
      await this.client.postEdit(this.state.docId, clusterId, spec);
      const svg = await this.client.renderSvg(this.state.docId);
      this.setState(st.withSvg(this.state, svg));
    } catch (err) {
      this.handleError(err);
    } finally {
      this.setState(st.setBusy(this.state, false));
    }
  }

  private handleError(err: unknown) {
    if (err instanceof ApiError) {
      let next = st.applyError(this.state, err.status, err.body);
      this.setState(next);
      if (next.runInFlight && next.docId) {
        void this.client.pollRun(next.docId).then(() => {
          this.setState(st.runSettled(this.state));
        });
      }
    } else {
      this.setState({ ...this.state, toast: String(err) });
    }
  }

  private attachLasso() {
    const pane = this.el("document-pane");
    let drawing = false;
    pane.addEventListener("pointerdown", (ev) => {
      if (this.state.mode === "EDIT") return;
      drawing = true;
      this.lassoPoints = [this.paneCoords(pane, ev)];
    });
    pane.addEventListener("pointermove", (ev) => {
      if (drawing) this.lassoPoints.push(this.paneCoords(pane, ev));
    });
    pane.addEventListener("pointerup", () => {
      if (!drawing) return;
      drawing = false;
      const selected = lassoSelect(this.words, this.lassoPoints);
      this.lassoPoints = [];
      this.setState(st.addLasso(this.state, selected));
    });
  }

  private paneCoords(pane: HTMLElement, ev: PointerEvent): Point {
    const rect = pane.getBoundingClientRect();
    return { x: ev.clientX - rect.left, y: ev.clientY - rect.top };
  }

  private renderShell() {
    const s = this.state;
    this.el("document-pane").innerHTML = s.svg;
    this.el("scatter-pane").innerHTML = scatterSvg(s.scatter, s.clusters);
    const badge = this.el("pending-badge");
    badge.textContent = `${st.pendingConstraintCount(s)} pairwise constraints`;
    const submit = this.el<HTMLButtonElement>("submit-btn");
    submit.disabled = !st.submitEnabled(s);
    const toast = this.el("toast");
    toast.textContent = s.toast ?? "";
    toast.style.display = s.toast ? "block" : "none";
    for (const mode of ["MUST", "CANNOT_A", "CANNOT_B", "EDIT"] as const) {
      this.el(`mode-${mode.toLowerCase()}`).classList.toggle("active", s.mode === mode);
    }
    this.el("cluster-list").innerHTML = s.clusters
      .map(
        (c) =>
          `<li><span class="swatch" style="background:${c.color}"></span>` +
          `cluster ${c.id} (${c.word_ids.length} words)</li>`,
      )
      .join("");
  }
}

export function bootstrap(base = "") {
  const app = new App(new WordaffClient(base), document);
  void app.init();
  return app;
}
