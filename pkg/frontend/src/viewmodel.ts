import { ApiError } from "./api.js";
import { EntryEditor, type EditorIssue } from "./editor.js";
import type {
  Diagnostic,
  DocumentPayload,
  GtMode,
  Layer,
  RecordPayload,
  ReviewItem,
  ScalePayload,
  ServerApi,
  Suggestion,
  TagsetPayload,
} from "./types.js";

export interface Selection {
  start: number;
  end: number;
}

export type SubmitOutcome = "saved" | "conflict" | "invalid";

/**
 * Headless state of the annotator page: the current document and
 * selection, the entry editor, suggestion and review panels, and the
 * optimistic revision counter. The DOM layer only renders this.
 */
export class AnnotatorViewModel {
  document: DocumentPayload | null = null;
  tagsets: Record<string, TagsetPayload> = {};
  scale: ScalePayload = { levels: [] };
  layer: Layer = "POS";
  selection: Selection | null = null;
  revision = 0;
  records: RecordPayload[] = [];
  readonly editor = new EntryEditor();

  suggestions: Suggestion[] = [];
  reviewQueue: ReviewItem[] = [];
  private reviewCursor = 0;
  /** targets visited through the review queue, in visiting order */
  readonly visited: { doc: string; start: number; end: number }[] = [];

  banner: string | null = null;
  serverDiagnostics: Diagnostic[] = [];
  editorIssues: EditorIssue[] = [];

  constructor(
    private readonly api: ServerApi,
    readonly annotator: string,
  ) {}

  async start(): Promise<void> {
    this.tagsets = await this.api.getTagsets();
    this.scale = await this.api.getScale();
  }

  async load(docId: string): Promise<void> {
    this.document = await this.api.getDocument(docId);
    const annotations = await this.api.getAnnotations(docId);
    this.revision = annotations.revision;
    this.records = annotations.records;
    this.selection = null;
    this.suggestions = [];
    this.editor.clear();
    this.banner = null;
    this.serverDiagnostics = [];
    this.editorIssues = [];
  }

  get tagset(): TagsetPayload | null {
    return this.tagsets[this.layer] ?? null;
  }

  select(start: number, end: number): void {
    this.selection = { start, end };
    this.editor.clear();
    this.serverDiagnostics = [];
    this.editorIssues = [];
    this.banner = null;
  }

  recordsAt(selection: Selection): RecordPayload[] {
    return this.records.filter(
      (r) =>
        r.layer === this.layer &&
        r.start === selection.start &&
        r.end === selection.end,
    );
  }

  /** Local preview of the ground-truth/annotation case the submission
   * would fall into (ordinal style; the server stays authoritative). */
  casePreview(): number | null {
    const tagset = this.tagset;
    if (!tagset) return null;
    const graded = this.editor.gtMode === "graded";
    if (tagset.world === "closed") return graded ? 5 : 3;
    return graded ? 10 : 8;
  }

  private selectionIssues(): EditorIssue[] {
    const issues: EditorIssue[] = [];
    const doc = this.document;
    const sel = this.selection;
    if (!doc || !sel) {
      return [{ code: "NoSelection", message: "select a token first", field: "selection" }];
    }
    if (this.layer === "POS" && sel.start !== sel.end) {
      issues.push({
        code: "PosSpanMultiToken",
        message: "POS annotations cover exactly one token",
        field: "selection",
      });
    }
    const sentenceOf = (index: number) =>
      doc.sentences.findIndex((s) => s.some((t) => t.index === index));
    const first = sentenceOf(sel.start);
    const last = sentenceOf(sel.end);
    if (first < 0 || last < 0) {
      issues.push({
        code: "TargetOutOfRange",
        message: "selection is outside the document",
        field: "selection",
      });
    } else if (first !== last) {
      issues.push({
        code: "SpanCrossesSentence",
        message: "a span must stay within one sentence",
        field: "selection",
      });
    }
    return issues;
  }

  /** The exact record the editor state describes; nothing is added or
   * rescaled on the way out. */
  buildRecord(): RecordPayload {
    if (!this.document || !this.selection) {
      throw new Error("nothing selected");
    }
    const record: RecordPayload = {
      doc: this.document.doc,
      layer: this.layer,
      start: this.selection.start,
      end: this.selection.end,
      annotator: this.annotator,
      gt_mode: (this.editor.gtMode ?? "unknown") as GtMode,
      style: "ordinal",
      entries: this.editor.toEntries(),
    };
    if (this.editor.source) record.source = this.editor.source;
    return record;
  }

  async submit(): Promise<SubmitOutcome> {
    const tagset = this.tagset;
    this.serverDiagnostics = [];
    this.editorIssues = this.selectionIssues();
    if (tagset) {
      this.editorIssues.push(...this.editor.validate(tagset, this.scale));
    }
    if (this.editorIssues.length > 0) return "invalid";

    const record = this.buildRecord();
    try {
      const result = await this.api.postAnnotation(record, this.revision);
      this.revision = result.revision;
      this.records = (await this.api.getAnnotations(record.doc)).records;
      this.editor.clear();
      this.banner = null;
      return "saved";
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        // stale revision: resync, keep the editor state for a retry
        this.revision = error.body?.current ?? this.revision;
        const fresh = await this.api.getAnnotations(record.doc);
        this.revision = fresh.revision;
        this.records = fresh.records;
        this.banner = "RevisionConflict: the document changed; review and submit again";
        return "conflict";
      }
      if (error instanceof ApiError && error.status === 422) {
        this.serverDiagnostics = error.body?.diagnostics ?? [];
        return "invalid";
      }
      throw error;
    }
  }

  async registerTag(tag: string, description: string): Promise<void> {
    const grown = await this.api.registerTag(this.layer, tag, description);
    this.tagsets = { ...this.tagsets, [this.layer]: grown };
  }

  async refreshSuggestions(): Promise<void> {
    if (!this.document || !this.selection) return;
    this.suggestions = await this.api.suggest(
      this.document.doc,
      this.selection.start,
      this.selection.end,
    );
  }

  /** Pre-populate the editor with a suggestion at the top level; the
   * annotator still has to submit. */
  acceptSuggestion(tag: string): void {
    const top = this.scale.levels[this.scale.levels.length - 1];
    this.editor.setLevel(tag, top ? top.rank : 4);
  }

  async refreshReviewQueue(k: number): Promise<void> {
    this.reviewQueue = await this.api.review(k);
    this.reviewCursor = 0;
    this.visited.length = 0;
  }

  get reviewRemaining(): number {
    return Math.max(this.reviewQueue.length - this.reviewCursor, 0);
  }

  async reviewNext(): Promise<"moved" | "empty"> {
    if (this.reviewCursor >= this.reviewQueue.length) {
      this.banner = "QueueEmpty: no tokens left to review";
      return "empty";
    }
    const item = this.reviewQueue[this.reviewCursor];
    this.reviewCursor += 1;
    if (!this.document || this.document.doc !== item.doc) {
      await this.load(item.doc);
    }
    this.select(item.start, item.end);
    await this.refreshSuggestions();
    this.visited.push({ doc: item.doc, start: item.start, end: item.end });
    return "moved";
  }
}
