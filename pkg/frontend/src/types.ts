// Wire types for the annotation service. Field names mirror the
// annotation-file columns (doc, layer, start, end, annotator, gt_mode,
// style, entries, source).

export type Layer = "POS" | "Construction";
export type World = "open" | "closed";
export type GtMode = "precise" | "graded" | "unknown";
export type Style = "precise" | "set" | "dist" | "ordinal";
export type UncertaintySource = "ambiguity" | "epistemic" | "unclear";

export interface TokenCell {
  index: number;
  form: string;
}

export interface DocumentSummary {
  doc: string;
  date: string | null;
  sentences: number;
  tokens: number;
  revision: number;
}

export interface DocumentPayload {
  doc: string;
  date: string | null;
  revision: number;
  sentences: TokenCell[][];
}

export interface TagsetEntry {
  tag: string;
  description: string;
  version: number;
  date?: string;
}

export interface TagsetPayload {
  layer: Layer;
  world: World;
  entries: TagsetEntry[];
}

export interface ScaleLevel {
  rank: number;
  label: string;
  degree: number;
}

export interface ScalePayload {
  levels: ScaleLevel[];
}

export interface RecordEntry {
  tag: string;
  degree?: number;
  rank?: number;
}

export interface RecordPayload {
  doc: string;
  layer: Layer;
  start: number;
  end: number;
  annotator: string;
  gt_mode: GtMode;
  style: Style;
  entries: RecordEntry[];
  source?: UncertaintySource;
  record_id?: number;
  timestamp?: string;
}

export interface AnnotationsPayload {
  doc: string;
  revision: number;
  records: RecordPayload[];
}

export interface SuggestedTag {
  tag: string;
  degree: number;
}

export interface Suggestion {
  index: number;
  form: string;
  top: SuggestedTag[];
  entropy: number;
  outside_frame: boolean;
  case_preview: number | null;
}

export interface ReviewItem {
  doc: string;
  start: number;
  end: number;
  entropy: number;
  top2: SuggestedTag[];
}

export interface ConflictRow {
  doc: string;
  start: number;
  end: number;
  layer: Layer;
  conflict: number;
  cases: number[];
  annotators: string[];
}

export interface ConflictsPayload {
  rows: ConflictRow[];
  graded_by_date: { date: string; count: number }[];
}

export interface Diagnostic {
  code: string;
  message: string;
  doc: string;
  start: number;
  end: number;
}

export interface PostResult {
  record_id: number;
  revision: number;
}

/** What the view model needs from the service; the HTTP client and the
 * test mock both implement it. */
export interface ServerApi {
  listDocuments(): Promise<DocumentSummary[]>;
  getDocument(docId: string): Promise<DocumentPayload>;
  getTagsets(): Promise<Record<string, TagsetPayload>>;
  getScale(): Promise<ScalePayload>;
  getAnnotations(docId: string): Promise<AnnotationsPayload>;
  postAnnotation(record: RecordPayload, expectedRevision: number): Promise<PostResult>;
  deleteAnnotation(recordId: number): Promise<{ revision: number }>;
  registerTag(layer: Layer, tag: string, description: string): Promise<TagsetPayload>;
  suggest(docId: string, start: number, end: number): Promise<Suggestion[]>;
  review(k: number): Promise<ReviewItem[]>;
  conflicts(): Promise<ConflictsPayload>;
}
