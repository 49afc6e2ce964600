import type {
  AnnotationsPayload,
  ConflictsPayload,
  DocumentPayload,
  DocumentSummary,
  Layer,
  PostResult,
  RecordPayload,
  ReviewItem,
  ScalePayload,
  ServerApi,
  Suggestion,
  TagsetPayload,
} from "./types.js";

/** Error carrying the HTTP status and the server's JSON body, so callers
 * can react to RevisionConflict (409) and ValidationFailed (422). */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: any,
  ) {
    super(`HTTP ${status}: ${body?.error ?? "request failed"}`);
  }
}

async function asJson(response: Response): Promise<any> {
  const body = await response.json().catch(() => null);
  if (!response.ok) throw new ApiError(response.status, body);
  return body;
}

export class ApiClient implements ServerApi {
  constructor(private readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async listDocuments(): Promise<DocumentSummary[]> {
    return asJson(await fetch(this.url("/api/documents")));
  }

  async getDocument(docId: string): Promise<DocumentPayload> {
    return asJson(await fetch(this.url(`/api/documents/${encodeURIComponent(docId)}`)));
  }

  async getTagsets(): Promise<Record<string, TagsetPayload>> {
    return asJson(await fetch(this.url("/api/tagsets")));
  }

  async getScale(): Promise<ScalePayload> {
    return asJson(await fetch(this.url("/api/scale")));
  }

  async getAnnotations(docId: string): Promise<AnnotationsPayload> {
    return asJson(
      await fetch(this.url(`/api/annotations?doc=${encodeURIComponent(docId)}`)),
    );
  }

  async postAnnotation(
    record: RecordPayload,
    expectedRevision: number,
  ): Promise<PostResult> {
    return asJson(
      await fetch(this.url("/api/annotations"), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ record, expected_revision: expectedRevision }),
      }),
    );
  }

  async deleteAnnotation(recordId: number): Promise<{ revision: number }> {
    return asJson(
      await fetch(this.url(`/api/annotations/${recordId}`), { method: "DELETE" }),
    );
  }

  async registerTag(
    layer: Layer,
    tag: string,
    description: string,
  ): Promise<TagsetPayload> {
    return asJson(
      await fetch(this.url(`/api/tagsets/${encodeURIComponent(layer)}/tags`), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ tag, description }),
      }),
    );
  }

  async suggest(docId: string, start: number, end: number): Promise<Suggestion[]> {
    const body = await asJson(
      await fetch(
        this.url(
          `/api/suggest?doc=${encodeURIComponent(docId)}&start=${start}&end=${end}`,
        ),
      ),
    );
    return body.suggestions;
  }

  async review(k: number): Promise<ReviewItem[]> {
    const body = await asJson(await fetch(this.url(`/api/review?k=${k}`)));
    return body.items;
  }

  async conflicts(): Promise<ConflictsPayload> {
    return asJson(await fetch(this.url("/api/conflicts")));
  }
}
