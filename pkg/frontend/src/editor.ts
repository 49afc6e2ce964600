import type {
  GtMode,
  RecordEntry,
  ScalePayload,
  TagsetPayload,
  UncertaintySource,
} from "./types.js";

export interface EditorIssue {
  code: string;
  message: string;
  /** which control to highlight: "entries", "gt_mode", or "tag:<name>" */
  field: string;
}

/**
 * Per-target entry editor: every tag of the set sits at level 1
 * ("definitely excluded") until the annotator explicitly elevates it.
 * The editor never invents degrees; the payload is exactly the elevated
 * (tag, rank) pairs the annotator selected.
 */
export class EntryEditor {
  private levels = new Map<string, number>();
  gtMode: GtMode | null = null;
  source: UncertaintySource | null = null;

  levelOf(tag: string): number {
    return this.levels.get(tag) ?? 1;
  }

  setLevel(tag: string, rank: number): void {
    if (rank <= 1) {
      this.levels.delete(tag); // back to the default: definitely excluded
    } else {
      this.levels.set(tag, rank);
    }
  }

  /** Elevated entries in the order the annotator raised them. */
  elevated(): { tag: string; rank: number }[] {
    return [...this.levels.entries()].map(([tag, rank]) => ({ tag, rank }));
  }

  isEmpty(): boolean {
    return this.levels.size === 0;
  }

  clear(): void {
    this.levels.clear();
    this.gtMode = null;
    this.source = null;
  }

  /** Client-side mirror of the server's record validation for ordinal
   * submissions; the server stays authoritative. */
  validate(tagset: TagsetPayload, scale: ScalePayload): EditorIssue[] {
    const issues: EditorIssue[] = [];
    const known = new Set(tagset.entries.map((e) => e.tag));
    const ranks = new Set(scale.levels.map((l) => l.rank));
    for (const { tag, rank } of this.elevated()) {
      if (!known.has(tag)) {
        const code =
          tagset.world === "closed"
            ? "UnknownTagClosedWorld"
            : "UnknownTagOpenWorld";
        issues.push({
          code,
          message: `tag ${tag} is not in the ${tagset.layer} tag set`,
          field: `tag:${tag}`,
        });
      }
      if (!ranks.has(rank)) {
        issues.push({
          code: "UnknownRank",
          message: `rank ${rank} is not on the scale`,
          field: `tag:${tag}`,
        });
      }
    }
    if (this.isEmpty() && tagset.world === "closed") {
      issues.push({
        code: "EmptySetClosedWorld",
        message: "every tag is excluded, but the tag set is closed",
        field: "entries",
      });
    }
    if (this.elevated().length >= 2 && this.gtMode === null) {
      issues.push({
        code: "GtModeRequired",
        message:
          "several tags are in play: state whether the ground truth is precise or graded",
        field: "gt_mode",
      });
    }
    return issues;
  }

  toEntries(): RecordEntry[] {
    return this.elevated().map(({ tag, rank }) => ({ tag, rank }));
  }
}
