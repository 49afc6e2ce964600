import { describe, expect, it } from "vitest";

import { EntryEditor } from "../src/editor.js";
import type { ScalePayload, TagsetPayload } from "../src/types.js";

const POS: TagsetPayload = {
  layer: "POS",
  world: "closed",
  entries: [
    { tag: "VAFIN", description: "finite auxiliary verb", version: 1 },
    { tag: "VKFIN", description: "finite copular verb", version: 2 },
    { tag: "NA", description: "noun", version: 3 },
  ],
};

const CONSTRUCTIONS: TagsetPayload = {
  layer: "Construction",
  world: "open",
  entries: [{ tag: "prep-phrase", description: "", version: 1 }],
};

const SCALE: ScalePayload = {
  levels: [
    { rank: 1, label: "definitely excluded", degree: 0 },
    { rank: 2, label: "may apply, but unlikely", degree: 1 / 3 },
    { rank: 3, label: "not unplausible", degree: 2 / 3 },
    { rank: 4, label: "completely plausible", degree: 1 },
  ],
};

describe("EntryEditor", () => {
  it("defaults every tag to level 1 (definitely excluded)", () => {
    const editor = new EntryEditor();
    expect(editor.levelOf("VKFIN")).toBe(1);
    expect(editor.isEmpty()).toBe(true);
  });

  it("keeps exactly the elevated entries, in elevation order", () => {
    const editor = new EntryEditor();
    editor.setLevel("VKFIN", 3);
    editor.setLevel("VAFIN", 2);
    expect(editor.toEntries()).toEqual([
      { tag: "VKFIN", rank: 3 },
      { tag: "VAFIN", rank: 2 },
    ]);
  });

  it("dropping back to level 1 removes the entry entirely", () => {
    const editor = new EntryEditor();
    editor.setLevel("VKFIN", 4);
    editor.setLevel("VKFIN", 1);
    expect(editor.toEntries()).toEqual([]);
    expect(editor.isEmpty()).toBe(true);
  });

  it("flags an all-excluded submission under a closed world", () => {
    const editor = new EntryEditor();
    const issues = editor.validate(POS, SCALE);
    expect(issues.map((i) => i.code)).toContain("EmptySetClosedWorld");
  });

  it("allows an all-excluded submission under an open world", () => {
    const editor = new EntryEditor();
    expect(editor.validate(CONSTRUCTIONS, SCALE)).toEqual([]);
  });

  it("requires the ground-truth bit once two tags are in play", () => {
    const editor = new EntryEditor();
    editor.setLevel("VKFIN", 3);
    editor.setLevel("VAFIN", 2);
    let codes = editor.validate(POS, SCALE).map((i) => i.code);
    expect(codes).toContain("GtModeRequired");
    editor.gtMode = "precise";
    codes = editor.validate(POS, SCALE).map((i) => i.code);
    expect(codes).not.toContain("GtModeRequired");
  });

  it("a single elevated tag does not force the ground-truth bit", () => {
    const editor = new EntryEditor();
    editor.setLevel("VKFIN", 4);
    expect(editor.validate(POS, SCALE)).toEqual([]);
  });

  it("rejects tags outside a closed tag set, with field highlighting", () => {
    const editor = new EntryEditor();
    editor.setLevel("XYZ", 3);
    const issues = editor.validate(POS, SCALE);
    const issue = issues.find((i) => i.code === "UnknownTagClosedWorld");
    expect(issue?.field).toBe("tag:XYZ");
  });

  it("clear resets levels, ground truth and source", () => {
    const editor = new EntryEditor();
    editor.setLevel("VKFIN", 3);
    editor.gtMode = "graded";
    editor.source = "ambiguity";
    editor.clear();
    expect(editor.isEmpty()).toBe(true);
    expect(editor.gtMode).toBeNull();
    expect(editor.source).toBeNull();
  });
});
