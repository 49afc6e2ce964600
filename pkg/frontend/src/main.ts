import { ApiClient } from "./api.js";
import { AnnotatorViewModel } from "./viewmodel.js";
import type { Layer } from "./types.js";

const api = new ApiClient("");
const annotator =
  new URLSearchParams(location.search).get("annotator") ?? "annotator";
const vm = new AnnotatorViewModel(api, annotator);

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

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

let anchor: number | null = null;

function renderDocumentPicker(docs: { doc: string }[]): void {
  const picker = byId("doc-picker") as unknown as HTMLSelectElement;
  picker.innerHTML = "";
  for (const d of docs) {
    const option = el("option", undefined, d.doc) as HTMLOptionElement;
    option.value = d.doc;
    picker.appendChild(option);
  }
  picker.onchange = async () => {
    await vm.load(picker.value);
    renderAll();
  };
}

function renderTokens(): void {
  const grid = byId("token-grid");
  grid.innerHTML = "";
  if (!vm.document) return;
  for (const sentence of vm.document.sentences) {
    const row = el("div", "sentence");
    for (const token of sentence) {
      const cell = el("button", "token", token.form) as HTMLButtonElement;
      cell.dataset.index = String(token.index);
      const sel = vm.selection;
      if (sel && sel.start <= token.index && token.index <= sel.end) {
        cell.classList.add("selected");
      }
      const n = vm.records.filter(
        (r) => r.start <= token.index && token.index <= r.end,
      ).length;
      if (n > 0) {
        cell.appendChild(el("span", "badge", `${n}`));
      }
      cell.onclick = (event) => {
        const index = token.index;
        if (event.shiftKey && anchor !== null && vm.layer === "Construction") {
          vm.select(Math.min(anchor, index), Math.max(anchor, index));
        } else {
          anchor = index;
          vm.select(index, index);
        }
        void vm.refreshSuggestions().then(renderAll).catch(() => renderAll());
        renderAll();
      };
      row.appendChild(cell);
    }
    grid.appendChild(row);
  }
}

function renderEditor(): void {
  const panel = byId("editor");
  panel.innerHTML = "";
  const tagset = vm.tagset;
  if (!tagset || !vm.selection) {
    panel.appendChild(el("p", "hint", "select a token or span to annotate"));
    return;
  }
  const issueFields = new Set(vm.editorIssues.map((i) => i.field));

  for (const entry of tagset.entries) {
    const row = el("div", "tag-row");
    if (issueFields.has(`tag:${entry.tag}`)) row.classList.add("invalid");
    const label = el("span", "tag-name", entry.tag);
    label.title = entry.description;
    row.appendChild(label);
    for (const level of vm.scale.levels) {
      const button = el("button", "level", level.label) as HTMLButtonElement;
      if (vm.editor.levelOf(entry.tag) === level.rank) {
        button.classList.add("active");
      }
      button.onclick = () => {
        vm.editor.setLevel(entry.tag, level.rank);
        renderAll();
      };
      row.appendChild(button);
    }
    panel.appendChild(row);
  }

  const controls = el("div", "controls");
  const gtRow = el("div", issueFields.has("gt_mode") ? "invalid" : "");
  gtRow.appendChild(el("span", "label", "ground truth:"));
  for (const mode of ["precise", "graded"] as const) {
    const button = el("button", "gt", mode) as HTMLButtonElement;
    if (vm.editor.gtMode === mode) button.classList.add("active");
    button.onclick = () => {
      vm.editor.gtMode = vm.editor.gtMode === mode ? null : mode;
      renderAll();
    };
    gtRow.appendChild(button);
  }
  controls.appendChild(gtRow);

  const sourceRow = el("div");
  sourceRow.appendChild(el("span", "label", "uncertainty source:"));
  const sourceSelect = el("select") as HTMLSelectElement;
  for (const value of ["", "ambiguity", "epistemic", "unclear"]) {
    const option = el("option", undefined, value || "(unspecified)") as HTMLOptionElement;
    option.value = value;
    sourceSelect.appendChild(option);
  }
  sourceSelect.value = vm.editor.source ?? "";
  sourceSelect.onchange = () => {
    vm.editor.source = (sourceSelect.value || null) as any;
  };
  sourceRow.appendChild(sourceSelect);
  controls.appendChild(sourceRow);

  const preview = vm.casePreview();
  if (preview !== null) {
    controls.appendChild(el("span", "case-preview", `case ${preview}`));
  }

  if (tagset.world === "open") {
    const addButton = el("button", "add-tag", "add new tag…") as HTMLButtonElement;
    addButton.onclick = async () => {
      const tag = prompt("new tag name");
      if (!tag) return;
      const description = prompt("description") ?? "";
      await vm.registerTag(tag, description);
      renderAll();
    };
    controls.appendChild(addButton);
  }

  const submit = el("button", "submit", "submit annotation") as HTMLButtonElement;
  submit.onclick = async () => {
    await vm.submit();
    renderAll();
  };
  controls.appendChild(submit);
  panel.appendChild(controls);

  const problems = el("ul", "diagnostics");
  for (const issue of vm.editorIssues) {
    problems.appendChild(el("li", "issue", `${issue.code}: ${issue.message}`));
  }
  for (const diag of vm.serverDiagnostics) {
    problems.appendChild(el("li", "issue server", `${diag.code}: ${diag.message}`));
  }
  panel.appendChild(problems);
}

function renderSuggestions(): void {
  const panel = byId("suggestions");
  panel.innerHTML = "";
  for (const s of vm.suggestions) {
    const row = el("div", "suggestion");
    row.appendChild(
      el("span", "form", `${s.index} ${s.form} (H=${s.entropy.toFixed(3)})`),
    );
    for (const candidate of s.top) {
      const button = el(
        "button",
        "candidate",
        `${candidate.tag} ${candidate.degree.toFixed(2)}`,
      ) as HTMLButtonElement;
      button.onclick = () => {
        vm.acceptSuggestion(candidate.tag);
        renderAll();
      };
      row.appendChild(button);
    }
    if (s.outside_frame) {
      row.appendChild(el("span", "flag", "possibly outside the tag set"));
    }
    panel.appendChild(row);
  }
}

function renderReview(): void {
  const panel = byId("review");
  panel.innerHTML = "";
  panel.appendChild(
    el("p", "hint", `${vm.reviewRemaining} tokens left in the review queue`),
  );
  const next = el("button", "review-next", "review next") as HTMLButtonElement;
  next.onclick = async () => {
    await vm.reviewNext();
    renderAll();
  };
  panel.appendChild(next);
}

function renderBanner(): void {
  const banner = byId("banner");
  banner.textContent = vm.banner ?? "";
  banner.style.display = vm.banner ? "block" : "none";
}

function renderAll(): void {
  renderTokens();
  renderEditor();
  renderSuggestions();
  renderReview();
  renderBanner();
}

async function boot(): Promise<void> {
  await vm.start();
  const layerPicker = byId("layer-picker") as unknown as HTMLSelectElement;
  layerPicker.onchange = () => {
    vm.layer = layerPicker.value as Layer;
    vm.selection = null;
    renderAll();
  };
  const refreshQueue = byId("refresh-queue") as unknown as HTMLButtonElement;
  refreshQueue.onclick = async () => {
    try {
      await vm.refreshReviewQueue(25);
    } catch {
      vm.banner = "review queue unavailable (no model loaded)";
    }
    renderAll();
  };
  const docs = await api.listDocuments();
  renderDocumentPicker(docs);
  if (docs.length > 0) {
    await vm.load(docs[0].doc);
  }
  renderAll();
}

void boot();
