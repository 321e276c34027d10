// Training window shell: rendered page on the left, training pane on the
// right. All state lives server-side; this file only wires DOM events to
// API calls and re-renders from GET /session/state, so a mid-session
// reload reconstructs the exact view.

import { LabelOutcome, SessionState, TrainingApi } from "./api.js";
import { DATE_LABELS, LABELS_BY_PAGE, labelColor } from "./labels.js";
import { applyOverlays, highlightedPaths, makeIgnorePick, toggleIgnore } from "./overlay.js";
import { ElementPicker } from "./picker.js";
import { sanitizeSnapshot } from "./sanitizer.js";
import { prefillClickScript, submitScript } from "./scriptEditor.js";

const api = new TrainingApi("");

let picker: ElementPicker | null = null;
let frameDoc: Document | null = null;
let renderedPage: string | null = null;
let isolation: string | null = null;
let ignorePick = makeIgnorePick("");
let lastOutcomes: Record<string, LabelOutcome> = {};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing #${id}`);
  return node as T;
}

async function renderSnapshot(pageType: string): Promise<void> {
  const view = await api.currentPage(pageType);
  if (view.html === null) return;
  const frame = el<HTMLIFrameElement>("page-frame");
  frame.srcdoc = sanitizeSnapshot(view.html);
  await new Promise<void>((resolve) => {
    frame.addEventListener("load", () => resolve(), { once: true });
  });
  frameDoc = frame.contentDocument;
  renderedPage = pageType;
  if (frameDoc !== null) {
    picker = new ElementPicker(frameDoc, updateSelectionList);
    picker.attach();
    frameDoc.addEventListener("click", (event) => {
      const target = event.target as Element | null;
      if (target !== null && ignorePick.label && frameDoc !== null) {
        toggleIgnore(ignorePick, frameDoc, target);
        el("ignore-count").textContent = String(ignorePick.paths.size);
      }
    }, true);
  }
}

function updateSelectionList(): void {
  if (picker === null) return;
  const host = el("selections");
  host.innerHTML = "";
  for (const [label, paths] of Object.entries(picker.assignments())) {
    for (const path of paths) {
      const row = document.createElement("li");
      row.textContent = `${label}: ${path} `;
      const remove = document.createElement("button");
      remove.textContent = "remove";
      remove.addEventListener("click", () => picker?.remove(label, path));
      row.appendChild(remove);
      host.appendChild(row);
    }
  }
}

function renderLabelButtons(pageType: string): void {
  const host = el("labels");
  host.innerHTML = "";
  for (const label of LABELS_BY_PAGE[pageType] ?? []) {
    const button = document.createElement("button");
    button.textContent = label;
    button.style.borderLeft = `6px solid ${labelColor(label)}`;
    button.addEventListener("click", () => {
      if (picker !== null) picker.activeLabel = label;
      el("active-label").textContent = label;
    });
    host.appendChild(button);
  }
}

async function refreshOverlays(state: SessionState): Promise<void> {
  if (frameDoc === null || renderedPage === null) return;
  const trained = state.locators[renderedPage] ?? {};
  const byLabel: Record<string, string[]> = {};
  for (const label of Object.keys(trained)) {
    byLabel[label] = (await api.resolveLabel(label, renderedPage)).paths;
  }
  const shown = applyOverlays(frameDoc, byLabel, isolation);
  el("overlay-status").textContent = shown === 0 && Object.keys(byLabel).length
    ? "no matches on this page"
    : `${shown} element(s) highlighted`;
  const toggle = el("isolate");
  toggle.innerHTML = "";
  for (const label of ["(all)", ...Object.keys(byLabel)]) {
    const button = document.createElement("button");
    button.textContent = label;
    button.addEventListener("click", async () => {
      isolation = label === "(all)" ? null : label;
      await refreshOverlays(await api.state());
    });
    toggle.appendChild(button);
  }
  void highlightedPaths; // exposed for tests and console debugging
}

async function poll(): Promise<void> {
  try {
    const state = await api.state();
    el("queue").innerHTML = state.queue
      .map((q) => `<li${q.page_type === state.current ? ' class="current"' : ""}>` +
                  `${q.page_type}: ${q.state}</li>`)
      .join("");
    const prompt = el("prompt");
    if (state.pending_prompt !== null) {
      prompt.hidden = false;
      el("prompt-message").textContent = state.pending_prompt.message;
    } else {
      prompt.hidden = true;
    }
    el("notes").textContent = state.notes.join("\n");
    if (state.current !== null && state.current !== renderedPage &&
        !state.busy) {
      const entry = state.queue.find((q) => q.page_type === state.current);
      if (entry !== undefined && entry.state === "pending") {
        await api.loadPage(state.current);
      }
      await renderSnapshot(state.current);
      renderLabelButtons(state.current);
      picker?.restore(state.assignments[state.current] ?? {});
      await refreshOverlays(state);
    }
  } finally {
    setTimeout(() => void poll(), 800);
  }
}

function wireControls(): void {
  el("train-structure").addEventListener("click", async () => {
    if (picker === null || renderedPage === null) return;
    const dateFormats: Record<string, string> = {};
    const fmt = el<HTMLInputElement>("date-format").value.trim();
    for (const label of DATE_LABELS) {
      if (fmt && picker.selectedPaths(label).length > 0) {
        dateFormats[label] = fmt;
      }
    }
    lastOutcomes = await api.submitLabels(renderedPage, picker.assignments(),
                                          dateFormats);
    el("outcomes").textContent = JSON.stringify(lastOutcomes, null, 2);
    await refreshOverlays(await api.state());
  });
  el("confirm").addEventListener("click", async () => {
    if (renderedPage !== null) await api.confirm(renderedPage);
  });
  el("reset").addEventListener("click", async () => {
    if (renderedPage !== null) await api.reset(renderedPage);
  });
  el("ignore-start").addEventListener("click", () => {
    const label = el<HTMLInputElement>("ignore-label").value.trim();
    ignorePick = makeIgnorePick(label);
    el("ignore-count").textContent = "0";
  });
  el("ignore-apply").addEventListener("click", async () => {
    if (renderedPage === null || ignorePick.paths.size === 0) return;
    await api.ignore(renderedPage, ignorePick.label,
                     Array.from(ignorePick.paths));
    ignorePick = makeIgnorePick("");
    await refreshOverlays(await api.state());
  });
  el("manual-submit").addEventListener("click", async () => {
    if (renderedPage === null) return;
    const label = el<HTMLInputElement>("manual-label").value.trim();
    const expr = el<HTMLInputElement>("manual-expr").value.trim();
    try {
      const outcome = await api.manualXpath(renderedPage, label, expr);
      el("outcomes").textContent = JSON.stringify(outcome, null, 2);
      await refreshOverlays(await api.state());
    } catch (err) {
      el("outcomes").textContent = String(err);
    }
  });
  el("script-prefill").addEventListener("click", () => {
    const area = el<HTMLTextAreaElement>("script-source");
    area.value = prefillClickScript(area.value);
  });
  el("script-run").addEventListener("click", async () => {
    if (renderedPage === null) return;
    const source = el<HTMLTextAreaElement>("script-source").value;
    const dryRun = el<HTMLInputElement>("script-dry-run").checked;
    const result = await submitScript(api, renderedPage, source, dryRun);
    el("script-error").textContent = result.ok ? "" : result.error ?? "";
    if (result.ok) await renderSnapshot(renderedPage);
  });
  el("prompt-send").addEventListener("click", async () => {
    await api.answerPrompt(el<HTMLInputElement>("prompt-answer").value);
  });
  el("finalize").addEventListener("click", async () => {
    const profile = await api.finalize();
    el("outcomes").textContent = JSON.stringify(profile, null, 2);
  });
}

export function start(): void {
  wireControls();
  void poll();
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  start();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", start);
}
