// Click-to-label element picker for the rendered snapshot frame.
// Clicks are intercepted (the frame never navigates), mapped to absolute
// paths, and tinted with the active label's color. The selection model is
// rebuilt from server state on demand, so reloading the UI loses nothing.

import { labelColor } from "./labels.js";
import { absolutePath, nodeAt } from "./paths.js";

const SELECTED_ATTR = "data-train-label";

export class ElementPicker {
  activeLabel: string | null = null;
  private selected = new Map<string, Set<string>>(); // label -> paths

  constructor(private doc: Document,
              private onChange: (() => void) | null = null) {}

  attach(): void {
    this.doc.addEventListener("click", (event) => {
      event.preventDefault();
      event.stopPropagation();
      const target = event.target as Element | null;
      if (target !== null) this.handleClick(target);
    }, true);
  }

  handleClick(target: Element): string | null {
    if (this.activeLabel === null) return null; // no active label: inert
    const path = absolutePath(target);
    this.add(this.activeLabel, path);
    return path;
  }

  add(label: string, path: string): void {
    let paths = this.selected.get(label);
    if (paths === undefined) {
      paths = new Set();
      this.selected.set(label, paths);
    }
    paths.add(path);
    this.tint(label, path);
    this.onChange?.();
  }

  remove(label: string, path: string): void {
    this.selected.get(label)?.delete(path);
    const el = nodeAt(this.doc, path);
    if (el !== null && el.getAttribute(SELECTED_ATTR) === label) {
      el.removeAttribute(SELECTED_ATTR);
      (el as HTMLElement).style.outline = "";
      (el as HTMLElement).style.backgroundColor = "";
    }
    this.onChange?.();
  }

  private tint(label: string, path: string): void {
    const el = nodeAt(this.doc, path);
    if (el === null) return;
    el.setAttribute(SELECTED_ATTR, label);
    const color = labelColor(label);
    (el as HTMLElement).style.outline = `2px solid ${color}`;
    (el as HTMLElement).style.backgroundColor = `${color}33`;
  }

  assignments(): Record<string, string[]> {
    const out: Record<string, string[]> = {};
    for (const [label, paths] of this.selected) {
      if (paths.size > 0) out[label] = Array.from(paths).sort();
    }
    return out;
  }

  restore(assignments: Record<string, string[]>): void {
    this.selected.clear();
    this.doc.querySelectorAll(`[${SELECTED_ATTR}]`).forEach((el) => {
      el.removeAttribute(SELECTED_ATTR);
      (el as HTMLElement).style.outline = "";
      (el as HTMLElement).style.backgroundColor = "";
    });
    for (const [label, paths] of Object.entries(assignments)) {
      for (const path of paths) this.add(label, path);
    }
  }

  selectedPaths(label: string): string[] {
    return Array.from(this.selected.get(label) ?? []).sort();
  }
}
