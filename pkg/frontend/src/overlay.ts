// Verification overlays: outline every node a trained locator resolves to,
// color-coded per label. Over-matches can be clicked into an ignore
// selection, and a per-label isolation toggle shows one label's overlays
// at a time (the troubleshooting view for pages where everything lights up).

import { labelColor } from "./labels.js";
import { absolutePath, nodeAt } from "./paths.js";

const OVERLAY_ATTR = "data-overlay-labels";

export function clearOverlays(doc: Document): void {
  doc.querySelectorAll(`[${OVERLAY_ATTR}]`).forEach((el) => {
    el.removeAttribute(OVERLAY_ATTR);
    (el as HTMLElement).style.outline = "";
    (el as HTMLElement).style.boxShadow = "";
  });
}

export function applyOverlays(doc: Document,
                              byLabel: Record<string, string[]>,
                              isolate: string | null = null): number {
  clearOverlays(doc);
  let shown = 0;
  for (const [label, paths] of Object.entries(byLabel)) {
    if (isolate !== null && label !== isolate) continue;
    const color = labelColor(label);
    for (const path of paths) {
      const el = nodeAt(doc, path);
      if (el === null) continue;
      const existing = el.getAttribute(OVERLAY_ATTR);
      el.setAttribute(OVERLAY_ATTR,
                      existing ? `${existing} ${label}` : label);
      (el as HTMLElement).style.outline = `2px dashed ${color}`;
      shown += 1;
    }
  }
  return shown;
}

export function highlightedPaths(doc: Document, label?: string): string[] {
  const out: string[] = [];
  doc.querySelectorAll(`[${OVERLAY_ATTR}]`).forEach((el) => {
    const labels = (el.getAttribute(OVERLAY_ATTR) ?? "").split(" ");
    if (label === undefined || labels.includes(label)) {
      out.push(absolutePath(el));
    }
  });
  return out.sort();
}

export interface IgnorePick {
  label: string;
  paths: Set<string>;
}

// Selection of surplus matches destined for the locator's ignore list.
export function makeIgnorePick(label: string): IgnorePick {
  return { label, paths: new Set() };
}

export function toggleIgnore(pick: IgnorePick, doc: Document,
                             target: Element): boolean {
  const labels = (target.getAttribute(OVERLAY_ATTR) ?? "").split(" ");
  if (!labels.includes(pick.label)) return false; // only matches are pickable
  const path = absolutePath(target);
  if (pick.paths.has(path)) {
    pick.paths.delete(path);
    (target as HTMLElement).style.boxShadow = "";
    return false;
  }
  pick.paths.add(path);
  (target as HTMLElement).style.boxShadow = "0 0 0 3px #000 inset";
  return true;
}
