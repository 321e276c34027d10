// Absolute structural paths over a rendered snapshot document.
// Semantics must match the backend exactly: lowercase tags, 1-based
// indices counting same-tag siblings only, root step /html[1].

export function absolutePath(el: Element): string {
  const steps: string[] = [];
  let current: Element | null = el;
  while (current !== null) {
    const tag = current.tagName.toLowerCase();
    let index = 1;
    let sibling = current.previousElementSibling;
    while (sibling !== null) {
      if (sibling.tagName === current.tagName) index += 1;
      sibling = sibling.previousElementSibling;
    }
    steps.unshift(`/${tag}[${index}]`);
    current = current.parentElement;
  }
  return steps.join("");
}

const STEP_RE = /\/([a-zA-Z][a-zA-Z0-9_-]*)\[(\d+)\]/g;

export function nodeAt(doc: Document, path: string): Element | null {
  const steps: Array<[string, number]> = [];
  let match: RegExpExecArray | null;
  STEP_RE.lastIndex = 0;
  while ((match = STEP_RE.exec(path)) !== null) {
    steps.push([match[1].toLowerCase(), parseInt(match[2], 10)]);
  }
  if (steps.length === 0) return null;
  const scope: Element[] = doc.documentElement ? [doc.documentElement] : [];
  let current: Element | null = null;
  for (const [tag, index] of steps) {
    const pool: Element[] = current === null
      ? scope
      : Array.from(current.children);
    const candidates = pool.filter((e) => e.tagName.toLowerCase() === tag);
    current = candidates[index - 1] ?? null;
    if (current === null) return null;
  }
  return current;
}
