// Snapshot neutralization before rendering: the page is displayed for
// labeling only, so scripts are removed, inline handlers stripped, and
// every external sub-resource reference made inert. The result goes into
// a sandboxed frame; nothing in it may reach the network.

const EXTERNAL_SRC_TAGS = ["img", "iframe", "embed", "source", "video",
                           "audio", "track", "object"];

export function sanitizeSnapshot(html: string): string {
  const doc = new DOMParser().parseFromString(html, "text/html");
  doc.querySelectorAll("script, noscript").forEach((el) => el.remove());
  doc.querySelectorAll("link, meta[http-equiv]").forEach((el) => el.remove());
  for (const el of Array.from(doc.querySelectorAll("*"))) {
    for (const attr of Array.from(el.attributes)) {
      if (attr.name.toLowerCase().startsWith("on")) {
        el.removeAttribute(attr.name);
      }
    }
    const tag = el.tagName.toLowerCase();
    if (EXTERNAL_SRC_TAGS.includes(tag) && el.hasAttribute("src")) {
      el.setAttribute("data-original-src", el.getAttribute("src") ?? "");
      el.setAttribute("src", "data:,");
    }
    if (tag === "form") {
      el.removeAttribute("action");
    }
  }
  const root = doc.documentElement;
  return root ? root.outerHTML : "";
}

export function externalReferences(doc: Document): string[] {
  const refs: string[] = [];
  for (const el of Array.from(doc.querySelectorAll("[src]"))) {
    const src = el.getAttribute("src") ?? "";
    if (/^https?:/i.test(src)) refs.push(src);
  }
  return refs;
}
