// The rendered snapshot frame must be inert: no scripts, no handlers,
// no external sub-resource fetches.

import { describe, expect, it } from "vitest";

import { externalReferences, sanitizeSnapshot } from "../src/sanitizer.js";

describe("sanitizeSnapshot", () => {
  it("removes scripts and inline handlers", () => {
    const out = sanitizeSnapshot(
      "<html><body><script>evil()</script>" +
      '<a href="x.html" onclick="evil()">go</a></body></html>');
    expect(out).not.toContain("<script");
    expect(out).not.toContain("onclick");
    expect(out).toContain('href="x.html"'); // anchors stay visible
  });

  it("neutralizes external sub-resources", () => {
    const out = sanitizeSnapshot(
      '<html><body><img src="https://cdn.example/x.gif">' +
      '<iframe src="http://other.example/"></iframe></body></html>');
    const doc = new DOMParser().parseFromString(out, "text/html");
    expect(externalReferences(doc)).toEqual([]);
    expect(out).toContain("data-original-src");
  });

  it("keeps the document structure for path computation", () => {
    const out = sanitizeSnapshot(
      "<html><body><div><p>a</p><p>b</p></div></body></html>");
    const doc = new DOMParser().parseFromString(out, "text/html");
    expect(doc.querySelectorAll("p").length).toBe(2);
  });
});
