// Page-script editor: the prefill button inserts a click-on-element
// template; the operator replaces YOUR_XPATH_HERE and dry-runs it. A
// successful dry run returns the re-rendered snapshot; errors surface
// inline without touching the page.

import { ApiError, TrainingApi } from "./api.js";

export const CLICK_TEMPLATE = `const el = document.evaluate("YOUR_XPATH_HERE", document, null,
    XPathResult.FIRST_ORDERED_NODE_TYPE, null).singleNodeValue;
if (el) el.click();
await new Promise(r => setTimeout(r, 500));
`;

export function prefillClickScript(existing: string = ""): string {
  return existing.trim().length > 0
    ? `${existing.trimEnd()}\n${CLICK_TEMPLATE}`
    : CLICK_TEMPLATE;
}

export interface ScriptResult {
  ok: boolean;
  html?: string;
  error?: string;
}

export async function submitScript(api: TrainingApi, pageType: string,
                                   source: string,
                                   dryRun: boolean): Promise<ScriptResult> {
  try {
    const response = await api.script(pageType, source, dryRun);
    return { ok: true, html: response.html };
  } catch (err) {
    if (err instanceof ApiError) {
      return { ok: false, error: err.message };
    }
    throw err;
  }
}
