// Typed client for the loopback training API. Every state change in the
// UI round-trips through here; nothing is kept client-side only.

export interface LocatorJson {
  expr: string;
  strategy: string;
  ignore: string[];
  date_format: string | null;
}

export interface LabelOutcome {
  needs_manual: boolean;
  locator?: LocatorJson;
  failures?: [string, string][];
}

export interface QueueEntry {
  page_type: string;
  url: string;
  state: string;
}

export interface SessionState {
  queue: QueueEntry[];
  current: string | null;
  busy: boolean;
  pending_prompt: { kind: string; message: string } | null;
  last_gate: Record<string, unknown> | null;
  last_error: string | null;
  notes: string[];
  manual_pending: Record<string, string[]>;
  locators: Record<string, Record<string, LocatorJson>>;
  assignments: Record<string, Record<string, string[]>>;
}

export interface PageView {
  page_type: string | null;
  url: string | null;
  html: string | null;
  state: string | null;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class TrainingApi {
  constructor(private base: string,
              private fetchFn: typeof fetch = globalThis.fetch) {}

  private async request<T>(method: string, path: string,
                           body?: unknown): Promise<T> {
    const response = await this.fetchFn(this.base + path, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status,
                         String((payload as { error?: string }).error ?? ""));
    }
    return payload as T;
  }

  state(): Promise<SessionState> {
    return this.request("GET", "/session/state");
  }

  currentPage(pageType?: string): Promise<PageView> {
    const suffix = pageType ? `?page_type=${encodeURIComponent(pageType)}` : "";
    return this.request("GET", `/page/current${suffix}`);
  }

  loadPage(pageType: string): Promise<{ state: string }> {
    return this.request("POST", "/page/load", { page_type: pageType });
  }

  submitLabels(pageType: string, assignments: Record<string, string[]>,
               dateFormats?: Record<string, string>,
               ): Promise<Record<string, LabelOutcome>> {
    return this.request("POST", "/page/labels", {
      page_type: pageType,
      assignments,
      date_formats: dateFormats,
    });
  }

  ignore(pageType: string, label: string,
         paths: string[]): Promise<Record<string, LabelOutcome>> {
    return this.request("POST", "/page/ignore",
                        { page_type: pageType, label, paths });
  }

  retrain(pageType: string,
          labels: string[]): Promise<Record<string, LabelOutcome>> {
    return this.request("POST", "/page/retrain",
                        { page_type: pageType, labels });
  }

  manualXpath(pageType: string, label: string,
              expr: string): Promise<LabelOutcome> {
    return this.request("POST", "/page/manual-xpath",
                        { page_type: pageType, label, expr });
  }

  script(pageType: string, source: string,
         dryRun: boolean): Promise<{ html: string }> {
    return this.request("POST", "/page/script",
                        { page_type: pageType, source, dry_run: dryRun });
  }

  confirm(pageType: string): Promise<{ state: string }> {
    return this.request("POST", "/page/confirm", { page_type: pageType });
  }

  reset(pageType: string): Promise<{ state: string }> {
    return this.request("POST", "/page/reset", { page_type: pageType });
  }

  answerPrompt(answer: string): Promise<{ accepted: boolean }> {
    return this.request("POST", "/prompt/answer", { answer });
  }

  resolveExpr(expr: string, pageType?: string): Promise<{ paths: string[] }> {
    const params = new URLSearchParams({ expr });
    if (pageType) params.set("page_type", pageType);
    return this.request("GET", `/resolve?${params.toString()}`);
  }

  resolveLabel(label: string, pageType: string): Promise<{ paths: string[] }> {
    const params = new URLSearchParams({ label, page_type: pageType });
    return this.request("GET", `/resolve?${params.toString()}`);
  }

  tickets(pairs: [string, string][]): Promise<{ injected: number }> {
    return this.request("POST", "/tickets", { pairs });
  }

  finalize(): Promise<Record<string, unknown>> {
    return this.request("POST", "/profile/finalize", {});
  }
}
