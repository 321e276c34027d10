// Label taxonomy per page type, mirrored from the backend, plus the
// color each label tints its selections and overlays with.

export const LABELS_BY_PAGE: Record<string, string[]> = {
  login: ["home_link", "username_field", "password_field", "login_button"],
  home: ["home_link", "section_link", "subsection_link"],
  section: ["home_link", "section_link", "subsection_link", "thread_link",
            "next_page", "prev_page"],
  subsection: ["home_link", "section_link", "subsection_link", "thread_link",
               "next_page", "prev_page"],
  thread: ["home_link", "next_page", "prev_page", "first_page_button",
           "thread_title", "thread_section", "post_author",
           "author_post_count", "author_popularity",
           "author_registration_date", "post_date", "post_content"],
};

export const DATE_LABELS = ["author_registration_date", "post_date"];

const PALETTE = [
  "#e6194b", "#3cb44b", "#ffe119", "#4363d8", "#f58231", "#911eb4",
  "#46f0f0", "#f032e6", "#bcf60c", "#fabebe", "#008080", "#e6beff",
];

const ALL_LABELS = Array.from(
  new Set(Object.values(LABELS_BY_PAGE).flat())).sort();

export function labelColor(label: string): string {
  const idx = ALL_LABELS.indexOf(label);
  return PALETTE[(idx >= 0 ? idx : 0) % PALETTE.length];
}
