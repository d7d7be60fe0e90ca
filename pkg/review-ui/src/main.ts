/** Page wiring. All review state lives in the controller (and really on
 * the service); this file just translates DOM events and repaints.
 */

import { ApiClient } from "./api.js";
import { ReviewController } from "./controller.js";
import { actionFor } from "./keyboard.js";

// Captions are cosmetic reminders for the judge; the service alone decides
// which categories it accepts.
const CATEGORY_CAPTIONS: ReadonlyArray<readonly [string, string]> = [
  ["A", "model correct"],
  ["B", "incorrect gold standard"],
  ["C", "document error"],
  ["D", "model non-compliance"],
  ["E", "semantics or reasoning mistake"],
  ["F", "other"],
];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const loginSection = el<HTMLElement>("login");
const judgeInput = el<HTMLInputElement>("judge-input");
const startButton = el<HTMLButtonElement>("start");
const whoami = el<HTMLElement>("whoami");
const judgeName = el<HTMLElement>("judge-name");
const progress = el<HTMLElement>("progress");
const banner = el<HTMLElement>("banner");
const bannerText = el<HTMLElement>("banner-text");
const retryButton = el<HTMLButtonElement>("retry");
const emptySection = el<HTMLElement>("empty");
const doneSection = el<HTMLElement>("done");
const itemSection = el<HTMLElement>("item");
const recordIdEl = el<HTMLElement>("record-id");
const complianceChip = el<HTMLElement>("compliance");
const documentTextEl = el<HTMLElement>("document-text");
const goldLabelEl = el<HTMLElement>("gold-label");
const predictedLabelEl = el<HTMLElement>("predicted-label");
const outputTextEl = el<HTMLElement>("output-text");
const currentJudgmentEl = el<HTMLElement>("current-judgment");
const categoriesBox = el<HTMLElement>("categories");
const noteField = el<HTMLTextAreaElement>("note");
const submitButton = el<HTMLButtonElement>("submit");
const submitErrorEl = el<HTMLElement>("submit-error");
const summaryAside = el<HTMLElement>("summary");
const summaryRows = el<HTMLElement>("summary-rows");
const summaryCount = el<HTMLElement>("summary-count");
const summarySum = el<HTMLElement>("summary-sum");
const summaryMeta = el<HTMLElement>("summary-meta");

let controller: ReviewController | null = null;
let selected: string | null = null;
let shownRecordId: string | null = null;

const categoryButtons = new Map<string, HTMLButtonElement>();
for (const [letter, caption] of CATEGORY_CAPTIONS) {
  const button = document.createElement("button");
  button.type = "button";
  button.className = "category";
  const head = document.createElement("strong");
  head.textContent = letter;
  const tail = document.createElement("small");
  tail.textContent = caption;
  button.append(head, tail);
  button.addEventListener("click", () => {
    selected = letter;
    render();
  });
  categoryButtons.set(letter, button);
  categoriesBox.append(button);
}

function render(): void {
  const ctl = controller;
  loginSection.hidden = ctl !== null;
  whoami.hidden = ctl === null;
  if (!ctl) {
    banner.hidden = true;
    emptySection.hidden = true;
    doneSection.hidden = true;
    itemSection.hidden = true;
    summaryAside.hidden = true;
    return;
  }
  judgeName.textContent = ctl.judge;
  banner.hidden = ctl.banner === null;
  bannerText.textContent = ctl.banner ?? "";
  emptySection.hidden = ctl.phase !== "empty";
  doneSection.hidden = ctl.phase !== "done";

  const item = ctl.current();
  itemSection.hidden = item === null;
  if (item) {
    if (item.record_id !== shownRecordId) {
      shownRecordId = item.record_id;
      selected = item.current_judgment?.category ?? null;
      noteField.value = item.current_judgment?.note ?? "";
    }
    recordIdEl.textContent = item.record_id;
    complianceChip.textContent = item.compliance;
    documentTextEl.textContent = item.document_text;
    goldLabelEl.textContent = item.gold_label ?? "(none)";
    predictedLabelEl.textContent = item.predicted_label ?? "(none)";
    outputTextEl.textContent = item.output_text;
    const current = item.current_judgment;
    currentJudgmentEl.hidden = current === null;
    currentJudgmentEl.textContent = current
      ? `Already judged ${current.category}` +
        (current.note ? ` ("${current.note}")` : "") +
        "; submitting again replaces it."
      : "";
    for (const [letter, button] of categoryButtons) {
      button.classList.toggle("selected", letter === selected);
    }
    submitErrorEl.hidden = ctl.submitError === null;
    submitErrorEl.textContent = ctl.submitError ?? "";
    submitButton.disabled = ctl.busy;
  }

  if (ctl.phase === "done") progress.textContent = `all ${ctl.items.length} judged`;
  else if (ctl.phase === "ready") {
    progress.textContent = `${ctl.unjudgedCount()} of ${ctl.items.length} unjudged`;
  } else progress.textContent = "";

  const summary = ctl.summary;
  summaryAside.hidden = summary === null || ctl.phase === "empty" || ctl.phase === "failed";
  if (summary) {
    summaryRows.textContent = "";
    let countTotal = 0;
    let proportionTotal = 0;
    for (const category of Object.keys(summary.counts)) {
      const row = document.createElement("tr");
      const name = document.createElement("th");
      name.textContent = category;
      const count = document.createElement("td");
      count.textContent = String(summary.counts[category] ?? 0);
      const proportion = document.createElement("td");
      proportion.textContent = (summary.proportions[category] ?? 0).toFixed(3);
      row.append(name, count, proportion);
      summaryRows.append(row);
      countTotal += summary.counts[category] ?? 0;
      proportionTotal += summary.proportions[category] ?? 0;
    }
    summaryCount.textContent = String(countTotal);
    summarySum.textContent = proportionTotal.toFixed(3);
    summaryMeta.textContent =
      `${summary.judged} judged, ${summary.unjudged_records} records unjudged` +
      (summary.judges.length > 0 ? `; judges: ${summary.judges.join(", ")}` : "");
  }
}

async function refresh(action: () => Promise<unknown>): Promise<void> {
  await action();
  render();
}

async function startSession(name: string): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  params.set("judge", name);
  window.history.replaceState(null, "", `${window.location.pathname}?${params}`);
  const token = params.get("token");
  controller = new ReviewController(new ApiClient("", token), name);
  shownRecordId = null;
  selected = null;
  render();
  await refresh(() => controller!.load());
}

async function doSubmit(): Promise<void> {
  const ctl = controller;
  if (!ctl || ctl.busy || ctl.current() === null) return;
  if (selected === null) {
    // presence check only; what counts as a valid category is the
    // service's call, and its rejections land in the same spot
    ctl.submitError = "pick a category first (A-F)";
    render();
    return;
  }
  const ok = await ctl.submit(selected, noteField.value);
  if (ok) {
    selected = null;
    shownRecordId = null;
    noteField.value = "";
  }
  render();
}

document.addEventListener("keydown", (event) => {
  const ctl = controller;
  if (!ctl) return;
  const active = document.activeElement;
  if (active === judgeInput) return;
  const inNote = active === noteField;
  const action = actionFor(event.key, inNote, event.ctrlKey || event.metaKey);
  if (!action) return;
  event.preventDefault();
  switch (action.kind) {
    case "select":
      if (ctl.current()) {
        selected = action.category;
        render();
      }
      break;
    case "submit":
      void doSubmit();
      break;
    case "next":
      ctl.next();
      render();
      break;
    case "prev":
      ctl.prev();
      render();
      break;
    case "focus-note":
      if (ctl.current()) noteField.focus();
      break;
    case "blur-note":
      noteField.blur();
      break;
    case "retry":
      void refresh(() => ctl.load());
      break;
  }
});

startButton.addEventListener("click", () => {
  const name = judgeInput.value.trim();
  if (name) void startSession(name);
});

judgeInput.addEventListener("keydown", (event) => {
  if (event.key === "Enter") {
    const name = judgeInput.value.trim();
    if (name) void startSession(name);
  }
});

retryButton.addEventListener("click", () => {
  const ctl = controller;
  if (ctl) void refresh(() => ctl.load());
});

submitButton.addEventListener("click", () => void doSubmit());

const initialJudge = new URLSearchParams(window.location.search).get("judge");
if (initialJudge) void startSession(initialJudge);
else render();
