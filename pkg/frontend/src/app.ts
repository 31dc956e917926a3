import { ApiClient, ApiError, NetworkError } from "./api.js";
import { SubmitQueue } from "./queue.js";
import type { RatingTask, Rubrics, Summary } from "./types.js";

const SCORES = ["4", "3", "2", "1"] as const;

/**
 * Single-page rating client.
 *
 * Renders one task at a time (input/output pair for TQ and SSP, the
 * output alone for R and PQ) with the criterion's verbatim four-point
 * rubric; buttons and the 1-4 keys submit; when the schedule is
 * exhausted the live summary table is shown. Method identity is never
 * rendered while rating.
 */
export class RatingApp {
  current: RatingTask | null = null;
  rubrics: Rubrics | null = null;
  private queue: SubmitQueue;
  private keyHandler: (ev: KeyboardEvent) => void;
  private submitting = false;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private raterId: string,
    storage?: Storage,
  ) {
    this.queue = new SubmitQueue(api, storage, `rating-queue:${raterId}`);
    this.keyHandler = (ev) => {
      if ((SCORES as readonly string[]).includes(ev.key)) {
        void this.submit(Number(ev.key));
      }
    };
    root.ownerDocument.addEventListener("keydown", this.keyHandler);
    const win = root.ownerDocument.defaultView;
    win?.addEventListener("online", () => void this.queue.flush());
  }

  dispose(): void {
    this.root.ownerDocument.removeEventListener("keydown", this.keyHandler);
  }

  async start(): Promise<void> {
    try {
      if (!this.rubrics) this.rubrics = await this.api.rubrics();
      await this.queue.flush();
      const next = await this.api.next(this.raterId);
      if (next.done) {
        await this.renderDone();
      } else {
        this.renderTask(next.task!);
      }
    } catch (err) {
      this.showError(err);
    }
  }

  async submit(score: number): Promise<void> {
    if (!this.current || this.submitting) return;
    const record = {
      rater_id: this.raterId,
      task_id: this.current.task_id,
      score,
    };
    this.submitting = true;
    try {
      await this.queue.submit(record); // queued/duplicate both advance
      this.current = null;
      await this.start();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.current = null;
        await this.start(); // someone already rated it: skip forward
      } else {
        this.showError(err);
      }
    } finally {
      this.submitting = false;
    }
  }

  renderTask(task: RatingTask): void {
    this.current = task;
    const doc = this.root.ownerDocument;
    const rubric = this.rubrics![task.criterion];
    this.root.textContent = "";

    const section = doc.createElement("section");
    section.className = "task";

    const heading = doc.createElement("h2");
    heading.className = "criterion-name";
    heading.textContent = rubric.name;
    section.appendChild(heading);

    const images = doc.createElement("div");
    images.className = `images ${task.mode}`;
    const labels = task.mode === "pair" ? ["Input", "Output"] : ["Output"];
    task.image_urls.forEach((url, i) => {
      const figure = doc.createElement("figure");
      const img = doc.createElement("img");
      img.src = this.api.imageUrl(url);
      img.alt = labels[i] ?? `Image ${i + 1}`;
      const caption = doc.createElement("figcaption");
      caption.textContent = labels[i] ?? "";
      figure.appendChild(img);
      figure.appendChild(caption);
      images.appendChild(figure);
    });
    section.appendChild(images);

    const rubricBox = doc.createElement("div");
    rubricBox.className = "rubric";
    for (const score of SCORES) {
      const button = doc.createElement("button");
      button.type = "button";
      button.dataset.score = score;
      const strong = doc.createElement("strong");
      strong.textContent = score;
      const span = doc.createElement("span");
      span.textContent = rubric.anchors[score];
      button.appendChild(strong);
      button.appendChild(span);
      button.addEventListener("click", () => void this.submit(Number(score)));
      rubricBox.appendChild(button);
    }
    section.appendChild(rubricBox);

    const hint = doc.createElement("p");
    hint.className = "hint";
    hint.textContent = "Click an anchor or press 1-4 to rate.";
    section.appendChild(hint);
    this.root.appendChild(section);
  }

  async renderDone(): Promise<void> {
    const doc = this.root.ownerDocument;
    this.root.textContent = "";
    const section = doc.createElement("section");
    section.className = "done";
    const heading = doc.createElement("h2");
    heading.textContent = "All tasks rated. Thank you!";
    section.appendChild(heading);
    try {
      const summary = await this.api.summary();
      section.appendChild(this.summaryTable(summary));
    } catch (err) {
      const note = doc.createElement("p");
      note.textContent = "Summary is not available yet.";
      section.appendChild(note);
    }
    this.root.appendChild(section);
  }

  private summaryTable(summary: Summary): HTMLTableElement {
    const doc = this.root.ownerDocument;
    const table = doc.createElement("table");
    table.className = "summary";
    const head = table.createTHead().insertRow();
    for (const title of ["Method", "Criterion", "Mean", "Ratings"]) {
      const th = doc.createElement("th");
      th.textContent = title;
      head.appendChild(th);
    }
    const body = table.createTBody();
    for (const cell of summary.cells) {
      const row = body.insertRow();
      row.insertCell().textContent = cell.method;
      row.insertCell().textContent = cell.criterion;
      row.insertCell().textContent = cell.mean.toFixed(2);
      row.insertCell().textContent = String(cell.count);
    }
    return table;
  }

  showError(err: unknown): void {
    const doc = this.root.ownerDocument;
    this.root.textContent = "";
    const banner = doc.createElement("div");
    banner.className = "banner error";
    const message = doc.createElement("p");
    message.textContent =
      err instanceof NetworkError
        ? "Cannot reach the rating service. Your ratings are kept locally."
        : `Something went wrong: ${err instanceof Error ? err.message : String(err)}`;
    banner.appendChild(message);
    const retry = doc.createElement("button");
    retry.type = "button";
    retry.className = "retry";
    retry.textContent = "Retry";
    retry.addEventListener("click", () => void this.start());
    banner.appendChild(retry);
    this.root.appendChild(banner);
  }
}

/** Browser entry point: reads rater/study/api from the query string. */
export function boot(win: Window): void {
  const doc = win.document;
  const params = new URLSearchParams(win.location.search);
  const root = doc.getElementById("app");
  if (!root) return;
  const rater = params.get("rater");
  const study = params.get("study");
  const base = params.get("api") ?? "";
  if (!rater || !study) {
    root.textContent = "";
    const form = doc.createElement("form");
    form.className = "login";
    for (const [name, value] of [
      ["study", study ?? ""],
      ["rater", rater ?? ""],
    ]) {
      const label = doc.createElement("label");
      label.textContent = `${name}: `;
      const input = doc.createElement("input");
      input.name = name;
      input.value = value;
      input.required = true;
      label.appendChild(input);
      form.appendChild(label);
    }
    const go = doc.createElement("button");
    go.type = "submit";
    go.textContent = "Start rating";
    form.appendChild(go);
    root.appendChild(form);
    return;
  }
  const api = new ApiClient(base, study);
  const app = new RatingApp(root, api, rater, win.localStorage);
  void app.start();
}
