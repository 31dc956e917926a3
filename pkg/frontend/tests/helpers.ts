import fs from "node:fs";
import path from "node:path";
import { fileURLToPath } from "node:url";

import { ApiClient } from "../src/api.js";
import type { RatingTask, Rubrics } from "../src/types.js";

const here = path.dirname(fileURLToPath(import.meta.url));

/** The rubric fixture shared with the rating service (single source). */
export function loadRubricFixture(): Rubrics {
  const fixture = path.join(here, "..", "..", "src", "vtrans", "data", "rubrics.json");
  return JSON.parse(fs.readFileSync(fixture, "utf-8")) as Rubrics;
}

export function makeTask(overrides: Partial<RatingTask> = {}): RatingTask {
  const criterion = overrides.criterion ?? "R";
  const mode = criterion === "TQ" || criterion === "SSP" ? "pair" : "single";
  const urls =
    mode === "pair"
      ? ["/images/__input__/a.png", "/images/B-9/a.png"]
      : ["/images/B-9/a.png"];
  return {
    task_id: `B-9:a.png:${criterion}`,
    method_id: "B-9",
    image_id: "a.png",
    criterion,
    mode,
    image_urls: urls,
    ...overrides,
  };
}

export interface FakeApi extends ApiClient {
  submitted: Array<{ rater_id: string; task_id: string; score: number }>;
}

/** In-memory stand-in for the service: a fixed task list per rater. */
export function fakeApi(tasks: RatingTask[], rubrics: Rubrics): FakeApi {
  const submitted: FakeApi["submitted"] = [];
  const rated = new Set<string>();
  const api = {
    baseUrl: "",
    studyId: "fake",
    submitted,
    imageUrl: (p: string) => p,
    rubrics: async () => rubrics,
    next: async (rater: string) => {
      const task = tasks.find((t) => !rated.has(`${rater}:${t.task_id}`));
      return task ? { done: false, task } : { done: true };
    },
    submit: async (record: { rater_id: string; task_id: string; score: number }) => {
      submitted.push(record);
      rated.add(`${record.rater_id}:${record.task_id}`);
    },
    summary: async () => ({
      study_id: "fake",
      n_ratings: submitted.length,
      cells: [
        {
          method: "B-9",
          criterion: "R",
          mean: 3,
          count: submitted.length,
          per_rater: { u1: 3 },
        },
      ],
    }),
  };
  return api as unknown as FakeApi;
}
