/** Wire types mirrored from the rating-service JSON schemas. */

export type Criterion = "TQ" | "R" | "PQ" | "SSP";

export interface RatingTask {
  task_id: string;
  method_id: string;
  image_id: string;
  criterion: Criterion;
  mode: "pair" | "single";
  image_urls: string[];
}

export interface NextResponse {
  done: boolean;
  task?: RatingTask;
}

export interface RatingRecord {
  rater_id: string;
  task_id: string;
  score: number;
}

export interface RubricEntry {
  name: string;
  mode: "pair" | "single";
  anchors: Record<"1" | "2" | "3" | "4", string>;
}

export type Rubrics = Record<Criterion, RubricEntry>;

export interface SummaryCell {
  method: string;
  criterion: string;
  mean: number;
  count: number;
  per_rater: Record<string, number>;
}

export interface Summary {
  study_id: string;
  n_ratings: number;
  cells: SummaryCell[];
}
