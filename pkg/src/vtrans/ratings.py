"""Rating study service.

Schedules blinded rating tasks over the (method x image x criterion)
grid, persists submissions to an append-only, fsynced JSONL log, and
aggregates per-(method, criterion) means. Replaying the log rebuilds
the exact state, so a crashed server loses at most an unacknowledged
submission.
"""

from __future__ import annotations

import datetime
import json
import os
import random
import threading
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from pydantic import BaseModel

from .errors import (
    DuplicateRating,
    InvalidScore,
    NoRatings,
    UnknownStudy,
    UnknownTask,
)

CRITERIA = ("TQ", "R", "PQ", "SSP")
PAIR_CRITERIA = ("TQ", "SSP")  # these show input and output side by side

INPUT_SOURCE = "__input__"


def load_rubrics() -> dict:
    with resources.files("vtrans.data").joinpath("rubrics.json").open(encoding="utf-8") as fh:
        return json.load(fh)


@dataclass(frozen=True)
class RatingTask:
    task_id: str
    method_id: str
    image_id: str
    criterion: str
    mode: str  # "pair" | "single"
    image_urls: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "method_id": self.method_id,
            "image_id": self.image_id,
            "criterion": self.criterion,
            "mode": self.mode,
            "image_urls": list(self.image_urls),
        }


@dataclass(frozen=True)
class RatingRecord:
    rater_id: str
    task_id: str
    score: int
    timestamp: str

    def to_json(self) -> dict:
        return {
            "rater_id": self.rater_id,
            "task_id": self.task_id,
            "score": self.score,
            "timestamp": self.timestamp,
        }


class Study:
    """One loaded study definition plus its ratings log."""

    def __init__(self, study_path, data_dir=None):
        study_path = Path(study_path)
        with open(study_path, encoding="utf-8") as fh:
            spec = json.load(fh)
        base = study_path.parent
        self.study_id: str = spec["study_id"]
        self.seed: int = int(spec.get("seed", 0))
        self.criteria = tuple(spec.get("criteria", CRITERIA))
        self.sources: dict[str, Path] = {}
        if spec.get("inputs_dir"):
            self.sources[INPUT_SOURCE] = (base / spec["inputs_dir"]).resolve()
        self.methods: dict[str, Path] = {
            m: (base / d).resolve() for m, d in spec["methods"].items()
        }
        self.sources.update(self.methods)
        self.images: list[str] = list(spec["images"])

        self.tasks: dict[str, RatingTask] = {}
        for method in sorted(self.methods):
            for image in self.images:
                for criterion in self.criteria:
                    mode = "pair" if criterion in PAIR_CRITERIA else "single"
                    urls = (f"/images/{method}/{image}",)
                    if mode == "pair":
                        urls = (f"/images/{INPUT_SOURCE}/{image}",) + urls
                    task_id = f"{method}:{image}:{criterion}"
                    self.tasks[task_id] = RatingTask(
                        task_id=task_id,
                        method_id=method,
                        image_id=image,
                        criterion=criterion,
                        mode=mode,
                        image_urls=urls,
                    )

        data_dir = Path(data_dir) if data_dir else study_path.parent
        data_dir.mkdir(parents=True, exist_ok=True)
        self.log_path = data_dir / f"ratings-{self.study_id}.jsonl"
        self._lock = threading.Lock()
        self.ratings: dict[tuple[str, str], RatingRecord] = {}
        self._replay()

    def _replay(self):
        if not self.log_path.exists():
            return
        with open(self.log_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                raw = json.loads(line)
                record = RatingRecord(
                    rater_id=str(raw["rater_id"]),
                    task_id=str(raw["task_id"]),
                    score=int(raw["score"]),
                    timestamp=str(raw.get("timestamp", "")),
                )
                self.ratings[(record.rater_id, record.task_id)] = record

    def rater_order(self, rater_id: str) -> list[str]:
        order = sorted(self.tasks)
        random.Random(f"{self.seed}:{rater_id}").shuffle(order)
        return order

    def next_task(self, rater_id: str) -> Optional[RatingTask]:
        """First task of the rater's shuffled order they have not rated.

        Asking again without rating returns the same task; None means done.
        """
        for task_id in self.rater_order(rater_id):
            if (rater_id, task_id) not in self.ratings:
                return self.tasks[task_id]
        return None

    def submit(self, rater_id: str, task_id: str, score: int, timestamp: str | None = None) -> RatingRecord:
        if not isinstance(score, int) or score < 1 or score > 4:
            raise InvalidScore(f"score must be an integer 1..4, got {score!r}")
        if task_id not in self.tasks:
            raise UnknownTask(f"no task {task_id!r} in study {self.study_id!r}")
        record = RatingRecord(
            rater_id=str(rater_id),
            task_id=task_id,
            score=score,
            timestamp=timestamp
            or datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        )
        with self._lock:
            if (record.rater_id, task_id) in self.ratings:
                raise DuplicateRating(f"{rater_id!r} already rated {task_id!r}")
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record.to_json(), ensure_ascii=False) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self.ratings[(record.rater_id, task_id)] = record
        return record

    def summarize(self) -> dict:
        """Mean score, count and per-rater means per (method, criterion)."""
        with self._lock:
            snapshot = list(self.ratings.values())
        if not snapshot:
            raise NoRatings(f"study {self.study_id!r} has no ratings yet")
        cells: dict[tuple[str, str], list[RatingRecord]] = {}
        for record in snapshot:
            task = self.tasks.get(record.task_id)
            if task is None:
                continue
            cells.setdefault((task.method_id, task.criterion), []).append(record)
        out = []
        for (method, criterion) in sorted(cells):
            records = cells[(method, criterion)]
            per_rater: dict[str, list[int]] = {}
            for r in records:
                per_rater.setdefault(r.rater_id, []).append(r.score)
            out.append(
                {
                    "method": method,
                    "criterion": criterion,
                    "mean": sum(r.score for r in records) / len(records),
                    "count": len(records),
                    "per_rater": {
                        rater: sum(v) / len(v) for rater, v in sorted(per_rater.items())
                    },
                }
            )
        return {"study_id": self.study_id, "n_ratings": len(snapshot), "cells": out}

    def resolve_image(self, source: str, name: str) -> Path:
        root = self.sources.get(source)
        if root is None:
            raise UnknownTask(f"unknown image source {source!r}")
        path = (root / name).resolve()
        if root not in path.parents and path != root:
            raise UnknownTask("image path escapes its study directory")
        return path


class RatingIn(BaseModel):
    rater_id: str
    task_id: str
    score: int
    timestamp: Optional[str] = None


def create_app(study: Study, ui_dir=None):
    """FastAPI app exposing the study; import cost stays off the hot path."""
    from fastapi import FastAPI, HTTPException, Query
    from fastapi.middleware.cors import CORSMiddleware
    from fastapi.responses import FileResponse, RedirectResponse
    from fastapi.staticfiles import StaticFiles

    app = FastAPI(title="rating-service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    rubrics = load_rubrics()

    def get_study(study_id: str) -> Study:
        if study_id != study.study_id:
            raise HTTPException(status_code=404, detail=f"unknown study {study_id!r}")
        return study

    @app.get("/api/rubrics")
    def api_rubrics():
        return rubrics

    @app.get("/api/studies/{study_id}/next")
    def api_next(study_id: str, rater: str = Query(min_length=1)):
        task = get_study(study_id).next_task(rater)
        if task is None:
            return {"done": True}
        return {"done": False, "task": task.to_json()}

    @app.get("/api/studies/{study_id}/rubrics")
    def api_study_rubrics(study_id: str):
        get_study(study_id)
        return rubrics

    @app.post("/api/studies/{study_id}/ratings", status_code=201)
    def api_submit(study_id: str, rating: RatingIn):
        s = get_study(study_id)
        try:
            record = s.submit(rating.rater_id, rating.task_id, rating.score, rating.timestamp)
        except InvalidScore as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except UnknownTask as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except DuplicateRating as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return record.to_json()

    @app.get("/api/studies/{study_id}/summary")
    def api_summary(study_id: str):
        try:
            return get_study(study_id).summarize()
        except NoRatings as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.get("/images/{source}/{name}")
    def api_image(source: str, name: str):
        try:
            path = study.resolve_image(source, name)
        except UnknownTask as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"no image {name!r}")
        return FileResponse(path)

    if ui_dir:
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

        @app.get("/")
        def root():
            return RedirectResponse("/ui/")

    return app
