import json
import random

import pytest
from fastapi.testclient import TestClient

from vtrans.errors import DuplicateRating, InvalidScore, NoRatings, UnknownTask
from vtrans.ratings import CRITERIA, PAIR_CRITERIA, Study, create_app, load_rubrics
from vtrans.scene import SceneImage, write_png


def make_study(root, methods=("B-1", "B-2"), images=("a.png", "b.png"), seed=42):
    inputs = root / "inputs"
    inputs.mkdir(parents=True, exist_ok=True)
    for name in images:
        write_png(SceneImage.filled(8, 8, (10, 10, 10)), inputs / name)
    for i, m in enumerate(methods):
        mdir = root / f"out_{m}"
        mdir.mkdir(exist_ok=True)
        for name in images:
            write_png(SceneImage.filled(8, 8, (50 + i, 50, 50)), mdir / name)
    spec = {
        "study_id": "study1",
        "seed": seed,
        "inputs_dir": "inputs",
        "methods": {m: f"out_{m}" for m in methods},
        "images": list(images),
    }
    path = root / "study.json"
    path.write_text(json.dumps(spec), encoding="utf-8")
    return path


@pytest.fixture()
def study(tmp_path):
    return Study(make_study(tmp_path))


class TestScheduling:
    def test_all_tasks_once_then_done(self, study):
        total = len(study.tasks)
        seen = set()
        for i in range(total):
            task = study.next_task("r1")
            assert task is not None
            seen.add(task.task_id)
            study.submit("r1", task.task_id, 3)
        assert len(seen) == total
        assert study.next_task("r1") is None

    def test_idempotent_head(self, study):
        first = study.next_task("r1")
        again = study.next_task("r1")
        assert first.task_id == again.task_id

    def test_per_rater_seeded_shuffle_matches_oracle(self, study):
        for rater in ("alice", "bob"):
            expected = sorted(study.tasks)
            random.Random(f"{study.seed}:{rater}").shuffle(expected)
            assert study.rater_order(rater) == expected
        assert study.rater_order("alice") != study.rater_order("bob")

    def test_mode_rule(self, study):
        for task in study.tasks.values():
            if task.criterion in PAIR_CRITERIA:
                assert task.mode == "pair" and len(task.image_urls) == 2
            else:
                assert task.mode == "single" and len(task.image_urls) == 1


class TestSubmission:
    def test_score_bounds(self, study):
        task = study.next_task("r1")
        with pytest.raises(InvalidScore):
            study.submit("r1", task.task_id, 5)
        with pytest.raises(InvalidScore):
            study.submit("r1", task.task_id, 0)

    def test_unknown_task(self, study):
        with pytest.raises(UnknownTask):
            study.submit("r1", "no:such:task", 2)

    def test_duplicate_rejected_and_count_stable(self, study):
        task = study.next_task("r1")
        study.submit("r1", task.task_id, 4)
        with pytest.raises(DuplicateRating):
            study.submit("r1", task.task_id, 2)
        assert sum(1 for _ in study.ratings) == 1

    def test_timestamps_recorded(self, study):
        task = study.next_task("r1")
        record = study.submit("r1", task.task_id, 1)
        assert record.timestamp


class TestSummary:
    def test_single_rating(self, study):
        task = study.next_task("r1")
        study.submit("r1", task.task_id, 3)
        summary = study.summarize()
        cell = summary["cells"][0]
        assert cell["mean"] == 3.0 and cell["count"] == 1

    def test_mean_of_two(self, study):
        t = next(iter(sorted(study.tasks)))
        study.submit("r1", t, 1)
        study.submit("r2", t, 4)
        summary = study.summarize()
        cell = [c for c in summary["cells"] if c["count"] == 2][0]
        assert cell["mean"] == 2.5
        assert cell["per_rater"] == {"r1": 1.0, "r2": 4.0}

    def test_no_ratings(self, study):
        with pytest.raises(NoRatings):
            study.summarize()

    def test_submission_order_invariant(self, tmp_path):
        path = make_study(tmp_path / "x")
        a = Study(path, tmp_path / "da")
        b = Study(path, tmp_path / "db")
        tasks = sorted(a.tasks)
        scores = [(f"r{i % 3}", t, 1 + (i % 4)) for i, t in enumerate(tasks)]
        for rater, task, score in scores:
            a.submit(rater, task, score)
        for rater, task, score in reversed(scores):
            b.submit(rater, task, score)
        sa, sb = a.summarize(), b.summarize()
        assert sa["cells"] == sb["cells"]

    def test_replay_reconstructs_summary(self, tmp_path):
        path = make_study(tmp_path / "y")
        first = Study(path)
        rng = random.Random(5)
        for task_id in sorted(first.tasks):
            for rater in ("u1", "u2"):
                first.submit(rater, task_id, rng.randint(1, 4))
        expected = first.summarize()
        reloaded = Study(path)  # fresh instance replays the log
        assert reloaded.summarize() == expected


class TestApi:
    @pytest.fixture()
    def client(self, tmp_path):
        study = Study(make_study(tmp_path))
        return TestClient(create_app(study))

    def test_next_and_submit_flow(self, client):
        r = client.get("/api/studies/study1/next", params={"rater": "r1"})
        assert r.status_code == 200
        task = r.json()["task"]
        r = client.post(
            "/api/studies/study1/ratings",
            json={"rater_id": "r1", "task_id": task["task_id"], "score": 3},
        )
        assert r.status_code == 201
        r2 = client.get("/api/studies/study1/next", params={"rater": "r1"})
        assert r2.json()["task"]["task_id"] != task["task_id"]

    def test_error_codes(self, client):
        r = client.get("/api/studies/study1/next", params={"rater": "r1"})
        task = r.json()["task"]
        bad = client.post(
            "/api/studies/study1/ratings",
            json={"rater_id": "r1", "task_id": task["task_id"], "score": 9},
        )
        assert bad.status_code == 400
        missing = client.post(
            "/api/studies/study1/ratings",
            json={"rater_id": "r1", "task_id": "zz:zz:zz", "score": 2},
        )
        assert missing.status_code == 404
        client.post(
            "/api/studies/study1/ratings",
            json={"rater_id": "r1", "task_id": task["task_id"], "score": 2},
        )
        dup = client.post(
            "/api/studies/study1/ratings",
            json={"rater_id": "r1", "task_id": task["task_id"], "score": 2},
        )
        assert dup.status_code == 409
        assert client.get("/api/studies/unknown/next", params={"rater": "x"}).status_code == 404

    def test_summary_endpoint(self, client):
        r = client.get("/api/studies/study1/next", params={"rater": "r1"})
        task = r.json()["task"]
        client.post(
            "/api/studies/study1/ratings",
            json={"rater_id": "r1", "task_id": task["task_id"], "score": 4},
        )
        summary = client.get("/api/studies/study1/summary").json()
        assert summary["n_ratings"] == 1

    def test_summary_empty_404(self, client):
        assert client.get("/api/studies/study1/summary").status_code == 404

    def test_rubrics_served_verbatim(self, client):
        served = client.get("/api/rubrics").json()
        assert served == load_rubrics()
        assert set(served) == set(CRITERIA)
        for crit in CRITERIA:
            assert set(served[crit]["anchors"]) == {"1", "2", "3", "4"}

    def test_images_served_and_traversal_blocked(self, client):
        r = client.get("/images/B-1/a.png")
        assert r.status_code == 200
        assert r.headers["content-type"] == "image/png"
        r = client.get("/images/__input__/a.png")
        assert r.status_code == 200
        assert client.get("/images/B-1/missing.png").status_code == 404
        assert client.get("/images/nosuch/a.png").status_code == 404
        assert client.get("/images/B-1/..%2Fstudy.json").status_code in (400, 404)
