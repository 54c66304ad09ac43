import json
import os
from pathlib import Path

import pytest

import thermeval as te

ROOT = Path(os.environ.get("THERMEVAL_SOURCE_DIR", Path(__file__).resolve().parents[2]))
FIXTURE = ROOT / "fixtures" / "class_counts.json"


@pytest.fixture(scope="module")
def dataset():
    return te.load_dataset(FIXTURE)


def test_iou_and_nms():
    a = te.BBox(0, 0, 10, 10)
    b = te.BBox(5, 0, 15, 10)
    assert te.iou(a, b) == pytest.approx(1 / 3)
    dets = [te.Detection(a, 0, 0.9), te.Detection(b, 0, 0.8), te.Detection(a, 1, 0.7)]
    assert len(te.nms(dets, 0.3)) == 2
    with pytest.raises(te.ValidationError):
        te.BBox(5, 0, 1, 1)


def test_class_distribution(dataset):
    counts = te.class_distribution(dataset)
    assert counts["car"] == 13456
    assert sum(counts.values()) == 32715


def test_perfect_mock_scores_100(dataset):
    report = te.evaluate(dataset, [te.MockDetector("perfect")])
    assert report.precision == 100.0
    assert report.recall == 100.0
    assert report.map == 1.0
    assert json.loads(report.format())["map"] == 100.0


def test_tta_recovers_misses(dataset):
    noisy = te.MockDetector("m", te.MockNoise(p_miss=0.3, seed=3))
    base = te.evaluate(dataset, [noisy]).recall
    tta = te.evaluate(dataset, [noisy], protocol="tta", threads=2).recall
    assert tta > base + 15


class Replay(te.Detector):
    """Python detector that answers from ground truth on identity views only."""

    def name(self):
        return "replay"

    def supports_transformed_views(self):
        return False

    def supports_view(self, view_id):
        return view_id == "identity"

    def detect(self, image, view, transform, canvas):
        return [te.Detection(g.bbox, g.class_id, 0.9) for g in image.ground_truth]


def test_python_detector_runs_on_worker_threads(dataset):
    report = te.evaluate(dataset, [Replay()], threads=4)
    assert report.recall == 100.0
    with pytest.raises(te.CapabilityError):
        te.evaluate(dataset, [Replay()], protocol="tta")


def test_detection_file_round_trip_with_views(tmp_path, dataset):
    image = dataset.images[0]
    records = []
    for g in dataset.ground_truth[0]:
        records.append(te.DetectionRecord(image.id, g.class_id, 0.9, g.bbox))
        flipped = te.view_transform("hflip", image.width, image.height).apply_box(g.bbox)
        records.append(te.DetectionRecord(image.id, g.class_id, 0.8, flipped, "hflip"))
    path = tmp_path / "dets.jsonl"
    te.write_detections(path, records)
    back = te.load_detections(path, dataset)
    assert back == records
    replay = te.FileDetector("file", back)
    assert replay.views == {"identity", "hflip"}


def test_ensemble_and_selection(dataset):
    a = te.MockDetector("a", te.MockNoise(p_miss=0.5, seed=1))
    b = te.MockDetector("b", te.MockNoise(p_miss=0.5, seed=2))
    pair = te.evaluate(dataset, [a, b], protocol="ttme")
    assert pair.recall > te.evaluate(dataset, [a]).recall
    ranked = te.select_best_subset([a, b], dataset, max_size=2)
    assert len(ranked) == 3
    assert ranked[0]["members"] == ["a", "b"]


def test_mosaic_center_example():
    box = te.GroundTruthBox(te.BBox(25, 25, 75, 75), 0)
    boxes, dropped = te.mosaic([[box]] * 4, [(100, 100)] * 4, size=200, pivot_x=100, pivot_y=100)
    assert [b.bbox.as_tuple() for b in boxes] == [
        (25, 25, 75, 75),
        (125, 25, 175, 75),
        (25, 125, 75, 175),
        (125, 125, 175, 175),
    ]
    assert dropped == []


def test_bench_constant_cost(dataset):
    stub = te.ConstantCostDetector(te.MockDetector("s"), 1.0)
    stats = te.bench(dataset, [stub], warmup=0, iterations=1)
    assert stats.n == len(dataset)
    assert stats.mean_ms >= 1.0


def test_cli_entry_point():
    code, out, err = te.run_cli(["stats", "--manifest", str(FIXTURE)])
    assert code == 0, err
    assert json.loads(out)["total"] == 32715
    code, _, err = te.run_cli(["evaluate", "--manifest", str(FIXTURE), "--detections", "/nonexistent.jsonl"])
    assert code == 2
    assert "/nonexistent.jsonl" in err
