#!/usr/bin/env python3
"""Regenerate fixtures/class_counts.json and its label files.

The fixture holds 100 synthetic 640x512 images whose labels add up to the
class-wise annotation counts of the thermal dataset (32,715 boxes).
"""
import json
import random
from pathlib import Path

CLASSES = ["bicycle", "bike", "bus", "car", "dog", "person", "pole"]
COUNTS = [848, 960, 760, 13456, 390, 12168, 4133]
IMAGES = 100
WIDTH, HEIGHT = 640, 512
TAGS = [["day", "clear"], ["night", "clear"], ["day", "rain"], ["night", "fog"]]


def main() -> None:
    root = Path(__file__).resolve().parent.parent / "fixtures"
    label_dir = root / "class_counts"
    label_dir.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20240521)

    lines = [[] for _ in range(IMAGES)]
    slot = 0
    for class_id, count in enumerate(COUNTS):
        for _ in range(count):
            w = rng.uniform(0.02, 0.1)
            h = rng.uniform(0.02, 0.1)
            xc = rng.uniform(0.1, 0.9)
            yc = rng.uniform(0.1, 0.9)
            lines[slot % IMAGES].append(f"{class_id} {xc:.6f} {yc:.6f} {w:.6f} {h:.6f}")
            slot += 1

    images = []
    for i in range(IMAGES):
        image_id = f"frame_{i:03d}"
        (label_dir / f"{image_id}.txt").write_text("\n".join(lines[i]) + "\n")
        images.append({
            "id": image_id,
            "width": WIDTH,
            "height": HEIGHT,
            "labels": f"class_counts/{image_id}.txt",
            "tags": TAGS[i % len(TAGS)],
        })
    manifest = {"classes": CLASSES, "images": images}
    (root / "class_counts.json").write_text(json.dumps(manifest, indent=1) + "\n")


if __name__ == "__main__":
    main()
