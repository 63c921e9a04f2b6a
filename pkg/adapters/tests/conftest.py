import json

import pytest

from ovd_adapters import AdapterConfig


@pytest.fixture()
def dataset(tmp_path):
    """Tiny dataset root: a COCO-style annotation file plus placeholder images."""
    images = []
    annotations = []
    ann_id = 1
    for i in range(1, 4):
        name = f"img_{i:03d}.jpg"
        (tmp_path / name).write_bytes(b"placeholder")
        images.append({"id": i, "file_name": name, "width": 640, "height": 640})
        for k in range(2):
            annotations.append(
                {
                    "id": ann_id,
                    "image_id": i,
                    "bbox": [40.0 + 90 * k, 60.0 + 70 * k, 50.0, 40.0],
                    "category_id": 1,
                }
            )
            ann_id += 1
    gt_path = tmp_path / "gt.json"
    gt_path.write_text(
        json.dumps(
            {
                "images": images,
                "annotations": annotations,
                "categories": [{"id": 1, "name": "flower"}],
            }
        ),
        encoding="utf-8",
    )
    return tmp_path


@pytest.fixture()
def config(dataset):
    return AdapterConfig(model="fixture", dataset_root=dataset)
