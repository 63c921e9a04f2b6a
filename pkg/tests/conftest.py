import json
from pathlib import Path

import pytest

from promptaxes import cowpea_flower_axes, make_synthetic_gt, save_coco

FIXTURE_DIR = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def flower_axes():
    return cowpea_flower_axes()


@pytest.fixture(scope="session")
def small_gt():
    return make_synthetic_gt(n_images=6, boxes_per_image=3, seed=7)


@pytest.fixture()
def gt_file(small_gt, tmp_path):
    path = tmp_path / "gt.json"
    save_coco(small_gt, path)
    return path


@pytest.fixture(scope="session")
def planted_fixture_path():
    return FIXTURE_DIR / "mock_planted.json"


@pytest.fixture(scope="session")
def planted_fixture(planted_fixture_path):
    with open(planted_fixture_path, encoding="utf-8") as f:
        return json.load(f)


@pytest.fixture(scope="session")
def pod_stub_path():
    return FIXTURE_DIR / "translation_pod_stub.json"
