import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import write_synthetic_idx  # noqa: E402


@pytest.fixture(scope="session")
def synth_data(tmp_path_factory):
    """Four synthetic IDX files shared across pipeline tests."""
    root = tmp_path_factory.mktemp("synth-idx")
    return write_synthetic_idx(root, n_train=260, n_test=100)


@pytest.fixture
def make_config(synth_data, tmp_path):
    """Write a small experiment config pointing at the synthetic dataset."""

    def _make(name="exp.cfg", **overrides):
        out_dir = overrides.pop("out_dir", tmp_path / "run")
        settings = {
            "train_images": synth_data["train_images"],
            "train_labels": synth_data["train_labels"],
            "test_images": synth_data["test_images"],
            "test_labels": synth_data["test_labels"],
            "out_dir": out_dir,
            "seed": 42,
            "ae_epochs": 2,
            "ae_batch": 32,
            "clf_epochs": 3,
            "clf_batch": 32,
            "clf_widths": "16, 8",
            "lr_step": 15,
        }
        settings.update(overrides)
        lines = [f"{key} = {value}" for key, value in settings.items()]
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n")
        return path

    return _make
