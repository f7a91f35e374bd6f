"""The trainer consumes the pipeline's dataset.jsonl through the file
contract only: produce one with the real `dct` CLI and train on it.
"""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from dct_trainer import TrainerConfig, train

REPO_ROOT = Path(__file__).resolve().parents[2]
PIPELINE_DATA = REPO_ROOT / "tests" / "data"


@pytest.mark.skipif(not (PIPELINE_DATA / "mock_run.json").exists(),
                    reason="pipeline mock script not present")
def test_train_on_a_real_pipeline_dataset(tmp_path):
    config = json.loads((PIPELINE_DATA / "run_config.json").read_text())
    config["output_dir"] = str(tmp_path / "run")
    config["lm"]["mock_script"] = str(PIPELINE_DATA / "mock_run.json")
    run_config = tmp_path / "run_config.json"
    run_config.write_text(json.dumps(config), encoding="utf-8")

    proc = subprocess.run(
        [sys.executable, "-m", "dct.cli", "run", "--config", str(run_config)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    dataset = tmp_path / "run" / "dataset.jsonl"
    assert dataset.exists()

    result = train(TrainerConfig(
        dataset_path=str(dataset),
        output_dir=str(tmp_path / "trainer"),
        base_model="tiny-32x1",
        epochs=2,
        warmup_steps=5,
        learning_rate=1e-3,
        weighted_sampling=True,
        seed=0,
    ))
    assert result.steps == 2 * 3  # 12 records / batch 4, 2 epochs
    assert result.epoch_mean_losses[-1] < result.epoch_mean_losses[0]
    assert (result.adapter_dir / "adapter_weights.pt").exists()
