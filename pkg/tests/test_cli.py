import json
from pathlib import Path

import numpy as np
import pytest

from conftest import star_graph
from dct.cli import main
from dct.statements import graph_to_dict
from dct.toyworld import helpful_world, prompt_ignoring_world, world_to_dict

DATA = Path(__file__).parent / "data"


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out


def test_solve_command(tmp_path, capsys):
    sg = star_graph(0.2, (0.9,), (0.9,))
    payload = {"graph": graph_to_dict(sg.graph), "priors": dict(sg.priors)}
    graph_file = tmp_path / "graph.json"
    graph_file.write_text(json.dumps(payload), encoding="utf-8")
    code, out = run_cli(capsys, "solve", "--graph", str(graph_file))
    assert code == 0
    result = json.loads(out)
    assert result["assignment"] == {"0": False, "0.1": True, "0.2": True}
    assert result["score"] == pytest.approx(0.648, abs=1e-12)
    assert result["n_candidates"] == 5


def test_run_command_writes_artifacts(tmp_path, capsys):
    config = json.loads((DATA / "run_config.json").read_text())
    config["output_dir"] = str(tmp_path / "out")
    config["lm"]["mock_script"] = str(DATA / "mock_run.json")
    config_file = tmp_path / "config.json"
    config_file.write_text(json.dumps(config), encoding="utf-8")

    code, out = run_cli(capsys, "run", "--config", str(config_file))
    assert code == 0
    manifest = json.loads(out)
    assert manifest["counts"]["seeds"] == 2
    assert (tmp_path / "out" / "dataset.jsonl").exists()
    assert (tmp_path / "out" / "manifest.json").exists()
    assert len(list((tmp_path / "out" / "graphs").glob("*.json"))) == 2


def test_emit_command_restyles_a_run(tmp_path, capsys):
    config = json.loads((DATA / "run_config.json").read_text())
    config["output_dir"] = str(tmp_path / "out")
    config["lm"]["mock_script"] = str(DATA / "mock_run.json")
    config_file = tmp_path / "config.json"
    config_file.write_text(json.dumps(config), encoding="utf-8")
    run_cli(capsys, "run", "--config", str(config_file))

    code, out = run_cli(capsys, "emit", "--run", str(tmp_path / "out"),
                        "--style", "free-text")
    assert code == 0
    records = [json.loads(line) for line in out.splitlines()]
    assert records
    assert all(r["label"] is True for r in records)
    assert all(r["style"] == "free-text" for r in records)


def test_eval_verify_command(tmp_path, capsys):
    gold = tmp_path / "gold.jsonl"
    gold.write_text('{"text": "a", "gold": true}\n{"text": "b", "gold": false}\n',
                    encoding="utf-8")
    pred = tmp_path / "pred.jsonl"
    pred.write_text('{"text": "a", "pred": true}\n{"text": "b", "pred": true}\n',
                    encoding="utf-8")
    code, out = run_cli(capsys, "eval", "verify", "--pred", str(pred), "--gold", str(gold))
    assert code == 0
    assert json.loads(out) == {"accuracy": 0.5, "n_claims": 2}


def test_eval_contrast_command(tmp_path, capsys):
    gold = tmp_path / "gold.jsonl"
    gold.write_text(
        '{"text": "t", "gold": true, "pair_id": "p"}\n'
        '{"text": "f", "gold": false, "pair_id": "p"}\n',
        encoding="utf-8",
    )
    pred = tmp_path / "pred.jsonl"
    pred.write_text('{"text": "t", "pred": true}\n{"text": "f", "pred": true}\n',
                    encoding="utf-8")
    code, out = run_cli(capsys, "eval", "contrast", "--pred", str(pred), "--gold", str(gold))
    assert json.loads(out) == {"both_true": 1.0, "both_correct": 0.0, "accuracy": 0.5}


def test_eval_qa_command(tmp_path, capsys):
    gold = tmp_path / "gold.jsonl"
    gold.write_text(
        '{"question": "Who?", "gold_answers": ["Jennifer Lawrence"], "direction": "reverse"}\n'
        '{"question": "Where?", "gold_answers": ["Paris"], "direction": "same"}\n',
        encoding="utf-8",
    )
    pred = tmp_path / "pred.jsonl"
    pred.write_text(
        '{"question": "Who?", "answer": "jennifer lawrence."}\n'
        '{"question": "Where?", "answer": "London"}\n',
        encoding="utf-8",
    )
    code, out = run_cli(capsys, "eval", "qa", "--pred", str(pred), "--gold", str(gold))
    result = json.loads(out)
    assert result["accuracy"] == 0.5
    assert result["by_direction"] == {"reverse": 1.0, "same": 0.0}


def test_eval_graph_inference_command(tmp_path, capsys):
    from conftest import TEMPLATES, add_truth
    from dct.lm import ScriptedLM

    mock = ScriptedLM()
    claim = "The sky is green."
    mock.add(TEMPLATES["implication"].render(claim=claim), "")
    mock.add(TEMPLATES["contradiction"].render(claim=claim), "")
    add_truth(mock, claim, 0.2)
    script = tmp_path / "script.json"
    mock.save(str(script))
    claims = tmp_path / "claims.jsonl"
    claims.write_text(json.dumps({"text": claim, "gold": False}) + "\n", encoding="utf-8")

    code, out = run_cli(capsys, "eval", "graph-inference", "--claims", str(claims),
                        "--mock-script", str(script))
    assert code == 0
    assert json.loads(out) == {"text": claim, "label": False}


def test_simulate_world_file(tmp_path, capsys):
    world = prompt_ignoring_world(np.random.default_rng(0))
    world_file = tmp_path / "world.json"
    world_file.write_text(json.dumps(world_to_dict(world)), encoding="utf-8")
    code, out = run_cli(capsys, "simulate", "--world", str(world_file))
    assert code == 0
    reports = [json.loads(line) for line in out.splitlines()]
    assert len(reports) == len(world.questions)
    assert all(r["boundary"] for r in reports)
    assert all(not r["conclusion_holds"] for r in reports)


def test_simulate_single_question(tmp_path, capsys):
    world = helpful_world(np.random.default_rng(1))
    world_file = tmp_path / "world.json"
    world_file.write_text(json.dumps(world_to_dict(world)), encoding="utf-8")
    code, out = run_cli(capsys, "simulate", "--world", str(world_file),
                        "--question", "q1")
    reports = [json.loads(line) for line in out.splitlines()]
    assert len(reports) == 1
    assert reports[0]["q"] == "q1"


def test_simulate_random_trials(capsys):
    code, out = run_cli(capsys, "simulate", "--random-trials", "3", "--rng-seed", "11",
                        "--max-questions", "3", "--max-answers", "3")
    assert code == 0
    reports = [json.loads(line) for line in out.splitlines()]
    assert {r["trial"] for r in reports} == {0, 1, 2}
    assert all(r["chain_monotone"] for r in reports)
