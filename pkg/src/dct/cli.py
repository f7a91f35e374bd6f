"""Command-line entry points: run, solve, emit, eval, simulate."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import evalharness, pipeline, toyworld
from .lm import ScriptedLM
from .solver import ScoredGraph, best_assignment
from .statements import graph_from_dict

log = logging.getLogger("dct")


def _read_jsonl(path: str) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def _print_json(data) -> None:
    print(json.dumps(data, sort_keys=True, ensure_ascii=False))


def cmd_run(args) -> int:
    cfg = pipeline.config_from_file(args.config)
    if args.output_dir:
        cfg = replace(cfg, output_dir=args.output_dir)
    manifest = pipeline.run(cfg)
    _print_json(manifest.to_dict())
    return 0


def cmd_solve(args) -> int:
    with open(args.graph, encoding="utf-8") as fh:
        data = json.load(fh)
    sg = ScoredGraph(graph=graph_from_dict(data["graph"]), priors=dict(data["priors"]))
    result = best_assignment(sg)
    _print_json(pipeline.solve_result_to_dict(result))
    return 0


def cmd_emit(args) -> int:
    solved = pipeline.load_run(args.run)
    lm = ScriptedLM.from_file(args.mock_script) if args.mock_script else None
    records = pipeline.emit_dataset(solved, args.style, lm=lm)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for record in records:
            out.write(json.dumps(record.to_dict(), sort_keys=True, ensure_ascii=False) + "\n")
    finally:
        if args.out:
            out.close()
    return 0


def _load_gold_claims(path: str) -> list[evalharness.LabeledClaim]:
    return [
        evalharness.LabeledClaim(text=row["text"], gold=bool(row["gold"]),
                                 pair_id=row.get("pair_id"))
        for row in _read_jsonl(path)
    ]


def _load_predictions(path: str) -> dict[str, bool]:
    preds = {}
    for row in _read_jsonl(path):
        value = row["pred"] if "pred" in row else row["label"]
        preds[row["text"]] = bool(value)
    return preds


def cmd_eval_verify(args) -> int:
    golds = _load_gold_claims(args.gold)
    preds = _load_predictions(args.pred)
    _print_json({"accuracy": evalharness.verification_accuracy(preds, golds),
                 "n_claims": len(golds)})
    return 0


def cmd_eval_contrast(args) -> int:
    golds = _load_gold_claims(args.gold)
    preds = _load_predictions(args.pred)
    _print_json(evalharness.contrast_metrics(preds, golds))
    return 0


def cmd_eval_qa(args) -> int:
    golds = {}
    for row in _read_jsonl(args.gold):
        item = evalharness.QAItem(question=row["question"],
                                  gold_answers=tuple(row["gold_answers"]),
                                  direction=row.get("direction", "same"))
        golds[item.question] = item
    answers = {row["question"]: row["answer"] for row in _read_jsonl(args.pred)}
    hits = {}
    by_direction: dict[str, list[bool]] = {}
    for question, item in golds.items():
        if question not in answers:
            raise SystemExit(f"missing prediction for question {question!r}")
        hit = evalharness.exact_match(answers[question], item.gold_answers)
        hits[question] = hit
        by_direction.setdefault(item.direction, []).append(hit)
    _print_json({
        "accuracy": sum(hits.values()) / len(hits),
        "n_items": len(hits),
        "by_direction": {d: sum(v) / len(v) for d, v in sorted(by_direction.items())},
    })
    return 0


def cmd_eval_graph_inference(args) -> int:
    if args.mock_script:
        lm = ScriptedLM.from_file(args.mock_script)
    else:
        lm = pipeline.build_client(pipeline.LMSettings())
    rows = []
    for line in Path(args.claims).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        rows.append(json.loads(line) if line.startswith("{") else {"text": line})
    n_correct = 0
    n_gold = 0
    for row in rows:
        label = evalharness.graph_inference_label(lm, row["text"])
        _print_json({"text": row["text"], "label": label})
        if "gold" in row:
            n_gold += 1
            n_correct += label == bool(row["gold"])
    if n_gold:
        print(f"accuracy: {n_correct / n_gold:.4f} ({n_correct}/{n_gold})", file=sys.stderr)
    return 0


def cmd_simulate(args) -> int:
    if args.world:
        with open(args.world, encoding="utf-8") as fh:
            world = toyworld.world_from_dict(json.load(fh))
        questions = [args.question] if args.question else list(world.questions)
        for q in questions:
            try:
                report = toyworld.verify_improvement(world, q)
            except toyworld.UndefinedPosteriorError as exc:
                _print_json({"q": q, "error": str(exc)})
                continue
            _print_json(report.to_dict())
        return 0
    if args.random_trials:
        rng = np.random.default_rng(args.rng_seed)
        for trial in range(args.random_trials):
            world = toyworld.random_world(rng, rng.integers(2, args.max_questions + 1),
                                          rng.integers(2, args.max_answers + 1))
            for q in world.questions:
                report = toyworld.verify_improvement(world, q)
                _print_json({"trial": trial, **report.to_dict()})
        return 0
    raise SystemExit("simulate requires --world or --random-trials")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dct", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a full pipeline run from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir", help="override the config's output_dir")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("solve", help="solve one serialized scored graph")
    p.add_argument("--graph", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("emit", help="re-emit training records from a finished run")
    p.add_argument("--run", required=True)
    p.add_argument("--style", required=True, choices=pipeline.STYLES)
    p.add_argument("--mock-script", help="scripted LM for qa conversion")
    p.add_argument("--out", help="write records here instead of stdout")
    p.set_defaults(func=cmd_emit)

    p = sub.add_parser("eval", help="score predictions")
    eval_sub = p.add_subparsers(dest="eval_command", required=True)

    q = eval_sub.add_parser("verify", help="fact-verification accuracy")
    q.add_argument("--pred", required=True)
    q.add_argument("--gold", required=True)
    q.set_defaults(func=cmd_eval_verify)

    q = eval_sub.add_parser("contrast", help="contrast-pair coherence metrics")
    q.add_argument("--pred", required=True)
    q.add_argument("--gold", required=True)
    q.set_defaults(func=cmd_eval_contrast)

    q = eval_sub.add_parser("qa", help="normalized exact-match QA accuracy")
    q.add_argument("--pred", required=True)
    q.add_argument("--gold", required=True)
    q.set_defaults(func=cmd_eval_qa)

    q = eval_sub.add_parser("graph-inference",
                            help="label claims by solving a deduction graph per claim")
    q.add_argument("--claims", required=True)
    q.add_argument("--mock-script")
    q.set_defaults(func=cmd_eval_graph_inference)

    p = sub.add_parser("simulate", help="verify the improvement guarantee on toy worlds")
    p.add_argument("--world", help="world JSON file")
    p.add_argument("--question", help="restrict to one question id")
    p.add_argument("--random-trials", type=int, default=0)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--max-questions", type=int, default=5)
    p.add_argument("--max-answers", type=int, default=5)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
