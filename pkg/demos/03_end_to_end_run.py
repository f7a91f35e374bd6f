"""A full pipeline run against the checked-in mock script.

Unsupervised mode: the model samples its own seed claims, expands each into
implications and contradictions, double-checks the relations, scores every
statement's truth prior, solves each graph, and emits verification-style
training records. Rerunning produces byte-identical artifacts.
"""

import json
import tempfile
from dataclasses import replace
from pathlib import Path

from dct.pipeline import config_from_file, emit_dataset, load_run, run

REPO = Path(__file__).resolve().parent.parent
cfg = config_from_file(REPO / "tests" / "data" / "run_config.json")
cfg = replace(cfg, lm=replace(cfg.lm, mock_script=str(REPO / "tests" / "data" / "mock_run.json")))

with tempfile.TemporaryDirectory() as tmp:
    cfg = replace(cfg, output_dir=tmp)
    manifest = run(cfg)

    print("counts:")
    print(json.dumps(manifest.counts, indent=2, sort_keys=True))

    print("\nrecords (dataset.jsonl):")
    for line in (Path(tmp) / "dataset.jsonl").read_text().splitlines():
        record = json.loads(line)
        print(f"  label={record['label']!s:5}  {record['text'][:72]}")

    # Graph files carry everything needed to re-emit in another style.
    solved = load_run(tmp)
    print("\nsolved graphs:")
    for sg in solved:
        assignment = sg.solve.assignment
        print(f"  seed {sg.graph.seed.id}: '{sg.graph.seed.text[:48]}...' "
              f"-> {assignment[sg.graph.seed.id]} (score {sg.solve.score:.4f})")

    free_text = emit_dataset(solved, "free-text")
    print(f"\nre-emitted as free-text: {len(free_text)} inferred-true record(s)")
    for record in free_text[:4]:
        print("  ", record.text[:72])
