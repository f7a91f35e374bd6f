import json

import pytest
import torch

from dct_trainer.data import (
    BOS,
    EOS,
    PAD,
    BalancedLabelSampler,
    DataError,
    Record,
    RecordDataset,
    collate,
    decode,
    encode,
    load_records,
)


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def test_load_records(tmp_path):
    path = tmp_path / "dataset.jsonl"
    write_jsonl(path, [
        {"text": "a statement", "label": True, "style": "free-text"},
        {"text": "Verify: x False", "label": False, "style": "verification"},
    ])
    records = load_records(path)
    assert records[0] == Record("a statement", True, "free-text")
    assert records[1].label is False


def test_malformed_record_aborts_with_line_number(tmp_path):
    path = tmp_path / "dataset.jsonl"
    path.write_text('{"text": "ok"}\n{"no_text": 1}\n', encoding="utf-8")
    with pytest.raises(DataError, match=r":2:"):
        load_records(path)


def test_empty_dataset_aborts(tmp_path):
    path = tmp_path / "dataset.jsonl"
    path.write_text("\n\n", encoding="utf-8")
    with pytest.raises(DataError, match="empty"):
        load_records(path)


def test_encode_decode_round_trip():
    ids = encode("café", max_length=64)
    assert ids[0] == BOS and ids[-1] == EOS
    assert decode(ids) == "café"


def test_encode_truncates():
    ids = encode("x" * 500, max_length=16)
    assert len(ids) == 16


def test_dataset_keeps_every_record_verbatim():
    # no re-filtering: false-labeled records train too
    records = [Record("true text", True, "verification"),
               Record("false text", False, "verification")]
    dataset = RecordDataset(records, max_length=64)
    assert len(dataset) == 2
    assert decode(dataset[1]["ids"]) == "false text"


def test_collate_pads():
    batch = [{"ids": [BOS, 65, EOS], "label": True},
             {"ids": [BOS, 65, 66, 67, EOS], "label": False}]
    input_ids, labels = collate(batch)
    assert input_ids.shape == (2, 5)
    assert input_ids[0, 3] == PAD
    assert labels.tolist() == [True, False]


def test_balanced_sampler_alternates_classes():
    records = [Record(f"t{i}", True, "verification") for i in range(90)]
    records += [Record(f"f{i}", False, "verification") for i in range(10)]
    sampler = BalancedLabelSampler(records, torch.Generator().manual_seed(0))
    picks = list(sampler)
    assert len(picks) == 100
    labels = [records[i].label for i in picks]
    assert sum(labels) == 50  # exactly balanced each epoch
    # successive draws alternate classes
    assert all(a != b for a, b in zip(labels, labels[1:]))


def test_balanced_sampler_requires_both_labels():
    records = [Record("t", True, "verification")]
    with pytest.raises(DataError):
        BalancedLabelSampler(records, torch.Generator())
