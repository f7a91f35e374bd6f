"""Dataset loading, byte-level tokenization, and class-balanced sampling.

Records come verbatim from the pipeline's dataset.jsonl; the trainer never
re-filters them (emission rules were applied upstream). Texts are tokenized
at the byte level so no vocabulary files are needed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import torch
from torch.utils.data import Dataset

BOS = 256
EOS = 257
PAD = 258
VOCAB_SIZE = 259


class DataError(Exception):
    pass


@dataclass(frozen=True)
class Record:
    text: str
    label: bool
    style: str


def load_records(path: str | Path) -> list[Record]:
    """Parse dataset.jsonl; a malformed line aborts with its line number."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
                text = data["text"]
                if not isinstance(text, str) or not text:
                    raise ValueError("empty or non-string text")
                record = Record(text=text, label=bool(data.get("label", True)),
                                style=data.get("style", "free-text"))
            except (ValueError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: malformed record ({exc})") from exc
            records.append(record)
    if not records:
        raise DataError(f"{path}: dataset is empty")
    return records


def encode(text: str, max_length: int) -> list[int]:
    body = list(text.encode("utf-8"))[: max_length - 2]
    return [BOS] + body + [EOS]


def decode(ids: list[int]) -> str:
    return bytes(i for i in ids if i < 256).decode("utf-8", errors="replace")


class RecordDataset(Dataset):
    """Every record, tokenized; index order matches the input file."""

    def __init__(self, records: list[Record], max_length: int):
        self.records = records
        self.max_length = max_length

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, idx: int):
        record = self.records[idx]
        return {"ids": encode(record.text, self.max_length), "label": record.label}


def collate(batch):
    width = max(len(item["ids"]) for item in batch)
    input_ids = torch.full((len(batch), width), PAD, dtype=torch.long)
    for row, item in enumerate(batch):
        input_ids[row, : len(item["ids"])] = torch.tensor(item["ids"], dtype=torch.long)
    labels = torch.tensor([item["label"] for item in batch], dtype=torch.bool)
    return input_ids, labels


class BalancedLabelSampler(torch.utils.data.Sampler):
    """Inverse-frequency sampling realized as alternating class draws.

    Each epoch yields len(records) indices, alternating between the true and
    false classes and drawing within a class with replacement, so a skewed
    label split trains near 50/50. Deterministic given the generator seed;
    each epoch reshuffles.
    """

    def __init__(self, records: list[Record], generator: torch.Generator):
        self.by_label = {
            True: [i for i, r in enumerate(records) if r.label],
            False: [i for i, r in enumerate(records) if not r.label],
        }
        if not self.by_label[True] or not self.by_label[False]:
            raise DataError("balanced sampling needs both labels present")
        self.n = len(records)
        self.generator = generator

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        order = [True, False]
        start = int(torch.randint(0, 2, (1,), generator=self.generator).item())
        for position in range(self.n):
            label = order[(position + start) % 2]
            pool = self.by_label[label]
            pick = int(torch.randint(0, len(pool), (1,), generator=self.generator).item())
            yield pool[pick]


def make_loader(records: list[Record], config, generator: torch.Generator):
    """DataLoader for one training run; balanced sampling only when asked for
    and when the dataset is a labeled verification set."""
    dataset = RecordDataset(records, config.max_length)
    balanced = (config.weighted_sampling
                and any(r.style == "verification" for r in records)
                and len({r.label for r in records}) == 2)
    if balanced:
        sampler = BalancedLabelSampler(records, generator)
        return torch.utils.data.DataLoader(dataset, batch_size=config.batch_size,
                                           sampler=sampler, collate_fn=collate), True
    return torch.utils.data.DataLoader(dataset, batch_size=config.batch_size,
                                       shuffle=True, generator=generator,
                                       collate_fn=collate), False
