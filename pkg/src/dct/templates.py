"""Prompt templates: loading, checksum verification, rendering.

Templates ship as plain-text files in the package's ``prompts/`` directory,
one file per name, pinned by a sha256 manifest (``checksums.json``). Each
template embeds a worked exemplar; :func:`exemplar_completion` recovers the
text a model would have produced for that exemplar, which tests and mock
scripts reuse.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

TEMPLATE_NAMES = (
    "implication",
    "implication-mquake",
    "correlative-implication",
    "contradiction",
    "related-claims",
    "seed-claims",
    "double-check-implication",
    "double-check-contradiction",
    "truth-value",
    "qa-conversion",
)

#: Placeholders each template must contain exactly once.
PLACEHOLDERS: dict[str, tuple[str, ...]] = {
    "implication": ("claim",),
    "implication-mquake": ("claim",),
    "correlative-implication": ("claim",),
    "contradiction": ("claim",),
    "related-claims": ("claim",),
    "seed-claims": (),
    "double-check-implication": ("claim1", "claim2"),
    "double-check-contradiction": ("claim1", "claim2"),
    "truth-value": ("claim",),
    "qa-conversion": ("sentence",),
}

#: How many list items each generation template asks for.
EXPECTED_ITEMS = {
    "implication": 3,
    "implication-mquake": 5,
    "correlative-implication": 5,
    "contradiction": 3,
    "related-claims": 5,
    "seed-claims": 10,
}

# (start marker, end marker) bracketing the completion a model would have
# produced for the template's own exemplar input.
_EXEMPLAR_SPANS = {
    "implication": ("Logical implications:\n", "\n\n"),
    "implication-mquake": ("Logical implications:\n", "\n\n"),
    "correlative-implication": ("Related Facts:\n", "\n\nMain Claim: {claim}"),
    "contradiction": ("Similar but contradicting claims:\n", "\n\n"),
    "related-claims": ("Related Correct Facts:\n", "\nClaim (may be true or false): {claim}"),
}


class TemplateError(Exception):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    """A named prompt body with {placeholder} slots."""

    name: str
    body: str

    def render(self, **values: str) -> str:
        expected = PLACEHOLDERS.get(self.name)
        if expected is not None and sorted(values) != sorted(expected):
            raise TemplateError(
                f"template {self.name!r} takes {expected}, got {tuple(sorted(values))}"
            )
        out = self.body
        for key, value in values.items():
            slot = "{" + key + "}"
            if slot not in out:
                raise TemplateError(f"template {self.name!r} has no {slot} placeholder")
            out = out.replace(slot, value)
        return out


def _prompts_dir() -> Path:
    return Path(str(resources.files("dct").joinpath("prompts")))


def template_path(name: str, directory: str | Path | None = None) -> Path:
    base = Path(directory) if directory is not None else _prompts_dir()
    return base / f"{name}.txt"


def load_template(name: str, directory: str | Path | None = None) -> PromptTemplate:
    if name not in TEMPLATE_NAMES:
        raise TemplateError(f"unknown template {name!r}")
    body = template_path(name, directory).read_text(encoding="utf-8")
    return PromptTemplate(name=name, body=body)


def load_templates(directory: str | Path | None = None) -> dict[str, PromptTemplate]:
    return {name: load_template(name, directory) for name in TEMPLATE_NAMES}


def template_checksums(directory: str | Path | None = None) -> dict[str, str]:
    return {
        name: hashlib.sha256(
            template_path(name, directory).read_bytes()
        ).hexdigest()
        for name in TEMPLATE_NAMES
    }


def pinned_checksums(directory: str | Path | None = None) -> dict[str, str]:
    base = Path(directory) if directory is not None else _prompts_dir()
    with open(base / "checksums.json", encoding="utf-8") as fh:
        return json.load(fh)


def verify_checksums(directory: str | Path | None = None) -> list[str]:
    """Names whose file bytes no longer match the pinned manifest."""
    pinned = pinned_checksums(directory)
    actual = template_checksums(directory)
    return sorted(
        name for name in TEMPLATE_NAMES
        if pinned.get(name) != actual.get(name)
    )


def exemplar_completion(name: str, directory: str | Path | None = None) -> str:
    """The completion the template's own worked exemplar corresponds to.

    For list templates this is the numbered exemplar block; for the
    correlative template it includes the facts section, the blank line, and
    the "Implications:" section, exactly as a model continuation would.
    """
    if name not in _EXEMPLAR_SPANS:
        raise TemplateError(f"template {name!r} has no exemplar completion")
    body = load_template(name, directory).body
    start_marker, end_marker = _EXEMPLAR_SPANS[name]
    start = body.index(start_marker) + len(start_marker)
    end = body.index(end_marker, start)
    return body[start:end]
