"""Language model access: an HTTP completions client, a scripted mock, and
the two scoring primitives built on top of them (label-token truth
probability and two-way verdict probability).

Both clients satisfy the same contract: ``complete(prompt, params)`` returns
a :class:`CompletionResult`. Everything downstream is client-agnostic, which
is what makes the whole pipeline testable offline.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import threading
import time
from dataclasses import dataclass
from typing import Any, Mapping, Optional, Protocol, Sequence

import requests

log = logging.getLogger(__name__)

ENDPOINT_ENV = "DCT_LM_ENDPOINT"
MODEL_ENV = "DCT_LM_MODEL"
TOKEN_ENV = "DCT_LM_TOKEN"


class LMError(Exception):
    """Base class for model-access failures."""


class TransportError(LMError):
    """The endpoint could not be reached (after retries)."""

    def __init__(self, message: str, attempts: int):
        super().__init__(f"{message} (after {attempts} attempt(s))")
        self.attempts = attempts


class ScriptMissError(LMError):
    """The scripted mock has no entry for a prompt: a test-setup bug."""


class UnsupportedCapabilityError(LMError):
    """The model/API does not expose token log-probabilities."""


class ScoringError(LMError):
    """Neither label token appeared among the returned top candidates."""


class UnparseableVerdictError(LMError):
    """A verdict completion matched neither marker."""

    def __init__(self, raw_text: str):
        super().__init__(f"completion matches neither verdict marker: {raw_text!r}")
        self.raw_text = raw_text


@dataclass(frozen=True)
class SamplingParams:
    """Decoding settings for one completion call.

    Defaults are temperature 0.6 / top-p 0.9; seed-claim sampling uses a
    higher temperature (0.9) for diversity.
    """

    temperature: float = 0.6
    top_p: float = 0.9
    max_tokens: int = 256
    stop_sequences: tuple[str, ...] = ()

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if not (0.0 < self.top_p <= 1.0):
            raise ValueError(f"top_p must be in (0, 1], got {self.top_p}")
        if self.max_tokens < 1:
            raise ValueError(f"max_tokens must be >= 1, got {self.max_tokens}")


@dataclass(frozen=True)
class CompletionResult:
    """A completion plus optional token-level log-probabilities.

    ``token_logprobs`` covers the sampled tokens; ``top_logprobs`` holds, per
    position, the candidate-token -> logprob map needed for label scoring.
    """

    text: str
    token_logprobs: Optional[tuple[tuple[str, float], ...]] = None
    top_logprobs: Optional[tuple[Mapping[str, float], ...]] = None


@dataclass(frozen=True)
class TruthScore:
    """Two-way normalized probability that a statement is true."""

    p_true: float

    def __post_init__(self):
        if not (0.0 <= self.p_true <= 1.0):
            raise ValueError(f"p_true must be in [0, 1], got {self.p_true}")

    @property
    def p_false(self) -> float:
        return 1.0 - self.p_true


class CompletionClient(Protocol):
    def complete(self, prompt: str, params: SamplingParams) -> CompletionResult: ...


def prompt_fingerprint(prompt: str) -> str:
    """Hash of the exact prompt string; exactness keeps template drift detectable."""
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def _apply_stop(text: str, stop_sequences: Sequence[str]) -> str:
    # Defensive client-side truncation; servers usually stop on their own.
    for stop in stop_sequences:
        idx = text.find(stop)
        if idx >= 0:
            text = text[:idx]
    return text


class HTTPCompletionClient:
    """Client for an HTTP completions endpoint.

    POSTs a JSON body {model, prompt, temperature, top_p, max_tokens, stop,
    logprobs} and reads the completion text plus optional per-token
    log-probabilities from the response (both the OpenAI ``choices`` shape
    and a flat {text, logprobs} shape are accepted). Transport failures are
    retried with exponential backoff. A semaphore bounds in-flight requests;
    apart from connection pooling the client is stateless.
    """

    def __init__(
        self,
        endpoint: str | None = None,
        model: str | None = None,
        token: str | None = None,
        *,
        logprobs: int = 20,
        timeout: float = 60.0,
        max_retries: int = 3,
        backoff: float = 1.0,
        max_in_flight: int = 8,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        if not self.endpoint:
            raise ValueError(f"no endpoint configured (set {ENDPOINT_ENV} or pass endpoint=)")
        self.model = model or os.environ.get(MODEL_ENV, "")
        self.token = token or os.environ.get(TOKEN_ENV)
        self.logprobs = logprobs
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff
        self._session = session or requests.Session()
        self._slots = threading.Semaphore(max_in_flight)

    def complete(self, prompt: str, params: SamplingParams) -> CompletionResult:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        payload = {
            "model": self.model,
            "prompt": prompt,
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
            "stop": list(params.stop_sequences) or None,
            "logprobs": self.logprobs,
        }
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"

        last_error: Exception | None = None
        for attempt in range(1, self.max_retries + 1):
            try:
                with self._slots:
                    resp = self._session.post(
                        self.endpoint, json=payload, headers=headers, timeout=self.timeout
                    )
                if resp.status_code >= 500:
                    raise requests.HTTPError(f"server error {resp.status_code}")
                resp.raise_for_status()
                return _parse_response(resp.json(), params)
            except (requests.RequestException, ValueError) as exc:
                last_error = exc
                if attempt < self.max_retries:
                    delay = self.backoff * (2 ** (attempt - 1))
                    log.warning("completion attempt %d failed (%s); retrying in %.1fs",
                                attempt, exc, delay)
                    time.sleep(delay)
        raise TransportError(str(last_error), attempts=self.max_retries)


def _parse_response(data: Mapping[str, Any], params: SamplingParams) -> CompletionResult:
    if "choices" in data:
        choice = data["choices"][0]
    else:
        choice = data
    text = choice.get("text", "")
    lp = choice.get("logprobs")
    token_logprobs = None
    top_logprobs = None
    if lp:
        tokens = lp.get("tokens") or []
        per_token = lp.get("token_logprobs") or []
        token_logprobs = tuple(zip(tokens, per_token))
        top = lp.get("top_logprobs")
        if top:
            top_logprobs = tuple(dict(t) for t in top)
    return CompletionResult(
        text=_apply_stop(text, params.stop_sequences),
        token_logprobs=token_logprobs,
        top_logprobs=top_logprobs,
    )


class ScriptedLM:
    """Deterministic mock client driven by a prompt-fingerprint script.

    Each entry keys a queue of responses by the sha256 of the exact prompt;
    successive calls with the same prompt pop successive responses (the last
    one repeats). Responses depend only on the prompt, so results are
    independent of the concurrency schedule. A prompt with no entry raises
    :class:`ScriptMissError` - that is a test-setup bug, not a retryable
    condition.
    """

    def __init__(self):
        self._entries: dict[str, list[CompletionResult]] = {}
        self._prompts: dict[str, str] = {}  # fingerprint -> prompt, for script files
        self._lock = threading.Lock()

    def add(
        self,
        prompt: str,
        text: str,
        *,
        top_logprobs: Mapping[str, float] | None = None,
        token_logprobs: Sequence[tuple[str, float]] | None = None,
    ) -> None:
        """Append one scripted response for an exact prompt string."""
        result = CompletionResult(
            text=text,
            token_logprobs=tuple(token_logprobs) if token_logprobs else None,
            top_logprobs=(dict(top_logprobs),) if top_logprobs else None,
        )
        fp = prompt_fingerprint(prompt)
        self._entries.setdefault(fp, []).append(result)
        self._prompts[fp] = prompt

    def complete(self, prompt: str, params: SamplingParams) -> CompletionResult:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        fp = prompt_fingerprint(prompt)
        with self._lock:
            queue = self._entries.get(fp)
            if not queue:
                head = prompt if len(prompt) <= 120 else prompt[:117] + "..."
                raise ScriptMissError(f"no scripted response for fingerprint {fp[:12]} ({head!r})")
            result = queue.pop(0) if len(queue) > 1 else queue[0]
        return CompletionResult(
            text=_apply_stop(result.text, params.stop_sequences),
            token_logprobs=result.token_logprobs,
            top_logprobs=result.top_logprobs,
        )

    # -- script files --------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        entries = []
        for fp, queue in sorted(self._entries.items()):
            entry: dict[str, Any] = {"fingerprint": fp}
            if fp in self._prompts:
                entry["prompt"] = self._prompts[fp]
            entry["completions"] = [
                {
                    "text": r.text,
                    "token_logprobs": [list(t) for t in r.token_logprobs] if r.token_logprobs else None,
                    "top_logprobs": [dict(t) for t in r.top_logprobs] if r.top_logprobs else None,
                }
                for r in queue
            ]
            entries.append(entry)
        return {"entries": entries}

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, ensure_ascii=False, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ScriptedLM":
        mock = cls()
        for entry in data["entries"]:
            fp = entry.get("fingerprint")
            prompt = entry.get("prompt")
            if fp is None and prompt is None:
                raise ValueError("script entry needs a 'prompt' or a 'fingerprint'")
            if fp is None:
                fp = prompt_fingerprint(prompt)
            if prompt is not None:
                mock._prompts[fp] = prompt
            for comp in entry["completions"]:
                result = CompletionResult(
                    text=comp["text"],
                    token_logprobs=tuple(tuple(t) for t in comp["token_logprobs"])
                    if comp.get("token_logprobs") else None,
                    top_logprobs=tuple(dict(t) for t in comp["top_logprobs"])
                    if comp.get("top_logprobs") else None,
                )
                mock._entries.setdefault(fp, []).append(result)
        return mock

    @classmethod
    def from_file(cls, path: str) -> "ScriptedLM":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


# --- scoring primitives -----------------------------------------------------

#: Params for single-label scoring calls: one token is all we need.
SCORING_PARAMS = SamplingParams(temperature=0.6, top_p=0.9, max_tokens=1)

VERDICT_PARAMS = SamplingParams(temperature=0.6, top_p=0.9, max_tokens=128)


def _candidate_logprob(candidates: Mapping[str, float], label: str) -> float | None:
    """Best logprob among candidate tokens that begin the label word.

    A candidate matches when its trimmed, lowercased form is a non-empty
    prefix of the label (first-divergent-token rule: 'true' vs ' True' vs
    'tr' all count for 'true').
    """
    best = None
    target = label.strip().lower()
    for token, lp in candidates.items():
        norm = token.strip().lower()
        if norm and target.startswith(norm):
            if best is None or lp > best:
                best = lp
    return best


def truth_probability(
    lm: CompletionClient,
    statement_text: str,
    fewshot_prompt: str,
    *,
    label_tokens: tuple[str, str] = ("true", "false"),
) -> TruthScore:
    """Two-way normalized probability of the true-label vs false-label token.

    ``fewshot_prompt`` must end at the position where the label token is
    generated (right after "Label:"). ``label_tokens`` overrides the label
    words for models with unusual tokenizations.
    """
    result = lm.complete(fewshot_prompt, SCORING_PARAMS)
    if not result.top_logprobs:
        raise UnsupportedCapabilityError(
            "model/API did not return token log-probabilities; cannot score truth value"
        )
    candidates = result.top_logprobs[0]
    l_true = _candidate_logprob(candidates, label_tokens[0])
    l_false = _candidate_logprob(candidates, label_tokens[1])
    if l_true is None or l_false is None:
        missing = label_tokens[0] if l_true is None else label_tokens[1]
        raise ScoringError(
            f"label token {missing!r} not among top candidates while scoring {statement_text!r}"
        )
    # p_true = exp(l_t) / (exp(l_t) + exp(l_f)), computed stably.
    p_true = 1.0 / (1.0 + math.exp(l_false - l_true))
    return TruthScore(p_true=p_true)


def _verdict_region(text: str) -> str:
    """The line holding the first "Final Verdict:", or the whole text."""
    idx = text.find("Final Verdict:")
    if idx < 0:
        return text
    end = text.find("\n", idx)
    return text[idx:] if end < 0 else text[idx:end]


def verdict_probability(
    lm: CompletionClient,
    prompt: str,
    positive_marker: str,
    negative_marker: str,
    *,
    params: SamplingParams = VERDICT_PARAMS,
) -> float:
    """Probability that the model's verdict is the positive marker.

    Generates the verdict continuation and matches markers case-insensitively
    with longest-match-first (so "Not contradictory" is never misread as
    "Contradictory"). When the text matches neither marker but first-token
    candidates are available, falls back to normalizing the log-probabilities
    of the first divergent token of each marker.
    """
    if not positive_marker or not negative_marker or positive_marker == negative_marker:
        raise ValueError("markers must be distinct non-empty strings")
    result = lm.complete(prompt, params)
    region = _verdict_region(result.text).lower()

    matches = []
    for marker, value in ((positive_marker, 1.0), (negative_marker, 0.0)):
        idx = region.find(marker.lower())
        if idx >= 0:
            # earliest match wins; at the same position the longer marker wins
            matches.append((idx, -len(marker), value))
    if matches:
        matches.sort()
        return matches[0][2]

    if result.top_logprobs:
        candidates = result.top_logprobs[0]
        l_pos = _candidate_logprob(candidates, positive_marker)
        l_neg = _candidate_logprob(candidates, negative_marker)
        if l_pos is not None and l_neg is not None:
            return 1.0 / (1.0 + math.exp(l_neg - l_pos))

    raise UnparseableVerdictError(result.text)
