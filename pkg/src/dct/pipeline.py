"""End-to-end orchestration: seed acquisition, generation, double-checking,
truth-prior scoring, solving, and dataset emission, with run artifacts
persisted under the output directory:

    graphs/NNNN.json   one solved graph per seed (graph + priors + solve +
                       question conversions + correlative facts)
    dataset.jsonl      one TrainingRecord per line
    manifest.json      config snapshot, per-stage counts, template checksums

A run against a scripted mock is a pure function of (config, script): output
bytes are identical across invocations. Per-seed failures are recorded in the
manifest's error ledger and skipped; configuration errors abort before any
model call.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

from .generation import (
    ConversionError,
    GenerationConfig,
    double_check,
    generate_children,
    generate_correlative,
    generate_related,
    generate_seed_claims,
    to_question,
)
from .lm import (
    CompletionClient,
    HTTPCompletionClient,
    SamplingParams,
    ScriptedLM,
    truth_probability,
)
from .solver import ScoredGraph, SolveResult, closed_form_best
from .statements import (
    DeductionGraph,
    Statement,
    TruthAssignment,
    graph_from_dict,
    graph_to_dict,
    validate_graph,
)
from .templates import PromptTemplate, load_templates, template_checksums, verify_checksums

log = logging.getLogger(__name__)

MODES = ("unsupervised", "supervised", "semi-supervised", "editing", "transductive")
STYLES = ("verification", "free-text", "qa")

#: Pinned rendering for verification-style records; both truth values are
#: positive training examples of the verification task.
VERIFICATION_FORMAT = "Verify the following statement: {text} {label}"


class PipelineConfigError(Exception):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage


@contextmanager
def _stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


@dataclass(frozen=True)
class LMSettings:
    endpoint: Optional[str] = None
    model: Optional[str] = None
    token: Optional[str] = None
    mock_script: Optional[str] = None
    logprobs: int = 20
    max_in_flight: int = 8
    timeout: float = 60.0


@dataclass(frozen=True)
class RunConfig:
    mode: str
    output_dir: str
    task_style: str = "free-text"
    seeds_path: Optional[str] = None
    double_check: bool = False
    double_check_threshold: float = 0.5
    generation: GenerationConfig = GenerationConfig()
    # seed-claim sampling runs hotter for diversity
    seed_sampling: SamplingParams = SamplingParams(temperature=0.9, top_p=0.9, max_tokens=512)
    lm: LMSettings = LMSettings()
    rng_seed: int = 0
    n_seed_queries: int = 10
    seeds_per_query: int = 10
    implication_templates: tuple[str, ...] = ("implication",)
    contradiction_template: Optional[str] = "contradiction"
    workers: int = 4


@dataclass(frozen=True)
class TrainingRecord:
    """One emitted fine-tuning example, fully rendered for its task style."""

    text: str
    label: bool
    source_id: str
    graph_id: str
    style: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "text": self.text,
            "label": self.label,
            "source_id": self.source_id,
            "graph_id": self.graph_id,
            "style": self.style,
        }


@dataclass
class SolvedGraph:
    """A graph together with its priors, solve result, and emission aids."""

    graph: DeductionGraph
    priors: dict[str, float]
    solve: Optional[SolveResult] = None
    questions: dict[str, str] = field(default_factory=dict)
    related_facts: list[str] = field(default_factory=list)


@dataclass
class RunManifest:
    config: dict[str, Any]
    counts: dict[str, Any]
    template_checksums: dict[str, str]
    errors: list[dict[str, str]]
    started_at: Optional[str]
    finished_at: Optional[str]

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config,
            "counts": self.counts,
            "template_checksums": self.template_checksums,
            "errors": self.errors,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }


# --- config ------------------------------------------------------------------

def validate_config(cfg: RunConfig) -> list[str]:
    problems = []
    if cfg.mode not in MODES:
        problems.append(f"unknown mode {cfg.mode!r}")
    if cfg.task_style not in STYLES:
        problems.append(f"unknown task_style {cfg.task_style!r}")
    if cfg.mode in ("supervised", "semi-supervised", "editing", "transductive") and not cfg.seeds_path:
        problems.append(f"mode {cfg.mode!r} requires seeds_path")
    if not (0.0 <= cfg.double_check_threshold <= 1.0):
        problems.append(f"double_check_threshold outside [0, 1]: {cfg.double_check_threshold}")
    if not cfg.output_dir:
        problems.append("output_dir is required")
    if cfg.workers < 1:
        problems.append(f"workers must be >= 1, got {cfg.workers}")
    if cfg.n_seed_queries < 1 or cfg.seeds_per_query < 1:
        problems.append("n_seed_queries and seeds_per_query must be >= 1")
    for name in cfg.implication_templates:
        if name not in ("implication", "implication-mquake", "correlative-implication"):
            problems.append(f"unknown implication template {name!r}")
    if cfg.contradiction_template not in (None, "contradiction"):
        problems.append(f"unknown contradiction template {cfg.contradiction_template!r}")
    return problems


def _sampling_from_dict(data: Mapping[str, Any], base: SamplingParams) -> SamplingParams:
    return SamplingParams(
        temperature=data.get("temperature", base.temperature),
        top_p=data.get("top_p", base.top_p),
        max_tokens=data.get("max_tokens", base.max_tokens),
        stop_sequences=tuple(data.get("stop_sequences", base.stop_sequences)),
    )


def config_from_dict(data: Mapping[str, Any]) -> RunConfig:
    gen = data.get("generation", {})
    generation = GenerationConfig(
        sampling=_sampling_from_dict(gen, SamplingParams()),
        n_expected=gen.get("n_expected"),
        dedupe=gen.get("dedupe", True),
    )
    seed_defaults = SamplingParams(temperature=0.9, top_p=0.9, max_tokens=512)
    lm_data = data.get("lm", {})
    lm_settings = LMSettings(
        endpoint=lm_data.get("endpoint"),
        model=lm_data.get("model"),
        token=lm_data.get("token"),
        mock_script=lm_data.get("mock_script"),
        logprobs=lm_data.get("logprobs", 20),
        max_in_flight=lm_data.get("max_in_flight", 8),
        timeout=lm_data.get("timeout", 60.0),
    )
    try:
        return RunConfig(
            mode=data["mode"],
            output_dir=data["output_dir"],
            task_style=data.get("task_style", "free-text"),
            seeds_path=data.get("seeds_path"),
            double_check=data.get("double_check", False),
            double_check_threshold=data.get("double_check_threshold", 0.5),
            generation=generation,
            seed_sampling=_sampling_from_dict(data.get("seed_sampling", {}), seed_defaults),
            lm=lm_settings,
            rng_seed=data.get("rng_seed", 0),
            n_seed_queries=data.get("n_seed_queries", 10),
            seeds_per_query=data.get("seeds_per_query", 10),
            implication_templates=tuple(data.get("implication_templates", ("implication",))),
            contradiction_template=data.get("contradiction_template", "contradiction"),
            workers=data.get("workers", 4),
        )
    except KeyError as exc:
        raise PipelineConfigError(f"config is missing required field {exc}") from exc


def config_from_file(path: str | Path) -> RunConfig:
    """Load a run config from a JSON document or key=value lines.

    Key=value keys may be dotted (``lm.mock_script = mock.json``); values are
    parsed as JSON when possible, else taken as strings.
    """
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return config_from_dict(json.loads(text))
    data: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise PipelineConfigError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        try:
            parsed = json.loads(value.strip())
        except json.JSONDecodeError:
            parsed = value.strip()
        node = data
        parts = key.strip().split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = parsed
    return config_from_dict(data)


def config_to_dict(cfg: RunConfig) -> dict[str, Any]:
    return {
        "mode": cfg.mode,
        "output_dir": cfg.output_dir,
        "task_style": cfg.task_style,
        "seeds_path": cfg.seeds_path,
        "double_check": cfg.double_check,
        "double_check_threshold": cfg.double_check_threshold,
        "generation": {
            "temperature": cfg.generation.sampling.temperature,
            "top_p": cfg.generation.sampling.top_p,
            "max_tokens": cfg.generation.sampling.max_tokens,
            "stop_sequences": list(cfg.generation.sampling.stop_sequences),
            "n_expected": cfg.generation.n_expected,
            "dedupe": cfg.generation.dedupe,
        },
        "seed_sampling": {
            "temperature": cfg.seed_sampling.temperature,
            "top_p": cfg.seed_sampling.top_p,
            "max_tokens": cfg.seed_sampling.max_tokens,
            "stop_sequences": list(cfg.seed_sampling.stop_sequences),
        },
        "lm": {
            "endpoint": cfg.lm.endpoint,
            "model": cfg.lm.model,
            "mock_script": cfg.lm.mock_script,
            "logprobs": cfg.lm.logprobs,
            "max_in_flight": cfg.lm.max_in_flight,
            "timeout": cfg.lm.timeout,
        },
        "rng_seed": cfg.rng_seed,
        "n_seed_queries": cfg.n_seed_queries,
        "seeds_per_query": cfg.seeds_per_query,
        "implication_templates": list(cfg.implication_templates),
        "contradiction_template": cfg.contradiction_template,
        "workers": cfg.workers,
    }


def build_client(settings: LMSettings) -> CompletionClient:
    if settings.mock_script:
        return ScriptedLM.from_file(settings.mock_script)
    return HTTPCompletionClient(
        endpoint=settings.endpoint,
        model=settings.model,
        token=settings.token,
        logprobs=settings.logprobs,
        max_in_flight=settings.max_in_flight,
        timeout=settings.timeout,
    )


# --- seed acquisition --------------------------------------------------------

def load_seed_file(path: str | Path, *, id_prefix: str = "") -> list[Statement]:
    """Seed statements from a file: JSONL objects with a ``text`` field
    (optionally ``label``; false-labeled claims are filtered out) or plain
    text lines.
    """
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise PipelineConfigError(f"cannot read seeds file {path}: {exc}") from exc
    seeds = []
    for line in raw.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("{"):
            data = json.loads(line)
            if data.get("label") is False:
                continue
            text = data["text"]
        else:
            text = line
        seeds.append(Statement(id=f"{id_prefix}{len(seeds)}", text=text,
                               kind="seed", origin="external"))
    return seeds


def acquire_seeds(
    cfg: RunConfig,
    lm: CompletionClient,
    templates: dict[str, PromptTemplate] | None = None,
) -> list[Statement]:
    """Mode-specific seed set, renumbered 0..n-1 in final order.

    unsupervised: sampled from the model itself. supervised/editing: loaded
    from the seeds file. semi-supervised: file seeds plus sampled seeds.
    transductive: related claims generated around each (unlabeled) input
    claim, each promoted to a seed of its own graph.
    """
    templates = templates or load_templates()
    seed_cfg = GenerationConfig(sampling=cfg.seed_sampling, dedupe=True)

    if cfg.mode == "unsupervised":
        if cfg.seeds_path:
            log.warning("unsupervised mode ignores seeds_path=%s", cfg.seeds_path)
        seeds = generate_seed_claims(lm, cfg.n_seed_queries, cfg.seeds_per_query,
                                     seed_cfg, templates=templates)
    elif cfg.mode in ("supervised", "editing"):
        seeds = load_seed_file(cfg.seeds_path)
    elif cfg.mode == "semi-supervised":
        seeds = load_seed_file(cfg.seeds_path)
        seeds = seeds + generate_seed_claims(lm, cfg.n_seed_queries, cfg.seeds_per_query,
                                             seed_cfg, templates=templates)
    elif cfg.mode == "transductive":
        inputs = load_seed_file(cfg.seeds_path, id_prefix="t")
        seeds = []
        for claim in inputs:
            related = generate_related(lm, claim, cfg.generation, templates=templates)
            for rel in related:
                seeds.append(Statement(id=str(len(seeds)), text=rel.text,
                                       kind="seed", origin="lm-sampled"))
    else:
        raise PipelineConfigError(f"unknown mode {cfg.mode!r}")

    if not seeds:
        raise PipelineConfigError(f"empty seed set for mode {cfg.mode!r}")
    return [replace(seed, id=str(i)) for i, seed in enumerate(seeds)]


# --- per-seed processing -----------------------------------------------------

def score_statement(
    lm: CompletionClient,
    templates: dict[str, PromptTemplate],
    stmt: Statement,
) -> float:
    """Truth prior for one statement from the shared few-shot label prompt."""
    prompt = templates["truth-value"].render(claim=stmt.text)
    return truth_probability(lm, stmt.text, prompt).p_true


def _process_seed(
    lm: CompletionClient,
    templates: dict[str, PromptTemplate],
    cfg: RunConfig,
    seed: Statement,
) -> tuple[SolvedGraph, dict[str, dict[str, int]]]:
    # external seeds are trusted: their truth value is pinned during solving
    fixed = seed.origin == "external"
    meta: dict[str, Any] = {}

    with _stage("generate"):
        implications: list[Statement] = []
        next_index = 1
        for template_name in cfg.implication_templates:
            if template_name == "correlative-implication":
                children = generate_correlative(lm, seed, cfg.generation,
                                                templates=templates,
                                                start_index=next_index, meta=meta)
            else:
                children = generate_children(lm, seed, "implies",
                                             template=templates[template_name],
                                             cfg=cfg.generation, templates=templates,
                                             start_index=next_index)
            implications.extend(children)
            next_index += len(children)
        contradictions: list[Statement] = []
        if cfg.contradiction_template:
            contradictions = generate_children(lm, seed, "contradicts",
                                               template=templates[cfg.contradiction_template],
                                               cfg=cfg.generation, templates=templates,
                                               start_index=next_index)

    counts = {
        "implications": {"generated": len(implications)},
        "contradictions": {"generated": len(contradictions)},
    }

    if cfg.double_check:
        with _stage("double-check"):
            implications = [c for c in implications
                            if double_check(lm, seed, c, cfg.double_check_threshold,
                                            templates=templates)]
            contradictions = [c for c in contradictions
                              if double_check(lm, seed, c, cfg.double_check_threshold,
                                              templates=templates)]
    counts["implications"]["kept"] = len(implications)
    counts["contradictions"]["kept"] = len(contradictions)

    graph = DeductionGraph(seed=seed, implications=tuple(implications),
                           contradictions=tuple(contradictions), seed_fixed_true=fixed)
    violations = validate_graph(graph)
    if violations:
        raise StageError("validate", ValueError("; ".join(violations)))

    with _stage("score"):
        priors = {stmt.id: score_statement(lm, templates, stmt)
                  for stmt in graph.statements()}

    with _stage("solve"):
        solve = closed_form_best(ScoredGraph(graph=graph, priors=priors))

    questions: dict[str, str] = {}
    if cfg.task_style == "qa":
        with _stage("convert"):
            for stmt in graph.statements():
                if not solve.assignment[stmt.id]:
                    continue
                try:
                    question, _ = to_question(lm, stmt, cfg.generation, templates=templates)
                except ConversionError as exc:
                    log.warning("question conversion failed for %s: %s", stmt.id, exc)
                    continue
                questions[stmt.id] = question

    return (
        SolvedGraph(graph=graph, priors=priors, solve=solve, questions=questions,
                    related_facts=list(meta.get("related_facts", []))),
        counts,
    )


def solve_all(scored_graphs: Sequence[ScoredGraph]) -> list[SolveResult]:
    """One solve per graph (closed form; see solver for the brute-force oracle)."""
    return [closed_form_best(sg) for sg in scored_graphs]


# --- emission ----------------------------------------------------------------

def emit_dataset(
    solved: Sequence[SolvedGraph],
    style: str,
    lm: CompletionClient | None = None,
    templates: dict[str, PromptTemplate] | None = None,
) -> list[TrainingRecord]:
    """Render training records from solved graphs.

    free-text: one record per inferred-true statement, text verbatim.
    verification: every statement becomes a record; inferred-false text is
    wrapped as a correct "... False" verification exercise. qa: inferred-true
    statements become "Q: ...\\nA: ..." using stored conversions (or ``lm``
    when provided); failures skip the record.
    """
    if style not in STYLES:
        raise PipelineConfigError(f"unknown task_style {style!r}")
    records = []
    for sg in solved:
        if sg.solve is None:
            raise PipelineConfigError(f"graph {sg.graph.seed.id} is not solved")
        assignment = sg.solve.assignment
        graph_id = sg.graph.seed.id
        for stmt in sg.graph.statements():
            value = assignment[stmt.id]
            if style == "verification":
                text = VERIFICATION_FORMAT.format(text=stmt.text,
                                                  label="True" if value else "False")
                records.append(TrainingRecord(text=text, label=value, source_id=stmt.id,
                                              graph_id=graph_id, style=style))
            elif not value:
                continue  # free-text and qa train on inferred-true text only
            elif style == "free-text":
                records.append(TrainingRecord(text=stmt.text, label=True, source_id=stmt.id,
                                              graph_id=graph_id, style=style))
            else:  # qa
                question = sg.questions.get(stmt.id)
                if question is None and lm is not None:
                    try:
                        question, _ = to_question(lm, stmt, templates=templates)
                    except ConversionError as exc:
                        log.warning("skipping qa record for %s: %s", stmt.id, exc)
                        continue
                if question is None:
                    log.warning("skipping qa record for %s: no stored question and no LM",
                                stmt.id)
                    continue
                records.append(TrainingRecord(text=f"Q: {question}\nA: {stmt.text}",
                                              label=True, source_id=stmt.id,
                                              graph_id=graph_id, style=style))
    return records


# --- persistence -------------------------------------------------------------

def _dump_json(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def solve_result_to_dict(result: SolveResult) -> dict[str, Any]:
    return {
        "assignment": dict(sorted(result.assignment.values.items())),
        "score": result.score,
        "log_score": result.log_score,
        "consistent": result.consistent,
        "n_candidates": result.n_candidates,
    }


def solve_result_from_dict(data: Mapping[str, Any]) -> SolveResult:
    return SolveResult(
        assignment=TruthAssignment(values=dict(data["assignment"])),
        score=data["score"],
        log_score=data["log_score"],
        consistent=data["consistent"],
        n_candidates=data["n_candidates"],
    )


def solved_graph_to_dict(sg: SolvedGraph) -> dict[str, Any]:
    return {
        "graph": graph_to_dict(sg.graph),
        "priors": dict(sorted(sg.priors.items())),
        "solve": solve_result_to_dict(sg.solve) if sg.solve else None,
        "questions": dict(sorted(sg.questions.items())),
        "related_facts": list(sg.related_facts),
    }


def solved_graph_from_dict(data: Mapping[str, Any]) -> SolvedGraph:
    return SolvedGraph(
        graph=graph_from_dict(data["graph"]),
        priors=dict(data["priors"]),
        solve=solve_result_from_dict(data["solve"]) if data.get("solve") else None,
        questions=dict(data.get("questions", {})),
        related_facts=list(data.get("related_facts", [])),
    )


def write_run(output_dir: str | Path, solved: Sequence[SolvedGraph],
              records: Sequence[TrainingRecord], manifest: RunManifest) -> None:
    out = Path(output_dir)
    graphs_dir = out / "graphs"
    graphs_dir.mkdir(parents=True, exist_ok=True)
    for sg in solved:
        path = graphs_dir / f"{int(sg.graph.seed.id):04d}.json"
        path.write_text(_dump_json(solved_graph_to_dict(sg)), encoding="utf-8")
    with open(out / "dataset.jsonl", "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), sort_keys=True, ensure_ascii=False) + "\n")
    (out / "manifest.json").write_text(_dump_json(manifest.to_dict()), encoding="utf-8")


def load_run(run_dir: str | Path) -> list[SolvedGraph]:
    graphs_dir = Path(run_dir) / "graphs"
    solved = []
    for path in sorted(graphs_dir.glob("*.json")):
        with open(path, encoding="utf-8") as fh:
            solved.append(solved_graph_from_dict(json.load(fh)))
    return solved


# --- the run itself ----------------------------------------------------------

def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run(cfg: RunConfig, lm: CompletionClient | None = None) -> RunManifest:
    """Execute one full run and write its artifacts under cfg.output_dir."""
    problems = validate_config(cfg)
    if problems:
        raise PipelineConfigError("; ".join(problems))
    drifted = verify_checksums()
    if drifted:
        raise PipelineConfigError(f"prompt templates drifted from the pinned manifest: {drifted}")
    templates = load_templates()
    if lm is None:
        lm = build_client(cfg.lm)
    # wall-clock timestamps would break byte-identical reruns against a mock
    deterministic = isinstance(lm, ScriptedLM)
    started_at = None if deterministic else _now()

    seeds = acquire_seeds(cfg, lm, templates)
    log.info("run: %d seed(s) in mode %s", len(seeds), cfg.mode)

    solved: list[SolvedGraph] = []
    errors: list[dict[str, str]] = []
    totals = {
        "implications": {"generated": 0, "kept": 0},
        "contradictions": {"generated": 0, "kept": 0},
    }
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        futures = [pool.submit(_process_seed, lm, templates, cfg, seed) for seed in seeds]
        for seed, future in zip(seeds, futures):
            try:
                sg, counts = future.result()
            except StageError as exc:
                log.warning("seed %s failed at stage %s: %s", seed.id, exc.stage, exc)
                errors.append({"seed_id": seed.id, "stage": exc.stage, "error": str(exc)})
                continue
            solved.append(sg)
            for klass in totals:
                for key in totals[klass]:
                    totals[klass][key] += counts[klass][key]

    records = emit_dataset(solved, cfg.task_style, lm=lm, templates=templates)

    kind_by_id = {stmt.id: stmt.kind for sg in solved for stmt in sg.graph.statements()}
    class_of = {"seed": "seeds", "implication": "implications", "contradiction": "contradictions"}
    inferred_true = {"seeds": 0, "implications": 0, "contradictions": 0}
    for sg in solved:
        for stmt in sg.graph.statements():
            if sg.solve.assignment[stmt.id]:
                inferred_true[class_of[stmt.kind]] += 1
    emitted = {"seeds": 0, "implications": 0, "contradictions": 0}
    for record in records:
        emitted[class_of[kind_by_id[record.source_id]]] += 1

    counts = {
        "seeds": len(seeds),
        "graphs": len(solved),
        "generated": {
            "implications": totals["implications"]["generated"],
            "contradictions": totals["contradictions"]["generated"],
            "total": totals["implications"]["generated"] + totals["contradictions"]["generated"],
        },
        "kept": {
            "implications": totals["implications"]["kept"],
            "contradictions": totals["contradictions"]["kept"],
            "total": totals["implications"]["kept"] + totals["contradictions"]["kept"],
        },
        "inferred_true": {**inferred_true, "total": sum(inferred_true.values())},
        "emitted": {**emitted, "total": len(records)},
    }
    manifest = RunManifest(
        config=config_to_dict(cfg),
        counts=counts,
        template_checksums=template_checksums(),
        errors=errors,
        started_at=started_at,
        finished_at=None if deterministic else _now(),
    )
    write_run(cfg.output_dir, solved, records, manifest)
    log.info("run complete: %d graph(s), %d record(s), %d error(s)",
             len(solved), len(records), len(errors))
    return manifest
