"""dct: expand seed claims into implication/contradiction graphs, solve for
the most probable logically consistent truth assignment, and emit
fine-tuning datasets of inferred-true text. Includes an exact toy-world
simulator for the self-training improvement guarantee.
"""

from .generation import (
    ConversionError,
    GenerationConfig,
    double_check,
    generate_children,
    generate_correlative,
    generate_related,
    generate_seed_claims,
    parse_numbered_list,
    to_question,
)
from .lm import (
    CompletionResult,
    HTTPCompletionClient,
    LMError,
    SamplingParams,
    ScoringError,
    ScriptedLM,
    ScriptMissError,
    TransportError,
    TruthScore,
    UnparseableVerdictError,
    UnsupportedCapabilityError,
    prompt_fingerprint,
    truth_probability,
    verdict_probability,
)
from .pipeline import (
    LMSettings,
    PipelineConfigError,
    RunConfig,
    RunManifest,
    SolvedGraph,
    TrainingRecord,
    acquire_seeds,
    emit_dataset,
    run,
    solve_all,
)
from .solver import (
    ScoredGraph,
    SolveResult,
    SolverContractError,
    assignment_probability,
    best_assignment,
    brute_force_best,
    closed_form_best,
    consistency,
)
from .statements import (
    DeductionGraph,
    Statement,
    TruthAssignment,
    validate_graph,
)
from .templates import (
    PromptTemplate,
    exemplar_completion,
    load_template,
    load_templates,
    template_checksums,
    verify_checksums,
)
from .toyworld import (
    ImprovementReport,
    ToyWorld,
    UndefinedPosteriorError,
    check_assumptions,
    mc_p_dct,
    p_dct,
    p_lm,
    posterior_seed,
    verify_improvement,
)

__version__ = "0.1.0"
