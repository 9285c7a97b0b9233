from .corpus import (
    Corpus,
    CorpusRequest,
    Label,
    UNIT,
    generate_corpus,
    reference_conditions,
    reference_policy_for,
)
from .gates import (
    GateConfig,
    GateId,
    HumanPolicy,
    SecurityReport,
    run_gate,
)
from .ablation import AblationReport, run_ablation
from .latency import LatencyReport, OPS, run_latency_bench
from .linkability import (
    LinkabilityConfig,
    LinkabilityReport,
    run_linkability,
    run_linkability_suite,
)

__all__ = [
    "Corpus",
    "CorpusRequest",
    "Label",
    "UNIT",
    "generate_corpus",
    "reference_conditions",
    "reference_policy_for",
    "GateConfig",
    "GateId",
    "HumanPolicy",
    "SecurityReport",
    "run_gate",
    "AblationReport",
    "run_ablation",
    "LatencyReport",
    "OPS",
    "run_latency_bench",
    "LinkabilityConfig",
    "LinkabilityReport",
    "run_linkability",
    "run_linkability_suite",
]
