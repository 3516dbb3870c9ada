"""llmsim: analytical performance/energy/TCO simulator for LLM inference.

Predicts latency, throughput, energy, power and ownership cost of
transformer inference (prefill plus autoregressive decode with a KV cache)
on parameterized hardware profiles, without touching any real weights.
"""

__version__ = "0.1.0"

from .costmodel import (
    Assumptions,
    DEFAULT_ASSUMPTIONS,
    MappingRule,
    MappingScheme,
    OpCost,
    PhaseCost,
    eval_graph,
    eval_node,
    eval_transfer,
)
from .errors import ConfigError, MappingError, SimError, UnknownNameError
from .graph import (
    ExecutionGraph,
    GraphTotals,
    OpNode,
    build_decode_graph,
    build_prefill_graph,
    graph_totals,
    trace_lines,
)
from .models import (
    DataFormatPolicy,
    ModelConfig,
    MoESpec,
    builtin_models,
    kv_bytes_per_token,
    load_models,
    model_by_name,
    param_count,
    weight_bytes,
)
from .profiles import (
    AuxCost,
    HardwareProfile,
    ProfileRegistry,
    builtin_profiles,
    load_profiles,
    validate_profile,
)
from .report import (
    ComparisonReport,
    CompareRow,
    compare,
    emit_charts,
    emit_records,
    parse_records,
    run_record,
)
from .scenario import (
    CostParams,
    DeploymentSpec,
    FitReport,
    InferenceMetrics,
    Scenario,
    Workload,
    builtin_scenarios,
    export_scenarios,
    run_inference,
    run_scenario,
    tco_per_qps,
    validate_fit,
)

__all__ = [
    "Assumptions",
    "AuxCost",
    "CompareRow",
    "ComparisonReport",
    "ConfigError",
    "CostParams",
    "DEFAULT_ASSUMPTIONS",
    "DataFormatPolicy",
    "DeploymentSpec",
    "ExecutionGraph",
    "FitReport",
    "GraphTotals",
    "HardwareProfile",
    "InferenceMetrics",
    "MappingError",
    "MappingRule",
    "MappingScheme",
    "ModelConfig",
    "MoESpec",
    "OpCost",
    "OpNode",
    "PhaseCost",
    "ProfileRegistry",
    "Scenario",
    "SimError",
    "UnknownNameError",
    "Workload",
    "builtin_models",
    "builtin_profiles",
    "builtin_scenarios",
    "build_decode_graph",
    "build_prefill_graph",
    "compare",
    "emit_charts",
    "emit_records",
    "export_scenarios",
    "eval_graph",
    "eval_node",
    "eval_transfer",
    "graph_totals",
    "kv_bytes_per_token",
    "load_models",
    "load_profiles",
    "model_by_name",
    "param_count",
    "parse_records",
    "run_inference",
    "run_record",
    "run_scenario",
    "tco_per_qps",
    "trace_lines",
    "validate_fit",
    "validate_profile",
    "weight_bytes",
]
