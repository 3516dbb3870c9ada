"""Workload runner: full queries (prefill + decode loop), deployments, metrics, TCO.

An inference engine is one device (or aggregate device) holding a model copy;
``n_engines`` identical engines run the same batched workload in parallel.
Aggregate metrics scale engine results without modeling any interaction
between engines.
"""

from dataclasses import dataclass, field

from .costmodel import (
    Assumptions,
    DEFAULT_ASSUMPTIONS,
    MappingScheme,
    PhaseCost,
    eval_graph,
)
from .errors import ConfigError, SimError
from .graph import build_decode_graph, build_prefill_graph
from .models import (
    DataFormatPolicy,
    ModelConfig,
    builtin_models,
    kv_bytes_per_token,
    weight_bytes,
)
from .profiles import ProfileRegistry, builtin_profiles

HOURS_3_YEARS = 26280.0


@dataclass(frozen=True)
class Workload:
    """One batched query shape: prompt length and tokens to generate."""

    batch: int
    n_input: int
    n_output: int

    def __post_init__(self):
        if self.batch < 1 or self.n_input < 1 or self.n_output < 1:
            raise ConfigError(
                f"batch, n_input, n_output must all be >= 1, got {self.batch}, {self.n_input}, {self.n_output}"
            )


@dataclass(frozen=True)
class DeploymentSpec:
    """Where and how the workload runs."""

    mapping: MappingScheme
    n_engines: int = 1
    orchestration_s: float = 0.0
    description: str = ""

    def __post_init__(self):
        if self.n_engines < 1:
            raise ConfigError(f"n_engines must be >= 1, got {self.n_engines}")
        if self.orchestration_s < 0:
            raise ConfigError(f"orchestration_s must be >= 0, got {self.orchestration_s}")

    @classmethod
    def on_profile(cls, profile_name: str, n_engines: int = 1,
                   orchestration_s: float = 0.0, description: str = "") -> "DeploymentSpec":
        return cls(mapping=MappingScheme.single(profile_name), n_engines=n_engines,
                   orchestration_s=orchestration_s, description=description or profile_name)


@dataclass(frozen=True)
class CostParams:
    """Capital plus electricity over an ownership horizon."""

    capex_usd: float
    electricity_usd_per_kwh: float
    horizon_hours: float = HOURS_3_YEARS

    def __post_init__(self):
        if self.capex_usd < 0 or self.electricity_usd_per_kwh < 0 or self.horizon_hours < 0:
            raise ConfigError("cost parameters must be non-negative")


@dataclass
class InferenceMetrics:
    """Outcome of one workload on one deployment.

    Phase figures (prefill_*, decode_*) are per engine; total_energy_j, qps
    and avg_power_w cover all engines. Decode-derived fields are None when
    n_output == 1 (no decode steps ran).
    """

    ttft_s: float
    prefill_s: float
    prefill_energy_j: float
    decode_s: float | None
    decode_energy_j: float | None
    tokens_per_s: float | None
    energy_per_token_j: float | None
    query_latency_s: float
    qps: float
    epq_j: float
    avg_power_w: float
    total_energy_j: float
    batch: int
    n_engines: int
    traffic: dict = field(default_factory=dict)
    energy_breakdown_j: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "ttft_s": self.ttft_s,
            "prefill_s": self.prefill_s,
            "prefill_energy_j": self.prefill_energy_j,
            "decode_s": self.decode_s,
            "decode_energy_j": self.decode_energy_j,
            "tokens_per_s": self.tokens_per_s,
            "energy_per_token_j": self.energy_per_token_j,
            "query_latency_s": self.query_latency_s,
            "qps": self.qps,
            "epq_j": self.epq_j,
            "avg_power_w": self.avg_power_w,
            "total_energy_j": self.total_energy_j,
            "batch": self.batch,
            "n_engines": self.n_engines,
            "traffic": dict(self.traffic),
            "energy_breakdown_j": dict(self.energy_breakdown_j),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "InferenceMetrics":
        return cls(**doc)


def _traffic(costs: list[PhaseCost]) -> dict:
    out = {"flops": 0, "weight_bytes": 0.0, "kv_read_bytes": 0.0, "kv_write_bytes": 0.0,
           "h2d_bytes": 0.0, "d2h_bytes": 0.0}
    for c in costs:
        out["flops"] += c.flops
        out["weight_bytes"] += c.weight_bytes
        out["kv_read_bytes"] += c.kv_read_bytes
        out["kv_write_bytes"] += c.kv_write_bytes
        out["h2d_bytes"] += c.h2d_bytes
        out["d2h_bytes"] += c.d2h_bytes
    return out


def run_inference(model: ModelConfig, fmt: DataFormatPolicy, workload: Workload,
                  deployment: DeploymentSpec, registry: ProfileRegistry,
                  assumptions: Assumptions = DEFAULT_ASSUMPTIONS) -> InferenceMetrics:
    """Simulate one query batch end to end.

    TTFT = orchestration + prompt H2D + prefill pass + first-token D2H (the
    prefill graph's boundary transfers cover the H2D/D2H legs). Decode steps
    t = 1..n_output-1 run against context n_input + t - 1. The first output
    token belongs to prefill, so n_output-1 steps are timed and the decode
    rate excludes it.
    """
    prefill_graph = build_prefill_graph(model, fmt, workload.batch, workload.n_input)
    prefill = eval_graph(prefill_graph, deployment.mapping, registry,
                         assumptions=assumptions, include_boundary_transfers=True)
    ttft_s = deployment.orchestration_s + prefill.total_s

    decode_s = None
    decode_energy_j = None
    tokens_per_s = None
    energy_per_token_j = None
    decode_costs: list[PhaseCost] = []
    if workload.n_output > 1:
        decode_s = 0.0
        decode_pj = 0.0
        per_step_orch = deployment.orchestration_s if assumptions.orchestration_per_step else 0.0
        for t in range(1, workload.n_output):
            g = build_decode_graph(model, fmt, workload.batch, context_len=workload.n_input + t - 1)
            cost = eval_graph(g, deployment.mapping, registry, assumptions=assumptions,
                              include_boundary_transfers=assumptions.transfer_per_step)
            decode_costs.append(cost)
            decode_s += cost.total_s + per_step_orch
            decode_pj += cost.total_pj
        decode_energy_j = decode_pj * 1e-12
        steps = workload.n_output - 1
        tokens_per_s = steps * workload.batch * deployment.n_engines / decode_s
        energy_per_token_j = decode_energy_j / (steps * workload.batch)

    query_latency_s = ttft_s + (decode_s or 0.0)
    per_engine_energy_j = prefill.energy_j + (decode_energy_j or 0.0)
    total_energy_j = per_engine_energy_j * deployment.n_engines
    qps = workload.batch * deployment.n_engines / query_latency_s
    epq_j = total_energy_j / (workload.batch * deployment.n_engines)
    avg_power_w = total_energy_j / query_latency_s

    all_costs = [prefill] + decode_costs
    breakdown = {
        "compute": sum(c.compute_pj for c in all_costs) * 1e-12,
        "memory": sum(c.mem_pj for c in all_costs) * 1e-12,
        "aux": sum(c.aux_pj for c in all_costs) * 1e-12,
        "transfer": sum(c.transfer_pj for c in all_costs) * 1e-12,
    }
    return InferenceMetrics(
        ttft_s=ttft_s,
        prefill_s=prefill.total_s,
        prefill_energy_j=prefill.energy_j,
        decode_s=decode_s,
        decode_energy_j=decode_energy_j,
        tokens_per_s=tokens_per_s,
        energy_per_token_j=energy_per_token_j,
        query_latency_s=query_latency_s,
        qps=qps,
        epq_j=epq_j,
        avg_power_w=avg_power_w,
        total_energy_j=total_energy_j,
        batch=workload.batch,
        n_engines=deployment.n_engines,
        traffic=_traffic(all_costs),
        energy_breakdown_j=breakdown,
    )


@dataclass(frozen=True)
class FitReport:
    """Capacity check: weights plus peak KV cache versus device memory."""

    weight_bytes: float
    kv_bytes_per_query: float     # one query's peak KV footprint (batch of 1)
    required_bytes: float         # at the workload's batch
    capacity_bytes: float
    fits: bool
    max_batch: int


def validate_fit(model: ModelConfig, fmt: DataFormatPolicy, workload: Workload,
                 capacity_bytes: float) -> FitReport:
    """Report whether the workload fits and the largest batch that would."""
    wb = weight_bytes(model, fmt)
    kv_query = (workload.n_input + workload.n_output) * kv_bytes_per_token(model, fmt)
    required = wb + workload.batch * kv_query
    headroom = capacity_bytes - wb
    max_batch = int(headroom // kv_query) if headroom > 0 and kv_query > 0 else 0
    return FitReport(
        weight_bytes=wb,
        kv_bytes_per_query=kv_query,
        required_bytes=required,
        capacity_bytes=capacity_bytes,
        fits=required <= capacity_bytes,
        max_batch=max(max_batch, 0),
    )


def tco_per_qps(metrics: InferenceMetrics, costs: CostParams) -> float:
    """(capex + electricity over the horizon) per sustained query/second."""
    if metrics.qps <= 0:
        raise SimError("tco_per_qps requires qps > 0")
    energy_usd = metrics.avg_power_w / 1000.0 * costs.horizon_hours * costs.electricity_usd_per_kwh
    return (costs.capex_usd + energy_usd) / metrics.qps


@dataclass(frozen=True)
class Scenario:
    """One runnable benchmark point plus the registry it resolves against."""

    label: str
    group: str                    # comparison group; one baseline per group
    model: ModelConfig
    fmt: DataFormatPolicy
    workload: Workload
    deployment: DeploymentSpec
    registry: ProfileRegistry
    cost_params: CostParams | None = None
    is_baseline: bool = False

    def to_dict(self) -> dict:
        """Copy-editable document in the run-config schema."""
        dep: dict = {
            "n_engines": self.deployment.n_engines,
            "orchestration_s": self.deployment.orchestration_s,
            "description": self.deployment.description,
        }
        mapping = self.deployment.mapping
        if mapping.is_single:
            dep["profile"] = mapping.default_profile
        else:
            dep["mapping"] = mapping.to_dict()
        doc = {
            "label": self.label,
            "model": self.model.name,
            "format": {
                "weight_bits": self.fmt.weight_bits,
                "kv_bits": self.fmt.kv_bits,
                "activation_bits": self.fmt.activation_bits,
            },
            "workload": {
                "batch": self.workload.batch,
                "n_input": self.workload.n_input,
                "n_output": self.workload.n_output,
            },
            "deployment": dep,
        }
        if self.cost_params is not None:
            doc["cost_params"] = {
                "capex_usd": self.cost_params.capex_usd,
                "electricity_usd_per_kwh": self.cost_params.electricity_usd_per_kwh,
                "horizon_hours": self.cost_params.horizon_hours,
            }
        return doc


# Cloud deployment constants: one 8-GPU DGX-class server versus four
# PIM-AI servers. Each model instance occupies 8 of a server's 24 PIM DIMMs,
# so 96 DIMMs host 12 independent engines; the engine profile is the server
# profile with rates scaled by 8/24 (energies per bit/op unchanged).
PIM_ENGINE_NAME = "PIM-AI 8-DIMM engine"
PIM_ENGINE_FRACTION = 8 / 24
CLOUD_ORCHESTRATION_S = 0.0005
MOBILE_ORCHESTRATION_S = 0.020
CLOUD_WORKLOAD_TOKENS = (1000, 100)
CLOUD_BATCHES = {
    # (model, attention) -> (DGX batch, per-PIM-engine batch)
    ("Llama2-70B", "GQA8"): (200, 80),
    ("Llama2-70B", "MHA"): (46, 10),
    ("Mixtral-8x22B", "GQA8"): (200, 80),
    ("Mixtral-8x22B", "MHA"): (88, 20),
}
DGX_COST = CostParams(capex_usd=300_000, electricity_usd_per_kwh=0.153)
PIM_CLOUD_COST = CostParams(capex_usd=60_000, electricity_usd_per_kwh=0.153)
MOBILE_PROFILES = ("PIM-AI chip", "A17 Pro", "Snapdragon 8 Gen3", "Dimensity 9300")
MOBILE_MODELS = ("Llama2-7B", "Mistral-7B")
MOBILE_BASELINE_PROFILE = "A17 Pro"


def cloud_registry() -> ProfileRegistry:
    reg = builtin_profiles()
    reg.add(reg.get("PIM-AI server").scaled(PIM_ENGINE_NAME, PIM_ENGINE_FRACTION))
    return reg


def builtin_scenarios(kind: str) -> list[Scenario]:
    """The stock comparison suites: 'cloud', 'mobile', or 'all'."""
    if kind == "all":
        return builtin_scenarios("cloud") + builtin_scenarios("mobile")
    if kind not in ("cloud", "mobile"):
        raise ConfigError(f"unknown scenario suite {kind!r}; expected cloud, mobile or all")

    models = {m.name: m for m in builtin_models()}
    out: list[Scenario] = []
    if kind == "cloud":
        reg = cloud_registry()
        fmt = DataFormatPolicy(16, 16, 16)
        n_in, n_out = CLOUD_WORKLOAD_TOKENS
        for (model_name, attn), (dgx_batch, pim_batch) in CLOUD_BATCHES.items():
            model = models[model_name if attn == "GQA8" else f"{model_name}-MHA"]
            group = f"cloud/{model_name}/{attn}"
            dgx = DeploymentSpec.on_profile(
                "DGX-H100", n_engines=1, orchestration_s=CLOUD_ORCHESTRATION_S,
                description="1x DGX-H100 (8 GPUs)")
            pim = DeploymentSpec.on_profile(
                PIM_ENGINE_NAME, n_engines=12, orchestration_s=CLOUD_ORCHESTRATION_S,
                description="4x PIM-AI server (12 engines x 8 DIMMs)")
            out.append(Scenario(
                label=f"{group}/DGX-H100", group=group, model=model, fmt=fmt,
                workload=Workload(dgx_batch, n_in, n_out), deployment=dgx,
                registry=reg, cost_params=DGX_COST, is_baseline=True))
            out.append(Scenario(
                label=f"{group}/PIM-AI-4srv", group=group, model=model, fmt=fmt,
                workload=Workload(pim_batch, n_in, n_out), deployment=pim,
                registry=reg, cost_params=PIM_CLOUD_COST))
    else:
        reg = builtin_profiles()
        fmt = DataFormatPolicy(weight_bits=4, kv_bits=16, activation_bits=16)
        n_in, n_out = CLOUD_WORKLOAD_TOKENS
        for model_name in MOBILE_MODELS:
            model = models[model_name]
            group = f"mobile/{model_name}"
            for profile in MOBILE_PROFILES:
                dep = DeploymentSpec.on_profile(
                    profile, n_engines=1, orchestration_s=MOBILE_ORCHESTRATION_S,
                    description=profile)
                out.append(Scenario(
                    label=f"{group}/{profile}", group=group, model=model, fmt=fmt,
                    workload=Workload(1, n_in, n_out), deployment=dep,
                    registry=reg, is_baseline=profile == MOBILE_BASELINE_PROFILE))
    return out


def run_scenario(s: Scenario, assumptions: Assumptions = DEFAULT_ASSUMPTIONS) -> InferenceMetrics:
    return run_inference(s.model, s.fmt, s.workload, s.deployment, s.registry, assumptions)


def export_scenarios(scenarios: "list[Scenario]") -> dict:
    """Scenario list plus any non-builtin profiles they depend on."""
    builtin = set(builtin_profiles().names())
    extra = {}
    for s in scenarios:
        for p in s.registry:
            if p.name not in builtin and p.name not in extra:
                extra[p.name] = p.to_dict()
    return {"profiles": list(extra.values()), "scenarios": [s.to_dict() for s in scenarios]}
