"""Cost evaluation: execution graph x hardware mapping -> time and energy.

Times are worst case by default: compute, memory and aux components of a node
are summed, never overlapped, and host transfers are explicit serialized
legs. A roofline mode (max of components) sits behind a switch for
sensitivity runs.
"""

from dataclasses import dataclass, field

from .errors import ConfigError, MappingError
from .graph import AUX_KIND_OF, KINDS, ExecutionGraph, OpNode
from .models import DataFormatPolicy
from .profiles import GIGA, TERA, HardwareProfile, ProfileRegistry


@dataclass(frozen=True)
class Assumptions:
    """Modeling switches whose defaults are deliberate, documented choices."""

    charge_activation_traffic: bool = False   # stream intermediate tensors to main memory
    roofline_max: bool = False                # overlap compute/memory/aux within a node
    transfer_per_step: bool = True            # host boundary transfers on every decode step
    orchestration_per_step: bool = False      # host orchestration charged per step, not per query

    def describe(self) -> list[str]:
        return [
            f"activation traffic charged to main memory: {self.charge_activation_traffic} "
            "(off = intermediate tensors stay in on-chip buffers)",
            f"node time composition: {'roofline max(compute, memory, aux)' if self.roofline_max else 'sum (worst case, no overlap)'}",
            f"host boundary transfers: {'every decode step' if self.transfer_per_step else 'once per query'}",
            f"orchestration overhead: {'every decode step' if self.orchestration_per_step else 'once per query (in TTFT)'}",
            "aux-function default cost: compute_tops*1e12/8 elements/s at compute pJ/op per element",
            "weights streamed from main memory once per graph pass, shared across the batch",
            "profile changes route through HOST: one D2H leg plus one H2D leg",
        ]


DEFAULT_ASSUMPTIONS = Assumptions()


@dataclass(frozen=True)
class MappingRule:
    """Route nodes matching a kind set and/or layer range to a profile."""

    profile: str
    kinds: frozenset | None = None
    layers: tuple | None = None    # inclusive (lo, hi)

    def matches(self, node: OpNode) -> bool:
        if self.kinds is not None and node.kind not in self.kinds:
            return False
        if self.layers is not None and not (self.layers[0] <= node.layer <= self.layers[1]):
            return False
        return True


@dataclass(frozen=True)
class MappingScheme:
    """Node-to-profile assignment plus HOST synchronization positions.

    Sync positions are node boundaries: position i cuts before node i. The
    graph start and end are implicit sync points (input arrives from HOST,
    output returns to it); ``sync_points`` adds mid-graph cuts.
    """

    default_profile: str
    rules: tuple = ()
    sync_points: tuple = ()
    h2d_payload_bytes: float | None = None   # override for the graph-start transfer
    d2h_payload_bytes: float | None = None   # override for the graph-end transfer

    @classmethod
    def single(cls, profile_name: str) -> "MappingScheme":
        return cls(default_profile=profile_name)

    def resolve(self, node: OpNode) -> str:
        for rule in self.rules:
            if rule.matches(node):
                return rule.profile
        return self.default_profile

    def profile_names(self) -> list[str]:
        return [self.default_profile] + [r.profile for r in self.rules]

    @property
    def is_single(self) -> bool:
        return (not self.rules and not self.sync_points
                and self.h2d_payload_bytes is None and self.d2h_payload_bytes is None)

    def to_dict(self) -> dict:
        doc: dict = {"default_profile": self.default_profile}
        if self.rules:
            doc["rules"] = []
            for r in self.rules:
                match: dict = {}
                if r.kinds is not None:
                    match["kinds"] = sorted(r.kinds)
                if r.layers is not None:
                    match["layers"] = list(r.layers)
                doc["rules"].append({"match": match, "profile": r.profile})
        if self.sync_points:
            doc["sync"] = list(self.sync_points)
        if self.h2d_payload_bytes is not None:
            doc["h2d_payload_bytes"] = self.h2d_payload_bytes
        if self.d2h_payload_bytes is not None:
            doc["d2h_payload_bytes"] = self.d2h_payload_bytes
        return doc

    @classmethod
    def from_dict(cls, doc: dict, path: str = "mapping") -> "MappingScheme":
        if not isinstance(doc, dict) or "default_profile" not in doc:
            raise ConfigError("expected a mapping with a 'default_profile' key", path=path)
        rules = []
        for i, entry in enumerate(doc.get("rules", []) or []):
            rpath = f"{path}.rules[{i}]"
            if not isinstance(entry, dict) or "profile" not in entry:
                raise ConfigError("expected {match, profile}", path=rpath)
            match = entry.get("match", {}) or {}
            kinds = None
            if "kinds" in match:
                kinds = frozenset(match["kinds"])
                unknown = kinds - set(KINDS)
                if unknown:
                    raise ConfigError(f"unknown node kind(s): {', '.join(sorted(unknown))}",
                                      path=f"{rpath}.match.kinds")
            layers = None
            if "layers" in match:
                pair = match["layers"]
                if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                    raise ConfigError("expected [lo, hi]", path=f"{rpath}.match.layers")
                layers = (int(pair[0]), int(pair[1]))
            rules.append(MappingRule(profile=entry["profile"], kinds=kinds, layers=layers))
        return cls(
            default_profile=doc["default_profile"],
            rules=tuple(rules),
            sync_points=tuple(doc.get("sync", []) or []),
            h2d_payload_bytes=doc.get("h2d_payload_bytes"),
            d2h_payload_bytes=doc.get("d2h_payload_bytes"),
        )


@dataclass(frozen=True)
class OpCost:
    """Seconds and picojoules of one node or transfer leg, by component."""

    compute_s: float = 0.0
    mem_s: float = 0.0
    aux_s: float = 0.0
    transfer_s: float = 0.0
    compute_pj: float = 0.0
    mem_pj: float = 0.0
    aux_pj: float = 0.0
    transfer_pj: float = 0.0
    profile: str = ""

    @property
    def total_s(self) -> float:
        return self.compute_s + self.mem_s + self.aux_s + self.transfer_s

    @property
    def total_pj(self) -> float:
        return self.compute_pj + self.mem_pj + self.aux_pj + self.transfer_pj


@dataclass
class PhaseCost:
    """Fold of a graph's OpCosts plus its transfer legs."""

    compute_s: float = 0.0
    mem_s: float = 0.0
    aux_s: float = 0.0
    transfer_s: float = 0.0
    compute_pj: float = 0.0
    mem_pj: float = 0.0
    aux_pj: float = 0.0
    transfer_pj: float = 0.0
    total_s: float = 0.0
    total_pj: float = 0.0
    by_kind: dict = field(default_factory=dict)        # kind -> [seconds, pj]
    flops: int = 0
    weight_bytes: float = 0.0
    kv_read_bytes: float = 0.0
    kv_write_bytes: float = 0.0
    act_traffic_bytes: float = 0.0
    h2d_bytes: float = 0.0
    d2h_bytes: float = 0.0
    n_transfers: int = 0

    @property
    def energy_j(self) -> float:
        return self.total_pj * 1e-12

    def _fold(self, kind: str, cost: OpCost) -> None:
        self.compute_s += cost.compute_s
        self.mem_s += cost.mem_s
        self.aux_s += cost.aux_s
        self.transfer_s += cost.transfer_s
        self.compute_pj += cost.compute_pj
        self.mem_pj += cost.mem_pj
        self.aux_pj += cost.aux_pj
        self.transfer_pj += cost.transfer_pj
        self.total_s += cost.total_s
        self.total_pj += cost.total_pj
        slot = self.by_kind.setdefault(kind, [0.0, 0.0])
        slot[0] += cost.total_s
        slot[1] += cost.total_pj


def _node_time(compute_s: float, mem_s: float, aux_s: float, assumptions: Assumptions) -> float:
    if assumptions.roofline_max:
        return max(compute_s, mem_s, aux_s)
    return compute_s + mem_s + aux_s


def eval_node(node: OpNode, profile: HardwareProfile, fmt: DataFormatPolicy,
              assumptions: Assumptions = DEFAULT_ASSUMPTIONS) -> OpCost:
    """Cost of one node on one profile.

    compute: flops / (tops*1e12) seconds, flops * pJ/op.
    memory:  streamed weight + KV bytes (optionally + activation output
             bytes) over mem bandwidth, bytes*8 * pJ/bit.
    aux:     elements over the profile's per-kind throughput and energy.
    """
    compute_s = 0.0
    compute_pj = 0.0
    if node.flops:
        if profile.compute_tops <= 0:
            raise MappingError(f"profile {profile.name!r} has a zero compute rate")
        compute_s = node.flops / (profile.compute_tops * TERA)
        compute_pj = node.flops * profile.compute_energy

    mem_bytes = node.weight_bytes + node.kv_read_bytes + node.kv_write_bytes
    if assumptions.charge_activation_traffic:
        mem_bytes += node.out_elements * fmt.activation_bits / 8
    mem_s = 0.0
    mem_pj = 0.0
    if mem_bytes:
        if profile.mem_bw <= 0:
            raise MappingError(f"profile {profile.name!r} has a zero memory bandwidth")
        mem_s = mem_bytes / (profile.mem_bw * GIGA)
        mem_pj = mem_bytes * 8 * profile.mem_energy

    aux_s = 0.0
    aux_pj = 0.0
    if node.act_elements and node.kind in AUX_KIND_OF:
        cost = profile.aux_cost(AUX_KIND_OF[node.kind])
        aux_s = node.act_elements / cost.elements_per_s
        aux_pj = node.act_elements * cost.pj_per_element

    total = _node_time(compute_s, mem_s, aux_s, assumptions)
    # In roofline mode the overlapped total is reported through the dominant
    # component so that component sums still equal the node total.
    if assumptions.roofline_max and total != compute_s + mem_s + aux_s:
        if total == mem_s:
            compute_s, aux_s = 0.0, 0.0
        elif total == compute_s:
            mem_s, aux_s = 0.0, 0.0
        else:
            compute_s, mem_s = 0.0, 0.0
    return OpCost(
        compute_s=compute_s, mem_s=mem_s, aux_s=aux_s,
        compute_pj=compute_pj, mem_pj=mem_pj, aux_pj=aux_pj,
        profile=profile.name,
    )


def eval_transfer(nbytes: float, direction: str, profile: HardwareProfile) -> OpCost:
    """One host-link leg. Direction is 'h2d' or 'd2h'."""
    if direction == "h2d":
        bw, pj_bit = profile.h2d_bw, profile.h2d_energy
    elif direction == "d2h":
        bw, pj_bit = profile.d2h_bw, profile.d2h_energy
    else:
        raise MappingError(f"direction must be 'h2d' or 'd2h', got {direction!r}")
    if nbytes < 0:
        raise MappingError(f"transfer bytes must be >= 0, got {nbytes}")
    return OpCost(
        transfer_s=nbytes / (bw * GIGA),
        transfer_pj=nbytes * 8 * pj_bit,
        profile=profile.name,
    )


def default_h2d_payload(g: ExecutionGraph) -> float:
    """Input embeddings for the pass: batch * new_tokens * d_model elements."""
    return g.batch * g.new_tokens * g.model.d_model * g.fmt.activation_bits / 8


def default_d2h_payload(g: ExecutionGraph) -> float:
    """Final hidden state for the last position: batch * d_model elements."""
    return g.batch * g.model.d_model * g.fmt.activation_bits / 8


def eval_graph(g: ExecutionGraph, mapping: MappingScheme, registry: ProfileRegistry,
               fmt: DataFormatPolicy | None = None,
               assumptions: Assumptions = DEFAULT_ASSUMPTIONS,
               include_boundary_transfers: bool = True) -> PhaseCost:
    """Sequential fold of the graph under a mapping.

    Transfers are charged at the graph start (H2D onto the first node's
    profile) and end (D2H off the last node's profile) when
    ``include_boundary_transfers`` is set, at every mid-graph sync point, and
    whenever adjacent nodes resolve to different profiles (the data routes
    through HOST: one D2H on the old device's link, one H2D on the new one's).
    """
    fmt = fmt or g.fmt
    cost = PhaseCost()
    if not g.nodes:
        return cost

    for name in mapping.profile_names():
        registry.get(name)  # raises UnknownNameError early, with context
    n_nodes = len(g.nodes)
    sync = set()
    for p in mapping.sync_points:
        if not 0 <= p <= n_nodes:
            raise MappingError(f"sync point {p} is off the graph's node boundaries (0..{n_nodes})")
        sync.add(p)

    profiles = [registry.get(mapping.resolve(n)) for n in g.nodes]
    hop_payload = default_h2d_payload(g)

    def transfer(nbytes: float, direction: str, profile: HardwareProfile):
        leg = eval_transfer(nbytes, direction, profile)
        cost._fold("host_transfer", leg)
        cost.n_transfers += 1
        if direction == "h2d":
            cost.h2d_bytes += nbytes
        else:
            cost.d2h_bytes += nbytes

    if include_boundary_transfers:
        h2d = mapping.h2d_payload_bytes if mapping.h2d_payload_bytes is not None else default_h2d_payload(g)
        transfer(h2d, "h2d", profiles[0])

    for i, node in enumerate(g.nodes):
        if i > 0:
            hop = profiles[i - 1].name != profiles[i].name
            if hop or i in sync:
                transfer(hop_payload, "d2h", profiles[i - 1])
                transfer(hop_payload, "h2d", profiles[i])
        c = eval_node(node, profiles[i], fmt, assumptions)
        cost._fold(node.kind, c)
        cost.flops += node.flops
        cost.weight_bytes += node.weight_bytes
        cost.kv_read_bytes += node.kv_read_bytes
        cost.kv_write_bytes += node.kv_write_bytes
        if assumptions.charge_activation_traffic:
            cost.act_traffic_bytes += node.out_elements * fmt.activation_bits / 8

    if include_boundary_transfers:
        d2h = mapping.d2h_payload_bytes if mapping.d2h_payload_bytes is not None else default_d2h_payload(g)
        transfer(d2h, "d2h", profiles[-1])

    return cost
