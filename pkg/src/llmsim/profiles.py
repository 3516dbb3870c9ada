"""Hardware profiles: the parameter sets that drive the cost model.

A profile bundles peak compute rate and per-op energy, main-memory bandwidth
and per-bit energy, host-link bandwidth/energy per direction, and per-kind
costs for auxiliary functions (softmax, normalization, elementwise
activation, embedding lookup).

Unit conventions used throughout this package:
  * 1 TOPS  = 1e12 operations per second
  * 1 GB/s  = 1e9 bytes per second (decimal; binary prefixes are never used)
  * energies are picojoules: pJ/op, pJ/bit, pJ/element
"""

from dataclasses import dataclass, field, replace

import yaml

from .errors import ConfigError, UnknownNameError

TERA = 1.0e12
GIGA = 1.0e9

# Auxiliary-function kinds a profile can price individually.
AUX_KINDS = ("softmax", "norm", "activation", "embedding")

# Fraction of the peak op rate assumed for aux functions when a profile does
# not specify them: elementwise/normalization pipelines sustain nowhere near
# the tensor-unit rate, but are not free either.
_AUX_RATE_DIVISOR = 8.0


@dataclass(frozen=True)
class AuxCost:
    """Throughput and energy of one auxiliary function kind."""

    elements_per_s: float
    pj_per_element: float


@dataclass(frozen=True)
class HardwareProfile:
    """One accelerator parameter set.

    ``h2d``/``d2h`` describe the host link in each direction; broadcast or
    switch-hop costs of multi-device platforms are folded into the per-bit
    energies rather than modeled structurally.
    """

    name: str
    compute_tops: float          # 1e12 ops/s
    compute_energy: float        # pJ per operation
    mem_bw: float                # GB/s to main memory
    mem_energy: float            # pJ per bit read/written
    h2d_bw: float                # GB/s host -> device
    d2h_bw: float                # GB/s device -> host
    h2d_energy: float            # pJ per bit
    d2h_energy: float            # pJ per bit
    aux_costs: dict[str, AuxCost] = field(default_factory=dict)

    def __post_init__(self):
        if not self.aux_costs:
            object.__setattr__(self, "aux_costs", default_aux_costs(self.compute_tops, self.compute_energy))

    def aux_cost(self, kind: str) -> AuxCost:
        try:
            return self.aux_costs[kind]
        except KeyError:
            raise UnknownNameError(
                f"profile {self.name!r} has no aux cost for kind {kind!r}; known: {sorted(self.aux_costs)}"
            ) from None

    def scaled(self, name: str, factor: float) -> "HardwareProfile":
        """A profile with every rate scaled by ``factor`` and energies kept.

        Used to carve a sub-device out of an aggregate profile (e.g. 8 of a
        server's 24 memory modules): bandwidths and op rates shrink, the
        per-bit and per-op energies of the technology do not.
        """
        if factor <= 0:
            raise ConfigError("scale factor must be > 0")
        aux = {k: AuxCost(c.elements_per_s * factor, c.pj_per_element) for k, c in self.aux_costs.items()}
        return replace(
            self,
            name=name,
            compute_tops=self.compute_tops * factor,
            mem_bw=self.mem_bw * factor,
            h2d_bw=self.h2d_bw * factor,
            d2h_bw=self.d2h_bw * factor,
            aux_costs=aux,
        )

    def to_dict(self) -> dict:
        """Schema-shaped plain dict (see ``load_profiles``)."""
        return {
            "name": self.name,
            "compute": {"tops": self.compute_tops, "pj_per_op": self.compute_energy},
            "main_memory": {"bw_gbps": self.mem_bw, "pj_per_bit": self.mem_energy},
            "h2d": {"bw_gbps": self.h2d_bw, "pj_per_bit": self.h2d_energy},
            "d2h": {"bw_gbps": self.d2h_bw, "pj_per_bit": self.d2h_energy},
            "aux": {
                kind: {"elements_per_s": c.elements_per_s, "pj_per_element": c.pj_per_element}
                for kind, c in sorted(self.aux_costs.items())
            },
        }

    @classmethod
    def from_dict(cls, doc: dict, path: str = "profile") -> "HardwareProfile":
        return _profile_from_dict(doc, path)


def default_aux_costs(compute_tops: float, compute_energy: float) -> dict[str, AuxCost]:
    cost = AuxCost(compute_tops * TERA / _AUX_RATE_DIVISOR, compute_energy)
    return {kind: cost for kind in AUX_KINDS}


def validate_profile(p: HardwareProfile) -> list[str]:
    """Invariant check. Returns one message per violation; empty means valid."""
    report = []
    if not p.name:
        report.append("name: must be a non-empty string")
    for attr in ("compute_tops", "mem_bw", "h2d_bw", "d2h_bw"):
        if not getattr(p, attr) > 0:
            report.append(f"{attr}: must be > 0")
    for attr in ("compute_energy", "mem_energy", "h2d_energy", "d2h_energy"):
        if getattr(p, attr) < 0:
            report.append(f"{attr}: must be >= 0")
    for kind, cost in p.aux_costs.items():
        if kind not in AUX_KINDS:
            report.append(f"aux.{kind}: unknown aux kind (known: {', '.join(AUX_KINDS)})")
        if not cost.elements_per_s > 0:
            report.append(f"aux.{kind}.elements_per_s: must be > 0")
        if cost.pj_per_element < 0:
            report.append(f"aux.{kind}.pj_per_element: must be >= 0")
    return report


class ProfileRegistry:
    """Ordered, name-keyed collection of profiles.

    Lookup of a missing name raises; there is deliberately no fallback
    profile.
    """

    def __init__(self, profiles: "list[HardwareProfile] | tuple[HardwareProfile, ...]" = ()):
        self._profiles: dict[str, HardwareProfile] = {}
        for p in profiles:
            self.add(p)

    def add(self, profile: HardwareProfile, replace_existing: bool = False) -> None:
        if profile.name in self._profiles and not replace_existing:
            raise ConfigError(f"duplicate profile name {profile.name!r}")
        bad = validate_profile(profile)
        if bad:
            raise ConfigError("; ".join(bad), path=f"profile {profile.name!r}")
        self._profiles[profile.name] = profile

    def get(self, name: str) -> HardwareProfile:
        try:
            return self._profiles[name]
        except KeyError:
            raise UnknownNameError(f"unknown profile {name!r}; available: {', '.join(self.names())}") from None

    def names(self) -> list[str]:
        return list(self._profiles)

    def copy(self) -> "ProfileRegistry":
        return ProfileRegistry(list(self))

    def __contains__(self, name: str) -> bool:
        return name in self._profiles

    def __iter__(self):
        return iter(self._profiles.values())

    def __len__(self) -> int:
        return len(self._profiles)


# Built-in profiles, kept in the config schema so they round-trip through the
# same loader users go through. Compute is TOPS / pJ-per-op, memory and links
# are GB/s / pJ-per-bit. The two multi-device platforms (PIM-AI server,
# DGX-H100) fold inter-device broadcast energy into their link pJ/bit.
BUILTIN_PROFILE_DOCS: list[dict] = [
    {
        "name": "PIM-AI chip",
        "compute": {"tops": 5, "pj_per_op": 0.4},
        "main_memory": {"bw_gbps": 102.4, "pj_per_bit": 0.95},
        "h2d": {"bw_gbps": 12.8, "pj_per_bit": 20},
        "d2h": {"bw_gbps": 12.8, "pj_per_bit": 20},
    },
    {
        "name": "PIM-AI server",
        "compute": {"tops": 3072, "pj_per_op": 0.5},
        "main_memory": {"bw_gbps": 39321.6, "pj_per_bit": 0.95},
        "h2d": {"bw_gbps": 22, "pj_per_bit": 1920},
        "d2h": {"bw_gbps": 528, "pj_per_bit": 50},
    },
    {
        "name": "A17 Pro",
        "compute": {"tops": 17, "pj_per_op": 0.4},
        "main_memory": {"bw_gbps": 51.2, "pj_per_bit": 20},
        "h2d": {"bw_gbps": 51.2, "pj_per_bit": 20},
        "d2h": {"bw_gbps": 51.2, "pj_per_bit": 20},
    },
    {
        "name": "Snapdragon 8 Gen3",
        "compute": {"tops": 17, "pj_per_op": 0.4},
        "main_memory": {"bw_gbps": 77, "pj_per_bit": 10},
        "h2d": {"bw_gbps": 77, "pj_per_bit": 10},
        "d2h": {"bw_gbps": 77, "pj_per_bit": 10},
    },
    {
        "name": "Dimensity 9300",
        "compute": {"tops": 16, "pj_per_op": 0.4},
        "main_memory": {"bw_gbps": 76.8, "pj_per_bit": 10},
        "h2d": {"bw_gbps": 76.8, "pj_per_bit": 10},
        "d2h": {"bw_gbps": 76.8, "pj_per_bit": 10},
    },
    {
        "name": "DGX-H100",
        "compute": {"tops": 7916, "pj_per_op": 0.5},
        "main_memory": {"bw_gbps": 26800, "pj_per_bit": 7},
        "h2d": {"bw_gbps": 450, "pj_per_bit": 280},
        "d2h": {"bw_gbps": 450, "pj_per_bit": 40},
    },
]


def builtin_profiles() -> ProfileRegistry:
    """The six built-in device profiles."""
    return load_profiles({"profiles": BUILTIN_PROFILE_DOCS})


def load_profiles(document: "str | dict", base: ProfileRegistry | None = None) -> ProfileRegistry:
    """Parse a profile config document into a registry.

    ``document`` is YAML/JSON text or an already-parsed mapping with a
    top-level ``profiles`` list. When ``base`` is given, its profiles are the
    starting point and document entries override them by name.

    Schema per profile::

        name: str
        compute:     {tops: number, pj_per_op: number}
        main_memory: {bw_gbps: number, pj_per_bit: number}
        h2d:         {bw_gbps: number, pj_per_bit: number}
        d2h:         {bw_gbps: number, pj_per_bit: number}
        aux:         {<kind>: {elements_per_s: number, pj_per_element: number}}   # optional

    Numbers are plain decimals, no unit suffixes.
    """
    if isinstance(document, str):
        try:
            document = yaml.safe_load(document)
        except yaml.YAMLError as exc:
            raise ConfigError(f"unparseable profile document: {exc}") from exc
    if not isinstance(document, dict) or "profiles" not in document:
        raise ConfigError("expected a mapping with a top-level 'profiles' list")
    entries = document["profiles"]
    if not isinstance(entries, list):
        raise ConfigError("must be a list", path="profiles")

    registry = base.copy() if base is not None else ProfileRegistry()
    seen: set[str] = set()
    for i, entry in enumerate(entries):
        path = f"profiles[{i}]"
        profile = _profile_from_dict(entry, path)
        if profile.name in seen:
            raise ConfigError(f"duplicate profile name {profile.name!r}", path=path)
        seen.add(profile.name)
        registry.add(profile, replace_existing=base is not None)
    return registry


def _require(doc: dict, key: str, path: str):
    if key not in doc:
        raise ConfigError("missing required field", path=f"{path}.{key}")
    return doc[key]


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {type(value).__name__}", path=path)
    return float(value)


def _rate_and_energy(doc: dict, key: str, path: str, rate_key: str, energy_key: str) -> tuple[float, float]:
    section = _require(doc, key, path)
    if not isinstance(section, dict):
        raise ConfigError("expected a mapping", path=f"{path}.{key}")
    rate = _number(_require(section, rate_key, f"{path}.{key}"), f"{path}.{key}.{rate_key}")
    energy = _number(_require(section, energy_key, f"{path}.{key}"), f"{path}.{key}.{energy_key}")
    if rate <= 0:
        raise ConfigError("must be > 0", path=f"{path}.{key}.{rate_key}")
    if energy < 0:
        raise ConfigError("must be >= 0", path=f"{path}.{key}.{energy_key}")
    return rate, energy


def _profile_from_dict(doc: dict, path: str) -> HardwareProfile:
    if not isinstance(doc, dict):
        raise ConfigError("expected a mapping", path=path)
    name = _require(doc, "name", path)
    if not isinstance(name, str) or not name:
        raise ConfigError("must be a non-empty string", path=f"{path}.name")
    path = f"{path} ({name})"  # errors report the profile name and the field path
    tops, pj_op = _rate_and_energy(doc, "compute", path, "tops", "pj_per_op")
    mem_bw, mem_pj = _rate_and_energy(doc, "main_memory", path, "bw_gbps", "pj_per_bit")
    h2d_bw, h2d_pj = _rate_and_energy(doc, "h2d", path, "bw_gbps", "pj_per_bit")
    d2h_bw, d2h_pj = _rate_and_energy(doc, "d2h", path, "bw_gbps", "pj_per_bit")

    aux: dict[str, AuxCost] = {}
    raw_aux = doc.get("aux")
    if raw_aux is not None:
        # A list form [{kind: ..., ...}, ...] is accepted too; it is the only
        # form in which duplicate kinds can be expressed (and rejected).
        if isinstance(raw_aux, list):
            items = []
            for j, entry in enumerate(raw_aux):
                if not isinstance(entry, dict) or "kind" not in entry:
                    raise ConfigError("expected a mapping with a 'kind' key", path=f"{path}.aux[{j}]")
                items.append((entry["kind"], entry, f"{path}.aux[{j}]"))
        elif isinstance(raw_aux, dict):
            items = [(kind, entry, f"{path}.aux.{kind}") for kind, entry in raw_aux.items()]
        else:
            raise ConfigError("expected a mapping or list", path=f"{path}.aux")
        for kind, entry, apath in items:
            if kind not in AUX_KINDS:
                raise ConfigError(f"unknown aux kind (known: {', '.join(AUX_KINDS)})", path=apath)
            if kind in aux:
                raise ConfigError("duplicate aux kind entry", path=apath)
            eps = _number(_require(entry, "elements_per_s", apath), f"{apath}.elements_per_s")
            pje = _number(_require(entry, "pj_per_element", apath), f"{apath}.pj_per_element")
            if eps <= 0:
                raise ConfigError("must be > 0", path=f"{apath}.elements_per_s")
            if pje < 0:
                raise ConfigError("must be >= 0", path=f"{apath}.pj_per_element")
            aux[kind] = AuxCost(eps, pje)
        # Unspecified kinds fall back to the profile-wide default.
        defaults = default_aux_costs(tops, pj_op)
        for kind in AUX_KINDS:
            aux.setdefault(kind, defaults[kind])

    return HardwareProfile(
        name=name,
        compute_tops=tops,
        compute_energy=pj_op,
        mem_bw=mem_bw,
        mem_energy=mem_pj,
        h2d_bw=h2d_bw,
        d2h_bw=d2h_bw,
        h2d_energy=h2d_pj,
        d2h_energy=d2h_pj,
        aux_costs=aux,
    )


def dump_profiles(registry: ProfileRegistry) -> dict:
    """Registry as a schema-shaped document (inverse of ``load_profiles``)."""
    return {"profiles": [p.to_dict() for p in registry]}
