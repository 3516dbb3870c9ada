"""Transformer architecture descriptors and their size arithmetic.

A ``ModelConfig`` is a static shape description (no weights, no math): enough
to derive parameter counts, weight bytes and KV-cache bytes, which is all the
cost model needs. ``DataFormatPolicy`` fixes the storage width of weights, KV
cache and activations independently.
"""

from dataclasses import dataclass, replace

from .errors import ConfigError, UnknownNameError

SUPPORTED_BITS = (4, 8, 16, 32)


@dataclass(frozen=True)
class MoESpec:
    """Mixture-of-experts FFN: ``top_k`` of ``n_experts`` run per token."""

    n_experts: int
    top_k: int


@dataclass(frozen=True)
class DataFormatPolicy:
    """Bits per stored element for each tensor class.

    Accumulation width is a hardware register detail and is not a traffic
    term, so it is not represented here.
    """

    weight_bits: int = 16
    kv_bits: int = 16
    activation_bits: int = 16

    def __post_init__(self):
        for name in ("weight_bits", "kv_bits", "activation_bits"):
            bits = getattr(self, name)
            if bits not in SUPPORTED_BITS:
                raise ConfigError(f"must be one of {SUPPORTED_BITS}, got {bits}", path=name)

    @property
    def label(self) -> str:
        return f"w{self.weight_bits}kv{self.kv_bits}a{self.activation_bits}"


@dataclass(frozen=True)
class ModelConfig:
    """Decoder-only transformer shape.

    ``n_kv_heads < n_heads`` expresses grouped-query attention; equality is
    ordinary multi-head attention. ``ffn_kind`` selects 3 matrices (gated) or
    2 (plain) per FFN. ``head_dim_override`` permits n_heads*head_dim !=
    d_model, which a few architectures use.
    """

    name: str
    n_layers: int
    d_model: int
    n_heads: int
    n_kv_heads: int
    head_dim: int
    d_ffn: int
    vocab: int
    ffn_kind: str = "gated"
    moe: MoESpec | None = None
    tied_embeddings: bool = False
    head_dim_override: bool = False

    def __post_init__(self):
        problems = []
        for attr in ("n_layers", "vocab"):
            if getattr(self, attr) < 0:
                problems.append(f"{attr} must be >= 0")
        for attr in ("d_model", "n_heads", "n_kv_heads", "head_dim", "d_ffn"):
            if getattr(self, attr) < 1:
                problems.append(f"{attr} must be >= 1")
        if self.ffn_kind not in ("gated", "plain"):
            problems.append(f"ffn_kind must be 'gated' or 'plain', got {self.ffn_kind!r}")
        if self.n_kv_heads >= 1 and self.n_heads % self.n_kv_heads != 0:
            problems.append(f"n_heads ({self.n_heads}) must be divisible by n_kv_heads ({self.n_kv_heads})")
        if not self.head_dim_override and self.n_heads * self.head_dim != self.d_model:
            problems.append(
                f"n_heads*head_dim ({self.n_heads * self.head_dim}) != d_model ({self.d_model}); "
                "set head_dim_override to allow"
            )
        if self.moe is not None:
            if self.moe.n_experts < 1 or self.moe.top_k < 1:
                problems.append("moe.n_experts and moe.top_k must be >= 1")
            elif self.moe.top_k > self.moe.n_experts:
                problems.append(f"moe.top_k ({self.moe.top_k}) > moe.n_experts ({self.moe.n_experts})")
        if problems:
            raise ConfigError("; ".join(problems), path=f"model {self.name!r}")

    @property
    def ffn_matrices(self) -> int:
        return 3 if self.ffn_kind == "gated" else 2

    @property
    def n_experts(self) -> int:
        return self.moe.n_experts if self.moe else 1

    @property
    def top_k(self) -> int:
        return self.moe.top_k if self.moe else 1

    def mha_variant(self) -> "ModelConfig":
        """The same architecture with one KV head per query head."""
        return replace(self, name=f"{self.name}-MHA", n_kv_heads=self.n_heads)

    def to_dict(self) -> dict:
        doc = {
            "name": self.name,
            "n_layers": self.n_layers,
            "d_model": self.d_model,
            "n_heads": self.n_heads,
            "n_kv_heads": self.n_kv_heads,
            "head_dim": self.head_dim,
            "d_ffn": self.d_ffn,
            "vocab": self.vocab,
            "ffn_kind": self.ffn_kind,
            "tied_embeddings": self.tied_embeddings,
        }
        if self.moe:
            doc["moe"] = {"n_experts": self.moe.n_experts, "top_k": self.moe.top_k}
        if self.head_dim_override:
            doc["head_dim_override"] = True
        return doc

    @classmethod
    def from_dict(cls, doc: dict, path: str = "model") -> "ModelConfig":
        if not isinstance(doc, dict):
            raise ConfigError("expected a mapping", path=path)
        required = ("name", "n_layers", "d_model", "n_heads", "n_kv_heads", "head_dim", "d_ffn", "vocab")
        for key in required:
            if key not in doc:
                raise ConfigError("missing required field", path=f"{path}.{key}")
        moe = None
        if doc.get("moe") is not None:
            m = doc["moe"]
            if not isinstance(m, dict) or "n_experts" not in m or "top_k" not in m:
                raise ConfigError("expected {n_experts, top_k}", path=f"{path}.moe")
            moe = MoESpec(int(m["n_experts"]), int(m["top_k"]))
        return cls(
            name=doc["name"],
            n_layers=int(doc["n_layers"]),
            d_model=int(doc["d_model"]),
            n_heads=int(doc["n_heads"]),
            n_kv_heads=int(doc["n_kv_heads"]),
            head_dim=int(doc["head_dim"]),
            d_ffn=int(doc["d_ffn"]),
            vocab=int(doc["vocab"]),
            ffn_kind=doc.get("ffn_kind", "gated"),
            moe=moe,
            tied_embeddings=bool(doc.get("tied_embeddings", False)),
            head_dim_override=bool(doc.get("head_dim_override", False)),
        )


def attn_param_count(m: ModelConfig) -> int:
    """Per-layer attention projection parameters (Q, K, V, O)."""
    q = m.d_model * m.n_heads * m.head_dim
    kv = 2 * m.d_model * m.n_kv_heads * m.head_dim
    o = m.n_heads * m.head_dim * m.d_model
    return q + kv + o


def ffn_param_count(m: ModelConfig) -> int:
    """Per-layer FFN parameters, all experts included."""
    return m.ffn_matrices * m.d_model * m.d_ffn * m.n_experts


def norm_param_count(m: ModelConfig) -> int:
    """All normalization vectors: two per layer plus the final norm."""
    return (2 * m.n_layers + 1) * m.d_model


def param_count(m: ModelConfig) -> int:
    """Exact parameter count of the architecture.

    Embedding table, per-layer attention projections and FFN matrices (every
    expert), norm vectors, final norm, and the LM head unless embeddings are
    tied.
    """
    embed = m.vocab * m.d_model
    per_layer = attn_param_count(m) + ffn_param_count(m) + 2 * m.d_model
    head = 0 if m.tied_embeddings else m.vocab * m.d_model
    return embed + m.n_layers * per_layer + m.d_model + head


def weight_bytes(m: ModelConfig, fmt: DataFormatPolicy) -> float:
    """Stored model bytes under a format policy.

    Norm vectors stay at activation precision even under narrow weight
    formats (standard on-device quantization keeps them high precision);
    they are a negligible fraction of the total.
    """
    norms = norm_param_count(m)
    return (param_count(m) - norms) * fmt.weight_bits / 8 + norms * fmt.activation_bits / 8


def embedding_bytes(m: ModelConfig, fmt: DataFormatPolicy) -> float:
    """Bytes of the input embedding table (never streamed as a weight)."""
    return m.vocab * m.d_model * fmt.weight_bits / 8


def kv_bytes_per_token(m: ModelConfig, fmt: DataFormatPolicy) -> float:
    """KV-cache bytes appended per token across all layers (K and V)."""
    return 2 * m.n_layers * m.n_kv_heads * m.head_dim * fmt.kv_bits / 8


# Built-in presets. Architectural constants transcribed from each model's
# published configuration file; the test suite cross-checks the derived
# parameter totals against the publicly reported sizes.
BUILTIN_MODEL_DOCS: list[dict] = [
    {
        "name": "Llama2-70B",
        "n_layers": 80, "d_model": 8192, "n_heads": 64, "n_kv_heads": 8,
        "head_dim": 128, "d_ffn": 28672, "vocab": 32000, "ffn_kind": "gated",
    },
    {
        "name": "Llama2-7B",
        "n_layers": 32, "d_model": 4096, "n_heads": 32, "n_kv_heads": 32,
        "head_dim": 128, "d_ffn": 11008, "vocab": 32000, "ffn_kind": "gated",
    },
    {
        "name": "Mistral-7B",
        "n_layers": 32, "d_model": 4096, "n_heads": 32, "n_kv_heads": 8,
        "head_dim": 128, "d_ffn": 14336, "vocab": 32000, "ffn_kind": "gated",
    },
    {
        "name": "Mixtral-8x22B",
        "n_layers": 56, "d_model": 6144, "n_heads": 48, "n_kv_heads": 8,
        "head_dim": 128, "d_ffn": 16384, "vocab": 32768, "ffn_kind": "gated",
        "moe": {"n_experts": 8, "top_k": 2},
    },
]


def builtin_models() -> list[ModelConfig]:
    """Built-in presets plus an MHA variant wherever GQA is the default."""
    base = [ModelConfig.from_dict(doc) for doc in BUILTIN_MODEL_DOCS]
    out = list(base)
    for m in base:
        if m.n_kv_heads != m.n_heads:
            out.append(m.mha_variant())
    return out


def model_by_name(name: str) -> ModelConfig:
    for m in builtin_models():
        if m.name == name:
            return m
    raise UnknownNameError(f"unknown model {name!r}; available: {', '.join(x.name for x in builtin_models())}")


def load_models(document: "str | dict", include_builtins: bool = True) -> dict[str, ModelConfig]:
    """Parse a model config document: ``{models: [<model doc>, ...]}``.

    Documents use the same schema the presets are stored in; user entries
    override builtins by name when ``include_builtins`` is set.
    """
    import yaml

    if isinstance(document, str):
        try:
            document = yaml.safe_load(document)
        except yaml.YAMLError as exc:
            raise ConfigError(f"unparseable model document: {exc}") from exc
    if not isinstance(document, dict) or "models" not in document:
        raise ConfigError("expected a mapping with a top-level 'models' list")
    if not isinstance(document["models"], list):
        raise ConfigError("must be a list", path="models")
    out = {m.name: m for m in builtin_models()} if include_builtins else {}
    for i, doc in enumerate(document["models"]):
        m = ModelConfig.from_dict(doc, path=f"models[{i}]")
        out[m.name] = m
    return out
