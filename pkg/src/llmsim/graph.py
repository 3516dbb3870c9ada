"""Execution graphs: one prefill pass or one decode step as cost-carrying nodes.

Each node carries exact FLOP and traffic terms; nothing is evaluated here.
Matmul-like nodes obey flops = 2*b*m*k*n. Causal attention over a fresh
block of S tokens attends S*(S+1)/2 pairs, so its nodes store the exact
triangular FLOP count (dims carry the mean attended length, which may be
half-integral).

Traffic conventions:
  * every weight matrix is streamed from main memory once per graph (once
    per prefill pass, once per decode step), shared across the batch;
  * the decode step at context C reads (C+1) tokens worth of KV cache and
    writes 1; prefill writes its S tokens and reads none (K/V are produced
    in-pass rather than retrieved from earlier iterations);
  * embedding lookup is a table read priced as an aux op, not a GEMM;
  * intermediate activation tensors are assumed to stay on chip; their
    element counts are recorded so the cost model can optionally charge them.
"""

from dataclasses import dataclass

from .errors import ConfigError
from .models import (
    DataFormatPolicy,
    ModelConfig,
    kv_bytes_per_token,
)

KINDS = (
    "matmul",
    "attention_scores",
    "attention_apply",
    "softmax",
    "norm",
    "activation",
    "elementwise_add",
    "embed_lookup",
    "host_transfer",
)

MATMUL_KINDS = frozenset({"matmul", "attention_scores", "attention_apply"})

# Node kind -> the aux-cost kind a profile prices it with. host_transfer is
# absent: transfer legs are generated by the cost model, not stored in graphs.
AUX_KIND_OF = {
    "softmax": "softmax",
    "norm": "norm",
    "activation": "activation",
    "elementwise_add": "activation",
    "embed_lookup": "embedding",
}


@dataclass(slots=True)
class OpNode:
    """One operation with its cost-relevant sizes.

    ``dims`` is (b, m, k, n) for matmul-like kinds, None otherwise.
    ``act_elements`` drives aux-function cost; ``out_elements`` sizes the
    output tensor for optional activation-traffic charging. Bytes are floats
    but integer-valued for every supported bit width in practice.
    """

    kind: str
    label: str
    layer: int                      # -1 before the layer stack, n_layers after it
    dims: tuple | None = None
    flops: int = 0
    weight_bytes: float = 0.0
    kv_read_bytes: float = 0.0
    kv_write_bytes: float = 0.0
    act_elements: int = 0
    out_elements: int = 0


@dataclass(slots=True)
class ExecutionGraph:
    """Ordered nodes of one phase pass, plus the workload slice it covers."""

    phase: str                      # "prefill" | "decode_step"
    nodes: tuple
    batch: int
    context_len: int                # tokens already cached before this pass
    new_tokens: int                 # tokens processed by this pass
    model: ModelConfig
    fmt: DataFormatPolicy


@dataclass(frozen=True)
class GraphTotals:
    flops: int
    weight_bytes: float
    kv_read_bytes: float
    kv_write_bytes: float
    act_elements: int


def matmul_node(label: str, layer: int, b: int, m: int, k: int, n: int,
                weight_bytes: float = 0.0, kind: str = "matmul") -> OpNode:
    return OpNode(
        kind=kind,
        label=label,
        layer=layer,
        dims=(b, m, k, n),
        flops=2 * b * m * k * n,
        weight_bytes=weight_bytes,
        out_elements=b * m * n,
    )


def _attention_nodes(m: ModelConfig, batch: int, new_tokens: int, context_len: int,
                     kv_read_tokens: int, kv_layer_bytes: float, layer: int) -> list[OpNode]:
    """Score and apply nodes for causal attention over ``new_tokens``.

    ``kv_read_tokens`` is the cached-token count charged as main-memory KV
    traffic (split half K on scores, half V on apply).
    """
    # Pairs attended: each of the new positions sees the full prior context
    # plus itself and its causal predecessors within the block.
    attended = new_tokens * context_len + new_tokens * (new_tokens + 1) // 2
    flops = 2 * batch * m.n_heads * m.head_dim * attended
    mean_keys = context_len + (new_tokens + 1) / 2
    kv_read_half = batch * kv_read_tokens * kv_layer_bytes / 2
    scores = OpNode(
        kind="attention_scores",
        label="attn_scores",
        layer=layer,
        dims=(batch * m.n_heads, new_tokens, m.head_dim, mean_keys),
        flops=flops,
        kv_read_bytes=kv_read_half,
        out_elements=batch * m.n_heads * attended,
    )
    smax = OpNode(
        kind="softmax",
        label="attn_softmax",
        layer=layer,
        act_elements=batch * m.n_heads * attended,
        out_elements=batch * m.n_heads * attended,
    )
    apply = OpNode(
        kind="attention_apply",
        label="attn_apply",
        layer=layer,
        dims=(batch * m.n_heads, new_tokens, mean_keys, m.head_dim),
        flops=flops,
        kv_read_bytes=kv_read_half,
        out_elements=batch * m.n_heads * new_tokens * m.head_dim,
    )
    return [scores, smax, apply]


def _build_graph(m: ModelConfig, fmt: DataFormatPolicy, batch: int, new_tokens: int,
                 context_len: int, phase: str, kv_read_tokens: int,
                 experts_streamed: int) -> ExecutionGraph:
    wbyte = fmt.weight_bits / 8
    nbyte = fmt.activation_bits / 8  # norm vectors stay at activation precision
    kv_tok = kv_bytes_per_token(m, fmt)
    kv_layer = kv_tok / m.n_layers if m.n_layers else 0.0
    d = m.d_model
    qkv_width = (m.n_heads + 2 * m.n_kv_heads) * m.head_dim
    tokens = batch * new_tokens

    nodes: list[OpNode] = [
        OpNode(kind="embed_lookup", label="embed", layer=-1,
               act_elements=tokens * d, out_elements=tokens * d),
    ]
    for layer in range(m.n_layers):
        nodes.append(OpNode(kind="norm", label="attn_norm", layer=layer,
                            weight_bytes=d * nbyte,
                            act_elements=tokens * d, out_elements=tokens * d))
        qkv = matmul_node("qkv_proj", layer, batch, new_tokens, d, qkv_width,
                          weight_bytes=d * qkv_width * wbyte)
        qkv.kv_write_bytes = batch * new_tokens * kv_layer
        nodes.append(qkv)
        nodes.extend(_attention_nodes(m, batch, new_tokens, context_len,
                                      kv_read_tokens, kv_layer, layer))
        nodes.append(matmul_node("out_proj", layer, batch, new_tokens,
                                 m.n_heads * m.head_dim, d,
                                 weight_bytes=m.n_heads * m.head_dim * d * wbyte))
        nodes.append(OpNode(kind="elementwise_add", label="attn_residual", layer=layer,
                            act_elements=tokens * d, out_elements=tokens * d))
        nodes.append(OpNode(kind="norm", label="ffn_norm", layer=layer,
                            weight_bytes=d * nbyte,
                            act_elements=tokens * d, out_elements=tokens * d))
        # FFN: per-token compute runs top_k experts; weight streaming covers
        # every expert touched by the pass.
        expert_w = d * m.d_ffn * wbyte * experts_streamed
        m_eff = new_tokens * m.top_k
        if m.ffn_kind == "gated":
            nodes.append(matmul_node("ffn_gate", layer, batch, m_eff, d, m.d_ffn, weight_bytes=expert_w))
            nodes.append(matmul_node("ffn_up", layer, batch, m_eff, d, m.d_ffn, weight_bytes=expert_w))
        else:
            nodes.append(matmul_node("ffn_up", layer, batch, m_eff, d, m.d_ffn, weight_bytes=expert_w))
        nodes.append(OpNode(kind="activation", label="ffn_act", layer=layer,
                            act_elements=batch * m_eff * m.d_ffn,
                            out_elements=batch * m_eff * m.d_ffn))
        nodes.append(matmul_node("ffn_down", layer, batch, m_eff, m.d_ffn, d, weight_bytes=expert_w))
        nodes.append(OpNode(kind="elementwise_add", label="ffn_residual", layer=layer,
                            act_elements=tokens * d, out_elements=tokens * d))

    tail = m.n_layers
    nodes.append(OpNode(kind="norm", label="final_norm", layer=tail,
                        weight_bytes=d * nbyte,
                        act_elements=tokens * d, out_elements=tokens * d))
    if m.vocab:
        # Logits for every new position (what a hooked forward pass computes);
        # sampling itself is one softmax over the final position's logits.
        nodes.append(matmul_node("lm_head", tail, batch, new_tokens, d, m.vocab,
                                 weight_bytes=d * m.vocab * wbyte))
        nodes.append(OpNode(kind="softmax", label="sample_softmax", layer=tail,
                            act_elements=batch * m.vocab, out_elements=batch * m.vocab))

    return ExecutionGraph(
        phase=phase,
        nodes=tuple(nodes),
        batch=batch,
        context_len=context_len,
        new_tokens=new_tokens,
        model=m,
        fmt=fmt,
    )


def build_prefill_graph(m: ModelConfig, fmt: DataFormatPolicy, batch: int, seq_len: int) -> ExecutionGraph:
    """One full-prompt pass: GEMM-shaped matmuls, exact causal attention."""
    if seq_len < 1 or batch < 1:
        raise ConfigError(f"seq_len and batch must be >= 1, got seq_len={seq_len} batch={batch}")
    return _build_graph(m, fmt, batch, new_tokens=seq_len, context_len=0,
                        phase="prefill", kv_read_tokens=0,
                        experts_streamed=m.n_experts)


def build_decode_graph(m: ModelConfig, fmt: DataFormatPolicy, batch: int, context_len: int) -> ExecutionGraph:
    """One token-generation step against ``context_len`` cached tokens.

    Matmuls collapse to GEMV shape ([b, 1, k, n]); the whole KV cache
    including the token written this step is read back. For MoE, a batch of
    b tokens touches min(n_experts, b*top_k) expert weight sets.
    """
    if context_len < 0 or batch < 1:
        raise ConfigError(f"context_len must be >= 0 and batch >= 1, got {context_len}, {batch}")
    touched = min(m.n_experts, batch * m.top_k)
    return _build_graph(m, fmt, batch, new_tokens=1, context_len=context_len,
                        phase="decode_step", kv_read_tokens=context_len + 1,
                        experts_streamed=touched)


def graph_totals(g: ExecutionGraph) -> GraphTotals:
    """Component-wise sums over all nodes."""
    flops = 0
    weight = 0.0
    kv_r = 0.0
    kv_w = 0.0
    act = 0
    for n in g.nodes:
        flops += n.flops
        weight += n.weight_bytes
        kv_r += n.kv_read_bytes
        kv_w += n.kv_write_bytes
        act += n.act_elements
    return GraphTotals(flops, weight, kv_r, kv_w, act)


TRACE_HEADER = "phase,layer,kind,label,b,m,k,n,flops,weight_bytes,kv_read_bytes,kv_write_bytes,act_elements"


def trace_lines(g: ExecutionGraph) -> list[str]:
    """One CSV-ish line per node, for debugging and oracle comparison."""
    lines = [TRACE_HEADER]
    for n in g.nodes:
        b, mm, k, nn = n.dims if n.dims else ("", "", "", "")
        lines.append(
            f"{g.phase},{n.layer},{n.kind},{n.label},{b},{mm},{k},{nn},"
            f"{n.flops},{n.weight_bytes:g},{n.kv_read_bytes:g},{n.kv_write_bytes:g},{n.act_elements}"
        )
    return lines
