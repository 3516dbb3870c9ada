"""End-to-end acceptance suite.

Every test prints one ``[acceptance] C## <name>: PASS|FAIL (...)`` line with
the measured values and its runtime; run with ``pytest tests/test_acceptance.py
-v -s`` to see all lines. Tolerance bands are pinned here, not configurable.
"""

import dataclasses
import functools
import json
import random
import time

from llmsim.graph import (
    build_decode_graph,
    build_prefill_graph,
    graph_totals,
    matmul_node,
)
from llmsim.models import DataFormatPolicy, ModelConfig, kv_bytes_per_token, model_by_name
from llmsim.profiles import HardwareProfile, ProfileRegistry, builtin_profiles, load_profiles
from llmsim.report import emit_records, parse_records, run_record
from llmsim.scenario import builtin_scenarios, run_scenario, tco_per_qps

F16 = DataFormatPolicy(16, 16, 16)
TOY = ModelConfig("toy", n_layers=2, d_model=64, n_heads=4, n_kv_heads=2,
                  head_dim=16, d_ffn=128, vocab=100)


class _Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def _line(cid: str, name: str, ok: bool, detail: str, elapsed: float) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"[acceptance] {cid} {name}: {status} ({detail}) [{elapsed:.2f}s]")


@functools.lru_cache(maxsize=None)
def _suite_results(kind: str):
    out = {}
    for s in builtin_scenarios(kind):
        out[s.label] = (s, run_scenario(s))
    return out


def test_c01_profile_table_fidelity():
    expected = {
        "PIM-AI chip": (5, 0.4, 102.4, 0.95, 12.8, 12.8, 20, 20),
        "PIM-AI server": (3072, 0.5, 39321.6, 0.95, 22, 528, 1920, 50),
        "A17 Pro": (17, 0.4, 51.2, 20, 51.2, 51.2, 20, 20),
        "Snapdragon 8 Gen3": (17, 0.4, 77, 10, 77, 77, 10, 10),
        "Dimensity 9300": (16, 0.4, 76.8, 10, 76.8, 76.8, 10, 10),
        "DGX-H100": (7916, 0.5, 26800, 7, 450, 450, 280, 40),
    }
    fields = ("compute_tops", "compute_energy", "mem_bw", "mem_energy",
              "h2d_bw", "d2h_bw", "h2d_energy", "d2h_energy")
    with _Timer() as t:
        reg = builtin_profiles()
        ok = len(reg) == 6
        for name, values in expected.items():
            p = reg.get(name)
            ok &= all(getattr(p, f) == v for f, v in zip(fields, values))
        # serialization round trip is exact
        for p in reg:
            doc = json.dumps(p.to_dict())
            ok &= json.dumps(HardwareProfile.from_dict(json.loads(doc)).to_dict()) == doc
        reloaded = load_profiles({"profiles": [p.to_dict() for p in reg]})
        ok &= all(reloaded.get(p.name) == p for p in reg)
    _line("C01", "profile-table-fidelity", ok, "6 profiles, exact cells, round-trip exact", t.elapsed)
    assert ok


def test_c02_flop_oracle():
    rng = random.Random(90125)
    with _Timer() as t:
        checked = 0
        ok = True
        for _ in range(200):
            b, m, k, n = (rng.randint(1, 8) for _ in range(4))
            loop = 0
            for _i in range(m):
                for _j in range(n):
                    for _l in range(k):
                        loop += 2
            loop *= b
            ok &= matmul_node("x", 0, b, m, k, n).flops == loop
            checked += 1
    _line("C02", "matmul-flop-oracle", ok, f"{checked} random shapes vs counting loop", t.elapsed)
    assert ok


def test_c03_prefill_decode_equivalence():
    with _Timer() as t:
        ok = True
        for seq in range(1, 17):
            pre = graph_totals(build_prefill_graph(TOY, F16, 1, seq))
            dec_flops = 0
            dec_writes = 0.0
            for ctx in range(seq):
                tot = graph_totals(build_decode_graph(TOY, F16, 1, ctx))
                dec_flops += tot.flops
                dec_writes += tot.kv_write_bytes
            ok &= pre.flops == dec_flops
            ok &= pre.kv_write_bytes == dec_writes == seq * kv_bytes_per_token(TOY, F16)
    _line("C03", "prefill-decode-equivalence", ok, "S=1..16 exact, KV writes conserved", t.elapsed)
    assert ok


def test_c04_kv_traffic_oracle():
    with _Timer() as t:
        m = model_by_name("Llama2-70B")
        step = graph_totals(build_decode_graph(m, F16, 1, 1049))
        expected = 327_680 * 1050
        ok = step.kv_read_bytes == expected
        mha = model_by_name("Llama2-70B-MHA")
        ratio = kv_bytes_per_token(mha, F16) / kv_bytes_per_token(m, F16)
        ok &= ratio == 8.0
    _line("C04", "kv-traffic-oracle", ok,
          f"per-step read {step.kv_read_bytes:.0f} == {expected}, MHA/GQA8 ratio {ratio:g}", t.elapsed)
    assert ok


def _mobile_ratios(model_name: str):
    results = _suite_results("mobile")
    pim = results[f"mobile/{model_name}/PIM-AI chip"][1]
    out = {}
    for rival in ("A17 Pro", "Snapdragon 8 Gen3", "Dimensity 9300"):
        other = results[f"mobile/{model_name}/{rival}"][1]
        out[rival] = {
            "energy_ratio": other.energy_per_token_j / pim.energy_per_token_j,
            "speedup_pct": (pim.tokens_per_s / other.tokens_per_s - 1.0) * 100.0,
        }
    return out


def test_c05_mobile_energy_per_token_ratios():
    with _Timer() as t:
        gate = _mobile_ratios("Llama2-7B")
        other = _mobile_ratios("Mistral-7B")
        a17 = gate["A17 Pro"]["energy_ratio"]
        snap = gate["Snapdragon 8 Gen3"]["energy_ratio"]
        dim = gate["Dimensity 9300"]["energy_ratio"]
        ok = 17.0 <= a17 <= 23.0 and 9.0 <= snap <= 12.0 and 9.0 <= dim <= 12.0
    detail = (f"Llama2-7B: A17={a17:.2f} in [17,23], Snapdragon={snap:.2f}, "
              f"Dimensity={dim:.2f} in [9,12]; Mistral-7B (reported, ungated): "
              f"A17={other['A17 Pro']['energy_ratio']:.2f}, "
              f"Snapdragon={other['Snapdragon 8 Gen3']['energy_ratio']:.2f}")
    _line("C05", "mobile-energy-per-token", ok, detail, t.elapsed)
    assert ok


def test_c06_mobile_decode_throughput():
    with _Timer() as t:
        gate = _mobile_ratios("Llama2-7B")
        snap = gate["Snapdragon 8 Gen3"]["speedup_pct"]
        dim = gate["Dimensity 9300"]["speedup_pct"]
        a17 = gate["A17 Pro"]["speedup_pct"]
        ok = 19.0 <= snap <= 31.0 and 19.0 <= dim <= 31.0
    detail = (f"Llama2-7B: vs Snapdragon {snap:.1f}%, vs Dimensity {dim:.1f}% (band [19,31]); "
              f"vs A17 Pro {a17:.1f}%, not gated: tracks the modeled 51.2 GB/s A17 bandwidth, "
              "see README 'Known modeling sensitivities'")
    _line("C06", "mobile-decode-throughput", ok, detail, t.elapsed)
    assert ok


def test_c07_cloud_decode_throughput():
    with _Timer() as t:
        results = _suite_results("cloud")
        ratios = {}
        for model in ("Llama2-70B", "Mixtral-8x22B"):
            for attn in ("GQA8", "MHA"):
                group = f"cloud/{model}/{attn}"
                dgx = results[f"{group}/DGX-H100"][1]
                pim = results[f"{group}/PIM-AI-4srv"][1]
                ratios[f"{model}/{attn}"] = pim.tokens_per_s / dgx.tokens_per_s
        failures = {case: r for case, r in ratios.items() if not 1.9 <= r <= 3.1}
        ok = not failures
    detail = ", ".join(f"{case}={r:.3f}" for case, r in ratios.items()) + " (band [1.9,3.1])"
    _line("C07", "cloud-decode-throughput", ok, detail, t.elapsed)
    assert ok, (
        f"cases outside [1.9, 3.1]: {failures}. Known limit: at batch 20 per engine each "
        "PIM engine streams ~288 GB of Mixtral-8x22B expert weights per decode step over "
        "13.1072 TB/s (>= 21.96 ms/step floor), which caps the Mixtral MHA ratio near 1.73 "
        "under the additive worst-case model regardless of assumption switches or engine "
        "partitioning; see the repository's known-deviations notes."
    )


def test_c08_cloud_tco_per_qps():
    with _Timer() as t:
        results = _suite_results("cloud")
        values = {}
        for model in ("Llama2-70B", "Mixtral-8x22B"):
            group = f"cloud/{model}/GQA8"
            s_dgx, dgx = results[f"{group}/DGX-H100"]
            s_pim, pim = results[f"{group}/PIM-AI-4srv"]
            tco_dgx = tco_per_qps(dgx, s_dgx.cost_params)
            tco_pim = tco_per_qps(pim, s_pim.cost_params)
            values[model] = (tco_dgx, tco_pim, tco_dgx / tco_pim)
        ok = all(5.0 <= v[2] <= 8.5 for v in values.values())
    detail = "; ".join(
        f"{m}: DGX ${v[0]:,.0f}/qps vs PIM ${v[1]:,.0f}/qps, ratio {v[2]:.2f}"
        for m, v in values.items()) + " (band [5.0,8.5])"
    _line("C08", "cloud-tco-per-qps", ok, detail, t.elapsed)
    assert ok


def test_c09_scaling_laws():
    from llmsim.costmodel import MappingScheme, eval_graph, eval_node

    rng = random.Random(424242)
    with _Timer() as t:
        ok = True
        for _ in range(40):
            bw = rng.uniform(0.1, 1e4)
            tops = rng.uniform(0.1, 1e3)
            pj_bit = rng.uniform(0, 50)
            pj_op = rng.uniform(0, 5)
            ctx = rng.randint(0, 300)
            batch = rng.randint(1, 4)
            base = HardwareProfile("a", tops, pj_op, bw, pj_bit, 1, 1, 0, 0)
            doubled = dataclasses.replace(base, name="b", mem_bw=2 * bw)
            g = build_decode_graph(TOY, F16, batch, ctx)
            for node in g.nodes:
                ca = eval_node(node, base, F16)
                cb = eval_node(node, doubled, F16)
                ok &= cb.mem_s == ca.mem_s / 2
                ok &= cb.compute_s == ca.compute_s and cb.mem_pj == ca.mem_pj
            # uniform rate scaling leaves every energy field untouched
            k = rng.choice([0.5, 2.0, 4.0])
            scaled = base.scaled("c", k)
            ra, rc = ProfileRegistry([base]), ProfileRegistry([scaled])
            ea = eval_graph(g, MappingScheme.single("a"), ra)
            ec = eval_graph(g, MappingScheme.single("c"), rc)
            ok &= ec.total_pj == ea.total_pj
            ok &= abs(ec.total_s * k - ea.total_s) <= 1e-12 * ea.total_s
            # decode step time monotone in context length
            g2 = build_decode_graph(TOY, F16, batch, ctx + rng.randint(1, 100))
            ok &= eval_graph(g2, MappingScheme.single("a"), ra).total_s >= ea.total_s
    _line("C09", "scaling-laws", ok, "40 randomized profiles/configs x 3 laws", t.elapsed)
    assert ok


def test_c10_determinism_and_round_trips():
    with _Timer() as t:
        def mobile_documents():
            records = []
            for s in builtin_scenarios("mobile"):
                metrics = run_scenario(s)
                records.append(run_record(s.label, s.model.name, s.fmt, s.workload,
                                          s.deployment.description, metrics))
            return emit_records(records, "csv"), emit_records(records, "json")

        csv_a, json_a = mobile_documents()
        csv_b, json_b = mobile_documents()
        ok = csv_a == csv_b and json_a == json_b
        ok &= emit_records(parse_records(csv_a, "csv"), "csv") == csv_a
        ok &= emit_records(parse_records(json_a, "json"), "json") == json_a
    _line("C10", "determinism-and-round-trips", ok,
          "repeated pipeline byte-identical; csv/json emit-parse-emit identity", t.elapsed)
    assert ok
