"""Command-line interface.

Exit codes: 0 success, 2 usage, 3 unknown profile/model name, 4 config or
schema violation, 5 unwritable output path. Failures print one
machine-parseable line to stderr: ``error: <code>: <message>``.
"""

import argparse
import dataclasses
import json
import os
import sys

import yaml

from .costmodel import Assumptions, MappingScheme
from .errors import ConfigError, SimError, UnknownNameError
from .graph import build_decode_graph, build_prefill_graph, trace_lines
from .models import DataFormatPolicy, builtin_models, load_models
from .profiles import builtin_profiles, load_profiles
from .report import (
    compare,
    emit_charts,
    emit_records,
    parse_records,
    run_record,
    runs_from_records,
)
from .scenario import (
    CostParams,
    DeploymentSpec,
    Workload,
    builtin_scenarios,
    export_scenarios,
    run_inference,
    run_scenario,
    tco_per_qps,
)

EXIT_OK = 0
EXIT_UNKNOWN_NAME = 3
EXIT_CONFIG = 4
EXIT_OUTPUT = 5

_RUN_DEFAULTS = {
    "model": None,
    "format": {"weight_bits": 16, "kv_bits": 16, "activation_bits": 16},
    "workload": {"batch": 1, "n_input": 1000, "n_output": 100},
    "deployment": {"profile": None, "n_engines": 1, "orchestration_s": 0.0},
    "profile_overrides": {},
    "cost_params": None,
}

# sweep/--set parameter -> config section
_PARAM_SECTIONS = {
    "batch": ("workload", "batch"),
    "n_input": ("workload", "n_input"),
    "n_output": ("workload", "n_output"),
    "weight_bits": ("format", "weight_bits"),
    "weights_bits": ("format", "weight_bits"),
    "kv_bits": ("format", "kv_bits"),
    "activation_bits": ("format", "activation_bits"),
    "n_engines": ("deployment", "n_engines"),
    "orchestration_s": ("deployment", "orchestration_s"),
    "compute_tops": ("profile_overrides", "compute_tops"),
    "compute_energy": ("profile_overrides", "compute_energy"),
    "mem_bw": ("profile_overrides", "mem_bw"),
    "mem_energy": ("profile_overrides", "mem_energy"),
    "h2d_bw": ("profile_overrides", "h2d_bw"),
    "d2h_bw": ("profile_overrides", "d2h_bw"),
    "h2d_energy": ("profile_overrides", "h2d_energy"),
    "d2h_energy": ("profile_overrides", "d2h_energy"),
}


def _sanitize(label: str) -> str:
    return label.replace("/", "_").replace(" ", "-")


def _assumptions_from(args) -> Assumptions:
    return Assumptions(
        charge_activation_traffic=getattr(args, "charge_activations", False),
        roofline_max=getattr(args, "roofline_max", False),
        transfer_per_step=not getattr(args, "transfer_per_query", False),
        orchestration_per_step=getattr(args, "orchestration_per_step", False),
    )


def _add_assumption_flags(p: argparse.ArgumentParser) -> None:
    # SUPPRESS keeps a subcommand's default from clobbering the global flag
    p.add_argument("--assumptions", action="store_true", default=argparse.SUPPRESS,
                   help="print the modeling defaults in effect before running")
    p.add_argument("--charge-activations", action="store_true",
                   help="charge intermediate activation tensors to main memory")
    p.add_argument("--roofline-max", action="store_true",
                   help="overlap compute/memory/aux within a node (max instead of sum)")
    p.add_argument("--transfer-per-query", action="store_true",
                   help="charge host boundary transfers once per query instead of per decode step")
    p.add_argument("--orchestration-per-step", action="store_true",
                   help="charge orchestration overhead on every decode step")


def _deep_update(dst: dict, src: dict) -> dict:
    for key, value in src.items():
        if isinstance(value, dict) and isinstance(dst.get(key), dict):
            _deep_update(dst[key], value)
        else:
            dst[key] = value
    return dst


def _apply_sets(cfg: dict, sets: "list[str]") -> None:
    for item in sets or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        value = yaml.safe_load(raw)
        target = cfg
        parts = key.strip().split(".")
        for part in parts[:-1]:
            if part not in target or not isinstance(target[part], dict):
                target[part] = {}
            target = target[part]
        target[parts[-1]] = value


def _build_run_config(args) -> dict:
    """Layered run config: builtin defaults < --config file < flags < --set."""
    cfg = json.loads(json.dumps(_RUN_DEFAULTS))  # deep copy
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
        if not isinstance(doc, dict):
            raise ConfigError(f"run config {args.config!r} must be a mapping")
        _deep_update(cfg, doc)
    if getattr(args, "model", None):
        cfg["model"] = args.model
    if getattr(args, "profile", None):
        cfg["deployment"]["profile"] = args.profile
        cfg["deployment"].pop("mapping", None)  # the flag overrides a file's mapping block
    for flag, (section, key) in (
        ("weights_bits", ("format", "weight_bits")),
        ("kv_bits", ("format", "kv_bits")),
        ("act_bits", ("format", "activation_bits")),
        ("batch", ("workload", "batch")),
        ("n_input", ("workload", "n_input")),
        ("n_output", ("workload", "n_output")),
        ("engines", ("deployment", "n_engines")),
        ("orchestration", ("deployment", "orchestration_s")),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            cfg[section][key] = value
    _apply_sets(cfg, getattr(args, "set", None))
    return cfg


def _materialize(cfg: dict, args):
    """Turn a run config dict into runnable objects."""
    registry = builtin_profiles()
    if getattr(args, "profiles", None):
        with open(args.profiles, encoding="utf-8") as fh:
            registry = load_profiles(fh.read(), base=registry)
    models = {m.name: m for m in builtin_models()}
    if getattr(args, "models", None):
        with open(args.models, encoding="utf-8") as fh:
            models = load_models(fh.read())

    if not cfg.get("model"):
        raise ConfigError("no model given (use --model or a config file)")
    if cfg["model"] not in models:
        raise UnknownNameError(f"unknown model {cfg['model']!r}; available: {', '.join(models)}")
    model = models[cfg["model"]]

    profile_name = cfg["deployment"].get("profile")
    mapping_doc = cfg["deployment"].get("mapping")
    if mapping_doc is not None:
        mapping = MappingScheme.from_dict(mapping_doc, path="deployment.mapping")
        if cfg.get("profile_overrides"):
            raise ConfigError("profile_overrides only apply to single-profile deployments")
    elif profile_name:
        overrides = cfg.get("profile_overrides") or {}
        profile = registry.get(profile_name)
        if overrides:
            valid = {f.name for f in dataclasses.fields(profile)}
            bad = set(overrides) - valid
            if bad:
                raise ConfigError(f"unknown profile override field(s): {', '.join(sorted(bad))}")
            profile = dataclasses.replace(profile, **overrides)
            registry.add(profile, replace_existing=True)
        mapping = MappingScheme.single(profile_name)
    else:
        raise ConfigError("no profile or mapping given (use --profile or a config file)")

    fmt = DataFormatPolicy(
        weight_bits=int(cfg["format"]["weight_bits"]),
        kv_bits=int(cfg["format"]["kv_bits"]),
        activation_bits=int(cfg["format"]["activation_bits"]),
    )
    workload = Workload(
        batch=int(cfg["workload"]["batch"]),
        n_input=int(cfg["workload"]["n_input"]),
        n_output=int(cfg["workload"]["n_output"]),
    )
    deployment = DeploymentSpec(
        mapping=mapping,
        n_engines=int(cfg["deployment"].get("n_engines", 1)),
        orchestration_s=float(cfg["deployment"].get("orchestration_s", 0.0)),
        description=cfg["deployment"].get("description") or profile_name or "custom mapping",
    )
    cost = None
    if cfg.get("cost_params"):
        cp = cfg["cost_params"]
        cost = CostParams(
            capex_usd=float(cp["capex_usd"]),
            electricity_usd_per_kwh=float(cp["electricity_usd_per_kwh"]),
            horizon_hours=float(cp.get("horizon_hours", 26280.0)),
        )
    return model, fmt, workload, deployment, registry, cost


def _write_out(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _cmd_list_profiles(args) -> int:
    registry = builtin_profiles()
    if args.profiles:
        with open(args.profiles, encoding="utf-8") as fh:
            registry = load_profiles(fh.read(), base=registry)
    for name in registry.names():
        print(name)
    return EXIT_OK


def _cmd_list_models(args) -> int:
    models = builtin_models()
    if args.models:
        with open(args.models, encoding="utf-8") as fh:
            models = list(load_models(fh.read()).values())
    for m in models:
        print(m.name)
    return EXIT_OK


def _one_run_record(label, model, fmt, workload, deployment, registry, cost, assumptions):
    metrics = run_inference(model, fmt, workload, deployment, registry, assumptions)
    tco = tco_per_qps(metrics, cost) if cost is not None else None
    return run_record(label, model.name, fmt, workload, deployment.description, metrics, tco)


def _cmd_run(args) -> int:
    cfg = _build_run_config(args)
    model, fmt, workload, deployment, registry, cost = _materialize(cfg, args)
    assumptions = _assumptions_from(args)
    if args.trace:
        prefill = build_prefill_graph(model, fmt, workload.batch, workload.n_input)
        lines = trace_lines(prefill)
        if workload.n_output > 1:
            step = build_decode_graph(model, fmt, workload.batch, context_len=workload.n_input)
            lines += trace_lines(step)[1:]
        _write_out("\n".join(lines) + "\n", args.trace)
    label = f"run/{model.name}/{deployment.description}"
    record = _one_run_record(label, model, fmt, workload, deployment, registry, cost, assumptions)
    _write_out(emit_records([record], args.format), args.output)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    if args.param not in _PARAM_SECTIONS:
        raise ConfigError(f"unknown sweep parameter {args.param!r}; "
                          f"known: {', '.join(sorted(_PARAM_SECTIONS))}")
    values = [yaml.safe_load(v) for v in args.values.split(",") if v != ""]
    if not values:
        raise ConfigError("sweep needs at least one value")
    section, key = _PARAM_SECTIONS[args.param]
    records = []
    assumptions = _assumptions_from(args)
    for value in values:  # declared order is the output order
        cfg = _build_run_config(args)
        cfg[section][key] = value
        model, fmt, workload, deployment, registry, cost = _materialize(cfg, args)
        label = f"sweep/{model.name}/{args.param}={value}"
        records.append(_one_run_record(label, model, fmt, workload, deployment,
                                       registry, cost, assumptions))
    _write_out(emit_records(records, args.format), args.output)
    return EXIT_OK


def _cmd_compare(args) -> int:
    with open(args.records, encoding="utf-8") as fh:
        records = parse_records(fh.read(), "json")
    runs = runs_from_records(records)
    report = compare(runs, args.baseline)
    _write_out(json.dumps(report.to_dict(), indent=2) + "\n", args.output)
    if args.charts:
        emit_charts(report, args.charts)
    return EXIT_OK


def _cmd_reproduce(args) -> int:
    scenarios = builtin_scenarios(args.suite)
    assumptions = _assumptions_from(args)
    os.makedirs(args.out, exist_ok=True)

    records = []
    by_group: dict[str, list] = {}
    baselines: dict[str, str] = {}
    for s in scenarios:
        metrics = run_scenario(s, assumptions)
        tco = tco_per_qps(metrics, s.cost_params) if s.cost_params else None
        records.append(run_record(s.label, s.model.name, s.fmt, s.workload,
                                  s.deployment.description, metrics, tco))
        by_group.setdefault(s.group, []).append((s.label, metrics))
        if s.is_baseline:
            baselines[s.group] = s.label

    for fmt_name in ("csv", "json"):
        path = os.path.join(args.out, f"records.{fmt_name}")
        _write_out(emit_records(records, fmt_name), path)
        print(f"wrote {path}")
    scen_path = os.path.join(args.out, "scenarios.json")
    _write_out(json.dumps(export_scenarios(scenarios), indent=2) + "\n", scen_path)
    print(f"wrote {scen_path}")

    for group, runs in by_group.items():
        report = compare(runs, baselines[group])
        gpath = os.path.join(args.out, f"comparison_{_sanitize(group)}.json")
        _write_out(json.dumps(report.to_dict(), indent=2) + "\n", gpath)
        chart_dir = os.path.join(args.out, "charts", _sanitize(group))
        emit_charts(report, chart_dir)
        print(f"wrote {gpath} (+charts)")

    if args.suite in ("mobile", "all"):
        _print_mobile_notes(by_group)
    return EXIT_OK


def _print_mobile_notes(by_group: dict) -> None:
    # The A17 Pro decode-rate gap tracks the modeled 51.2 GB/s memory
    # bandwidth directly; flag it as the assumption-sensitive figure it is.
    for group, runs in sorted(by_group.items()):
        if not group.startswith("mobile/"):
            continue
        pim = next((m for label, m in runs if "PIM-AI chip" in label), None)
        a17 = next((m for label, m in runs if "A17 Pro" in label), None)
        if pim is None or a17 is None or not pim.tokens_per_s:
            continue
        pct = (pim.tokens_per_s / a17.tokens_per_s - 1.0) * 100.0
        print(f"note: {group}: decode-rate improvement over A17 Pro is {pct:.1f}% under the "
              "modeled 51.2 GB/s A17 memory bandwidth; this figure is assumption-sensitive "
              "(see README, 'Known modeling sensitivities').")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="llmsim",
        description="Analytical latency/energy/TCO simulator for transformer LLM inference "
                    "on parameterized hardware profiles.",
    )
    parser.add_argument("--assumptions", action="store_true",
                        help="print the modeling defaults in effect and exit (or run after printing)")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("list-profiles", help="list available hardware profiles")
    p.add_argument("--profiles", help="profile config file merged over builtins")

    p = sub.add_parser("list-models", help="list available model presets")
    p.add_argument("--models", help="model config file merged over builtins")

    def add_run_inputs(p):
        p.add_argument("--config", help="run config file (model/format/workload/deployment)")
        p.add_argument("--model", help="model name")
        p.add_argument("--profile", help="hardware profile name")
        p.add_argument("--profiles", help="profile config file merged over builtins")
        p.add_argument("--models", help="model config file merged over builtins")
        p.add_argument("--weights-bits", dest="weights_bits", type=int)
        p.add_argument("--kv-bits", dest="kv_bits", type=int)
        p.add_argument("--act-bits", dest="act_bits", type=int)
        p.add_argument("--batch", type=int)
        p.add_argument("--in", dest="n_input", type=int, help="prompt tokens")
        p.add_argument("--out", dest="n_output", type=int, help="generated tokens")
        p.add_argument("--engines", type=int, help="parallel inference engines")
        p.add_argument("--orchestration", type=float, help="host orchestration seconds per query")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="dotted-path config override, applied last (repeatable)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--output", help="output path (default stdout)")
        _add_assumption_flags(p)

    p = sub.add_parser("run", help="run one scenario and emit its record")
    add_run_inputs(p)
    p.add_argument("--trace", help="dump the execution graphs (prefill + one decode step) to a file")

    p = sub.add_parser("sweep", help="vary one parameter across a list of values")
    add_run_inputs(p)
    p.add_argument("--param", required=True, help=f"one of: {', '.join(sorted(_PARAM_SECTIONS))}")
    p.add_argument("--values", required=True, help="comma-separated values, output keeps this order")

    p = sub.add_parser("compare", help="build a ratio report from a JSON records file")
    p.add_argument("--records", required=True, help="records.json produced by run/sweep/reproduce")
    p.add_argument("--baseline", required=True, help="scenario label to use as baseline")
    p.add_argument("--output", help="report output path (default stdout)")
    p.add_argument("--charts", help="directory for chart SVGs")

    p = sub.add_parser("reproduce", help="run a builtin comparison suite end to end")
    p.add_argument("suite", choices=("cloud", "mobile", "all"))
    p.add_argument("--out", required=True, help="output directory")
    _add_assumption_flags(p)

    return parser


_DISPATCH = {
    "list-profiles": _cmd_list_profiles,
    "list-models": _cmd_list_models,
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "compare": _cmd_compare,
    "reproduce": _cmd_reproduce,
}


def main(argv: "list[str] | None" = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "assumptions", False):
        for line in _assumptions_from(args).describe():
            print(f"assumption: {line}")
        if args.command is None:
            return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return _DISPATCH[args.command](args)
    except UnknownNameError as exc:
        print(f"error: {EXIT_UNKNOWN_NAME}: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN_NAME
    except (ConfigError, SimError) as exc:
        print(f"error: {EXIT_CONFIG}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {EXIT_OUTPUT}: {exc}", file=sys.stderr)
        return EXIT_OUTPUT


if __name__ == "__main__":
    sys.exit(main())
