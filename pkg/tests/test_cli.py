import json
import os

from llmsim.cli import main

RUN_FLAGS = ["run", "--model", "Llama2-7B", "--profile", "PIM-AI chip",
             "--weights-bits", "4", "--kv-bits", "16",
             "--batch", "1", "--in", "100", "--out", "5"]


def _out(capsys):
    return capsys.readouterr().out


def test_list_profiles(capsys):
    assert main(["list-profiles"]) == 0
    lines = _out(capsys).strip().split("\n")
    assert lines == ["PIM-AI chip", "PIM-AI server", "A17 Pro",
                     "Snapdragon 8 Gen3", "Dimensity 9300", "DGX-H100"]


def test_list_models(capsys):
    assert main(["list-models"]) == 0
    lines = _out(capsys).strip().split("\n")
    for name in ("Llama2-70B", "Llama2-7B", "Mistral-7B", "Mixtral-8x22B"):
        assert name in lines


def test_run_emits_one_csv_row(capsys):
    assert main(RUN_FLAGS) == 0
    lines = _out(capsys).strip().split("\n")
    assert len(lines) == 2
    assert lines[0].startswith("scenario,model,format_bits")
    cells = lines[1].split(",")
    assert cells[1] == "Llama2-7B"
    assert cells[2] == "w4kv16a16"
    assert cells[3:6] == ["1", "100", "5"]


def test_run_deterministic(capsys):
    assert main(RUN_FLAGS) == 0
    first = _out(capsys)
    assert main(RUN_FLAGS) == 0
    assert _out(capsys) == first


def test_run_trace(tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    assert main(RUN_FLAGS + ["--trace", str(trace)]) == 0
    lines = trace.read_text().strip().split("\n")
    assert lines[0].startswith("phase,layer,kind,label")
    assert any(line.startswith("prefill,") for line in lines[1:])
    assert any(line.startswith("decode_step,") for line in lines[1:])


def test_override_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.yaml"
    cfg.write_text(
        "model: Llama2-7B\n"
        "format: {kv_bits: 8}\n"
        "workload: {batch: 2, n_input: 50, n_output: 4}\n"
        "deployment: {profile: PIM-AI chip}\n"
    )
    # file beats builtin defaults
    assert main(["run", "--config", str(cfg)]) == 0
    assert ",w16kv8a16," in _out(capsys)
    # flags beat file
    assert main(["run", "--config", str(cfg), "--kv-bits", "32"]) == 0
    assert ",w16kv32a16," in _out(capsys)
    # --set beats flags
    assert main(["run", "--config", str(cfg), "--kv-bits", "32",
                 "--set", "format.kv_bits=4"]) == 0
    assert ",w16kv4a16," in _out(capsys)


def test_set_override_on_profile_field(capsys):
    base = RUN_FLAGS + ["--format", "json"]
    assert main(base) == 0
    a = json.loads(_out(capsys))["runs"][0]["ttft_s"]
    assert main(base + ["--set", "profile_overrides.mem_bw=204.8"]) == 0
    b = json.loads(_out(capsys))["runs"][0]["ttft_s"]
    assert b < a  # doubled bandwidth shortens prefill


def test_sweep_preserves_declared_order(capsys):
    assert main(["sweep", "--model", "Llama2-7B", "--profile", "PIM-AI chip",
                 "--in", "20", "--out", "3", "--param", "batch",
                 "--values", "4,1,2"]) == 0
    lines = _out(capsys).strip().split("\n")[1:]
    batches = [line.split(",")[3] for line in lines]
    assert batches == ["4", "1", "2"]
    labels = [line.split(",")[0] for line in lines]
    assert labels == ["sweep/Llama2-7B/batch=4", "sweep/Llama2-7B/batch=1", "sweep/Llama2-7B/batch=2"]


def test_sweep_rejects_unknown_param(capsys):
    rc = main(["sweep", "--model", "Llama2-7B", "--profile", "PIM-AI chip",
               "--param", "warp", "--values", "1"])
    assert rc == 4
    assert capsys.readouterr().err.startswith("error: 4: ")


def test_unknown_model_exit_code(capsys):
    rc = main(["run", "--model", "NoSuchModel", "--profile", "PIM-AI chip"])
    assert rc == 3
    err = capsys.readouterr().err
    assert err.startswith("error: 3: ")
    assert err.count("\n") == 1


def test_unknown_profile_exit_code(capsys):
    assert main(["run", "--model", "Llama2-7B", "--profile", "Vector9000"]) == 3


def test_schema_violation_exit_code(tmp_path, capsys):
    bad = tmp_path / "profiles.yaml"
    bad.write_text("profiles:\n  - name: broken\n    compute: {tops: -5, pj_per_op: 0}\n")
    rc = main(["list-profiles", "--profiles", str(bad)])
    assert rc == 4
    assert capsys.readouterr().err.startswith("error: 4: ")


def test_unwritable_output_exit_code(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    rc = main(RUN_FLAGS + ["--output", str(blocker / "sub" / "out.csv")])
    assert rc == 5
    assert capsys.readouterr().err.startswith("error: 5: ")


def test_assumptions_flag(capsys):
    assert main(["--assumptions"]) == 0
    out = _out(capsys)
    assert "worst case" in out
    assert "every decode step" in out


def test_assumptions_reflect_toggles(capsys):
    assert main(["--assumptions"]) == 0
    default = _out(capsys)
    assert main(["run", "--assumptions", "--model", "Llama2-7B", "--profile", "PIM-AI chip",
                 "--in", "10", "--out", "2", "--roofline-max", "--transfer-per-query"]) == 0
    toggled = _out(capsys)
    assert "roofline max" in toggled and "roofline max" not in default
    assert "once per query" in toggled


def test_no_subcommand_usage_error(capsys):
    assert main([]) == 2


def test_reproduce_mobile(tmp_path, capsys):
    out = tmp_path / "mobile"
    assert main(["reproduce", "mobile", "--out", str(out)]) == 0
    printed = _out(capsys)
    assert "assumption-sensitive" in printed  # pointer emitted with the A17 figure

    csv_text = (out / "records.csv").read_text()
    assert len(csv_text.strip().split("\n")) == 9  # header + 8 runs
    records = json.loads((out / "records.json").read_text())
    assert len(records["runs"]) == 8
    for model in ("Llama2-7B", "Mistral-7B"):
        report = json.loads((out / f"comparison_mobile_{model}.json").read_text())
        assert report["baseline"] == f"mobile/{model}/A17 Pro"
        assert len(report["rows"]) == 3 * 6  # three candidates x six metrics
        charts = os.listdir(out / "charts" / f"mobile_{model}")
        assert len(charts) == 6


def test_reproduce_mobile_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["reproduce", "mobile", "--out", str(a)]) == 0
    assert main(["reproduce", "mobile", "--out", str(b)]) == 0
    for name in ("records.csv", "records.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_reproduce_exports_runnable_scenario_docs(tmp_path, capsys):
    out = tmp_path / "mobile"
    assert main(["reproduce", "mobile", "--out", str(out)]) == 0
    _out(capsys)
    exported = json.loads((out / "scenarios.json").read_text())
    assert len(exported["scenarios"]) == 8
    # a dumped scenario doc is a valid run config producing the same row
    doc = next(s for s in exported["scenarios"]
               if s["label"] == "mobile/Llama2-7B/PIM-AI chip")
    cfg = tmp_path / "one.yaml"
    cfg.write_text(json.dumps({k: v for k, v in doc.items() if k != "label"}))
    assert main(["run", "--config", str(cfg)]) == 0
    row = _out(capsys).strip().split("\n")[1].split(",")
    suite_rows = (out / "records.csv").read_text().strip().split("\n")
    suite_row = next(r for r in suite_rows if r.startswith("mobile/Llama2-7B/PIM-AI chip,")).split(",")
    assert row[7:13] == suite_row[7:13]  # identical metric cells


def test_run_config_with_mapping_document(tmp_path, capsys):
    cfg = tmp_path / "mapped.yaml"
    cfg.write_text(json.dumps({
        "model": "Llama2-7B",
        "workload": {"batch": 1, "n_input": 20, "n_output": 3},
        "deployment": {"mapping": {
            "default_profile": "PIM-AI chip",
            "rules": [{"match": {"kinds": ["softmax"]}, "profile": "Snapdragon 8 Gen3"}],
        }},
    }))
    assert main(["run", "--config", str(cfg)]) == 0
    lines = _out(capsys).strip().split("\n")
    assert len(lines) == 2
    assert "custom mapping" in lines[1]


def test_profile_flag_overrides_file_mapping(tmp_path, capsys):
    cfg = tmp_path / "mapped.yaml"
    cfg.write_text(json.dumps({
        "model": "Llama2-7B",
        "workload": {"batch": 1, "n_input": 10, "n_output": 2},
        "deployment": {"mapping": {"default_profile": "Snapdragon 8 Gen3"}},
    }))
    assert main(["run", "--config", str(cfg), "--profile", "PIM-AI chip"]) == 0
    assert "PIM-AI chip" in _out(capsys)


def test_compare_command(tmp_path, capsys):
    out = tmp_path / "mobile"
    assert main(["reproduce", "mobile", "--out", str(out)]) == 0
    _out(capsys)
    report_path = tmp_path / "report.json"
    assert main(["compare", "--records", str(out / "records.json"),
                 "--baseline", "mobile/Llama2-7B/A17 Pro",
                 "--output", str(report_path)]) == 0
    report = json.loads(report_path.read_text())
    assert report["baseline"] == "mobile/Llama2-7B/A17 Pro"
    assert report["rows"]
