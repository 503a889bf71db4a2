import csv
import json

import pytest

from conftest import gid_counts, run_cli, write_config
from genbound.config import ConfigError, load_config, parse_config
from genbound.experiments import COLUMNS, KEYS, csv_text, run_task, tasks

CHEAP_GAP = """
experiment = "gap_sweep"
output_dir = "out"
seeds = {seeds}
sweep.n = {ns}
sweep.lambda = {lams}
gap.holdout = 10000
opt.steps = 20
opt.restarts = 2
complexity.tau_draws = 2
complexity.restarts = 1
complexity.steps = 10
"""


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestConfig:
    def test_defaults_and_overrides(self, tmp_path):
        cfg = parse_config('experiment = "bounds"\noutput_dir = "o"\nseeds = [3]\nsweep.n = [4]\ndisc.width = 2\n', tmp_path)
        assert cfg.output_dir == tmp_path / "o"
        assert cfg["disc.width"] == 2 and cfg["gen.width"] == 4 and cfg["delta"] == 0.025
        assert cfg.sample_pairs() == [(4, 4)]
        assert cfg.class_spec("gen", 1.0).output_dim == cfg["disc.input_dim"]

    def test_table_syntax_is_equivalent(self, tmp_path):
        a = parse_config('experiment = "bounds"\noutput_dir = "o"\nseeds = [0]\nsweep.n = [4]\ndisc.width = 2\n', tmp_path)
        b = parse_config('experiment = "bounds"\noutput_dir = "o"\nseeds = [0]\nsweep.n = [4]\n[disc]\nwidth = 2\n', tmp_path)
        assert a.values == b.values

    @pytest.mark.parametrize(
        "extra,match",
        [
            ("disc.widht = 3", r"line 5, field 'disc.widht': unknown key"),
            ("disc.width = 2.5", r"line 5, field 'disc.width': expected an integer"),
            ("sweep.V = []", r"field 'sweep.V': sweep list must be non-empty"),
            ("rademacher.grid_levels = [4]", "odd"),
            ("gap.holdout = 500", r"gap.holdout.*>= 10000"),
            ("disc.activation = \"relu\"", "unknown activation"),
            ("delta = 1.5", r"delta.*\(0, 1\)"),
            ("px.kind = \"fixed_dataset\"", "needs a path"),
        ],
    )
    def test_invalid_configs_name_line_and_field(self, tmp_path, extra, match):
        text = f'experiment = "bounds"\noutput_dir = "o"\nseeds = [0]\nsweep.n = [4]\n{extra}\n'
        with pytest.raises(ConfigError, match=match):
            parse_config(text, tmp_path)

    def test_seeds_distinct_and_required_keys(self, tmp_path):
        with pytest.raises(ConfigError, match="distinct"):
            parse_config('experiment = "bounds"\noutput_dir = "o"\nseeds = [1, 1]\nsweep.n = [4]\n', tmp_path)
        with pytest.raises(ConfigError, match="'sweep.n': required"):
            parse_config('experiment = "bounds"\noutput_dir = "o"\nseeds = [1]\n', tmp_path)
        with pytest.raises(ConfigError, match="syntax"):
            parse_config("experiment = ", tmp_path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.toml")


class TestRun:
    def test_zero_class_rademacher(self, tmp_path):
        path = write_config(tmp_path, """
experiment = "rademacher"
output_dir = "rad"
seeds = [0, 1]
sweep.n = [4, 6]
sweep.V = [0.0]
disc.input_dim = 1
disc.width = 1
rademacher.modes = ["exact_enumeration", "monte_carlo"]
rademacher.tau_draws = 5
rademacher.restarts = 2
""")
        assert run_cli("run", path) == 0
        rows = read_rows(tmp_path / "rad" / "results.csv")
        assert len(rows) == 8
        assert all(float(r["estimate"]) == 0.0 and r["dominance_ok"] == "true" for r in rows)
        assert (tmp_path / "rad" / "complexity_vs_n.svg").exists()

    def test_rerun_is_byte_identical_and_worker_independent(self, tmp_path):
        body = CHEAP_GAP.format(seeds="[0, 1]", ns="[20, 40]", lams="[0.0, 0.5]")
        a = write_config(tmp_path / "a", body)
        b = write_config(tmp_path / "b", body + "workers = 2\n")
        assert run_cli("run", a) == 0 and run_cli("run", a) == 0
        first = (tmp_path / "a" / "out" / "results.csv").read_bytes()
        assert run_cli("run", a) == 0
        assert (tmp_path / "a" / "out" / "results.csv").read_bytes() == first
        assert run_cli("run", b) == 0
        assert (tmp_path / "b" / "out" / "results.csv").read_bytes() == first
        header = first.decode().splitlines()[0].split(",")
        assert header == COLUMNS["gap_sweep"]

    def test_invalid_config_exit_2(self, tmp_path, capsys):
        path = write_config(tmp_path, 'experiment = "bounds"\noutput_dir = "o"\nseeds = [0]\nsweep.n = [4]\nopt.stepz = 1\n')
        assert run_cli("run", path) == 2
        assert "line 5" in capsys.readouterr().err

    def test_runtime_failure_exit_1(self, tmp_path, capsys):
        # exact enumeration over a class too large for the work budget
        path = write_config(tmp_path, """
experiment = "rademacher"
output_dir = "rad"
seeds = [0]
sweep.n = [16]
disc.width = 2
rademacher.grid_levels = [5]
""")
        assert run_cli("run", path) == 1
        assert "exact enumeration" in capsys.readouterr().err or "finite class" in capsys.readouterr().err

    def test_bounds_rows(self, tmp_path):
        path = write_config(tmp_path, """
experiment = "bounds"
output_dir = "b"
seeds = [0]
sweep.n = [4, 100]
sweep.lambda = [0.0, 0.5]
""")
        assert run_cli("run", path) == 0
        rows = read_rows(tmp_path / "b" / "results.csv")
        assert len(rows) == 6 * 2 * 2 + 6 * 2 * 2 * 2
        assert all(r.keys() == set(COLUMNS["bounds"]) for r in rows)
        for r in rows:
            if r["variant"] == "conservative":
                assert float(r["value"]) >= 0
        massart = [r for r in rows if r["name"] == "massart_bound_disc" and r["n"] == "4"]
        assert float(massart[0]["value"]) == pytest.approx(4 * (2 * 13.27695)**0.5 / 4, rel=1e-5)

    def test_train_experiment(self, tmp_path):
        path = write_config(tmp_path, """
experiment = "train"
output_dir = "t"
seeds = [0]
sweep.n = [30]
opt.steps = 10
""")
        assert run_cli("run", path) == 0
        rows = read_rows(tmp_path / "t" / "results.csv")
        assert len(rows) == 1 and float(rows[0]["value"]) >= float(rows[0]["trained_disc_value"])

    def test_manifest_recomputes_any_row(self, tmp_path):
        path = write_config(tmp_path, CHEAP_GAP.format(seeds="[0, 1, 2]", ns="[20]", lams="[0.0, 0.5]"))
        assert run_cli("run", path) == 0
        out = tmp_path / "out"
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["rows"] == 6 and manifest["version"] and manifest["wall_time_s"] > 0
        cfg = parse_config(manifest["config_text"], tmp_path)
        row = read_rows(out / "results.csv")[4]
        key = {k: row[k] for k in manifest["row_key"]}
        task = next(t for t in tasks(cfg) if all(str(t[k]) == key[k] or float(t[k]) == float(key[k]) for k in key))
        again, _ = run_task(cfg, task)
        assert csv_text(COLUMNS["gap_sweep"], [again]).splitlines()[1] == ",".join(row[c] for c in COLUMNS["gap_sweep"])
        timings = read_rows(out / "timings.csv")
        assert list(timings[0].keys()) == KEYS["gap_sweep"] + ["runtime_ms"]

    def test_eighty_row_sweep_and_plot(self, tmp_path):
        path = write_config(tmp_path, CHEAP_GAP.format(seeds=list(range(20)), ns="[50, 100, 200, 400]", lams="[0.0]"))
        cfg = load_config(path)
        assert len(tasks(cfg)) == 80
        assert run_cli("run", path) == 0
        rows = read_rows(tmp_path / "out" / "results.csv")
        assert len(rows) == 80
        assert len({(r["n"], r["seed"]) for r in rows}) == 80
        counts = gid_counts(tmp_path / "out" / "gap_vs_n.svg")
        assert counts["seed-scatter"]["use"] == 80
        assert counts["median-line"]["path"] >= 1 and counts["median-line"]["use"] == 4
        assert counts["bound-curve"]["path"] == 1
        counts = gid_counts(tmp_path / "out" / "bound_vs_empirical.svg")
        assert counts["conservative-scatter"]["use"] == 80 and counts["verbatim-scatter"]["use"] == 80


class TestPlot:
    def test_header_only_gives_axes_only_plot(self, tmp_path):
        csv_path = tmp_path / "empty.csv"
        csv_path.write_text(",".join(COLUMNS["gap_sweep"]) + "\n")
        for kind in ("gap_vs_n", "bound_vs_empirical"):
            out = tmp_path / f"{kind}.svg"
            assert run_cli("plot", csv_path, "--kind", kind, "--out", out) == 0
            counts = gid_counts(out)
            assert "median-line" not in counts and "bound-curve" not in counts

    def test_schema_mismatch_exit_2(self, tmp_path, capsys):
        csv_path = tmp_path / "r.csv"
        csv_path.write_text("seed,n,V\n0,4,1\n")
        assert run_cli("plot", csv_path, "--kind", "gap_vs_n", "--out", tmp_path / "x.svg") == 2
        err = capsys.readouterr().err
        assert "gap" in err and "bound_conservative" in err

    def test_deterministic_bytes(self, tmp_path):
        csv_path = tmp_path / "r.csv"
        csv_path.write_text("seed,n,V,width,grid_levels,mode,estimate,std_error,massart_bound,dominance_ok\n"
                            "0,4,1,1,3,exact_enumeration,1.5,0,2.7,true\n0,8,1,1,3,exact_enumeration,1.1,0,1.3,true\n"
                            "0,4,1,1,3,monte_carlo,1.4,0.1,2.7,true\n")
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        assert run_cli("plot", csv_path, "--kind", "complexity_vs_n", "--out", a) == 0
        assert run_cli("plot", csv_path, "--kind", "complexity_vs_n", "--out", b) == 0
        assert a.read_bytes() == b.read_bytes()
        counts = gid_counts(a)
        assert counts["exact_enumeration-scatter"]["use"] == 2 and counts["monte_carlo-scatter"]["use"] == 1
        assert counts["bound-curve"]["path"] == 1

    def test_missing_csv_exit_2(self, tmp_path):
        assert run_cli("plot", tmp_path / "nope.csv", "--kind", "gap_vs_n", "--out", tmp_path / "x.svg") == 2
