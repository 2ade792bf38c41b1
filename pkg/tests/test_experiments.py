import json
import math

import numpy as np
import pytest

from src.errors import ConfigError, ExperimentError, NormalizationError
from src.experiments import (
    ExperimentReport,
    emit_report,
    parse_config,
    read_report,
    run_experiment,
)
from src.bounds import THEOREMS
from src.experiments.config import THEOREM_KEYS
from src.experiments.report import json_safe
from src.linalg import dump_family
from src.stein import KinkGrowth
from src.transport import CSV_HEADER


def _config(text, **overrides):
    return parse_config(text, overrides)


# --- Config ---

def test_parse_bound_config_fills_defaults():
    cfg = _config("experiment=bound\ntheorem=uthm\nk=2\nn=20")
    assert (cfg.k, cfg.n, cfg.theorem) == (2, 20, "uthm")
    assert cfg.samples == 100_000
    assert cfg.seed == 20240101
    assert cfg.epsilon == 1e-3
    assert cfg.to_record()["seed"] == 20240101


def test_parse_empty_text_lists_experiments():
    with pytest.raises(ConfigError) as info:
        parse_config("")
    assert info.value.key == "experiment"
    assert "pair-audit" in str(info.value)


def test_type_error_reports_line():
    with pytest.raises(ConfigError) as info:
        parse_config("experiment=bound\ntheorem=uthm\nk=2\nn=abc")
    assert info.value.key == "n"
    assert info.value.line == 4
    assert "line 4" in str(info.value)


def test_unknown_and_missing_keys():
    with pytest.raises(ConfigError) as info:
        parse_config("experiment=bound\ntheorem=uthm\nk=2\nn=20\ncolour=red")
    assert info.value.key == "colour"
    with pytest.raises(ConfigError) as info:
        parse_config("experiment=pair-audit\nmodel=iid_sum\nk=2")
    assert info.value.key == "n"
    with pytest.raises(ConfigError):
        parse_config("experiment=bound\ntheorem=cont\nsigma=1")


def test_comments_lists_and_overrides():
    text = "\n".join([
        "# W1 table",
        "experiment=w1-compare",
        "model=orthogonal_projection",
        "k=2",
        "n=30",
        "m=100, 200",
        "seed=5",
    ])
    cfg = _config(text, seed=9)
    assert cfg.m == [100, 200]
    assert cfg.seed == 9
    queries = _config("experiment=haar-check\nquery=O:u(1,1)u(1,1)@n=4; U:h(1,1)h*(1,1)@n=4").query
    assert queries == ["O:u(1,1)u(1,1)@n=4", "U:h(1,1)h*(1,1)@n=4"]
    with pytest.raises(ConfigError):
        _config(text, m="1")


# --- Bound preset ---

def test_bound_uthm_value():
    report = run_experiment(_config("experiment=bound\ntheorem=uthm\nk=2\nn=20"))
    assert report.results["bound"]["value"] == pytest.approx(0.3)
    assert report.passed
    assert report.config["theorem"] == "uthm"


def test_bound_mix_identity_covariance():
    report = run_experiment(_config("experiment=bound\ntheorem=mix\nk=2\nn=50"))
    assert report.results["bound"]["value"] == pytest.approx(math.sqrt(2) * 2 / 49)


def test_bound_mix_from_block_sizes_and_family_file(tmp_path, rng):
    by_sizes = run_experiment(_config("experiment=bound\ntheorem=mix\nk=3\nn=10\na=2,5,10"))
    assert by_sizes.results["bound"]["value"] <= math.sqrt(2) * 3 ** 1.5 / 9
    path = tmp_path / "family.txt"
    path.write_text(dump_family([np.eye(4)[np.argsort(rng.random(4))] for _ in range(2)]))
    from_file = run_experiment(_config(f"experiment=bound\ntheorem=mix\nk=2\nn=4\nfamily={path}"))
    assert from_file.results["bound"]["value"] > 0


def test_bound_discrete_and_ksphere():
    discrete = run_experiment(_config(
        "experiment=bound\ntheorem=discrete\nsigma=1\nm1=1\nm2=1\nlam=0.1\ne_norm=0.2\nthird_moment=0.05"
    ))
    assert discrete.results["bound"]["value"] > 0
    ksphere = run_experiment(_config("experiment=bound\ntheorem=ksphere\nk=2\nn=50\na=0"))
    assert ksphere.results["bound"]["theorem"] == "ksphere"


def test_bound_mix_rejects_fractional_sizes():
    with pytest.raises(ConfigError) as info:
        run_experiment(_config("experiment=bound\ntheorem=mix\nk=3\nn=10\na=2.5,5,10"))
    assert info.value.key == "a"


@pytest.mark.parametrize("theorem,inputs", [
    ("discrete", "sigma=1\nm1=1\nm2=1\nlam=0.1\ne_norm=0.2\nthird_moment=0.05"),
    ("cont", "sigma=1\nf_norm=0.2"),
    ("complex", "gamma_norm=0.1\nlambda_norm=0.2"),
    ("cont_complex", "gamma_norm=0.1\nlambda_norm=0.2"),
    ("basic", "n=20\nk=2\nm1=1\nm2=1\nfourth_moment=4\nthird_moment=2.83"),
    ("ksphere", "k=2\nn=50\na=0"),
    ("mix", "k=2\nn=50"),
    ("uthm", "k=2\nn=20"),
])
def test_bound_preset_dispatches_by_registry(theorem, inputs):
    report = run_experiment(_config(f"experiment=bound\ntheorem={theorem}\n{inputs}"))
    assert report.results["bound"]["theorem"] == theorem
    assert set(THEOREMS) == set(THEOREM_KEYS)


def test_bound_cont_complex_defaults_to_complex():
    inputs = "gamma_norm=0.1\nlambda_norm=0.2"
    complex_bound = run_experiment(_config(f"experiment=bound\ntheorem=complex\n{inputs}"))
    realified = run_experiment(_config(f"experiment=bound\ntheorem=cont_complex\n{inputs}"))
    assert realified.results["bound"]["value"] == pytest.approx(complex_bound.results["bound"]["value"])


def test_bound_reports_are_byte_identical():
    text = "experiment=bound\ntheorem=basic\nn=20\nk=2\nm1=1\nm2=1\nfourth_moment=4\nthird_moment=2.83"
    assert run_experiment(_config(text)).to_json() == run_experiment(_config(text)).to_json()


# --- Haar and pair presets ---

def test_haar_check_single_query():
    report = run_experiment(_config("experiment=haar-check\nsamples=20000\nquery=O:u(1,1)u(1,1)@n=4"))
    assert report.passed
    assert report.table_header == ["query", "exact", "estimate", "se", "pass"]
    assert report.table[0][-1] == "true"
    assert report.results["estimates"][0]["exact"] == pytest.approx(0.25)


def test_pair_audit_iid_sum_linearity():
    report = run_experiment(_config("experiment=pair-audit\nmodel=iid_sum\nk=2\nn=20"))
    assert report.predicates["linearity"]
    assert report.predicates["norm_bound"]
    assert report.results["bound"]["theorem"] == "discrete"
    assert report.results["audit"]["epsilon"] is None
    assert report.results["audit"]["seed"] == 20240101
    slope = np.asarray(report.results["audit"]["slope_matrix"])
    assert np.max(np.abs(slope + np.eye(2))) <= 0.05


def test_pair_audit_is_deterministic_with_threads():
    text = "experiment=pair-audit\nmodel=spherical\nk=2\nn=40\nsamples=2000\nthreads=2"
    assert run_experiment(_config(text)).to_json() == run_experiment(_config(text)).to_json()


def test_pair_audit_wraps_module_errors(tmp_path, rng):
    path = tmp_path / "family.txt"
    path.write_text(dump_family([rng.standard_normal((4, 4)) for _ in range(2)]))
    with pytest.raises(ExperimentError) as info:
        run_experiment(_config(f"experiment=pair-audit\nmodel=orthogonal_projection\nk=2\nn=4\nfamily={path}"))
    assert info.value.experiment == "pair-audit"
    assert isinstance(info.value.cause, NormalizationError)


def test_pair_audit_rejects_mismatched_family(tmp_path, rng):
    path = tmp_path / "family.txt"
    path.write_text(dump_family([np.eye(4) * 1.0]))
    with pytest.raises(ConfigError) as info:
        run_experiment(_config(f"experiment=pair-audit\nmodel=orthogonal_projection\nk=2\nn=4\nfamily={path}"))
    assert info.value.key == "family"


@pytest.mark.slow
def test_pair_audit_orthogonal_claims():
    report = run_experiment(_config("experiment=pair-audit\nmodel=orthogonal_projection\nk=2\nn=50"))
    assert report.predicates["linearity"]
    assert report.predicates["norm_bound"]
    assert report.predicates["trace_product_claim"]


@pytest.mark.slow
def test_pair_audit_unitary_norms():
    report = run_experiment(_config("experiment=pair-audit\nmodel=unitary_projection\nk=2\nn=20"))
    assert report.passed
    assert report.results["norm_check"]["limit"] == pytest.approx(0.3)


# --- Stein preset ---

def test_stein_check_linear(mocker):
    kink = mocker.patch(
        "src.experiments.runner.kink_growth",
        return_value=KinkGrowth(distances=[0.1, 0.05], ratios=[1.0, 1.2], increasing=True),
    )
    report = run_experiment(_config("experiment=stein-check\ng=linear\nk=2\nsamples=20000\nnodes=16\npoints=5"))
    assert report.passed
    assert report.results["residuals"]["max"] < 1e-6
    assert report.results["derivative"]["max_ratio"] == pytest.approx(0.0, abs=1e-8)
    assert kink.call_args.args[1] == 200_000


def test_stein_check_quadratic_has_null_m1(mocker):
    mocker.patch(
        "src.experiments.runner.kink_growth",
        return_value=KinkGrowth(distances=[0.1], ratios=[1.0], increasing=True),
    )
    report = run_experiment(_config("experiment=stein-check\ng=quadratic\nk=2\nsamples=20000\nnodes=16\npoints=3"))
    assert report.results["constants"]["m1"] is None
    assert "hessian_norm" not in report.predicates
    assert json.loads(report.to_json())["results"]["hessian_norm"]["m1"] is None


def test_stein_check_unknown_function():
    with pytest.raises(ExperimentError):
        run_experiment(_config("experiment=stein-check\ng=zigzag\nk=2"))


# --- Transport presets ---

def test_w1_compare_table():
    report = run_experiment(_config(
        "experiment=w1-compare\nmodel=orthogonal_projection\nk=2\nn=30\nm=50,100\nreps=3\ndirections=8"
    ))
    assert report.table_header == CSV_HEADER
    assert [row[0] for row in report.table] == ["50", "100"]
    assert {"w1 m=50", "w1 m=100", "sliced m=50", "sliced m=100"} <= set(report.predicates)
    assert report.results["bound"]["theorem"] == "mix"
    assert report.to_csv().splitlines()[0] == "m,w1,self,debiased,bound,pass"


def test_w1_compare_rejects_discrete_model():
    with pytest.raises(ConfigError) as info:
        run_experiment(_config("experiment=w1-compare\nmodel=iid_sum\nk=2\nn=20"))
    assert info.value.key == "model"


def test_diag_example_predicates():
    report = run_experiment(_config("experiment=diag-example\na=2,5,10\nn=10\nm=200\nreps=3"))
    assert report.predicates["gram_closed_form"]
    assert report.predicates["bound_cap"]
    assert report.predicates["reduction_identity"]
    gram = np.asarray(report.results["gram"])
    assert gram[0, 2] == pytest.approx(10 * math.sqrt(2 / 10), abs=1e-12)
    assert len(report.table) == 1


def test_diag_example_rejects_fractional_sizes():
    with pytest.raises(ConfigError):
        run_experiment(_config("experiment=diag-example\na=2.5,10\nn=10"))


# --- Reports ---

def _report(**kwargs):
    defaults = dict(experiment="bound", config={"k": 2}, seed=1, threads=1, results={"value": 0.3})
    defaults.update(kwargs)
    return ExperimentReport(**defaults)


def test_json_safe_values():
    cleaned = json_safe({"a": np.float64(1.5), "b": [np.inf, np.int64(3)], "c": np.eye(2), "d": np.bool_(True)})
    assert cleaned == {"a": 1.5, "b": [None, 3], "c": [[1.0, 0.0], [0.0, 1.0]], "d": True}


def test_report_round_trip(tmp_path):
    report = _report(table_header=["m", "w1"], table=[["10", "0.5"]])
    path = tmp_path / "report.json"
    emit_report(report, str(path), csv_path=str(tmp_path / "table.csv"), wall_clock=1.25)
    assert read_report(str(path)) == report
    assert (tmp_path / "table.csv").read_text() == "m,w1\n10,0.5\n"
    timing = json.loads((tmp_path / "report.json.timing.json").read_text())
    assert timing == {"wall_clock_seconds": 1.25}


def test_emit_is_byte_identical(tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    emit_report(_report(), str(first), wall_clock=1.0)
    emit_report(_report(), str(second), wall_clock=2.0)
    assert first.read_bytes() == second.read_bytes()


def test_report_without_table_skips_csv(tmp_path):
    emit_report(_report(), str(tmp_path / "r.json"), csv_path=str(tmp_path / "t.csv"))
    assert not (tmp_path / "t.csv").exists()
    assert _report().to_csv() is None
