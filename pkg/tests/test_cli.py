import json
from pathlib import Path

import pytest

from cftransfer import cli

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


@pytest.mark.parametrize(
    "argv, schema",
    [
        (["cf", "--word", "1,2,3"], "cftransfer.cf/1"),
        (["set", "primes", "--N", "30"], "cftransfer.set/1"),
        (["density", "evens", "--N", "1000", "--kind", "upper"], "cftransfer.density/1"),
        (["thin", "naturals", "--bound", "23"], "cftransfer.thin/1"),
        (["seed", "naturals", "--fit-window", "10,1000", "--n-max", "10"], "cftransfer.seed/1"),
        (["dim", "--geometric", "2", "1/3", "--depth", "50"], "cftransfer.dim/1"),
        (["prog", "primes", "--ell", "5"], "cftransfer.prog/1"),
    ],
)
def test_every_report_has_schema(capsys, argv, schema):
    assert run_json(capsys, *argv)["schema"] == schema


def test_cf_values(capsys):
    js = run_json(capsys, "cf", "--word", "1,2,3")
    assert js["convergents"][-1] == ["7", "10"]
    assert js["interval"]["diameter"] == "1/130"
    js = run_json(capsys, "cf", "--word", "2", "--signs", "-1")
    assert (js["interval"]["lo"], js["interval"]["hi"]) == ("1/2", "1/1")


def test_cf_word_file(capsys, tmp_path):
    f = tmp_path / "w.txt"
    f.write_text("1\n1\n")
    assert run_json(capsys, "cf", "--file", str(f))["interval"]["diameter"] == "1/6"


def test_set_and_thin_values(capsys):
    js = run_json(capsys, "set", "p1", "--N", "60", "--head", "10")
    assert js["head"] == [3, 11, 19, 41, 53, 59]
    js = run_json(capsys, "thin", "primes", "--bound", "23")
    assert js["head"] == [3, 7, 13, 23, 37, 47, 61, 73]


def test_density_relative_and_banach(capsys):
    js = run_json(capsys, "density", "square_blocks", "--N", "1000000", "--kind", "banach", "--widths", "31")
    assert js["estimates"]["banach"]["valueExact"] == "1/1"
    js = run_json(capsys, "density", "evens", "--N", "1000", "--kind", "relative", "--within", "naturals")
    assert js["estimates"]["relative"]["valueExact"] == "1/2"


def test_pretty_output(capsys):
    code, out, _ = run(capsys, "thin", "naturals", "--bound", "23", "--pretty")
    assert code == 0
    assert "schema" in out and not out.lstrip().startswith("{")


def test_out_directory(capsys, tmp_path):
    run_json(capsys, "thin", "naturals", "--bound", "23", "--out", str(tmp_path))
    saved = json.loads((tmp_path / "thin.json").read_text())
    assert saved["qCount"] == 8


def test_global_flags_before_subcommand(capsys, tmp_path):
    code, _, _ = run(capsys, "--out", str(tmp_path), "thin", "naturals", "--bound", "23")
    assert code == 0 and (tmp_path / "thin.json").exists()


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["nosuch"],
        ["set", "not_a_set"],
        ["cf", "--word", "1", "--signs", "-1"],
        ["cf", "--word", "0,2"],
        ["density", "evens", "--N", "100", "--kind", "relative", "--within", "ps:2"],
        ["prog", "--graph", "3/2", "--locate", "missing.json"],
        ["thin", "naturals", "--threads", "0"],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 2


def test_bad_thread_env(capsys, monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "lots")
    assert run(capsys, "thin", "naturals", "--bound", "23")[0] == 2


def test_thread_env_accepted(capsys, monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "3")
    assert run(capsys, "prog", "primes", "--ell", "3")[0] == 0


def test_config_fills_options_and_flags_win(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"thin": {"bound": 23}, "cf": {"word": "1,1,1"}}))
    js = run_json(capsys, "thin", "naturals", "--config", str(cfg))
    assert js["bound"] == 23
    js = run_json(capsys, "thin", "naturals", "--config", str(cfg), "--bound", "100")
    assert js["bound"] == 100
    js = run_json(capsys, "cf", "--config", str(cfg))
    assert js["convergents"][-1] == ["2", "3"]


def test_plan_splice_holder_flow(capsys, tmp_path):
    js = run_json(capsys, "plan", "naturals", "--A", "evens", "--kmax", "3", "--window-tol", "1/20",
                  "--out", str(tmp_path))
    assert js["schema"] == "cftransfer.plan/1"
    plan = tmp_path / "plan.json"
    assert plan.exists()

    plan_js = json.loads(plan.read_text())
    length = plan_js["positions"][1] + 3
    js = run_json(capsys, "splice", "--plan", str(plan), "--canonical", str(length))
    assert js["outputLength"] == length + sum(plan_js["blockSizes"][:2])
    word = tmp_path / "x.txt"
    word.write_text("".join(f"{d}\n" for d in js["digits"]))
    back = run_json(capsys, "splice", "--plan", str(plan), "--word-file", str(word), "--eliminate")
    assert back["outputLength"] == length

    code, _, _ = run(capsys, "splice", "--plan", str(plan), "--word", "1,2,3")
    assert code == 2

    js = run_json(capsys, "holder", "--plan", str(plan), "--k", "2", "--samples", "50")
    assert js["passed"] and js["k"] == 2


def test_prog_poly_and_locate(capsys, tmp_path):
    js = run_json(capsys, "prog", "naturals", "--poly", "X", "--poly", "X^2", "--k-bound", "5", "--m-bound", "5")
    assert js["witness"]["values"] == [1, 1]
    js = run_json(capsys, "prog", "--graph", "3/2", "--ell", "4")
    assert [p[1] for p in js["witness"]["values"]] == [2, 5, 8, 11]


def test_transfer_missing_s_is_usage_error(capsys, tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"A": {"kind": "evens"}}))
    assert run(capsys, "transfer", "--config", str(cfg))[0] == 2
    cfg.write_text(json.dumps({"S": {"kind": "naturals"}, "bogus": 1}))
    assert run(capsys, "transfer", "--config", str(cfg))[0] == 2


def test_transfer_banach_config(capsys, tmp_path):
    js = run_json(capsys, "transfer", "--config", str(CONFIGS / "square_blocks_banach.json"), "--depth", "60",
                  "--out", str(tmp_path))
    assert js["schema"] == "cftransfer.certificate/1"
    assert js["verdict"]["passed"]
    assert json.loads((tmp_path / "certificate.json").read_text()) == js


def test_transfer_toml_config(capsys, tmp_path):
    js = run_json(capsys, "transfer", "--config", str(CONFIGS / "naturals_evens.toml"), "--kmax", "2",
                  "--depth", "60")
    assert js["inputs"]["kmax"] == 2 and js["inputs"]["depth"] == 60
