import json
import math
import shutil
import subprocess
import sys

import numpy as np
import pytest

import ldpkit
from ldpkit import FiniteDist, Gaussian, Exponential, ParseError, DomainError
from ldpkit.cli import main
from ldpkit.serialize import load_schema, parse_dist, parse_f, render_dist, render_json

from conftest import binom_tail_log, rand_simplex, rand_values

BERN = "finite:0:0.7,1:0.3"


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, *argv):
    code, out, err = run_cli(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


@pytest.fixture()
def model_file(tmp_path):
    path = tmp_path / "chain.txt"
    path.write_text("2\n0.9 0.1\n0.2 0.8\n0.5 0.5\n0.0 1.0\n")
    return str(path)


class TestExitCodes:
    def test_no_subcommand(self, capsys):
        code, out, err = run_cli(capsys)
        assert code == 1 and out == "" and err.startswith("usage error:")

    def test_unknown_flag(self, capsys):
        code, _, err = run_cli(capsys, "rate", "--dist", BERN, "--alpha", "0.5", "--bogus")
        assert code == 1 and err.startswith("usage error:")

    def test_malformed_dist(self, capsys):
        code, _, err = run_cli(capsys, "rate", "--dist", "finite:0:", "--alpha", "0.5")
        assert code == 1 and err.startswith("error:")

    def test_unknown_family(self, capsys):
        code, _, err = run_cli(capsys, "rate", "--dist", "poisson:3", "--alpha", "0.5")
        assert code == 1 and "poisson" in err

    def test_not_normalized_is_domain_error(self, capsys):
        code, out, err = run_cli(capsys, "rate", "--dist", "finite:0:0.5,1:0.3", "--alpha", "0.5")
        assert code == 2 and err == ""
        obj = json.loads(out)
        assert obj["error"]["token"] == "not-normalized"

    def test_infeasible_projection(self, capsys):
        code, out, _ = run_cli(capsys, "iproject", "--dist", BERN, "--constraint", "identity=5")
        assert code == 2
        assert json.loads(out)["error"]["token"] == "infeasible-constraints"

    def test_no_tilt_available(self, capsys):
        code, out, _ = run_cli(
            capsys, "tail-is", "--dist", BERN, "--alpha", "0.1", "--n", "10", "--N", "1000"
        )
        assert code == 2
        assert json.loads(out)["error"]["token"] == "no-tilt-available"

    def test_csv_for_json_only_command(self, capsys):
        code, _, err = run_cli(
            capsys, "rate", "--dist", BERN, "--alpha", "0.5", "--output", "csv"
        )
        assert code == 1 and "JSON only" in err


class TestPayloadShape:
    def test_top_level_and_result_fields(self, capsys, model_file):
        schema = load_schema()
        calls = {
            "rate": ["rate", "--dist", BERN, "--alpha", "0.5"],
            "tilt": ["tilt", "--dist", BERN, "--lam", "0.4"],
            "iproject": ["iproject", "--dist", BERN, "--constraint", "identity=0.5"],
            "tail-exact": ["tail-exact", "--dist", BERN, "--alpha", "0.6", "--n", "12"],
            "sanov-exact": ["sanov-exact", "--dist", BERN, "--alpha", "0.6", "--n", "12"],
            "gibbs": ["gibbs", "--dist", BERN, "--alpha", "0.6", "--n", "6"],
            "strong-approx": ["strong-approx", "--dist", BERN, "--alpha", "0.7", "--n", "50"],
            "tail-mc": ["tail-mc", "--dist", BERN, "--alpha", "0.5", "--n", "10", "--N", "1000"],
            "tail-is": ["tail-is", "--dist", BERN, "--alpha", "0.6", "--n", "10", "--N", "1000"],
            "markov-rate": ["markov-rate", "--model", model_file, "--alpha", "0.6"],
            "markov-tail": ["markov-tail", "--model", model_file, "--alpha", "0.6", "--n", "12"],
        }
        assert set(calls) == set(schema["result_fields"])
        for cmd, argv in calls.items():
            payload = run_json(capsys, *argv)
            assert list(payload) == schema["top_level"], cmd
            assert payload["subcommand"] == cmd
            assert payload["version"] == ldpkit.__version__
            assert payload["rng"] == "philox4x64"
            assert list(payload["result"]) == schema["result_fields"][cmd], cmd

    def test_inputs_echo_canonical_forms(self, capsys):
        payload = run_json(
            capsys, "rate", "--dist", BERN, "--f", "affine: 2 , 1", "--alpha", "1.5"
        )
        assert payload["inputs"]["f"] == "affine:2.0,1.0"
        assert payload["inputs"]["alpha"] == 1.5
        assert payload["inputs"]["seed"] == 0


class TestRateCommand:
    def test_interior_values(self, capsys):
        payload = run_json(capsys, "rate", "--dist", BERN, "--alpha", "0.5")
        res = payload["result"]
        assert res["boundary"] == "interior"
        assert res["gamma"] == pytest.approx(0.08717669357238891, abs=1e-12)
        assert res["lambda_star"] == pytest.approx(math.log(7.0 / 3.0), abs=1e-10)
        q = parse_dist(res["tilted"])
        assert np.allclose(q.probs, [0.5, 0.5], atol=1e-12)

    def test_beyond_boundary(self, capsys):
        payload = run_json(capsys, "rate", "--dist", BERN, "--alpha", "1.5")
        res = payload["result"]
        assert res["boundary"] == "beyond_alpha_max"
        assert res["gamma"] == math.inf and res["tilted"] is None

    def test_lower_kind(self, capsys):
        up = run_json(capsys, "rate", "--dist", BERN, "--alpha", "0.1", "--kind", "lower")
        assert up["result"]["gamma"] > 0
        clamped = run_json(capsys, "rate", "--dist", BERN, "--alpha", "0.9", "--kind", "lower")
        assert clamped["result"]["gamma"] == 0.0

    def test_gaussian_dist(self, capsys):
        payload = run_json(capsys, "rate", "--dist", "gaussian:0,1", "--alpha", "2")
        assert payload["result"]["gamma"] == pytest.approx(2.0, abs=1e-12)


class TestTiltCommand:
    def test_round_trip_equals_library(self, capsys):
        payload = run_json(capsys, "tilt", "--dist", BERN, "--lam", "0.8472978603872034")
        q = parse_dist(payload["result"]["dist"])
        assert np.allclose(q.probs, [0.5, 0.5], atol=1e-12)


class TestIprojectCommand:
    def test_two_constraints(self, capsys):
        payload = run_json(
            capsys,
            "iproject",
            "--dist", "finite:0:0.25,1:0.25,2:0.25,3:0.25",
            "--constraint", "identity=1.2",
            "--constraint", "indicator:0=0.3",
        )
        res = payload["result"]
        q = parse_dist(res["q_star"])
        assert float(q.probs @ q.values) == pytest.approx(1.2, abs=1e-9)
        assert float(q.probs[0]) == pytest.approx(0.3, abs=1e-9)
        assert len(res["multipliers"]) == 2
        assert res["active"] == [True, True]

    def test_inequality_mode(self, capsys):
        payload = run_json(
            capsys, "iproject", "--dist", BERN, "--constraint", "identity=0.5",
            "--mode", "ge",
        )
        res = payload["result"]
        assert res["divergence"] == pytest.approx(0.08717669357238891, abs=1e-10)

    def test_inequality_mode_single_constraint_only(self, capsys):
        code, _, err = run_cli(
            capsys, "iproject", "--dist", BERN, "--constraint", "identity=0.5",
            "--constraint", "identity=0.6", "--mode", "ge",
        )
        assert code == 1 and "exactly one" in err

    def test_bad_constraint_shape(self, capsys):
        code, _, err = run_cli(capsys, "iproject", "--dist", BERN, "--constraint", "identity")
        assert code == 1 and "FSPEC=ALPHA" in err
        code, _, err = run_cli(capsys, "iproject", "--dist", BERN, "--constraint", "identity=x")
        assert code == 1 and "bad alpha" in err


class TestExactCommands:
    def test_tail_exact_matches_binomial(self, capsys):
        payload = run_json(capsys, "tail-exact", "--dist", BERN, "--alpha", "0.5", "--n", "12")
        expected = binom_tail_log(12, 0.3, 6)
        assert payload["result"]["log_prob"] == pytest.approx(expected, abs=1e-12)
        assert payload["result"]["prob"] == pytest.approx(math.exp(expected), rel=1e-12)

    def test_sanov_halfspace_bound(self, capsys):
        payload = run_json(capsys, "sanov-exact", "--dist", BERN, "--alpha", "0.6", "--n", "20")
        res = payload["result"]
        assert res["log_prob"] <= res["bound_log"] + 1e-12

    def test_sanov_tv_ball(self, capsys):
        payload = run_json(
            capsys, "sanov-exact", "--dist", BERN, "--n", "10",
            "--tv-center", "finite:0:0.5,1:0.5", "--tv-radius", "0.1",
        )
        res = payload["result"]
        assert res["bound_log"] is None
        assert res["log_prob"] == pytest.approx(math.log(0.33979720319999973), abs=1e-10)

    def test_sanov_needs_event(self, capsys):
        code, _, err = run_cli(capsys, "sanov-exact", "--dist", BERN, "--n", "10")
        assert code == 1 and "alpha" in err

    def test_gibbs(self, capsys):
        payload = run_json(capsys, "gibbs", "--dist", BERN, "--alpha", "0.5", "--n", "2")
        q = parse_dist(payload["result"]["dist"])
        assert q.probs[q.values == 1.0][0] == pytest.approx(0.30 / 0.51, abs=1e-12)


class TestStrongApprox:
    def test_single_n(self, capsys):
        payload = run_json(capsys, "strong-approx", "--dist", BERN, "--alpha", "0.7", "--n", "50")
        res = payload["result"]
        assert res["D"] == pytest.approx(0.33891914415488145, abs=1e-12)
        assert res["lattice"]["is_lattice"] is True
        assert res["c"] > 1.0

    def test_grid_csv(self, capsys):
        code, out, err = run_cli(
            capsys, "strong-approx", "--dist", BERN, "--alpha", "0.7", "--n-grid", "10,100,1000"
        )
        assert code == 0, err
        lines = out.strip().split("\n")
        assert lines[0] == "n,exact_log,approx_log,ratio"
        assert len(lines) == 4
        last = lines[3].split(",")
        assert last[0] == "1000"
        assert float(last[3]) == pytest.approx(0.9991269891827982, rel=1e-9)

    def test_grid_needs_one_of_n(self, capsys):
        code, _, err = run_cli(capsys, "strong-approx", "--dist", BERN, "--alpha", "0.7")
        assert code == 1 and "--n" in err


class TestSeedsAndDeterminism:
    def test_env_seed_default(self, capsys, monkeypatch):
        monkeypatch.setenv("LDPKIT_SEED", "42")
        payload = run_json(
            capsys, "tail-is", "--dist", BERN, "--alpha", "0.6", "--n", "10", "--N", "1000"
        )
        assert payload["inputs"]["seed"] == 42
        assert payload["result"]["seed"] == 42

    def test_flag_overrides_env(self, capsys, monkeypatch):
        monkeypatch.setenv("LDPKIT_SEED", "42")
        payload = run_json(
            capsys, "tail-is", "--dist", BERN, "--alpha", "0.6", "--n", "10", "--N", "1000",
            "--seed", "7",
        )
        assert payload["result"]["seed"] == 7

    def test_byte_identical_reruns(self, capsys):
        argv = [
            "tail-is", "--dist", BERN, "--alpha", "0.6", "--n", "10", "--N", "2000",
            "--seed", "3", "--workers", "4",
        ]
        _, out1, _ = run_cli(capsys, *argv)
        _, out2, _ = run_cli(capsys, *argv)
        assert out1 == out2

    def test_grid_csv_byte_identical(self, capsys):
        argv = ["strong-approx", "--dist", BERN, "--alpha", "0.7", "--n-grid", "10,50"]
        _, out1, _ = run_cli(capsys, *argv)
        _, out2, _ = run_cli(capsys, *argv)
        assert out1 == out2


class TestMarkovCommands:
    def test_rate(self, capsys, model_file):
        payload = run_json(capsys, "markov-rate", "--model", model_file, "--alpha", "0.6")
        res = payload["result"]
        assert res["gamma"] == pytest.approx(0.02524668634793896, abs=1e-10)
        assert res["boundary"] == "interior"
        assert payload["inputs"]["transition"] == [[0.9, 0.1], [0.2, 0.8]]

    def test_tail(self, capsys, model_file):
        payload = run_json(capsys, "markov-tail", "--model", model_file, "--alpha", "0.6", "--n", "50")
        assert payload["result"]["log_prob"] == pytest.approx(-2.700003919728095, abs=1e-11)

    def test_missing_model_file(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "markov-rate", "--model", str(tmp_path / "nope.txt"), "--alpha", "0.5"
        )
        assert code == 1 and err.startswith("error:")

    def test_bad_rows_domain_error(self, capsys, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2\n0.4 0.1\n0.2 0.8\n0.5 0.5\n0.0 1.0\n")
        code, out, _ = run_cli(capsys, "markov-rate", "--model", str(path), "--alpha", "0.5")
        assert code == 2
        assert json.loads(out)["error"]["token"] == "not-stochastic"


class TestGrammars:
    def test_whitespace_insensitive(self):
        a = parse_dist("finite:0:0.7,1:0.3")
        b = parse_dist("  finite : 0 : 0.7 ,\t1 : 0.3  ")
        assert np.array_equal(a.values, b.values) and np.array_equal(a.probs, b.probs)

    def test_scientific_notation(self):
        d = parse_dist("finite:0:7e-1,1:+3.0E-1")
        assert np.allclose(d.probs, [0.7, 0.3], atol=1e-15)

    def test_parametric_families(self):
        g = parse_dist("gaussian:-1.5,2")
        assert isinstance(g, Gaussian) and g.mu == -1.5 and g.sigma == 2.0
        e = parse_dist("exponential:0.25")
        assert isinstance(e, Exponential) and e.rate == 0.25

    def test_trailing_garbage(self):
        with pytest.raises(ParseError):
            parse_dist("gaussian:0,1,junk")
        with pytest.raises(ParseError):
            parse_dist("finite:0:0.7,1:0.3 extra")

    def test_duplicate_atoms_rejected(self):
        with pytest.raises(ParseError):
            parse_dist("finite:1:0.5,1:0.5")

    def test_negative_prob(self):
        with pytest.raises(DomainError) as ei:
            parse_dist("finite:0:-0.2,1:1.2")
        assert ei.value.token == "not-normalized"

    def test_near_normalized_renormalizes(self):
        d = parse_dist("finite:0:0.7000000001,1:0.3")
        assert float(d.probs.sum()) == pytest.approx(1.0, abs=1e-15)

    def test_observable_grammar(self):
        f, canon = parse_f("identity")
        assert f is None and canon == "identity"
        f, canon = parse_f("affine:2,-1")
        assert canon == "affine:2.0,-1.0" and f(3.0) == 5.0
        f, canon = parse_f("indicator:2")
        assert canon == "indicator:2.0" and f(2.0) == 1.0 and f(1.0) == 0.0
        with pytest.raises(ParseError):
            parse_f("square")

    def test_round_trip_random_finite(self, rng):
        for _ in range(1000):
            k = int(rng.integers(1, 7))
            d = FiniteDist(rand_values(rng, k), rand_simplex(rng, k))
            back = parse_dist(render_dist(d))
            assert np.array_equal(back.values, d.values)
            assert np.array_equal(back.probs, d.probs)

    def test_round_trip_parametric(self, rng):
        for _ in range(100):
            g = Gaussian(float(rng.normal()), float(rng.uniform(0.1, 5.0)))
            gb = parse_dist(render_dist(g))
            assert gb.mu == g.mu and gb.sigma == g.sigma
            e = Exponential(float(rng.uniform(0.05, 9.0)))
            eb = parse_dist(render_dist(e))
            assert eb.rate == e.rate

    def test_render_json_special_values(self):
        text = render_json({"a": math.inf, "b": -math.inf, "c": 0.1})
        assert "Infinity" in text and "-Infinity" in text
        assert "0.10000000000000001" in text
        assert json.loads(text)["a"] == math.inf


class TestInstalledScript:
    def test_console_entry_point(self):
        exe = shutil.which("ldpkit")
        assert exe is not None, "console script not installed"
        proc = subprocess.run(
            [exe, "rate", "--dist", BERN, "--alpha", "0.5"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(proc.stdout)
        assert payload["result"]["gamma"] == pytest.approx(0.08717669357238891, abs=1e-12)

    def test_env_seed_in_subprocess(self):
        exe = shutil.which("ldpkit")
        assert exe is not None
        import os

        env = dict(os.environ, LDPKIT_SEED="11")
        proc = subprocess.run(
            [exe, "tail-mc", "--dist", BERN, "--alpha", "0.5", "--n", "5", "--N", "1000"],
            capture_output=True, text=True, env=env,
        )
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["result"]["seed"] == 11
