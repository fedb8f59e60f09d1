import csv
import json
import os

import pytest

from steinpoisson.cli import (
    CSV_COLUMNS,
    EXIT_FAIL,
    EXIT_OK,
    EXIT_USAGE,
    main,
    parse_int_list,
    parse_p_vector,
)


def run(argv, capsys=None):
    code = main(argv)
    return code


def read_csv(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    assert lines[0].startswith("# schema=stein-poisson-cert-v1")
    rows = list(csv.reader(lines[1:]))
    assert rows[0] == CSV_COLUMNS
    return rows[1:]


def strip_seconds(rows):
    return [row[:-1] for row in rows]


class TestParsers:
    def test_int_list(self):
        assert parse_int_list("4..7,10") == [4, 5, 6, 7, 10]
        assert parse_int_list("3") == [3]

    def test_p_recipes(self):
        assert parse_p_vector("uniform:2.0", 4) == (0.5, 0.5, 0.5, 0.5)
        assert parse_p_vector("harmonic", 3) == (1.0, 0.5, 1 / 3)
        assert parse_p_vector("0.1,0.9", None) == (0.1, 0.9)


class TestBoundCommand:
    def test_matching(self, capsys):
        assert run(["bound", "matching", "--n", "100"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "value:       0.02" in out
        assert "set_distance" in out

    def test_birthday(self, capsys):
        assert run(["bound", "birthday-pairs", "--n", "100", "--k", "10"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "0.21333333333333335" in out

    def test_usage_error(self, capsys):
        assert run(["bound", "matching", "--n", "1"]) == EXIT_USAGE
        assert run(["bound", "matching"]) == EXIT_USAGE
        assert run(["bound", "wat", "--n", "5"]) == EXIT_USAGE


class TestExactTvCommand:
    def test_matching_pass(self, capsys):
        assert run(["exact-tv", "matching", "--n", "8"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "verdict: pass" in out
        assert "bound: 0.25" in out

    def test_process_matching(self, capsys):
        assert run(["exact-tv", "process-matching", "--n", "6"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "verdict: pass" in out

    def test_joint(self, capsys):
        assert run(["exact-tv", "joint-matching-succession", "--n", "6"]) == EXIT_OK

    def test_birthday_triples(self, capsys):
        assert run(["exact-tv", "birthday-triples", "--n", "30", "--k", "9"]) == EXIT_OK

    def test_coupon_theta(self, capsys):
        assert run(["exact-tv", "coupon", "--n", "100", "--theta", "0.5"]) == EXIT_OK

    def test_over_cap_suggests_mc(self, capsys):
        assert run(["exact-tv", "matching", "--n", "9999"]) == EXIT_USAGE
        err = capsys.readouterr().err
        assert "mc-tv" in err


class TestSweepCommand:
    def test_matching_sweep(self, tmp_path):
        out = tmp_path / "m.csv"
        assert run(["sweep", "matching", "--n", "4..12", "--out", str(out)]) == EXIT_OK
        rows = read_csv(out)
        assert len(rows) == 9
        assert all(row[9] == "pass" for row in rows)

    def test_random_poisson_binomial_sweep(self, tmp_path):
        out = tmp_path / "pb.csv"
        code = run(
            ["sweep", "poisson-binomial", "--count", "25", "--maxlen", "8",
             "--seed", "7", "--out", str(out)]
        )
        assert code == EXIT_OK
        rows = read_csv(out)
        assert len(rows) == 25

    def test_empty_grid_usage_error(self, tmp_path):
        assert run(["sweep", "matching", "--out", str(tmp_path / "x.csv")]) == EXIT_USAGE

    def test_over_cap_grid_rejected_before_running(self, tmp_path):
        assert (
            run(["sweep", "matching", "--n", "4,9999", "--out", str(tmp_path / "x.csv")])
            == EXIT_USAGE
        )

    def test_determinism_modulo_seconds(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["sweep", "poisson-binomial", "--count", "10", "--maxlen", "6",
                "--seed", "99"]
        assert run(argv + ["--out", str(a)]) == EXIT_OK
        assert run(argv + ["--out", str(b)]) == EXIT_OK
        assert strip_seconds(read_csv(a)) == strip_seconds(read_csv(b))

    def test_threaded_matches_sequential(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["sweep", "matching", "--n", "4..10"]
        assert run(argv + ["--out", str(a)]) == EXIT_OK
        os.environ["STEIN_POISSON_THREADS"] = "3"
        try:
            assert run(argv + ["--out", str(b)]) == EXIT_OK
        finally:
            del os.environ["STEIN_POISSON_THREADS"]
        assert strip_seconds(read_csv(a)) == strip_seconds(read_csv(b))

    def test_interrupt_flushes_partial_results(self, tmp_path, monkeypatch):
        import steinpoisson.cli as cli_mod

        out = tmp_path / "partial.csv"
        real = cli_mod.compute_record
        calls = {"n": 0}

        def flaky(problem, params, bound_kind="default"):
            if calls["n"] >= 3:
                raise KeyboardInterrupt
            calls["n"] += 1
            return real(problem, params, bound_kind)

        monkeypatch.setattr(cli_mod, "compute_record", flaky)
        with pytest.raises(KeyboardInterrupt):
            main(["sweep", "matching", "--n", "4..12", "--out", str(out)])
        rows = read_csv(out)
        assert len(rows) == 3  # completed records survived the interrupt

    def test_json_mirrors_csv(self, tmp_path):
        c, j = tmp_path / "r.csv", tmp_path / "r.json"
        argv = ["sweep", "matching", "--n", "5..7", "--seed", "1"]
        assert run(argv + ["--format", "csv", "--out", str(c)]) == EXIT_OK
        assert run(argv + ["--format", "json", "--out", str(j)]) == EXIT_OK
        rows = read_csv(c)
        payload = json.loads(j.read_text())
        assert payload["schema"] == "stein-poisson-cert-v1"
        assert len(payload["records"]) == len(rows)
        for rec, row in zip(payload["records"], rows):
            assert list(rec.keys()) == CSV_COLUMNS
            # seconds is the only timing field and the only expected difference
            assert [rec[col] for col in CSV_COLUMNS[:-1]] == row[:-1]

    def test_coupling_bound_sweep(self, tmp_path):
        out = tmp_path / "c.csv"
        # negative values need the --flag=value form (argparse limitation)
        code = run(
            ["sweep", "coupon", "--n", "100", "--theta=-0.5,0,0.5",
             "--bound", "coupling", "--out", str(out)]
        )
        assert code == EXIT_OK
        rows = read_csv(out)
        assert len(rows) == 3
        assert all(row[9] == "pass" for row in rows)


class TestVerifyPairCommand:
    def test_matching_exact(self, capsys):
        assert run(["verify-pair", "matching", "--n", "4", "--exact"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "symmetric: True" in out
        assert "verdict: pass" in out

    def test_birthday_exact(self, capsys):
        assert run(["verify-pair", "birthday-pairs", "--n", "3", "--k", "2", "--exact"]) == EXIT_OK

    def test_monte_carlo(self, capsys):
        code = run(
            ["verify-pair", "coupon", "--n", "20", "--k", "70",
             "--trials", "20000", "--seed", "5"]
        )
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "monte-carlo" in out

    def test_exact_over_cap(self, capsys):
        assert run(["verify-pair", "matching", "--n", "30", "--exact"]) == EXIT_USAGE


class TestMcTvCommand:
    def test_matching(self, capsys):
        code = run(["mc-tv", "matching", "--n", "40", "--trials", "20000", "--seed", "3"])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "mc_tv:" in out
        assert "verdict: pass" in out
