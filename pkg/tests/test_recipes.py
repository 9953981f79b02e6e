import math

import numpy as np
import pytest

from mipt_xeb.campaign import ConfigError
from mipt_xeb.cli import main
from mipt_xeb.recipes import crossing_point, decay_fit, list_recipes, load_recipe, run_recipe

BASES = {"published", "derived", "identity"}


def test_recipes_present_and_well_formed():
    names = list_recipes()
    for need in ("1d-noiseless-collapse", "a2a-noiseless-collapse", "noisy-rho-eq-sigma-scaling",
                 "1d-noisy-collapse"):
        assert need in names
    for name in names:
        r = load_recipe(name)
        assert r.description
        assert r.budget_seconds > 0
        if r.gating:
            assert r.expected
        for e in r.expected.values():
            assert e.basis in BASES and e.lo <= e.hi


def test_collapse_targets():
    r = load_recipe("1d-noiseless-collapse")
    assert (r.expected["p_c"].lo, r.expected["p_c"].hi) == (0.15, 0.17)
    assert (r.expected["nu"].lo, r.expected["nu"].hi) == (1.2, 1.4)
    r = load_recipe("a2a-noiseless-collapse")
    assert (r.expected["p_c"].lo, r.expected["p_c"].hi) == (0.31, 0.35)
    assert (r.expected["nu"].lo, r.expected["nu"].hi) == (2.3, 2.7)


def test_unknown_recipe():
    with pytest.raises(ConfigError):
        load_recipe("no-such-recipe")


def test_crossing_point():
    rows = []
    for L, slope in ((8, -1.0), (32, -3.0)):
        for p in np.linspace(0, 0.3, 7):
            rows.append({"L": L, "p": p, "chi_bar": 0.8 + slope * (p - 0.15)})
    assert crossing_point(rows) == pytest.approx(0.15)
    assert math.isnan(crossing_point([r for r in rows if r["p"] < 0.1]))


def test_decay_fit_exact_line():
    rows = [{"L": L, "p": 0.1, "chi_bar": math.exp(-0.001 * L * L)} for L in (8, 16, 24)]
    r2, slope = decay_fit(rows, 0.1)
    assert r2 == pytest.approx(1) and slope == pytest.approx(-0.001)


def test_small_collapse_recipe_runs(tmp_path):
    res = run_recipe("1d-noiseless-collapse", {"L_list": "8,16", "n_circuits": "20", "fit.grid": "11"},
                     output_dir=tmp_path)
    assert res.status in ("pass", "fail")
    assert {q for q, *_ in res.rows} >= {"p_c", "nu"}
    assert "p_c" in res.table()


def test_small_noisy_recipes_run(tmp_path):
    res = run_recipe("1d-noisy-collapse", {"L_list": "8,16", "n_circuits": "20", "fit.grid": "11"},
                     output_dir=tmp_path)
    assert {q for q, *_ in res.rows} >= {"p_c", "crossing_shift", "cost_ratio"}
    res = run_recipe("noisy-rho-eq-sigma-scaling", {"L_list": "8,16,24", "n_circuits": "30"}, output_dir=tmp_path)
    assert {q for q, *_ in res.rows} == {"r2_p0.1", "r2_p0.2", "slope_p0.1", "slope_p0.2"}


def test_budget_exceeded_is_inconclusive(tmp_path):
    res = run_recipe("1d-noiseless-collapse", {"n_circuits": "5"}, output_dir=tmp_path, budget_seconds=-1)
    assert res.status == "inconclusive" and not res.passed


def test_reproduce_command(tmp_path, capsys):
    assert main(["reproduce", "--list"]) == 0
    assert "a2a-noiseless-collapse" in capsys.readouterr().out
    code = main(["reproduce", "1d-noiseless-collapse", "--budget", "-1", "--output-dir", str(tmp_path)])
    assert code == 3
    assert "INCONCLUSIVE" in capsys.readouterr().out
