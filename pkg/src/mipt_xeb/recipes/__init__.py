"""Reproduction recipes: a campaign, an analysis and the expected ranges.

Each ``*.cfg`` file in this directory holds campaign keys plus

* ``kind``: ``collapse``, ``noisy-collapse`` or ``decay``;
* ``fit.p_c_bounds`` / ``fit.nu_bounds`` / ``fit.grid`` for collapse kinds;
* ``expect.<quantity> = lo,hi`` and ``basis.<quantity>`` (where the range
  comes from: ``published`` simulation results, a ``derived`` in-repo
  check, or an ``identity``);
* ``gating``: false marks an informational recipe whose result never fails
  the suite;
* ``budget_seconds``: wall-clock budget; running out is ``inconclusive``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..campaign import BudgetExceeded, CampaignConfig, ConfigError, _bool, _floats, run_campaign
from ..collapse import DataCollapse, SweepData, collapse_cost

__all__ = ["Recipe", "RecipeResult", "list_recipes", "load_recipe", "run_recipe", "crossing_point",
           "decay_fit", "RECIPE_DIR"]

RECIPE_DIR = Path(__file__).parent
KINDS = ("collapse", "noisy-collapse", "decay")


@dataclass(frozen=True)
class Expectation:
    lo: float
    hi: float
    basis: str

    def holds(self, v: float) -> bool:
        return v is not None and math.isfinite(v) and self.lo <= v <= self.hi


@dataclass
class Recipe:
    name: str
    kind: str
    config: CampaignConfig
    expected: dict
    fit: dict = field(default_factory=dict)
    gating: bool = True
    budget_seconds: float = 3600.0
    description: str = ""


@dataclass
class RecipeResult:
    name: str
    status: str  # pass, fail, inconclusive
    rows: list  # (quantity, measured, Expectation or None, ok)
    seconds: float
    gating: bool = True
    message: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def table(self) -> str:
        out = [f"recipe {self.name}: {self.status.upper()}{'' if self.gating else ' (informational)'}"
               f" in {self.seconds:.0f}s" + (f" - {self.message}" if self.message else "")]
        out.append(f"  {'quantity':<24}{'measured':>12}  {'expected':<22}{'basis':<11}ok")
        for q, v, e, ok in self.rows:
            rng = "-" if e is None else f"[{e.lo:g}, {e.hi:g}]"
            basis = "-" if e is None else e.basis
            val = "nan" if v is None else f"{v:.4g}"
            out.append(f"  {q:<24}{val:>12}  {rng:<22}{basis:<11}{'-' if e is None else ('yes' if ok else 'NO')}")
        return "\n".join(out)


def list_recipes() -> list[str]:
    return sorted(p.stem for p in RECIPE_DIR.glob("*.cfg"))


def load_recipe(name: str, overrides: Optional[dict] = None) -> Recipe:
    path = RECIPE_DIR / f"{name}.cfg"
    if not path.exists():
        path = Path(name)
    if not path.exists():
        raise ConfigError(f"no recipe {name!r}; known: {', '.join(list_recipes())}")
    text = path.read_text()
    values = CampaignConfig.parse_text(text)
    values.update(overrides or {})
    desc = " ".join(ln.lstrip("# ").strip() for ln in text.splitlines() if ln.startswith("#"))
    kind = values.pop("kind", None)
    if kind not in KINDS:
        raise ConfigError(f"recipe {path.stem}: kind must be one of {KINDS}")
    gating = _bool(values.pop("gating", "true"))
    budget = float(values.pop("budget_seconds", 3600))
    fit, lo_hi, basis = {}, {}, {}
    for key in [k for k in values if "." in k]:
        head, tail = key.split(".", 1)
        v = values.pop(key)
        if head == "fit":
            fit[tail] = _floats(v) if tail.endswith("bounds") else float(v)
        elif head == "expect":
            lo_hi[tail] = _floats(v)
        elif head == "basis":
            basis[tail] = v
        else:
            raise ConfigError(f"recipe {path.stem}: unknown key {key!r}")
    expected = {}
    for q, b in lo_hi.items():
        if len(b) != 2 or q not in basis:
            raise ConfigError(f"recipe {path.stem}: expectation {q!r} needs lo,hi and a basis")
        expected[q] = Expectation(b[0], b[1], basis[q])
    return Recipe(path.stem, kind, CampaignConfig.from_mapping(values), expected, fit, gating, budget, desc)


# -- analyses --------------------------------------------------------------------------------

def _sweep(rows) -> tuple:
    X = np.array([[r["L"], r["p"]] for r in rows], dtype=float)
    y = np.array([r["chi_bar"] for r in rows], dtype=float)
    return X, y


def _fit(rows, fit: dict) -> DataCollapse:
    X, y = _sweep(rows)
    return DataCollapse(p_c_bounds=tuple(fit["p_c_bounds"]), nu_bounds=tuple(fit["nu_bounds"]),
                        grid=int(fit.get("grid", 61)), eta=float(fit.get("eta", 0.1))).fit(X, y)


def crossing_point(rows) -> float:
    """First p where the largest-L curve drops below the smallest-L curve (linear interpolation)."""
    Ls = sorted({r["L"] for r in rows})
    lo = {r["p"]: r["chi_bar"] for r in rows if r["L"] == Ls[0]}
    hi = {r["p"]: r["chi_bar"] for r in rows if r["L"] == Ls[-1]}
    ps = sorted(set(lo) & set(hi))
    d = [hi[p] - lo[p] for p in ps]
    for i in range(1, len(ps)):
        if d[i - 1] > 0 >= d[i]:
            return ps[i - 1] + (ps[i] - ps[i - 1]) * d[i - 1] / (d[i - 1] - d[i])
    return float("nan")


def decay_fit(rows, p: float) -> tuple[float, float]:
    """(R^2, slope) of the least-squares line log(chi_bar) = a + slope * L**2 at fixed p."""
    pts = sorted((r["L"], r["chi_bar"]) for r in rows if abs(r["p"] - p) < 1e-12)
    x = np.array([L * L for L, _ in pts], dtype=float)
    y = np.log(np.array([c for _, c in pts]))
    slope, icept = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (icept + slope * x)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan")
    return r2, float(slope)


def _measure(recipe: Recipe, deadline: float) -> dict:
    cfg = recipe.config
    rows = run_campaign(cfg, "exact", deadline).rows
    out = {}
    if recipe.kind == "collapse":
        m = _fit(rows, recipe.fit)
        out.update(p_c=m.p_c_, nu=m.nu_, delta_p_c=m.delta_p_c_, delta_nu=m.delta_nu_, cost=m.cost_,
                   crossing=crossing_point(rows))
    elif recipe.kind == "noisy-collapse":
        ref_cfg = CampaignConfig.from_mapping({**cfg.to_dict(), "q": 0.0, "output_path": _sibling(cfg, "noiseless")})
        ref = run_campaign(ref_cfg, "exact", deadline).rows
        m = _fit(rows, recipe.fit)
        ref_fit = {**recipe.fit, "nu_bounds": recipe.fit.get("ref_nu_bounds", (0.5, 3.0))}
        m_ref = _fit(ref, ref_fit)
        noisy_cost = collapse_cost(m.data_, m.p_c_, m.nu_, normalized=True)
        ref_cost = collapse_cost(m_ref.data_, m_ref.p_c_, m_ref.nu_, normalized=True)
        c_noisy, c_ref = crossing_point(rows), crossing_point(ref)
        out.update(p_c=m.p_c_, nu=m.nu_, delta_p_c=m.delta_p_c_, crossing=c_noisy, crossing_noiseless=c_ref,
                   crossing_shift=c_ref - c_noisy, p_c_noiseless=m_ref.p_c_, nu_noiseless=m_ref.nu_,
                   cost_ratio=noisy_cost / ref_cost if ref_cost > 0 else float("inf"))
    else:
        for p in cfg.p_list:
            r2, slope = decay_fit(rows, p)
            out[f"r2_p{p:g}"] = r2
            out[f"slope_p{p:g}"] = slope
    return out


def _sibling(cfg: CampaignConfig, tag: str) -> str:
    path = cfg.resolved_output("exact")
    return str(path.with_name(f"{path.stem}-{tag}{path.suffix}"))


def run_recipe(name: str | Recipe, overrides: Optional[dict] = None, output_dir=None,
               budget_seconds: Optional[float] = None) -> RecipeResult:
    """Run the recipe's campaign(s), analyse, and compare against the expected ranges."""
    recipe = name if isinstance(name, Recipe) else load_recipe(name, overrides)
    if output_dir is not None and not recipe.config.output_path:
        out = Path(output_dir) / f"{recipe.name}.jsonl"
        recipe.config = CampaignConfig.from_mapping({**recipe.config.to_dict(), "output_path": str(out)})
    budget = recipe.budget_seconds if budget_seconds is None else budget_seconds
    t0 = time.time()
    try:
        measured = _measure(recipe, t0 + budget)
    except BudgetExceeded as e:
        return RecipeResult(recipe.name, "inconclusive", [], time.time() - t0, recipe.gating, f"budget exceeded: {e}")
    rows = []
    for q, v in measured.items():
        e = recipe.expected.get(q)
        rows.append((q, v, e, e.holds(v) if e else True))
    missing = [q for q in recipe.expected if q not in measured]
    if missing:
        raise ConfigError(f"recipe {recipe.name}: expectations on unknown quantities {missing}")
    ok = all(r[3] for r in rows)
    return RecipeResult(recipe.name, "pass" if ok else "fail", rows, time.time() - t0, recipe.gating)
