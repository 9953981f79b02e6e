"""Sweep campaigns over (L, p) cells with an append-only, resumable result store.

A campaign is fully determined by its ``CampaignConfig``: every circuit, noise
pattern and shot stream is seeded from ``master_seed`` and the cell/circuit
indices, so results do not depend on the worker count or on interruptions.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import __version__
from .circuits import CircuitSpec, build_circuit, derive_seed, inject_noise, make_rng, normalize_connectivity
from .engine import count_random
from .states import InitialState
from .xeb import aggregate, estimate_chi, exact_chi

__all__ = [
    "ConfigError",
    "BudgetExceeded",
    "CampaignConfig",
    "ResultStore",
    "circuit_pair",
    "exact_values",
    "run_campaign",
    "load_rows",
    "rows_to_csv",
    "OUTPUT_DIR_ENV",
]

OUTPUT_DIR_ENV = "MIPT_XEB_OUTPUT_DIR"
MODES = ("run", "exact")
log = logging.getLogger("mipt_xeb")


class ConfigError(ValueError):
    """Invalid configuration or a store written under a different configuration."""


class BudgetExceeded(RuntimeError):
    """Wall-clock budget ran out before the campaign finished."""


def _floats(v) -> tuple:
    if isinstance(v, str):
        v = [x for x in v.replace(" ", "").split(",") if x]
    return tuple(float(x) for x in v)


def _ints(v) -> tuple:
    if isinstance(v, str):
        v = [x for x in v.replace(" ", "").split(",") if x]
    return tuple(int(x) for x in v)


def _bool(v) -> bool:
    if isinstance(v, str):
        key = v.strip().lower()
        if key in ("1", "true", "yes", "on"):
            return True
        if key in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"not a boolean: {v!r}")
    return bool(v)


@dataclass(frozen=True)
class CampaignConfig:
    """Sweep definition.  ``worker_count`` 0 means all available cores."""

    connectivity: str = "1d"
    L_list: tuple = (16,)
    p_list: tuple = (0.16,)
    q: float = 0.0
    n_circuits: int = 1000
    n_shots: int = 1000
    rho: str = "mixed"
    sigma: str = "zero"
    encoding_ratio: float = 3.0
    bulk_ratio: float = 3.0
    periodic: bool = True
    estimator: str = "affine"
    master_seed: int = 0
    output_path: str = ""
    worker_count: int = 0

    # fields that never change results
    _NEUTRAL = ("output_path", "worker_count")

    def __post_init__(self):
        conv = {
            "L_list": _ints, "p_list": _floats, "q": float, "n_circuits": int, "n_shots": int,
            "encoding_ratio": float, "bulk_ratio": float, "periodic": _bool, "master_seed": int,
            "worker_count": int, "output_path": str,
        }
        try:
            for name, f in conv.items():
                object.__setattr__(self, name, f(getattr(self, name)))
            object.__setattr__(self, "connectivity", normalize_connectivity(self.connectivity))
            InitialState.from_name(self.rho)
            InitialState.from_name(self.sigma)
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e)) from None
        if not self.L_list or not self.p_list:
            raise ConfigError("L_list and p_list must be nonempty")
        if any(L < 2 or L % 2 for L in self.L_list):
            raise ConfigError("every L must be an even integer >= 2")
        if any(not 0 <= p <= 1 for p in self.p_list) or not 0 <= self.q <= 1:
            raise ConfigError("p and q must lie in [0, 1]")
        if self.n_circuits < 1 or self.n_shots < 2:
            raise ConfigError("need n_circuits >= 1 and n_shots >= 2")
        if self.estimator not in ("affine", "trajectory"):
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        if self.worker_count < 0:
            raise ConfigError("worker_count must be >= 0")

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def from_mapping(cls, values: dict) -> "CampaignConfig":
        names = set(cls.field_names())
        unknown = sorted(set(values) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**values)

    @staticmethod
    def parse_text(text: str) -> dict:
        """``key = value`` lines; ``#`` starts a comment."""
        out = {}
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {n}: expected key = value, got {raw!r}")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k] = v
        return out

    @classmethod
    def from_file(cls, path, **overrides) -> "CampaignConfig":
        values = cls.parse_text(Path(path).read_text())
        values.update(overrides)
        return cls.from_mapping(values)

    def to_dict(self) -> dict:
        return {name: list(v) if isinstance(v, tuple) else v for name, v in
                ((n, getattr(self, n)) for n in self.field_names())}

    def to_text(self) -> str:
        lines = []
        for k, v in self.to_dict().items():
            lines.append(f"{k} = {','.join(map(str, v)) if isinstance(v, list) else v}")
        return "\n".join(lines) + "\n"

    def config_hash(self, mode: str) -> str:
        d = {k: v for k, v in self.to_dict().items() if k not in self._NEUTRAL}
        d["mode"] = mode
        if mode == "exact":
            # shots and the shot sampler do not enter exact values
            d.pop("n_shots")
            d.pop("estimator")
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def resolved_output(self, mode: str) -> Path:
        if self.output_path:
            return Path(self.output_path)
        base = Path(os.environ.get(OUTPUT_DIR_ENV, "."))
        return base / f"{mode}-{self.connectivity}-{self.config_hash(mode)}.jsonl"

    def workers(self) -> int:
        return self.worker_count or os.cpu_count() or 1


# -- per-circuit work ----------------------------------------------------------------

def _pkey(x: float) -> int:
    return int(round(x * 1e9))


def circuit_pair(cfg: CampaignConfig, L: int, p: float, i: int):
    """(noisy, clean) circuit ``i`` of cell ``(L, p)``."""
    conn = 0 if cfg.connectivity == "chain1d" else 1
    spec = CircuitSpec(L, cfg.connectivity, p, cfg.encoding_ratio, cfg.bulk_ratio,
                       seed=derive_seed(cfg.master_seed, conn, L, _pkey(p), i), periodic=cfg.periodic)
    clean = build_circuit(spec)
    if cfg.q > 0:
        noisy = inject_noise(clean, cfg.q, make_rng(derive_seed(cfg.master_seed, 0xE, conn, L, _pkey(p), _pkey(cfg.q), i)))
    else:
        noisy = clean
    return noisy, clean


def _exact_one(args) -> float:
    cfg, L, p, i = args
    noisy, clean = circuit_pair(cfg, L, p, i)
    rho, sigma = InitialState.from_name(cfg.rho), InitialState.from_name(cfg.sigma)
    if noisy is clean and rho.is_contained_in(sigma, L):
        # fast route: chi = 2**(N_sigma - N_rho)
        return 2.0 ** (count_random(clean, sigma) - count_random(clean, rho))
    return float(exact_chi(noisy, clean, rho, sigma))


def _shots_one(args) -> tuple:
    cfg, L, p, i = args
    noisy, clean = circuit_pair(cfg, L, p, i)
    rng = make_rng(derive_seed(cfg.master_seed, 0x5, L, _pkey(p), _pkey(cfg.q), i))
    return estimate_chi(noisy, clean, InitialState.from_name(cfg.rho), InitialState.from_name(cfg.sigma),
                        cfg.n_shots, rng, method=cfg.estimator)


def _map(fn, items: list, workers: int) -> list:
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with Pool(workers) as pool:
        return pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers)))


def exact_values(cfg: CampaignConfig, L: int, p: float, workers: int = 1) -> np.ndarray:
    """Exact chi of every circuit in the cell, in circuit order."""
    return np.array(_map(_exact_one, [(cfg, L, p, i) for i in range(cfg.n_circuits)], workers))


def _cell_row(cfg: CampaignConfig, mode: str, L: int, p: float, workers: int) -> dict:
    items = [(cfg, L, p, i) for i in range(cfg.n_circuits)]
    row = {"L": L, "p": p, "q": cfg.q, "connectivity": cfg.connectivity, "rho": cfg.rho, "sigma": cfg.sigma,
           "n_circuits": cfg.n_circuits, "mode": mode}
    if mode == "exact":
        vals = np.array(_map(_exact_one, items, workers))
        n = len(vals)
        row["chi_bar"] = float(vals.mean())
        row["eps"] = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    else:
        est = aggregate(_map(_shots_one, items, workers))
        row["n_shots"] = cfg.n_shots
        row["chi_bar"] = est.chi_bar
        row["eps"] = est.eps
        row["between_circuit_se"] = None if math.isnan(est.between_circuit_se) else est.between_circuit_se
    return row


# -- persistence ---------------------------------------------------------------------------

class ResultStore:
    """``<name>.jsonl`` (one line per finished cell) plus ``<name>.manifest.json``."""

    def __init__(self, path, cfg: CampaignConfig, mode: str):
        if mode not in MODES:
            raise ConfigError(f"unknown mode {mode!r}")
        self.path = Path(path)
        self.manifest_path = self.path.with_suffix(".manifest.json")
        self.cfg = cfg
        self.mode = mode
        self.hash = cfg.config_hash(mode)
        self.rows: list[dict] = []
        self._open()

    def _open(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if self.manifest_path.exists():
            m = json.loads(self.manifest_path.read_text())
            if m.get("config_hash") != self.hash:
                raise ConfigError(
                    f"{self.path} was written under config {m.get('config_hash')}, current config is {self.hash}")
        if self.path.exists():
            raw = self.path.read_bytes()
            # drop a torn final line from an interrupted write
            keep = raw[: raw.rfind(b"\n") + 1]
            if len(keep) != len(raw):
                with open(self.path, "r+b") as f:
                    f.truncate(len(keep))
            self.rows = [json.loads(x) for x in keep.decode().splitlines() if x.strip()]
        self._write_manifest()

    @property
    def completed(self) -> set:
        return {(r["L"], r["p"]) for r in self.rows}

    def append(self, row: dict) -> None:
        with open(self.path, "a") as f:
            f.write(json.dumps(row, sort_keys=True) + "\n")
            f.flush()
            os.fsync(f.fileno())
        self.rows.append(row)
        self._write_manifest()

    def _write_manifest(self) -> None:
        m = {
            "config": {k: v for k, v in self.cfg.to_dict().items() if k not in CampaignConfig._NEUTRAL},
            "config_hash": self.hash,
            "mode": self.mode,
            "code_version": __version__,
            "completed": [[L, p] for L, p in sorted(self.completed)],
        }
        tmp = self.manifest_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(m, indent=1, sort_keys=True) + "\n")
        os.replace(tmp, self.manifest_path)

    def write_csv(self) -> Path:
        out = self.path.with_suffix(".csv")
        out.write_text(rows_to_csv(self.rows))
        return out


def rows_to_csv(rows: Iterable[dict]) -> str:
    cols = ["L", "p", "q", "chi_bar", "eps", "n_circuits"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in sorted(rows, key=lambda r: (r["L"], r["p"])):
        w.writerow([r[c] for c in cols])
    return buf.getvalue()


def load_rows(path) -> list[dict]:
    """Cell rows from a campaign ``.jsonl`` store or its ``.csv`` projection."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".jsonl":
        return [json.loads(x) for x in text.splitlines() if x.strip()]
    rows = []
    for r in csv.DictReader(io.StringIO(text)):
        try:
            rows.append({"L": int(r["L"]), "p": float(r["p"]), "chi_bar": float(r["chi_bar"]),
                         "eps": float(r.get("eps") or 0.0), "q": float(r.get("q") or 0.0)})
        except (KeyError, ValueError) as e:
            raise ConfigError(f"{path}: bad CSV row {r}: {e}") from None
    return rows


# -- driver -------------------------------------------------------------------------------------

def run_campaign(cfg: CampaignConfig, mode: str = "run", deadline: Optional[float] = None) -> ResultStore:
    """Fill every missing cell in (L, p) order; finished cells are never recomputed.

    ``deadline`` is an absolute ``time.time()`` bound checked between cells.
    """
    store = ResultStore(cfg.resolved_output(mode), cfg, mode)
    workers = cfg.workers()
    done = store.completed
    todo = [(L, p) for L in cfg.L_list for p in cfg.p_list if (L, p) not in done]
    log.info("%s: %d cells to compute, %d already stored, %d workers -> %s",
             mode, len(todo), len(done), workers, store.path)
    for L, p in todo:
        if deadline is not None and time.time() > deadline:
            raise BudgetExceeded(f"stopped before cell L={L} p={p}")
        t0 = time.time()
        row = _cell_row(cfg, mode, L, p, workers)
        store.append(row)
        dt = max(time.time() - t0, 1e-9)
        rate = f"{cfg.n_circuits / dt:.1f} circuits/s"
        if mode == "run":
            rate += f", {cfg.n_circuits * cfg.n_shots / dt:.0f} shots/s"
        log.info("L=%d p=%g chi_bar=%.4f eps=%.4f (%s)", L, p, row["chi_bar"], row["eps"], rate)
    store.write_csv()
    return store
