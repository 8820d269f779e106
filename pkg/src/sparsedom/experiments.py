"""Batch experiments: function battery, weighted scaling runs, domination suites, CSV output."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy

from . import __version__
from .czop import CutoffSpec, SHARP, eps_grid, kernel_by_name, maximal_truncation
from .domination import dominate
from .grid import Box
from .signal import GridFunction
from .variation import vq_operator
from .weights import ap_char, power_weight, shifted_family, weighted_norm


@dataclass
class ExperimentConfig:
    kernel: str = "hilbert"
    kernel_params: dict = field(default_factory=dict)
    cutoff: str = "smooth"
    n: int = 1024
    domain: list = field(default_factory=lambda: [-1.0, 2.0])  # corner, side
    support: list = field(default_factory=lambda: [-0.5, 0.5])
    lam: Optional[float] = None
    k_max: int = 12
    k_max_short: int = 8
    p: float = 2.0
    q: float = 3.0
    qs: list = field(default_factory=lambda: [2.5, 3.0, 4.0])
    deltas: list = field(default_factory=lambda: [2.0 ** -i for i in range(1, 7)])
    a2_n: int = 4096
    a2_operator: str = "sharp"
    eps_base: float = 4.0
    eps_per_octave: int = 2
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.n < 4 or self.n & (self.n - 1):
            raise ValueError("n must be a power of two >= 4")
        if self.k_max_short > self.k_max:
            raise ValueError("k_max_short must not exceed k_max")
        if self.lam is not None and not 0 < self.lam <= 0.125:
            raise ValueError("lam must lie in (0, 1/8] for d = 1")
        if not (self.p > 1 and math.isfinite(self.p)) or self.q < 1:
            raise ValueError("need 1 < p < inf and q >= 1")
        if any(not 0 < d <= 1 for d in self.deltas):
            raise ValueError("deltas must lie in (0, 1]")
        if self.threads < 1:
            raise ValueError("threads must be positive")
        lo, hi = self.support
        if not (self.domain[0] <= lo < hi <= self.domain[0] + self.domain[1]):
            raise ValueError("support must lie inside the domain")
        CutoffSpec(self.cutoff)
        kernel_by_name(self.kernel, **self.kernel_params)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            data = json.load(fh)
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        # thread count does not affect results, so it stays out of the hash
        data = {k: v for k, v in self.to_dict().items() if k != "threads"}
        blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @property
    def box(self) -> Box:
        return Box((float(self.domain[0]),), float(self.domain[1]))

    def eps(self, f: GridFunction) -> np.ndarray:
        return eps_grid(f, self.eps_base, self.eps_per_octave)


# --- battery -----------------------------------------------------------

def _steps(edges, values) -> Callable:
    edges = np.asarray(edges, dtype=float)
    values = np.asarray(values, dtype=float)

    def fn(x):
        x = np.asarray(x, dtype=float)
        i = np.searchsorted(edges, x, side="right") - 1
        ok = (i >= 0) & (i < len(values))
        return np.where(ok, values[np.clip(i, 0, len(values) - 1)], 0.0)

    return fn


def battery(seed: int = 0, support=(-0.5, 0.5)) -> list:
    """Twenty named step functions supported in ``support``.

    Five indicators, five two-level steps, five random steps from ``seed``,
    five sign-alternating steps of increasing frequency.
    """
    a, b = support
    L = b - a
    at = lambda *t: [a + s * L for s in t]
    out = []
    for i, (s, t) in enumerate([(0.5, 1.0), (0.0, 0.5), (0.25, 0.75), (0.6, 0.8), (0.05, 0.85)]):
        out.append((f"indicator{i}", _steps(at(s, t), [1.0])))
    two = [((0.0, 0.5, 1.0), (1.0, 2.0)), ((0.0, 0.3, 1.0), (1.0, -1.0)), ((0.2, 0.5, 0.9), (3.0, 1.0)),
           ((0.1, 0.7, 0.8), (-1.0, 4.0)), ((0.0, 0.55, 0.75), (2.0, -0.5))]
    for i, (e, v) in enumerate(two):
        out.append((f"twolevel{i}", _steps(at(*e), v)))
    rng = np.random.default_rng(seed)
    for i in range(5):
        e = np.sort(rng.uniform(0, 1, 9))
        out.append((f"random{i}", _steps(at(*e), rng.normal(size=8))))
    for i, m in enumerate((2, 4, 8, 16, 32)):
        out.append((f"alternating{i}", _steps(at(*np.linspace(0, 1, m + 1)), (-1.0) ** np.arange(m))))
    return out


def sample(fn: Callable, domain: Box, n: int) -> GridFunction:
    return GridFunction.from_callable(fn, domain, n)


# --- output ------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return v


def write_table(rows: list, path, cfg: ExperimentConfig, kind: str) -> Path:
    """CSV with a ``config_hash`` column and a JSON sidecar with config and environment."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    digest = cfg.digest()
    cols = ["config_hash"] + list(rows[0].keys()) if rows else ["config_hash"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({"config_hash": digest, **{k: _fmt(v) for k, v in r.items()}})
    side = {"kind": kind, "config": cfg.to_dict(), "config_hash": digest,
            "environment": {"python": sys.version.split()[0], "numpy": np.__version__,
                            "scipy": scipy.__version__, "sparsedom": __version__,
                            "platform": platform.platform()}}
    with open(path.with_suffix(".json"), "w") as fh:
        json.dump(side, fh, indent=1, sort_keys=True)
    return path


def _map(fn, items, threads: int) -> list:
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


# --- weighted scaling ----------------------------------------------------

def power_data(delta: float, n: int, domain: Box):
    """``w_δ = |x|^{1-δ}`` and ``f_δ = x^{-1+δ} 1_{(c,1)}`` with ``c`` the first cell right of 0."""
    w = power_weight(1.0 - delta, domain, n)
    f = GridFunction.from_callable(lambda x: np.where((x > 0) & (x < 1), np.abs(x) ** (-1.0 + delta), 0.0),
                                   domain, n)
    return w, f


def weighted_scaling(cfg: ExperimentConfig, operator: Callable[[GridFunction], GridFunction],
                     p: float = 2.0) -> list:
    """Rows ``(δ, [w]_{A_p}, ‖Tf‖_{L^p(w)}/‖f‖_{L^p(w)}, ratio / [w]^{max(1, 1/(p-1))})``."""
    n = cfg.a2_n
    if n < 2 ** 10:
        raise ValueError("the weighted scaling run needs n >= 2^10 to resolve the weights")
    dom = Box((-1.0,), 2.0)
    fam = shifted_family(dom, n)
    expo = max(1.0, 1.0 / (p - 1.0))

    def row(delta):
        w, f = power_data(delta, n, dom)
        char = 1.0 if delta == 1 else ap_char(w, p, fam)
        r = weighted_norm(operator(f), w, p) / weighted_norm(f, w, p)
        return {"delta": delta, "char": char, "norm_ratio": r, "ratio_to_char": r / char ** expo}

    return _map(row, [1.0] + [float(d) for d in cfg.deltas], cfg.threads)


def factor_spread(values) -> float:
    """Largest factor by which any value departs from the median."""
    v = np.asarray(values, dtype=float)
    med = float(np.median(v))
    return float(max(v.max() / med, med / v.min()))


def run_a2_scaling(cfg: ExperimentConfig) -> list:
    K = kernel_by_name(cfg.kernel, **cfg.kernel_params)
    if K.d != 1:
        raise ValueError("the scaling run is one-dimensional")
    cut = SHARP if cfg.a2_operator == "sharp" else CutoffSpec(cfg.cutoff)
    return weighted_scaling(cfg, lambda f: maximal_truncation(K, cut, f, cfg.eps(f)), cfg.p)


# --- domination ----------------------------------------------------------

def domination_rows(cfg: ExperimentConfig, n: Optional[int] = None, modes=("maximal", "variation")) -> list:
    n = n or cfg.n
    K = kernel_by_name(cfg.kernel, **cfg.kernel_params)
    cut = CutoffSpec(cfg.cutoff)
    dom = cfg.box
    funcs = [("zero", lambda x: np.zeros_like(np.asarray(x, dtype=float)))] + battery(cfg.seed, cfg.support)

    def run(item):
        name, fn = item
        f = sample(fn, dom, n)
        out = []
        for mode in modes:
            r = dominate(K, f, dom, cut, cfg.lam, cfg.k_max, mode, cfg.q, cfg.eps(f))
            c_short = r.fitted_C_at(cfg.k_max_short)
            out.append({"function": name, "mode": mode, "n": n, "fitted_C": r.fitted_C,
                        f"fitted_C_k{cfg.k_max_short}": c_short, f"fitted_C_k{cfg.k_max}": r.fitted_C,
                        "k_rel_change": abs(r.fitted_C - c_short) / c_short if c_short else 0.0,
                        "family_size": r.family_size,
                        "contribution_norms": " ".join(f"{x:.6e}" for x in r.contribution_norms)})
        return out

    rows = [r for chunk in _map(run, funcs, cfg.threads) for r in chunk]
    for mode in modes:
        sel = [r for r in rows if r["mode"] == mode and r["function"] != "zero"]
        best = max(sel, key=lambda r: r["fitted_C"])
        rows.append({"function": "GLOBAL_MAX", "mode": mode, "n": n, "fitted_C": best["fitted_C"],
                     f"fitted_C_k{cfg.k_max_short}": max(r[f"fitted_C_k{cfg.k_max_short}"] for r in sel),
                     f"fitted_C_k{cfg.k_max}": best["fitted_C"],
                     "k_rel_change": max(r["k_rel_change"] for r in sel),
                     "family_size": max(r["family_size"] for r in sel), "contribution_norms": best["function"]})
    return rows


def run_domination_suite(cfg: ExperimentConfig) -> list:
    return domination_rows(cfg)


# --- variation -------------------------------------------------------------

def run_variation_suite(cfg: ExperimentConfig) -> list:
    """Per ``q`` and battery function: ``V_q^φ`` and sharp ``V_q`` norms and the fitted
    pointwise constant; then the weighted scaling rows with ``V_q^φ T`` as operator."""
    K = kernel_by_name(cfg.kernel, **cfg.kernel_params)
    cut = CutoffSpec(cfg.cutoff)
    dom = cfg.box

    def run(item):
        name, fn = item
        f = sample(fn, dom, cfg.n)
        eps = cfg.eps(f)
        out = []
        for q in cfg.qs:
            vs = vq_operator(K, cut, f, q, eps)
            vh = vq_operator(K, SHARP, f, q, eps)
            floor = 1e-14 * max(float(vs.values.max()), 1e-300)
            out.append({"table": "battery", "q": q, "function": name, "delta": "",
                        "vq_smooth_l2": vs.lp_norm(2), "vq_sharp_l2": vh.lp_norm(2),
                        "smooth_over_sharp_C": float(np.max(vs.values / np.maximum(vh.values, floor))),
                        "char": "", "ratio_to_char": ""})
        return out

    rows = [r for chunk in _map(run, battery(cfg.seed, cfg.support), cfg.threads) for r in chunk]
    for q in cfg.qs:
        for r in weighted_scaling(cfg, lambda f, q=q: vq_operator(K, cut, f, q, cfg.eps(f)), cfg.p):
            rows.append({"table": "weighted", "q": q, "function": "power", "delta": r["delta"],
                         "vq_smooth_l2": r["norm_ratio"], "vq_sharp_l2": "", "smooth_over_sharp_C": "",
                         "char": r["char"], "ratio_to_char": r["ratio_to_char"]})
    return rows


# --- weighted shift bound ----------------------------------------------------

def shift_bound_cases(cfg: ExperimentConfig, alphas=(-0.75, -0.5, 0.0, 0.5, 0.75), ps=(1.5, 2.0, 3.0),
                      ks=(0, 3, 6)) -> list:
    """One row per weight configuration ``(p, α, k)`` with ``w = |x|^{α}``, ``σ = w^{1/(1-p)}``.

    Positive ``α`` entries are read as fractions of ``p - 1`` so that every
    weight is in ``A_p``.  Each row reports the largest ratio of the shift
    norm to the weighted bound over the battery (sparse family of
    ``T_*^φ f`` and test function ``|f|`` for every battery ``f``, every shift
    class ``u``).  Rows are sorted by increasing ``[w,σ]_{A_p}``.
    """
    from .domination import build_shifts, prop_s_ratio, weight_constants
    from .lerner import build_sparse

    K = kernel_by_name(cfg.kernel, **cfg.kernel_params)
    cut = CutoffSpec(cfg.cutoff)
    dom = cfg.box
    fam = shifted_family(dom, cfg.n)
    items = []
    for name, fn in battery(cfg.seed, cfg.support):
        f = sample(fn, dom, cfg.n)
        sparse = build_sparse(maximal_truncation(K, cut, f, cfg.eps(f)), cfg.lam)
        items.append((name, f.abs(), {k: build_shifts(sparse, k) for k in ks}))
    configs = [(p, a * (p - 1.0) if a > 0 else a) for p in ps for a in alphas]

    def run(conf):
        p, alpha = conf
        w = power_weight(alpha, dom, cfg.n)
        sigma = w.sigma(p)
        consts = weight_constants(w, sigma, p, fam)
        rows = []
        for k in ks:
            best, arg = 0.0, ""
            for name, fa, shifts in items:
                for S in shifts[k]:
                    r = prop_s_ratio(S, w, sigma, fa, p, consts=consts)
                    if r["ratio"] > best:
                        best, arg = r["ratio"], f"{name}:u={S.u}"
            rows.append({"p": p, "alpha": alpha, "k": k, **consts, "ratio": best, "argmax": arg})
        return rows

    rows = [r for chunk in _map(run, configs, cfg.threads) for r in chunk]
    rows.sort(key=lambda r: (r["joint_ap"], r["p"], r["alpha"], r["k"]))
    return rows


def heldout_check(rows: list) -> dict:
    """Fit ``C`` as the largest ratio on the first half; count second-half cases above it."""
    half = len(rows) // 2
    C = max(r["ratio"] for r in rows[:half])
    worst = max(r["ratio"] for r in rows[half:])
    return {"fitted_C": C, "test_max": worst, "exceed": sum(r["ratio"] > C for r in rows[half:])}
