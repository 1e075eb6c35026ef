"""Search over input designs for the largest secrecy rate of a channel.

Every simplex row is parameterized by unconstrained logits through a softmax,
so all intermediate designs are valid. Each restart runs a compass search on
the logits followed by a Nelder-Mead polish. Objective values come from the
regime engine only.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from ._parallel import pmap
from .errors import ConfigurationError, UsageError, ValidationError
from .prob import ChannelSpec, InputDesign, degenerate_design, info_quantities, validate_channel
from .regime import OracleConfig, RateChoice, best_case_rate, oracle_max_rate

OBJECTIVES = ("case", "oracle")
_LOGIT_CLIP = 40.0


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 4
    max_iters: int = 300
    tol: float = 1e-7
    comp_size_max: Optional[int] = None  # None: |X2| * |Y2| + 1
    seed: int = 0
    objective: str = "case"
    oracle_grid: float = 0.01

    def __post_init__(self):
        if self.restarts < 1:
            raise ConfigurationError("restarts must be >= 1")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be >= 1")
        if self.comp_size_max is not None and self.comp_size_max < 1:
            raise ConfigurationError("comp_size_max must be >= 1")
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise ConfigurationError("tol must be a positive number")
        if self.objective not in OBJECTIVES:
            raise ConfigurationError(f"objective must be one of {OBJECTIVES}")
        if not self.oracle_grid > 0:
            raise ConfigurationError("oracle_grid must be positive")

    def comp_sizes(self, spec: ChannelSpec) -> range:
        s = spec.sizes
        top = self.comp_size_max if self.comp_size_max is not None else s["x2"] * s["y2"] + 1
        return range(1, top + 1)


@dataclass(frozen=True)
class OptResult:
    design: InputDesign
    rate: RateChoice
    leaf: object
    trace: tuple = ()  # (iteration, best r1 so far)
    wall_time: float = field(default=0.0, compare=False)


def _softmax(z):
    z = np.clip(z, -_LOGIT_CLIP, _LOGIT_CLIP)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


class _Layout:
    """Splits one flat logit vector into the three simplex families."""

    def __init__(self, sizes, comp):
        self.nx1, self.nx2, self.ny2, self.comp = sizes["x1"], sizes["x2"], sizes["y2"], comp
        self.cut1 = self.nx1
        self.cut2 = self.cut1 + self.nx2
        self.size = self.cut2 + self.nx2 * self.ny2 * comp

    def design(self, z) -> InputDesign:
        q = _softmax(z[self.cut2:].reshape(self.nx2, self.ny2, self.comp))
        return InputDesign(_softmax(z[:self.cut1]), _softmax(z[self.cut1:self.cut2]), q)


def rate_of(spec: ChannelSpec, design: InputDesign, objective: str = "case",
            oracle_grid: float = 0.01) -> Optional[RateChoice]:
    """Objective value of a design, or None if the record is numerically unusable."""
    q = info_quantities(spec, design)
    try:
        if objective == "oracle":
            return oracle_max_rate(q, OracleConfig(grid=oracle_grid))
        return best_case_rate(q)
    except UsageError:
        return None


class _Counter:
    def __init__(self, fn):
        self.fn, self.calls, self.best, self.trace = fn, 0, -math.inf, []

    def __call__(self, z):
        val = self.fn(z)
        self.calls += 1
        if val > self.best:
            self.best = val
            self.trace.append((self.calls, val))
        return val


def _compass(f, z, step, tol, budget):
    """Coordinate ascent with a shrinking step."""
    fz = f(z)
    while step > tol and f.calls < budget:
        moved = False
        for i in range(z.size):
            for sgn in (1.0, -1.0):
                trial = z.copy()
                trial[i] += sgn * step
                ft = f(trial)
                if ft > fz:
                    z, fz, moved = trial, ft, True
                    break
            if f.calls >= budget:
                break
        if not moved:
            step /= 2
    return z, fz


def _local_search(f, z0, cfg: OptimizerConfig):
    budget = f.calls + cfg.max_iters
    z, fz = _compass(f, z0, 1.0, cfg.tol, budget)
    res = minimize(lambda v: -f(v), z, method="Nelder-Mead",
                   options={"maxfev": cfg.max_iters, "xatol": cfg.tol, "fatol": cfg.tol * 1e-3})
    if -res.fun > fz:
        z, fz = np.asarray(res.x), -float(res.fun)
    return z, fz


def _best_px1(spec: ChannelSpec, x2_symbol: int, objective: str, oracle_grid: float, tol: float):
    """Search the input law of X1 with the relay pinned to one symbol."""
    nx1 = spec.sizes["x1"]

    def value(p):
        rc = rate_of(spec, degenerate_design(spec, p, x2_symbol), objective, oracle_grid)
        return -math.inf if rc is None else rc.r1

    # coarse simplex prescan, then a tight polish on logits
    res = 8 if nx1 <= 3 else 4
    best_p, best_v = np.full(nx1, 1.0 / nx1), value(np.full(nx1, 1.0 / nx1))
    for counts in _compositions(res, nx1):
        p = np.asarray(counts, dtype=np.float64) / res
        v = value(p)
        if v > best_v + 1e-15:
            best_p, best_v = p, v
    z0 = np.log(np.maximum(best_p, 1e-6))
    f = lambda z: value(_softmax(z))
    out = minimize(lambda z: -f(z), z0, method="Nelder-Mead",
                   options={"maxfev": 4000, "xatol": 1e-10, "fatol": tol * 1e-3})
    if -out.fun > best_v:
        best_p, best_v = _softmax(np.asarray(out.x)), -float(out.fun)
    return best_p, best_v


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for k in range(total + 1):
        for rest in _compositions(total - k, parts - 1):
            yield (k, *rest)


def _check_spec(spec: ChannelSpec):
    bad = validate_channel(spec)
    if bad:
        raise ValidationError("invalid channel", bad)


def wiretap_baseline(spec: ChannelSpec, objective: str = "case", oracle_grid: float = 0.01,
                     tol: float = 1e-7) -> float:
    """Best rate with the relay pinned to one symbol and no compression."""
    return _wiretap_search(spec, objective, oracle_grid, tol)[1]


def _wiretap_search(spec, objective="case", oracle_grid=0.01, tol=1e-7):
    _check_spec(spec)
    best = (None, -math.inf)
    for x2 in range(spec.sizes["x2"]):
        p, v = _best_px1(spec, x2, objective, oracle_grid, tol)
        if v > best[1]:
            best = (degenerate_design(spec, p, x2), v)
    return best[0], max(best[1], 0.0)


def _restart(spec, cfg, comp, restart):
    layout = _Layout(spec.sizes, comp)
    rng = np.random.default_rng([cfg.seed & (2**64 - 1), comp, restart])

    def value(z):
        rc = rate_of(spec, layout.design(z), cfg.objective, cfg.oracle_grid)
        return -math.inf if rc is None else rc.r1

    f = _Counter(value)
    z0 = rng.normal(0.0, 1.5, layout.size)
    z, fz = _local_search(f, z0, cfg)
    return layout.design(z), fz, f.trace


def optimize_design(spec: ChannelSpec, cfg: OptimizerConfig | None = None) -> OptResult:
    """Multi-restart search over (p_x1, p_x2, q) for every compression size."""
    cfg = cfg or OptimizerConfig()
    t0 = time.perf_counter()
    _check_spec(spec)
    comps = list(cfg.comp_sizes(spec))
    if spec.sizes["x1"] * spec.sizes["x2"] * spec.sizes["y2"] * max(comps) * spec.sizes["y3"] \
            * spec.sizes["z"] > 2**24:
        raise ConfigurationError("joint alphabet too large for the largest compression size")

    # the degenerate relay is always a candidate
    base_design, _ = _wiretap_search(spec, cfg.objective, cfg.oracle_grid, cfg.tol)
    units = [(c, r) for c in comps for r in range(cfg.restarts)]
    outcomes = pmap(lambda u: _restart(spec, cfg, *u), units)

    candidates = [(base_design, rate_of(spec, base_design, cfg.objective, cfg.oracle_grid))]
    trace, offset, running = [], 0, -math.inf
    for design, _, unit_trace in outcomes:
        for it, val in unit_trace:
            if val > running:
                running = val
                trace.append((offset + it, val))
        offset += unit_trace[-1][0] if unit_trace else 0
        candidates.append((design, rate_of(spec, design, cfg.objective, cfg.oracle_grid)))

    best_design, best_rate = None, None
    for design, rc in candidates:
        if rc is None:
            continue
        # strict improvement keeps the earliest candidate on ties
        if best_rate is None or rc.r1 > best_rate.r1:
            best_design, best_rate = design, rc
    final = best_rate.r1
    trace = [(i, v) for i, v in trace if v <= final + 1e-12]
    trace.append((offset + 1, final))
    return OptResult(best_design, best_rate, best_rate.leaf, tuple(trace), time.perf_counter() - t0)


@dataclass(frozen=True)
class SweepRow:
    param: float
    leaf: object
    r1: float
    baseline: float
    status: str = "ok"


def sweep(generator: Callable[[float], ChannelSpec], grid: Sequence[float],
          cfg: OptimizerConfig | None = None) -> list[SweepRow]:
    """One optimizer run per grid value, in grid order. Failed points are kept as rows."""
    cfg = cfg or OptimizerConfig()

    def point(x):
        try:
            spec = generator(x)
            res = optimize_design(spec, cfg)
            base = wiretap_baseline(spec, cfg.objective, cfg.oracle_grid, cfg.tol)
        except (ValidationError, ConfigurationError, ValueError, ZeroDivisionError) as exc:
            return SweepRow(float(x), None, math.nan, math.nan, f"failed: {exc}")
        return SweepRow(float(x), res.leaf, res.rate.r1, base)

    return pmap(point, list(grid))
