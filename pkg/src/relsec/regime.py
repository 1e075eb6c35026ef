"""Secrecy rates of the compress-forward relay-eavesdropper scheme.

Everything here is a pure function of an :class:`InfoQuantities` record.
``classify`` finds the regime leaf, ``case_rate`` gives the closed-form
operating point of a leaf, and ``evaluate_rate_point`` scores an arbitrary
``(r2, r_hat)`` pair from Bob's decoding constraints and Eve's best
strategy. ``oracle_max_rate`` brute-forces the latter over a grid.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from itertools import combinations_with_replacement
from typing import NamedTuple, Optional

import numpy as np

from .errors import ConfigurationError, InternalAssertionError, UsageError
from .prob import InfoQuantities

DEFAULT_TOL = 1e-9
CONSISTENCY_TOL = 1e-9
MAX_ORACLE_POINTS = 10**8


class Leaf(str, enum.Enum):
    C1a_i = "C1a_i"
    C1a_ii = "C1a_ii"
    C1b_i = "C1b_i"
    C1b_ii = "C1b_ii"
    C2a_i = "C2a_i"
    C2a_ii = "C2a_ii"
    C2b_i = "C2b_i"
    C2b_ii_A = "C2b_ii_A"
    C2b_ii_B = "C2b_ii_B"

    def __str__(self):
        return self.value


class BobStrategy(str, enum.Enum):
    CF_SLIDING_WINDOW = "CF_SlidingWindow"
    DIRECT_X2_DECODED = "Direct_X2Decoded"

    def __str__(self):
        return self.value


class EveStrategy(str, enum.Enum):
    UNIQUE_X2 = "UniqueX2"
    NONUNIQUE_X2 = "NonUniqueX2"
    X2_AS_NOISE = "X2AsNoise"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class RegimeCase:
    leaf: Leaf
    tie: bool = False


@dataclass(frozen=True)
class RateChoice:
    """An operating point ``(r2, r_hat)`` and what it buys.

    ``sum_rate`` is Bob's bound on ``r1 + r_tilde1``; ``r1_literal`` is only
    set where the closed form had to be clamped (leaf C1b_i).
    """

    r2: float
    r_hat: float
    bob_strategy: Optional[BobStrategy]
    eve_strategy: Optional[EveStrategy]
    r_tilde1: float
    sum_rate: float
    r1: float
    secrecy_valid: bool
    slack: float = 0.0
    leaf: Optional[Leaf] = None
    r1_literal: Optional[float] = None

    @property
    def wz_bin_rate(self) -> float:
        return self.r_hat - self.r2


@dataclass(frozen=True)
class OracleConfig:
    grid: float = 0.005
    r2_range: Optional[tuple[float, float]] = None
    r_hat_range: Optional[tuple[float, float]] = None
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if not self.grid > 0:
            raise ConfigurationError("oracle grid step must be positive")
        for rng in (self.r2_range, self.r_hat_range):
            if rng is not None and not (math.isfinite(rng[0]) and math.isfinite(rng[1]) and rng[0] <= rng[1]):
                raise ConfigurationError(f"bad oracle range {rng}")


def consistency_violations(q: InfoQuantities, tol: float = CONSISTENCY_TOL) -> list[str]:
    """Invariants every realizable record satisfies (chain rule, X1 independent of X2)."""
    out = []
    for name, val in q.as_dict().items():
        if not math.isfinite(val) or val < -tol:
            out.append(f"{name} = {val} is not a nonnegative number")
    if out:
        return out
    for lhs, rhs, label in (
        (q.i_x1x2_z, q.i_x2_z + q.i_x1_z_x2, "I(X1,X2;Z) = I(X2;Z) + I(X1;Z|X2)"),
        (q.i_x1x2_z, q.i_x1_z + q.i_x2_z_x1, "I(X1,X2;Z) = I(X1;Z) + I(X2;Z|X1)"),
    ):
        if abs(lhs - rhs) > tol:
            out.append(f"{label} fails by {lhs - rhs:.3g}")
    for big, small, label in (
        (q.i_x2_z_x1, q.i_x2_z, "I(X2;Z|X1) >= I(X2;Z)"),
        (q.i_x1_z_x2, q.i_x1_z, "I(X1;Z|X2) >= I(X1;Z)"),
        (q.wz_bob, q.i_yh_y3_x2, "WZ_Bob >= I(Yh;Y3|X2)"),
        (q.i_x1_yhy3_x2, q.i_x1_y3_x2, "I(X1;Yh,Y3|X2) >= I(X1;Y3|X2)"),
    ):
        if big < small - tol:
            out.append(f"{label} fails by {small - big:.3g}")
    return out


def _require_consistent(q):
    bad = consistency_violations(q)
    if bad:
        raise UsageError("inconsistent InfoQuantities: " + "; ".join(bad))


def _leaf_margins(q: InfoQuantities) -> dict[Leaf, tuple[float, ...]]:
    """Each leaf's chain of strict inequalities as ``rhs - lhs`` margins."""
    eve_proxy = q.i_x2_z + q.wz_eve
    bob_proxy = q.i_x2_y3 + q.wz_bob
    bob_tight = q.i_x2_y3 + q.i_yh_y3_x2
    c1 = bob_proxy - eve_proxy
    c2 = -c1
    c1a = bob_tight - eve_proxy
    c1b = eve_proxy - bob_tight
    c2a = q.wz_bob - q.wz_eve
    c2b = -c2a
    c2b_ii = q.i_x2_y3 - q.i_x2_z
    return {
        Leaf.C1a_i: (c1, c1a, bob_tight - q.i_x2_z_x1),
        Leaf.C1a_ii: (c1, c1a, q.i_x2_z_x1 - bob_tight),
        Leaf.C1b_i: (c1, c1b, bob_proxy - q.i_x2_z_x1),
        Leaf.C1b_ii: (c1, c1b, q.i_x2_z_x1 - bob_proxy),
        Leaf.C2a_i: (c2, c2a, q.i_yh_y3_x2 - q.wz_eve),
        Leaf.C2a_ii: (c2, c2a, q.wz_eve - q.i_yh_y3_x2),
        Leaf.C2b_i: (c2, c2b, -c2b_ii),
        Leaf.C2b_ii_A: (c2, c2b, c2b_ii, q.i_x2_z_x1 - q.i_x2_y3),
        Leaf.C2b_ii_B: (c2, c2b, c2b_ii, q.i_x2_y3 - q.i_x2_z_x1),
    }


def classify(q: InfoQuantities, tol: float = DEFAULT_TOL) -> list[RegimeCase]:
    """All leaves whose conditions hold to within ``tol``.

    Off boundaries exactly one leaf is returned. Conditions within ``tol``
    of equality count for both sides and set the tie flag.
    """
    _require_consistent(q)
    found = []
    for leaf, margins in _leaf_margins(q).items():
        if all(m > -tol for m in margins):
            found.append(RegimeCase(leaf, tie=any(abs(m) <= tol for m in margins)))
    return found


def boundary_distance(q: InfoQuantities) -> float:
    """Smallest |margin| over every inequality tested by ``classify``."""
    return min(abs(m) for margins in _leaf_margins(q).values() for m in margins)


def eve_rate(q: InfoQuantities, r2: float, tol: float = DEFAULT_TOL) -> tuple[EveStrategy, float]:
    """Eve's transmitter-bin rate for relay codebook rate ``r2``.

    Below I(X2;Z) she decodes x2 uniquely, up to I(X2;Z|X1) she decodes it
    non-uniquely, above that she treats it as noise. Near a threshold the
    larger rate wins, which is the conservative choice for secrecy.
    """
    if r2 < 0:
        raise UsageError("r2 must be nonnegative")
    cands = []
    if r2 < q.i_x2_z + tol:
        cands.append((EveStrategy.UNIQUE_X2, q.i_x1_z_x2))
    if q.i_x2_z - tol < r2 < q.i_x2_z_x1 + tol:
        cands.append((EveStrategy.NONUNIQUE_X2, q.i_x1x2_z - r2))
    if r2 > q.i_x2_z_x1 - tol:
        cands.append((EveStrategy.X2_AS_NOISE, q.i_x1_z))
    best = cands[0]
    for c in cands[1:]:
        if c[1] > best[1]:
            best = c
    return best


class BobDecision(NamedTuple):
    strategy: Optional[BobStrategy]
    sum_rate: float

    @property
    def feasible(self) -> bool:
        return self.strategy is not None


def x2_decodable_alone(q: InfoQuantities, r2: float, tol: float = DEFAULT_TOL) -> bool:
    # a single relay codeword is known to everyone
    return r2 <= 0.0 or r2 < q.i_x2_y3 - tol


def bob_sum_rate(q: InfoQuantities, r2: float, r_hat: float, tol: float = DEFAULT_TOL) -> BobDecision:
    """Best decodable ``r1 + r_tilde1`` for Bob, or an infeasible decision."""
    if not 0 <= r2 <= r_hat:
        raise UsageError(f"need 0 <= r2 <= r_hat, got r2={r2}, r_hat={r_hat}")
    direct_ok = x2_decodable_alone(q, r2, tol)
    cf_ok = r_hat < q.i_x2_y3 + q.wz_bob - tol or direct_ok
    best = BobDecision(None, 0.0)
    if cf_ok:
        a = q.i_x1_yhy3_x2
        s = min(a, a + q.i_yh_y3_x2 + q.i_x2_y3 - r_hat, a + q.i_yh_y3_x2 + r2 - r_hat)
        best = BobDecision(BobStrategy.CF_SLIDING_WINDOW, s)
    if direct_ok and (best.strategy is None or q.i_x1_y3_x2 > best.sum_rate):
        best = BobDecision(BobStrategy.DIRECT_X2_DECODED, q.i_x1_y3_x2)
    if best.strategy is None or best.sum_rate <= 0:
        return BobDecision(None, max(best.sum_rate, 0.0))
    return best


def secrecy_gate(q: InfoQuantities, r2: float, r_hat: float, tol: float = DEFAULT_TOL) -> bool:
    """Eve can neither track the compression index (Case-1 path) nor resolve
    a compression word inside its WZ bin (Case-2 path)."""
    path1 = r2 > q.i_x2_z + tol and r_hat > q.i_x2_z + q.wz_eve + tol
    path2 = r_hat - r2 > q.wz_eve + tol
    return path1 or path2


def _check_eve_bound(q, r2, r_tilde1, tol):
    # Eve's rate must equal I(X1;Z|X2) + min(r2, I(X2;Z)) - min(r2, I(X2;Z|X1)),
    # the value that makes the per-block equivocation bound collapse to n*r1
    expected = q.i_x1_z_x2 + min(r2, q.i_x2_z) - min(r2, q.i_x2_z_x1)
    if abs(r_tilde1 - expected) > 2 * tol + 2 * CONSISTENCY_TOL:
        raise InternalAssertionError(
            f"Eve rate {r_tilde1!r} disagrees with the equivocation bound {expected!r} at r2={r2!r}")


def evaluate_rate_point(q: InfoQuantities, r2: float, r_hat: float, tol: float = DEFAULT_TOL) -> RateChoice:
    """Secrecy rate achieved at ``(r2, r_hat)``; zero when secrecy or decoding fails."""
    _require_consistent(q)
    if not 0 <= r2 <= r_hat:
        raise UsageError(f"need 0 <= r2 <= r_hat, got r2={r2}, r_hat={r_hat}")
    if not secrecy_gate(q, r2, r_hat, tol):
        return RateChoice(r2, r_hat, None, None, 0.0, 0.0, 0.0, False, tol)
    bob = bob_sum_rate(q, r2, r_hat, tol)
    eve, r_tilde1 = eve_rate(q, r2, tol)
    _check_eve_bound(q, r2, r_tilde1, tol)
    r1 = max(bob.sum_rate - r_tilde1, 0.0) if bob.feasible else 0.0
    return RateChoice(r2, r_hat, bob.strategy, eve, r_tilde1, bob.sum_rate, r1, True, tol)


def _interior_c2a_i(q):
    m = min(q.i_x2_z - q.i_x2_y3, q.i_yh_y3_x2 - q.wz_eve,
            (q.i_x2_y3 + q.i_yh_y3_x2) - (q.i_x2_y3 + q.wz_eve))
    r2 = q.i_x2_y3 + m / 2
    return r2, r2 + q.wz_eve + m / 4


def case_rate(q: InfoQuantities, leaf: Leaf | RegimeCase, tol: float = DEFAULT_TOL) -> RateChoice:
    """Closed-form secrecy rate of ``leaf`` at its limiting rate choice."""
    if isinstance(leaf, RegimeCase):
        leaf = leaf.leaf
    leaf = Leaf(leaf)
    if leaf not in {c.leaf for c in classify(q, tol)}:
        raise UsageError(f"leaf {leaf} does not hold for this record")

    a = q.i_x1_yhy3_x2
    cf, direct = BobStrategy.CF_SLIDING_WINDOW, BobStrategy.DIRECT_X2_DECODED
    noise, nonunique, unique = EveStrategy.X2_AS_NOISE, EveStrategy.NONUNIQUE_X2, EveStrategy.UNIQUE_X2
    literal = None

    if leaf is Leaf.C1a_i:
        r2, r_hat = max(q.i_x2_y3, q.i_x2_z_x1), q.i_x2_y3 + q.i_yh_y3_x2
        bob, s, eve = cf, a, noise
    elif leaf is Leaf.C1a_ii:
        r2 = r_hat = q.i_x2_y3 + q.i_yh_y3_x2
        bob, s, eve = cf, a, nonunique
    elif leaf is Leaf.C1b_i:
        cut = a + q.i_x2_y3 + q.i_yh_y3_x2
        literal_hat = max(q.i_x2_z_x1, q.i_x2_y3)
        # the literal limit can sit below the Case-1 window opened at I(X2;Z) + WZ_Eve
        r2 = r_hat = max(literal_hat, q.i_x2_z + q.wz_eve)
        bob, s, eve = cf, cut - r_hat, noise
        literal = max(cut - literal_hat - q.i_x1_z, 0.0)
    elif leaf is Leaf.C1b_ii:
        r2 = r_hat = q.i_x2_z + q.wz_eve
        bob, s, eve = cf, a + q.i_x2_y3 + q.i_yh_y3_x2 - r_hat, nonunique
    elif leaf is Leaf.C2a_i:
        r2, r_hat = _interior_c2a_i(q)
        bob, s, eve = cf, a, unique
    elif leaf is Leaf.C2a_ii:
        r2 = q.i_x2_y3
        r_hat = r2 + q.wz_eve
        bob, s, eve = cf, q.i_x1_y3_x2 + q.wz_bob - q.wz_eve, unique
    elif leaf is Leaf.C2b_i:
        r2, r_hat = q.i_x2_y3, q.i_x2_z + q.wz_eve
        bob, s, eve = direct, q.i_x1_y3_x2, unique
    elif leaf is Leaf.C2b_ii_A:
        r2 = q.i_x2_y3
        r_hat = r2 + q.wz_eve
        bob, s, eve = direct, q.i_x1_y3_x2, nonunique
    else:
        r2 = (q.i_x2_z_x1 + q.i_x2_y3) / 2
        r_hat = r2 + q.wz_eve
        bob, s, eve = direct, q.i_x1_y3_x2, noise

    r_tilde1 = {unique: q.i_x1_z_x2, nonunique: q.i_x1x2_z - r2, noise: q.i_x1_z}[eve]
    r1 = max(s - r_tilde1, 0.0)
    return RateChoice(r2, r_hat, bob, eve, r_tilde1, s, r1, True, 0.0, leaf, literal)


def best_case_rate(q: InfoQuantities, tol: float = DEFAULT_TOL) -> RateChoice:
    """Largest closed-form rate over the leaves ``classify`` returns."""
    best = None
    for case in classify(q, tol):
        rc = case_rate(q, case.leaf, tol)
        if best is None or rc.r1 > best.r1:
            best = rc
    return best


def probe_near(q: InfoQuantities, r2: float, r_hat: float, delta: float,
               tol: float = DEFAULT_TOL, steps: int = 2) -> RateChoice:
    """Best ``evaluate_rate_point`` on a ``(2*steps+1)^2`` lattice of spacing
    ``delta`` around a (possibly limiting) operating point."""
    best = None
    offs = [k * delta for k in range(-steps, steps + 1)]
    for d2 in offs:
        for dh in offs:
            a, b = r2 + d2, r_hat + dh
            if a < 0 or b < a:
                continue
            rc = evaluate_rate_point(q, a, b, tol)
            if best is None or rc.r1 > best.r1:
                best = rc
    return best


def critical_values(q: InfoQuantities) -> np.ndarray:
    """Breakpoints of the rate-point map: the quantities, their pairwise
    sums and midpoints, and zero."""
    vals = np.append(q.as_array(), 0.0)
    pairs = list(combinations_with_replacement(range(vals.size), 2))
    i, j = np.array(pairs).T
    pts = np.concatenate([vals, vals[i] + vals[j], (vals[i] + vals[j]) / 2])
    return np.unique(pts)


def oracle_candidates(q: InfoQuantities, cfg: OracleConfig) -> tuple[np.ndarray, np.ndarray]:
    """Grid plus critical ``(r2, r_hat)`` points, lexicographically sorted."""
    crit = critical_values(q)
    hi_default = max(q.i_x1x2_z + q.wz_eve + q.wz_bob + 1.0, float(crit.max()) + cfg.grid)
    r2_lo, r2_hi = cfg.r2_range or (0.0, hi_default)
    rh_lo, rh_hi = cfg.r_hat_range or (0.0, hi_default)
    n2 = int(math.floor((r2_hi - r2_lo) / cfg.grid + 1e-9)) + 1
    nh = int(math.floor((rh_hi - rh_lo) / cfg.grid + 1e-9)) + 1
    if n2 * nh > MAX_ORACLE_POINTS:
        raise ConfigurationError(f"oracle grid has {n2 * nh} points, above {MAX_ORACLE_POINTS}")
    g2 = r2_lo + cfg.grid * np.arange(n2)
    gh = rh_lo + cfg.grid * np.arange(nh)
    G2, GH = np.meshgrid(g2, gh, indexing="ij")

    off = np.array([-2 * cfg.tol, 0.0, 2 * cfg.tol])
    c = (crit[:, None] + off[None, :]).ravel()
    c = c[c >= 0]
    rel = (np.array([q.wz_eve, q.wz_bob])[:, None] + off[None, :]).ravel()
    C2 = np.repeat(c, c.size + rel.size)
    CH = np.concatenate([np.tile(c, (c.size, 1)), c[:, None] + rel[None, :]], axis=1).ravel()

    r2 = np.concatenate([G2.ravel(), C2])
    rh = np.concatenate([GH.ravel(), CH])
    keep = (r2 >= 0) & (rh >= r2)
    r2, rh = r2[keep], rh[keep]
    order = np.lexsort((rh, r2))
    return r2[order], rh[order]


def oracle_max_rate(q: InfoQuantities, cfg: OracleConfig | None = None) -> RateChoice:
    """Brute-force maximum of ``evaluate_rate_point`` over grid and breakpoints.

    Ties go to the lexicographically smallest ``(r2, r_hat)``.
    """
    from .kernels import rate_grid

    cfg = cfg or OracleConfig()
    _require_consistent(q)
    r2, rh = oracle_candidates(q, cfg)
    r1 = rate_grid(q.as_array(), r2, rh, cfg.tol)
    k = int(np.argmax(r1))
    best = evaluate_rate_point(q, float(r2[k]), float(rh[k]), cfg.tol)
    if abs(best.r1 - r1[k]) > 1e-12:
        raise InternalAssertionError(f"grid kernel r1={r1[k]!r} but scalar path gives {best.r1!r}")
    return replace(best, slack=cfg.grid)
