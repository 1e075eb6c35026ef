"""Finite-alphabet probability machinery.

The joint law of one channel use is stored densely over the six variables
``x1, x2, y2, yh, y3, z`` (``yh`` is the relay's compression variable).
Entropies are in bits and use the 0 log 0 = 0 convention.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, InternalAssertionError, UsageError, ValidationError

AXES = ("x1", "x2", "y2", "yh", "y3", "z")
CHANNEL_AXES = ("x1", "x2", "y2", "y3", "z")

SUM_TOL = 1e-9
JOINT_TOL = 1e-8
MI_CLAMP = 1e-12
NULL_EVENT = 1e-15
MAX_JOINT_CELLS = 2**24


@dataclass(frozen=True)
class Violation:
    """One broken invariant: where, what, and by how much."""

    path: str
    message: str
    magnitude: float = 0.0

    def __str__(self):
        if self.magnitude:
            return f"{self.path}: {self.message} (by {self.magnitude:.3g})"
        return f"{self.path}: {self.message}"


def _frozen(a):
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    """Conditional law ``law[x1, x2, y2, y3, z] = P(y2, y3, z | x1, x2)``."""

    law: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "law", _frozen(self.law))

    @property
    def sizes(self) -> dict[str, int]:
        if self.law.ndim != 5:
            return {}
        return dict(zip(CHANNEL_AXES, self.law.shape))

    def __eq__(self, other):
        return isinstance(other, ChannelSpec) and np.array_equal(self.law, other.law)


@dataclass(frozen=True, eq=False)
class InputDesign:
    """Free distributions: ``p_x1``, ``p_x2`` and the test channel ``q[x2, y2, yh]``."""

    p_x1: np.ndarray
    p_x2: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, _frozen(getattr(self, f.name)))

    @property
    def comp_size(self) -> int:
        return int(self.q.shape[-1]) if self.q.ndim == 3 else 0

    def __eq__(self, other):
        return isinstance(other, InputDesign) and all(
            np.array_equal(getattr(self, f.name), getattr(other, f.name)) for f in fields(self)
        )


def _check_simplex(vec, path, out):
    if not np.all(np.isfinite(vec)):
        out.append(Violation(path, "non-finite entry"))
        return
    for idx in zip(*np.nonzero(vec < 0)):
        out.append(Violation(f"{path}/{'/'.join(map(str, idx))}", "negative probability", float(-vec[idx])))


def validate_channel(spec: ChannelSpec) -> list[Violation]:
    """Return every invariant violation of ``spec``; an empty list means valid."""
    out: list[Violation] = []
    law = spec.law
    if law.ndim != 5:
        return [Violation("/channel", f"expected 5 axes {CHANNEL_AXES}, got {law.ndim}")]
    for name, size in zip(CHANNEL_AXES, law.shape):
        if size < 1:
            out.append(Violation(f"/alphabets/{name}", "alphabet size must be >= 1", float(size)))
    if out:
        return out
    _check_simplex(law, "/channel", out)
    if not np.all(np.isfinite(law)):
        return out
    sums = law.sum(axis=(2, 3, 4))
    for x1, x2 in zip(*np.nonzero(np.abs(sums - 1.0) > SUM_TOL)):
        dev = float(sums[x1, x2] - 1.0)
        out.append(Violation(f"/channel/{x1}/{x2}", f"row sums to {sums[x1, x2]:.12g}, not 1", abs(dev)))
    return out


def validate_design(design: InputDesign, spec: ChannelSpec | None = None) -> list[Violation]:
    out: list[Violation] = []
    for name, vec in (("p_x1", design.p_x1), ("p_x2", design.p_x2)):
        if vec.ndim != 1 or vec.size < 1:
            out.append(Violation(f"/design/{name}", "must be a nonempty vector"))
            continue
        _check_simplex(vec, f"/design/{name}", out)
        total = float(vec.sum())
        if np.isfinite(total) and abs(total - 1.0) > SUM_TOL:
            out.append(Violation(f"/design/{name}", f"sums to {total:.12g}, not 1", abs(total - 1.0)))
    q = design.q
    if q.ndim != 3 or q.shape[-1] < 1:
        out.append(Violation("/design/q", "must be a 3-axis array q[x2][y2][yh] with comp_size >= 1"))
        return out
    _check_simplex(q, "/design/q", out)
    if np.all(np.isfinite(q)):
        sums = q.sum(axis=2)
        for x2, y2 in zip(*np.nonzero(np.abs(sums - 1.0) > SUM_TOL)):
            out.append(Violation(f"/design/q/{x2}/{y2}", f"row sums to {sums[x2, y2]:.12g}, not 1",
                                 abs(float(sums[x2, y2]) - 1.0)))
    if spec is not None and spec.law.ndim == 5:
        out.extend(_dimension_mismatches(spec, design))
    return out


def _dimension_mismatches(spec, design):
    s = spec.sizes
    found = []
    checks = (
        ("x1", design.p_x1.shape[0], "/design/p_x1"),
        ("x2", design.p_x2.shape[0], "/design/p_x2"),
        ("x2", design.q.shape[0], "/design/q"),
        ("y2", design.q.shape[1], "/design/q/*"),
    )
    for axis, got, path in checks:
        if got != s[axis]:
            found.append(Violation(path, f"axis {axis} has size {got} but the channel has {s[axis]}"))
    return found


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Dense joint ``p[x1, x2, y2, yh, y3, z]``; axis names in ``axes``."""

    p: np.ndarray
    axes: tuple[str, ...] = AXES

    def __post_init__(self):
        object.__setattr__(self, "p", _frozen(self.p))

    @property
    def sizes(self) -> dict[str, int]:
        return dict(zip(self.axes, self.p.shape))

    def marginal(self, names: Iterable[str]) -> np.ndarray:
        """Marginal over ``names`` with axes in canonical ``AXES`` order."""
        keep = {_axis(self, n) for n in names}
        drop = tuple(i for i in range(len(self.axes)) if i not in keep)
        return self.p.sum(axis=drop) if drop else self.p


def _axis(J, name):
    try:
        return J.axes.index(name)
    except ValueError:
        raise UsageError(f"unknown variable {name!r}; expected one of {J.axes}") from None


def assemble_joint(spec: ChannelSpec, design: InputDesign) -> JointDistribution:
    """Build ``pX1 * pX2 * P(y2, y3, z | x1, x2) * q(yh | x2, y2)``.

    Inputs are checked to 1e-9 and renormalized once, so rounding in a
    spec file does not leak into the information quantities.
    """
    bad = validate_channel(spec)
    if bad:
        raise ValidationError("invalid channel", bad)
    mismatch = _dimension_mismatches(spec, design) if design.q.ndim == 3 and design.p_x1.ndim == 1 \
        and design.p_x2.ndim == 1 else []
    if mismatch:
        raise ConfigurationError("; ".join(str(v) for v in mismatch))
    bad = validate_design(design)
    if bad:
        raise ValidationError("invalid design", bad)
    ncells = spec.law.size * design.comp_size
    if ncells > MAX_JOINT_CELLS:
        raise ConfigurationError(f"joint has {ncells} cells, above the limit of {MAX_JOINT_CELLS}")

    p1 = design.p_x1 / design.p_x1.sum()
    p2 = design.p_x2 / design.p_x2.sum()
    law = spec.law / spec.law.sum(axis=(2, 3, 4), keepdims=True)
    q = design.q / design.q.sum(axis=2, keepdims=True)
    joint = np.einsum("a,b,abcde,bcf->abcfde", p1, p2, law, q, optimize=True)
    return JointDistribution(joint)


def _names(group) -> tuple[str, ...]:
    if group is None:
        return ()
    if isinstance(group, str):
        return tuple(s.strip() for s in group.split(",") if s.strip())
    return tuple(group)


def entropy(p: np.ndarray) -> float:
    """Shannon entropy in bits of an array of probabilities (any shape)."""
    flat = np.ravel(p)
    flat = flat[flat > 0]
    # np.sum reduces contiguous data pairwise
    return float(-np.sum(flat * np.log2(flat)))


class _EntropyCache:
    def __init__(self, J: JointDistribution):
        self.J = J
        self.cache: dict[frozenset, float] = {}

    def __call__(self, names) -> float:
        key = frozenset(names)
        if not key:
            return 0.0
        if key not in self.cache:
            self.cache[key] = entropy(self.J.marginal(key))
        return self.cache[key]


def _conditional_mi(J, a, b, c, H=None) -> float:
    if H is None:
        H = _EntropyCache(J)
    if c:
        pc = J.marginal(c)
        if np.any((pc > 0) & (pc < NULL_EVENT)):
            # rare: drop negligible conditioning events explicitly
            return _conditional_mi_masked(J, a, b, c)
    # order-independent in (a, b): H(AC) and H(BC) are summed in canonical order
    hac, hbc = sorted((H(a + c), H(b + c)))
    val = hac + hbc - H(a + b + c) - H(c)
    return _clamp(val, a, b, c)


def _conditional_mi_masked(J, a, b, c):
    idx = sorted(_axis(J, n) for n in a + b + c)
    names = tuple(J.axes[i] for i in idx)
    sub = J.marginal(names)
    cpos = [names.index(n) for n in c]
    other = tuple(i for i in range(sub.ndim) if i not in cpos)
    pc = sub.sum(axis=other, keepdims=True)
    sub = np.where(pc >= NULL_EVENT, sub, 0.0)
    Jm = JointDistribution.__new__(JointDistribution)
    object.__setattr__(Jm, "p", sub)
    object.__setattr__(Jm, "axes", names)
    H = _EntropyCache(Jm)
    hac, hbc = sorted((H(a + c), H(b + c)))
    return _clamp(hac + hbc - H(a + b + c) - H(c), a, b, c)


def _clamp(val, a, b, c):
    # values within MI_CLAMP of zero are cancellation noise
    if val < -MI_CLAMP * 1e3:
        raise InternalAssertionError(f"I({a};{b}|{c}) = {val} is negative")
    return 0.0 if val < MI_CLAMP else float(val)


def mutual_information(J: JointDistribution, group_a, group_b, group_c=()) -> float:
    """Conditional mutual information ``I(A; B | C)`` in bits.

    Groups are variable names from ``J.axes`` given as sequences or
    comma-separated strings; ``group_c`` may be empty.
    """
    a, b, c = _names(group_a), _names(group_b), _names(group_c)
    if not a or not b:
        raise UsageError("groups A and B must be nonempty")
    for n in a + b + c:
        _axis(J, n)
    seen = a + b + c
    if len(set(seen)) != len(seen):
        raise UsageError(f"variable groups overlap: {a} / {b} / {c}")
    return _conditional_mi(J, a, b, c)


@dataclass(frozen=True)
class InfoQuantities:
    """The eleven functionals of the rate theorem, in bits per channel use."""

    i_x2_y3: float  # I(X2;Y3)
    i_x2_z: float  # I(X2;Z)
    i_x2_z_x1: float  # I(X2;Z|X1)
    i_yh_y3_x2: float  # I(Yh;Y3|X2)
    wz_bob: float  # I(Yh;X1,Y3|X2)
    wz_eve: float  # I(Yh;X1,Z|X2)
    i_x1_yhy3_x2: float  # I(X1;Yh,Y3|X2)
    i_x1_y3_x2: float  # I(X1;Y3|X2)
    i_x1_z: float  # I(X1;Z)
    i_x1_z_x2: float  # I(X1;Z|X2)
    i_x1x2_z: float  # I(X1,X2;Z)

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


# (field, A, B, C) for every functional
QUANTITY_DEFS: Sequence[tuple[str, tuple, tuple, tuple]] = (
    ("i_x2_y3", ("x2",), ("y3",), ()),
    ("i_x2_z", ("x2",), ("z",), ()),
    ("i_x2_z_x1", ("x2",), ("z",), ("x1",)),
    ("i_yh_y3_x2", ("yh",), ("y3",), ("x2",)),
    ("wz_bob", ("yh",), ("x1", "y3"), ("x2",)),
    ("wz_eve", ("yh",), ("x1", "z"), ("x2",)),
    ("i_x1_yhy3_x2", ("x1",), ("yh", "y3"), ("x2",)),
    ("i_x1_y3_x2", ("x1",), ("y3",), ("x2",)),
    ("i_x1_z", ("x1",), ("z",), ()),
    ("i_x1_z_x2", ("x1",), ("z",), ("x2",)),
    ("i_x1x2_z", ("x1", "x2"), ("z",), ()),
)


def compute_info_quantities(J: JointDistribution) -> InfoQuantities:
    H = _EntropyCache(J)
    vals = {name: _conditional_mi(J, a, b, c, H) for name, a, b, c in QUANTITY_DEFS}
    return InfoQuantities(**vals)


def info_quantities(spec: ChannelSpec, design: InputDesign) -> InfoQuantities:
    return compute_info_quantities(assemble_joint(spec, design))


def degenerate_design(spec: ChannelSpec, p_x1=None, x2_symbol: int = 0) -> InputDesign:
    """Relay pinned to one symbol with a single compression letter."""
    s = spec.sizes
    if p_x1 is None:
        p_x1 = np.full(s["x1"], 1.0 / s["x1"])
    p_x2 = np.zeros(s["x2"])
    p_x2[x2_symbol] = 1.0
    return InputDesign(p_x1, p_x2, np.ones((s["x2"], s["y2"], 1)))


def uniform_design(spec: ChannelSpec, comp_size: int) -> InputDesign:
    s = spec.sizes
    return InputDesign(np.full(s["x1"], 1.0 / s["x1"]), np.full(s["x2"], 1.0 / s["x2"]),
                       np.full((s["x2"], s["y2"], comp_size), 1.0 / comp_size))


def binary_entropy(p: float) -> float:
    return entropy(np.array([p, 1.0 - p]))
