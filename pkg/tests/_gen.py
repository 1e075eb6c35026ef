"""Shared generators and independent reference computations for the tests."""

import itertools
import math

import numpy as np

from relsec import channels as ch
from relsec.prob import InfoQuantities, InputDesign

FIELDS = InfoQuantities.field_names()


def random_record(rng, scale=1.0) -> InfoQuantities:
    """A record obeying every consistency relation a real joint law obeys."""
    x2z, x1z_x2, yh, x1y3, x2y3, wze = rng.uniform(0, scale, 6)
    x1z = rng.uniform(0, 1) * x1z_x2
    wzb = yh + rng.uniform(0, scale)
    return InfoQuantities(
        i_x2_y3=x2y3, i_x2_z=x2z, i_x2_z_x1=x2z + x1z_x2 - x1z, i_yh_y3_x2=yh, wz_bob=wzb, wz_eve=wze,
        i_x1_yhy3_x2=x1y3 + wzb - yh, i_x1_y3_x2=x1y3, i_x1_z=x1z, i_x1_z_x2=x1z_x2, i_x1x2_z=x2z + x1z_x2,
    )


def random_spec_design(rng, max_size=3, comp_max=3):
    sizes = {k: int(rng.integers(1, max_size + 1)) for k in ("x1", "x2", "y2", "y3", "z")}
    spec = ch.random_channel(rng, sizes, concentration=0.7)
    comp = int(rng.integers(1, comp_max + 1))
    design = InputDesign(rng.dirichlet(np.ones(sizes["x1"])), rng.dirichlet(np.ones(sizes["x2"])),
                         rng.dirichlet(np.ones(comp), size=(sizes["x2"], sizes["y2"])))
    return spec, design


# ---- reference implementation: explicit loops, no shared code with the library

AX = {"x1": 0, "x2": 1, "y2": 2, "yh": 3, "y3": 4, "z": 5}


def loop_joint(spec, design):
    law, p1, p2, q = spec.law, design.p_x1, design.p_x2, design.q
    n1, n2, ny2, ny3, nz = law.shape
    nh = q.shape[2]
    J = {}
    for a, b, c, d, e, f in itertools.product(range(n1), range(n2), range(ny2), range(nh), range(ny3), range(nz)):
        v = p1[a] * p2[b] * law[a, b, c, e, f] * q[b, c, d]
        if v > 0:
            J[(a, b, c, d, e, f)] = v
    total = sum(J.values())
    return {k: v / total for k, v in J.items()}


def _marg(J, idx):
    out = {}
    for k, v in J.items():
        key = tuple(k[i] for i in idx)
        out[key] = out.get(key, 0.0) + v
    return out


def loop_mi(J, a, b, c=()):
    """sum p(a,b,c) log2 [p(a,b,c) p(c) / (p(a,c) p(b,c))]."""
    ia, ib, ic = [AX[n] for n in a], [AX[n] for n in b], [AX[n] for n in c]
    pabc, pac, pbc, pc = _marg(J, ia + ib + ic), _marg(J, ia + ic), _marg(J, ib + ic), _marg(J, ic)
    na, nb = len(ia), len(ib)
    total = 0.0
    for key, v in pabc.items():
        ka, kb, kc = key[:na], key[na:na + nb], key[na + nb:]
        total += v * math.log2(v * pc[kc] / (pac[ka + kc] * pbc[kb + kc]))
    return total


LOOP_DEFS = {
    "i_x2_y3": (("x2",), ("y3",), ()),
    "i_x2_z": (("x2",), ("z",), ()),
    "i_x2_z_x1": (("x2",), ("z",), ("x1",)),
    "i_yh_y3_x2": (("yh",), ("y3",), ("x2",)),
    "wz_bob": (("yh",), ("x1", "y3"), ("x2",)),
    "wz_eve": (("yh",), ("x1", "z"), ("x2",)),
    "i_x1_yhy3_x2": (("x1",), ("yh", "y3"), ("x2",)),
    "i_x1_y3_x2": (("x1",), ("y3",), ("x2",)),
    "i_x1_z": (("x1",), ("z",), ()),
    "i_x1_z_x2": (("x1",), ("z",), ("x2",)),
    "i_x1x2_z": (("x1", "x2"), ("z",), ()),
}


def loop_quantities(spec, design) -> dict:
    J = loop_joint(spec, design)
    return {name: loop_mi(J, *groups) for name, groups in LOOP_DEFS.items()}


def h2(p):
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def chain_rule_errors(q: InfoQuantities) -> list[float]:
    """Signed residuals that must vanish or stay nonnegative for any real joint law."""
    return [
        q.i_x1x2_z - (q.i_x2_z + q.i_x1_z_x2),
        q.i_x1x2_z - (q.i_x1_z + q.i_x2_z_x1),
    ]


def inequality_margins(q: InfoQuantities) -> list[float]:
    return [
        q.i_x2_z_x1 - q.i_x2_z,
        q.i_x1_z_x2 - q.i_x1_z,
        q.wz_bob - q.i_yh_y3_x2,
        q.i_x1_yhy3_x2 - q.i_x1_y3_x2,
    ]


WORKED_C1A = InfoQuantities(
    i_x2_y3=0.5, i_x2_z=0.3, i_x2_z_x1=0.4, i_yh_y3_x2=0.4, wz_bob=0.6, wz_eve=0.5,
    i_x1_yhy3_x2=0.8, i_x1_y3_x2=0.5, i_x1_z=0.2, i_x1_z_x2=0.3, i_x1x2_z=0.6,
)


def bob_erasure_spec(erasure):
    """Binary input, Bob behind an erasure channel, Eve uniform noise, relay absent."""
    bob = ch.bec(erasure) if erasure > 0 else np.eye(2)
    return ch.wiretap(bob, np.full((2, 2), 0.5))
