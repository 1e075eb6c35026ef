"""Finite-blocklength Monte Carlo of the block-Markov compress-forward scheme.

Per block ``b`` there is a binned transmitter codebook ``x1[w * Mt + wt]``,
a relay codebook ``x2[l]`` and, for each relay word, a satellite compression
codebook ``yh[l][k]`` whose WZ bin is ``k mod L``. The relay word of block 1
is index 0 and public. Bob decodes block ``b`` from ``y3`` of blocks ``b``
and ``b + 1`` only.

Typicality is tested on conditional types: with the conditioning sequences
fixed, every conditional empirical frequency of the tested sequences must be
within ``eps_typ`` of the law, and zero-probability pairs may not occur.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, asdict
from typing import NamedTuple, Optional

import numpy as np

from . import kernels
from ._parallel import pmap
from .errors import ConfigurationError, ValidationError
from .prob import ChannelSpec, InputDesign, validate_channel, validate_design

MAX_CODEBOOK_EXP = 20
MAX_BLOCK_WORDS = 1 << 22
MAX_MICRO_Y2 = 1 << 20
MAX_MICRO_STATES = 1 << 24

_TX, _RELAY, _COMP, _TRIAL, _EQUIV = range(5)


def rate_exponent(n: int, rate: float) -> int:
    """``ceil(n * rate)`` robust to products like 10 * 0.3 = 3.0000000000000004."""
    return max(0, math.ceil(n * rate - 1e-9))


@dataclass(frozen=True)
class SimConfig:
    n: int
    blocks: int
    r1: float
    r_tilde1: float = 0.0
    r2: float = 0.0
    r_hat: float = 0.0
    eps_typ: float = 0.15
    trials: int = 100
    seed: int = 0
    equivocation: str = "off"
    eq_samples: int = 200
    codebooks: str = "per_trial"

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError("n must be >= 1")
        if self.blocks < 2:
            raise ConfigurationError("need at least 2 blocks")
        for name in ("r1", "r_tilde1", "r2", "r_hat", "eps_typ"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigurationError(f"{name} must be a nonnegative number, got {v}")
        if self.r_hat < self.r2:
            raise ConfigurationError("r_hat must be >= r2")
        if self.trials < 0 or self.eq_samples < 1:
            raise ConfigurationError("trials must be >= 0 and eq_samples >= 1")
        if self.equivocation not in ("off", "exact"):
            raise ConfigurationError("equivocation mode must be 'off' or 'exact'")
        if self.codebooks not in ("per_trial", "fixed"):
            raise ConfigurationError("codebooks must be 'per_trial' or 'fixed'")
        e = self.exponents
        if max(e.values()) > MAX_CODEBOOK_EXP or e["w"] + e["wt"] > MAX_CODEBOOK_EXP:
            raise ConfigurationError(f"codebook exponents {e} exceed 2^{MAX_CODEBOOK_EXP} words")
        if (1 << e["l"]) * (1 << e["k"]) > MAX_BLOCK_WORDS:
            raise ConfigurationError("relay x compression codebook words exceed the per-block limit")

    @property
    def exponents(self) -> dict[str, int]:
        return {"w": rate_exponent(self.n, self.r1), "wt": rate_exponent(self.n, self.r_tilde1),
                "l": rate_exponent(self.n, self.r2), "k": rate_exponent(self.n, self.r_hat)}

    @property
    def quantized_rates(self) -> dict[str, float]:
        e = self.exponents
        return {"r1": e["w"] / self.n, "r_tilde1": e["wt"] / self.n, "r2": e["l"] / self.n,
                "r_hat": e["k"] / self.n}


@dataclass(frozen=True)
class ChannelModel:
    """Per-letter laws derived once from (spec, design)."""

    sizes: dict
    p_x1: np.ndarray
    p_x2: np.ndarray
    q: np.ndarray
    out_cdf: np.ndarray  # [x1, x2, flat(y2, y3, z)]
    yh_given_x2: np.ndarray  # [x2, yh]
    relay_cond: np.ndarray  # rows x2 * |Y2| + y2, cols yh
    relay_cond_by_y2: np.ndarray  # rows y2 * |X2| + x2
    bob_cond: np.ndarray  # rows x1 * |X2| + x2, cols yh * |Y3| + y3
    y3_cond: np.ndarray  # rows x1 * |X2| + x2, cols y3
    y2z: np.ndarray  # [x1, x2, y2, z]
    z_given: np.ndarray  # [x1, x2, z]

    @classmethod
    def build(cls, spec: ChannelSpec, design: InputDesign) -> "ChannelModel":
        bad = validate_channel(spec) + validate_design(design, spec)
        if bad:
            raise ValidationError("invalid channel or design", bad)
        law = spec.law / spec.law.sum(axis=(2, 3, 4), keepdims=True)
        p1 = design.p_x1 / design.p_x1.sum()
        p2 = design.p_x2 / design.p_x2.sum()
        q = design.q / design.q.sum(axis=2, keepdims=True)
        s = dict(spec.sizes, yh=design.comp_size)
        nx1, nx2, ny2, ny3, nz, nyh = (s[k] for k in ("x1", "x2", "y2", "y3", "z", "yh"))

        flat = law.reshape(nx1, nx2, -1)
        cdf = np.cumsum(flat, axis=2)
        cdf[..., -1] = 1.0
        p_y2_x2 = np.einsum("a,abcde->bc", p1, law)
        yh_x2 = np.einsum("bc,bcf->bf", p_y2_x2, q)
        y2y3 = law.sum(axis=4)
        bob = np.einsum("abcd,bcf->abfd", y2y3, q).reshape(nx1 * nx2, nyh * ny3)
        return cls(
            sizes=s, p_x1=p1, p_x2=p2, q=q, out_cdf=cdf, yh_given_x2=yh_x2,
            relay_cond=q.reshape(nx2 * ny2, nyh),
            relay_cond_by_y2=q.transpose(1, 0, 2).reshape(ny2 * nx2, nyh),
            bob_cond=bob, y3_cond=law.sum(axis=(2, 4)).reshape(nx1 * nx2, ny3),
            y2z=law.sum(axis=3), z_given=law.sum(axis=(2, 3)),
        )


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed & (2**64 - 1), *key])))


def _sample_words(rng, count, n, probs):
    """``count`` i.i.d. words; ``probs`` is [alphabet] or per-position [n, alphabet]."""
    probs = np.asarray(probs, dtype=np.float64)
    cdf = np.cumsum(probs, axis=-1)
    cdf[..., -1] = np.inf
    u = rng.random((count, n))
    if probs.ndim == 1:
        return np.searchsorted(cdf, u, side="right").astype(np.int64)
    return (u[..., None] >= cdf[None, :, :]).sum(axis=-1).astype(np.int64)


@dataclass(frozen=True)
class BlockCodebooks:
    """Codebooks for blocks ``0 .. B-1`` (block ``b`` here is block ``b + 1`` of the scheme)."""

    n: int
    exponents: dict
    x1: list  # per block [Mw * Mt, n]
    x2: list  # per block [L, n]
    yh: list  # per block [L, K, n]

    @property
    def n_bins(self) -> int:
        return 1 << self.exponents["l"]

    @property
    def bin_size(self) -> int:
        return 1 << (self.exponents["k"] - self.exponents["l"])

    def bin_of(self, k):
        return k % self.n_bins

    @property
    def n_tx(self) -> tuple[int, int]:
        return 1 << self.exponents["w"], 1 << self.exponents["wt"]


def build_codebooks(spec: ChannelSpec, design: InputDesign, cfg: SimConfig,
                    model: ChannelModel | None = None, key: int = 0) -> BlockCodebooks:
    """Independent random codebooks per block.

    Each codebook is drawn from its own counter-based stream keyed by
    ``(seed, key, codebook, block[, relay index])``; word ``i`` occupies
    positions ``i*n .. (i+1)*n`` of that stream.
    """
    model = model or ChannelModel.build(spec, design)
    e = cfg.exponents
    if e["k"] < e["l"]:
        raise ConfigurationError("compression codebook smaller than the number of WZ bins")
    n = cfg.n
    x1s, x2s, yhs = [], [], []
    for b in range(cfg.blocks):
        x1s.append(_sample_words(_stream(cfg.seed, key, _TX, b), 1 << (e["w"] + e["wt"]), n, model.p_x1))
        x2 = _sample_words(_stream(cfg.seed, key, _RELAY, b), 1 << e["l"], n, model.p_x2)
        x2s.append(x2)
        yhs.append(np.stack([
            _sample_words(_stream(cfg.seed, key, _COMP, b, l), 1 << e["k"], n, model.yh_given_x2[x2[l]])
            for l in range(x2.shape[0])
        ]))
    return BlockCodebooks(n, e, x1s, x2s, yhs)


class RelayStep(NamedTuple):
    k: Optional[int]
    next_index: int

    @property
    def failed(self) -> bool:
        return self.k is None


def relay_encode(codebooks: BlockCodebooks, model: ChannelModel, block: int, l: int, y2,
                 eps_typ: float) -> RelayStep:
    """Smallest compression index jointly typical with ``(x2[l], y2)``.

    On failure the relay falls back to index 0, i.e. WZ bin 0.
    """
    y2 = np.asarray(y2, dtype=np.int64)
    x2 = codebooks.x2[block][l]
    given = x2 * model.sizes["y2"] + y2
    dev = kernels.cond_typicality(np.zeros((1, codebooks.n), np.int64), codebooks.yh[block][l], given,
                                  np.zeros(codebooks.n, np.int64), model.relay_cond.shape[0], 1,
                                  model.relay_cond)[0]
    hits = np.flatnonzero(dev <= eps_typ)
    if hits.size == 0:
        return RelayStep(None, 0)
    k = int(hits[0])
    return RelayStep(k, int(codebooks.bin_of(k)))


def _channel(rng, model, x1, x2):
    s = model.sizes
    u = rng.random(x1.shape[0])
    cdf = model.out_cdf[x1, x2]
    o = (u[:, None] >= cdf).sum(axis=1)
    o = np.minimum(o, cdf.shape[1] - 1)
    y2, y3, z = np.unravel_index(o, (s["y2"], s["y3"], s["z"]))
    return y2.astype(np.int64), y3.astype(np.int64), z.astype(np.int64)


class WindowDecision(NamedTuple):
    codeword: Optional[int]  # index w * Mt + wt, None on failure
    next_relay: int
    candidates: int


def decode_window(codebooks: BlockCodebooks, model: ChannelModel, block: int, l_b: int,
                  y3_b, y3_next, eps_typ: float) -> WindowDecision:
    """Bob's sliding-window decision for ``block`` from ``y3`` of this and the next block.

    A codeword qualifies if some compression word of satellite ``l_b`` makes
    ``(x1, x2, yh, y3_b)`` typical and the relay word of that word's bin is
    typical with ``y3_next`` together with some transmitter codeword of the
    next block. Exactly one qualifying codeword is a decision.
    """
    s = model.sizes
    n = codebooks.n
    nx2, ny3 = s["x2"], s["y3"]
    x1 = codebooks.x1[block]
    x2 = codebooks.x2[block][l_b]
    dev1 = kernels.cond_typicality(x1, codebooks.yh[block][l_b], x2, np.asarray(y3_b, np.int64),
                                   nx2, ny3, model.bob_cond)
    ok1 = dev1 <= eps_typ

    nb = block + 1
    last = nb == len(codebooks.x1) - 1
    x1_next = codebooks.x1[nb][:1] if last else codebooks.x1[nb]
    zeros = np.zeros((1, n), np.int64)
    score2 = np.empty(codebooks.n_bins)
    y3n = np.asarray(y3_next, np.int64)
    for lp in range(codebooks.n_bins):
        d = kernels.cond_typicality(x1_next, zeros, codebooks.x2[nb][lp], y3n, nx2, ny3, model.y3_cond)
        score2[lp] = d.min()
    ok2 = score2 <= eps_typ

    bins = codebooks.bin_of(np.arange(ok1.shape[1]))
    good = ok1 & ok2[bins][None, :]
    valid = np.flatnonzero(good.any(axis=1))
    if valid.size == 1:
        c = int(valid[0])
        cand_bins = np.unique(bins[good[c]])
        nxt = int(cand_bins[np.argmin(score2[cand_bins])])
        return WindowDecision(c, nxt, 1)
    return WindowDecision(None, int(np.argmin(score2)), int(valid.size))


@dataclass
class TrialOutcome:
    bob_errors: np.ndarray  # [B-1] bool
    relay_failures: np.ndarray  # [B-1] bool


def _transmit(cfg, model, cb, rng):
    """One pass over all blocks; returns sent codewords, relay path and outputs."""
    B = cfg.blocks
    mw, mt = cb.n_tx
    sent, relay_idx, fails, y3s, zs, y2s = [], [0], [], [], [], []
    for b in range(B):
        c = int(rng.integers(mw * mt)) if b < B - 1 else 0
        sent.append(c)
        l = relay_idx[b]
        y2, y3, z = _channel(rng, model, cb.x1[b][c], cb.x2[b][l])
        y2s.append(y2)
        y3s.append(y3)
        zs.append(z)
        if b < B - 1:
            step = relay_encode(cb, model, b, l, y2, cfg.eps_typ)
            fails.append(step.failed)
            relay_idx.append(step.next_index)
    return sent, relay_idx, fails, y2s, y3s, zs


def _run_trial(cfg, model, cb, trial):
    if cb is None:
        cb = build_codebooks(None, None, cfg, model, key=trial + 1)
    rng = _stream(cfg.seed, _TRIAL, trial)
    sent, _, fails, _, y3s, _ = _transmit(cfg, model, cb, rng)
    errors = []
    l_hat = 0
    for b in range(cfg.blocks - 1):
        dec = decode_window(cb, model, b, l_hat, y3s[b], y3s[b + 1], cfg.eps_typ)
        errors.append(dec.codeword != sent[b])
        l_hat = dec.next_relay
    return TrialOutcome(np.array(errors, bool), np.array(fails, bool))


@dataclass
class SimResult:
    bob_block_error_rate: float
    relay_failure_rate: float
    equivocation: Optional[float]
    equivocation_stderr: Optional[float]
    per_block: list
    elapsed: float
    config: SimConfig
    quantized_rates: dict = field(default_factory=dict)

    def summary(self) -> dict:
        """Deterministic fields only (no timing)."""
        out = {"bob_block_error_rate": self.bob_block_error_rate,
               "relay_failure_rate": self.relay_failure_rate,
               "equivocation": self.equivocation, "equivocation_stderr": self.equivocation_stderr}
        out.update({f"quantized_{k}": v for k, v in self.quantized_rates.items()})
        out.update({f"config_{k}": v for k, v in asdict(self.config).items()})
        return out


def simulate_blocks(spec: ChannelSpec, design: InputDesign, cfg: SimConfig) -> SimResult:
    """Monte Carlo error rates over ``cfg.trials`` independent transmissions."""
    t0 = time.perf_counter()
    model = ChannelModel.build(spec, design)
    fixed = build_codebooks(spec, design, cfg, model)
    shared = fixed if cfg.codebooks == "fixed" else None
    outcomes = pmap(lambda t: _run_trial(cfg, model, shared, t), range(cfg.trials))
    nb = cfg.blocks - 1
    if outcomes:
        errs = np.stack([o.bob_errors for o in outcomes])
        fails = np.stack([o.relay_failures for o in outcomes])
    else:
        errs = fails = np.zeros((0, nb), bool)
    per_block = [{"block": b + 1,
                  "bob_error_rate": float(errs[:, b].mean()) if errs.size else 0.0,
                  "relay_failure_rate": float(fails[:, b].mean()) if fails.size else 0.0}
                 for b in range(nb)]
    eq = eq_se = None
    if cfg.equivocation == "exact":
        eq, eq_se = exact_equivocation(spec, design, cfg, model=model, codebooks=fixed)
    return SimResult(
        bob_block_error_rate=float(errs.mean()) if errs.size else 0.0,
        relay_failure_rate=float(fails.mean()) if fails.size else 0.0,
        equivocation=eq, equivocation_stderr=eq_se, per_block=per_block,
        elapsed=time.perf_counter() - t0, config=cfg, quantized_rates=cfg.quantized_rates,
    )


def _check_micro(cfg, model):
    ny2 = model.sizes["y2"]
    y2_paths = ny2 ** (cfg.n * (cfg.blocks - 1))
    if y2_paths > MAX_MICRO_Y2:
        raise ConfigurationError(
            f"exact equivocation enumerates {y2_paths} relay observation paths (limit {MAX_MICRO_Y2}); "
            "use a smaller n or fewer blocks")
    e = cfg.exponents
    states = (1 << ((e["w"] + e["wt"]) * (cfg.blocks - 1))) * y2_paths
    if states > MAX_MICRO_STATES:
        raise ConfigurationError(
            f"exact equivocation needs {states} message x observation states (limit {MAX_MICRO_STATES}); "
            "use a smaller n, fewer blocks or lower rates")


def _relay_tables(cb, model, cfg):
    """``next[b][l, s]``: relay index sent in block b+1 after observing y2 sequence ``s``."""
    n, ny2, nx2 = cfg.n, model.sizes["y2"], model.sizes["x2"]
    seqs = np.array(np.unravel_index(np.arange(ny2 ** n), (ny2,) * n)).T.astype(np.int64)
    seqs = seqs.reshape(-1, n)
    tables = []
    for b in range(cfg.blocks - 1):
        L = cb.x2[b].shape[0]
        nxt = np.zeros((L, seqs.shape[0]), np.int64)
        for l in range(L):
            dev = kernels.cond_typicality(seqs, cb.yh[b][l], cb.x2[b][l], np.zeros(n, np.int64), nx2, 1,
                                          model.relay_cond_by_y2)
            ok = dev <= cfg.eps_typ
            first = np.where(ok.any(axis=1), ok.argmax(axis=1), 0)
            nxt[l] = cb.bin_of(first)
        tables.append(nxt)
    return seqs, tables


def _posterior_entropy(cb, model, cfg, seqs, tables, zs):
    """Exact H(W^{B-1} | z^B = zs) in bits for the given codebooks."""
    B = cfg.blocks
    mw, mt = cb.n_tx
    alpha = np.zeros((1, cb.x2[0].shape[0]))  # [w-prefix, relay index]; block 1 uses index 0
    alpha[0, 0] = 1.0
    for b in range(B - 1):
        x1, x2, z = cb.x1[b], cb.x2[b], zs[b]
        L = x2.shape[0]
        L_next = cb.x2[b + 1].shape[0]
        trans = np.zeros((L, mw, L_next))
        for l in range(L):
            if not alpha[:, l].any():
                continue
            # P(y2 seq, z | x1 word, x2 word) for every codeword and y2 sequence
            lik = np.ones((x1.shape[0], seqs.shape[0]))
            for t in range(cfg.n):
                lik *= model.y2z[x1[:, t][:, None], x2[l, t], seqs[:, t][None, :], z[t]]
            onehot = np.zeros((seqs.shape[0], L_next))
            onehot[np.arange(seqs.shape[0]), tables[b][l]] = 1.0
            per_word = lik @ onehot  # [Mw*Mt, L_next]
            trans[l] = per_word.reshape(mw, mt, L_next).sum(axis=1)
        new = np.einsum("pl,lwm->pwm", alpha, trans).reshape(-1, L_next)
        total = new.sum()
        alpha = new / total if total > 0 else new
    last = cb.x1[B - 1][0]
    zl = np.ones(cb.x2[B - 1].shape[0])
    for t in range(cfg.n):
        zl *= model.z_given[last[t], cb.x2[B - 1][:, t], zs[B - 1][t]]
    post = alpha @ zl
    post = post / post.sum()
    nz = post[post > 0]
    return float(-np.sum(nz * np.log2(nz)))


def exact_equivocation(spec: ChannelSpec, design: InputDesign, cfg: SimConfig, *,
                       model: ChannelModel | None = None,
                       codebooks: BlockCodebooks | None = None) -> tuple[float, float]:
    """Monte Carlo mean of the exact posterior entropy of the messages given Eve's output.

    Returns ``(equivocation_bits, standard_error)`` over ``cfg.eq_samples`` draws.
    """
    model = model or ChannelModel.build(spec, design)
    _check_micro(cfg, model)
    cb = codebooks or build_codebooks(spec, design, cfg, model)
    seqs, tables = _relay_tables(cb, model, cfg)

    def one(s):
        rng = _stream(cfg.seed, _EQUIV, s)
        *_, zs = _transmit(cfg, model, cb, rng)
        return _posterior_entropy(cb, model, cfg, seqs, tables, zs)

    hs = np.array(pmap(one, range(cfg.eq_samples)))
    se = float(hs.std(ddof=1) / math.sqrt(hs.size)) if hs.size > 1 else 0.0
    return float(hs.mean()), se
