"""Signed-weight algebra on shadows: shadow-on-shadow application,
channel composition, and the statistics of the resulting weights.

Contracting two shadow representations replaces one register of a Choi
snapshot by a snapshot of the other object.  Per qubit this produces a
trace of two tau matrices, which takes one of the values {5, -4, 1/2};
the conventional *pair weight* is half the trace of the product with
the first factor transposed, giving the five-case table

    5/2   same non-Y axis, same bit
    -2    same non-Y axis, different bit
    -2    Y with Y, same bit
    5/2   Y with Y, different bit
    1/4   different axes.

Because the input register of a Choi snapshot is stored transposed, the
transpose built into the pair-weight table and the stored one cancel:
the contraction weight for raw record labels is the plain (untransposed)
trace of tau products.  The overall scale is fixed by requiring that the
exact expectation of each weighted sum reproduces its target (the
channel output state, or the composed Choi state); it works out to 2^n
per contracted register on top of the per-qubit traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ensembles import PauliFrame
from .process_shadows import ProcessShadow
from .state_shadows import (ShadowEstimate, StateSnapshot, TAU1, flip_y_key,
                            qubit_key, snapshot_matrices)

#: the five weight values, with multiplicity, seen by a uniformly random
#: pair of single-qubit snapshot labels
WEIGHT_SUPPORT = (5.0 / 2.0, 1.0 / 4.0, 1.0 / 4.0, 1.0 / 4.0, 1.0 / 4.0, -2.0)


def pair_weight(mu: str, b: int, mu_p: str, b_p: int) -> float:
    """Contraction weight of two single-qubit snapshot labels.

    Equals half the trace of transpose(tau[mu, b]) times tau[mu_p, b_p].
    """
    if mu not in "XYZ" or mu_p not in "XYZ":
        raise ValueError(f"invalid axes {mu!r}, {mu_p!r}")
    b, b_p = int(b) & 1, int(b_p) & 1
    if mu != mu_p:
        return 0.25
    same_bit = b == b_p
    if mu == "Y":
        return -2.0 if same_bit else 2.5
    return 2.5 if same_bit else -2.0


@lru_cache(maxsize=4)
def _pair_weight_table() -> np.ndarray:
    t = np.empty((6, 6))
    for a in range(6):
        for b in range(6):
            t[a, b] = pair_weight("XYZ"[a // 2], a % 2, "XYZ"[b // 2], b % 2)
    return t


@lru_cache(maxsize=4)
def _trace_table() -> np.ndarray:
    """Tr[tau_a tau_b] for all single-qubit key pairs (no transpose)."""
    return np.real(np.einsum("aij,bji->ab", TAU1, TAU1))


@lru_cache(maxsize=8)
def _register_trace_table(n: int) -> np.ndarray:
    t = _trace_table()
    out = t
    for _ in range(n - 1):
        out = np.kron(out, t)
    return out


class WeightedSnapshotSum:
    """Lazy signed-weighted collection of snapshot products.

    Terms are never stored; ``materialize`` reduces them through compact
    key histograms, and ``iter_terms`` streams (weight, factor) pairs
    for small inputs.  The weighted *mean* of the terms estimates the
    target operator: the channel output state for ``apply`` mode, the
    normalized Choi matrix of the composition for ``compose`` mode.
    """

    def __init__(self, mode: str, n_qubits: int, hist_left: np.ndarray,
                 hist_right: np.ndarray, sources=None):
        if mode not in ("apply", "compose"):
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        self.n_qubits = n_qubits  # register size of the contracted objects
        self._left = np.asarray(hist_left, dtype=float)
        self._right = np.asarray(hist_right, dtype=float)
        self._sources = sources

    @property
    def factor_qubits(self) -> int:
        """Qubit count of each term's operator factor."""
        return self.n_qubits if self.mode == "apply" else 2 * self.n_qubits

    @property
    def n_terms(self) -> float:
        return float(self._left.sum() * self._right.sum())

    def iter_terms(self):
        """Stream (weight, factor matrix) pairs; needs the source objects."""
        if self._sources is None:
            raise ValueError("term iteration needs the sampled source objects")
        d = 2**self.n_qubits
        w = _register_trace_table(self.n_qubits)
        snaps = snapshot_matrices(self.n_qubits)
        flip = flip_y_key(np.arange(6**self.n_qubits), self.n_qubits)
        if self.mode == "apply":
            ps, ss = self._sources
            kin, kout = ps.keys
            skeys = ss.keys
            for a, b in zip(kin, kout):
                for s in skeys:
                    yield d * w[a, s], snaps[b]
        else:
            psx, psy = self._sources
            xin, xout = psx.keys
            yin, yout = psy.keys
            for a, b in zip(xin, xout):
                for c, e in zip(yin, yout):
                    yield d * w[b, c], np.kron(snaps[flip[a]], snaps[e])

    def materialize(self) -> np.ndarray:
        """Weighted mean of all terms, as a dense matrix."""
        n = self.n_qubits
        d = 2**n
        w = _register_trace_table(n)
        snaps = snapshot_matrices(n)
        if self.mode == "apply":
            hist_r, hist_s = self._left, self._right
            coeffs = hist_r.T @ (w @ hist_s)
            scale = d / (hist_r.sum() * hist_s.sum())
            return scale * np.einsum("k,kij->ij", coeffs, snaps)
        hx, hy = self._left, self._right
        s = hx @ w @ hy
        flip = flip_y_key(np.arange(6**n), n)
        out = np.zeros((d * d, d * d), dtype=complex)
        for ka in range(6**n):
            row = s[ka]
            if not row.any():
                continue
            out += np.kron(snaps[flip[ka]], np.einsum("k,kij->ij", row, snaps))
        return out * d / (hx.sum() * hy.sum())


def _require_pauli_process(ps: ProcessShadow):
    if not ps.all_pauli:
        raise ValueError("shadow algebra requires Pauli-ensemble records")


def apply_process_to_state_shadow(ps: ProcessShadow,
                                  ss: ShadowEstimate) -> WeightedSnapshotSum:
    """Estimate the channel output state from shadows of channel and input.

    One term per (record, snapshot) pair: the record's input register is
    contracted against the state snapshot, leaving the output-register
    tau product with a signed weight.
    """
    _require_pauli_process(ps)
    if not all(isinstance(s.frame, PauliFrame) for s in ss.snapshots):
        raise ValueError("shadow algebra requires Pauli-ensemble snapshots")
    if ps.n_qubits != ss.n_qubits:
        raise ValueError("qubit counts differ")
    return WeightedSnapshotSum("apply", ps.n_qubits, ps.key_histogram(),
                               ss.key_histogram(), sources=(ps, ss))


def compose_process_shadows(ps_x: ProcessShadow,
                            ps_y: ProcessShadow) -> WeightedSnapshotSum:
    """Estimate the Choi state of Y after X from the two process shadows.

    X's output register is contracted against Y's input register; each
    term keeps X's (transposed) input factor tensored with Y's output
    factor, so the weighted mean estimates the normalized Choi matrix
    of the composition.
    """
    _require_pauli_process(ps_x)
    _require_pauli_process(ps_y)
    if ps_x.n_qubits != ps_y.n_qubits:
        raise ValueError("qubit counts differ")
    return WeightedSnapshotSum("compose", ps_x.n_qubits, ps_x.key_histogram(),
                               ps_y.key_histogram(), sources=(ps_x, ps_y))


def exact_apply_sum(record_dist: np.ndarray, snapshot_dist: np.ndarray,
                    n: int) -> WeightedSnapshotSum:
    """Apply-mode sum over exact label distributions instead of samples."""
    return WeightedSnapshotSum("apply", n, record_dist, snapshot_dist)


def exact_compose_sum(dist_x: np.ndarray, dist_y: np.ndarray,
                      n: int) -> WeightedSnapshotSum:
    """Compose-mode sum over exact label distributions instead of samples."""
    return WeightedSnapshotSum("compose", n, dist_x, dist_y)


# ---------------------------------------------------------------------------
# Weight statistics.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SignStatistics:
    """Monte-Carlo and closed-form statistics of n-site weight products."""

    n_sites: int
    samples: int
    p_negative: float
    p_positive: float
    mean_log_abs: float
    std_log_abs: float
    p_negative_exact: float
    p_positive_exact: float
    mean_log_abs_exact: float
    std_log_abs_lognormal: float


def negative_weight_probability(n: int) -> float:
    """Probability that a product of n uniform pair weights is negative."""
    return 0.5 * (1.0 - (2.0 / 3.0) ** n)


def big_weight_pmf(n: int, k: int) -> float:
    """Probability that exactly k of n weight factors are large (|w| > 1)."""
    if not 0 <= k <= n:
        return 0.0
    return math.comb(n, k) * (1.0 / 3.0) ** k * (2.0 / 3.0) ** (n - k)


def weight_sign_statistics(n: int, samples: int,
                           rng: np.random.Generator) -> SignStatistics:
    """Sample products of n i.i.d. pair weights and summarize sign/magnitude."""
    if n < 1:
        raise ValueError("need at least one site")
    support = np.array(WEIGHT_SUPPORT)
    draws = support[rng.integers(0, support.size, size=(samples, n))]
    products = draws.prod(axis=1)
    logs = np.log(np.abs(products))
    p_neg = float(np.mean(products < 0))
    mean_exact = n * ((2.0 / 3.0) * math.log(0.25) + math.log(5.0) / 6.0)
    return SignStatistics(
        n_sites=n,
        samples=samples,
        p_negative=p_neg,
        p_positive=1.0 - p_neg,
        mean_log_abs=float(logs.mean()),
        std_log_abs=float(logs.std()),
        p_negative_exact=negative_weight_probability(n),
        p_positive_exact=0.5 * (1.0 + (2.0 / 3.0) ** n),
        mean_log_abs_exact=mean_exact,
        std_log_abs_lognormal=math.sqrt(n / 6.0) * math.log(5.0),
    )
