"""Estimators built on process shadows: transition probabilities,
multitime correlation functions, purity, and a unitarity verdict.

All of these are linear or quadratic functionals of the Choi state and
inherit the shadow guarantees; the quadratic ones (purity, unitarity)
use distinct-pair U-statistics so the single-copy variance does not
bias the estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensembles import PauliFrame
from .process_shadows import (ProcessShadow, estimate_channel_functional,
                              materialize_choi_shadow,
                              single_shot_functional_values)
from .qcore import PauliString, basis_projector, n_qubits_of
from .shadow_algebra import _register_trace_table
from .state_shadows import (ShadowEstimate, _MAX_TABLE_QUBITS, median_of_means,
                            snapshot_matrices)


# ---------------------------------------------------------------------------
# Linear functionals.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransitionEstimate:
    raw: float
    clipped: float


def transition_probability(ps: ProcessShadow, initial: str, final: str,
                           n_groups: int = 1) -> TransitionEstimate:
    """Estimate P(initial -> final) for computational basis strings.

    The probability is the channel functional with input projector
    |initial><initial| and observable |final><final|.  The raw shadow
    estimate can leave [0, 1]; both it and its clipped value are kept.
    """
    n = ps.n_qubits
    if len(initial) != n or len(final) != n:
        raise ValueError("bit strings must match the record size")
    raw = estimate_channel_functional(ps, basis_projector(initial),
                                      basis_projector(final), n_groups)
    return TransitionEstimate(raw=raw, clipped=float(np.clip(raw, 0.0, 1.0)))


@dataclass(frozen=True)
class CorrelatorSpec:
    """Two-time correlator Tr[E(rho_in . op_early) op_late].

    ``input_state`` may be any matrix on the register (sub-normalized
    states and the bare identity are both meaningful here).
    """

    input_state: np.ndarray
    op_early: PauliString
    op_late: PauliString

    def __post_init__(self):
        n = n_qubits_of(self.input_state)
        if self.op_early.n_qubits != n or self.op_late.n_qubits != n:
            raise ValueError("operators must act on the input register")

    @property
    def n_qubits(self) -> int:
        return self.op_early.n_qubits


def _single_site(op: PauliString):
    """(site, letter) when exactly one site is non-identity, else None."""
    sites = [(q, c) for q, c in enumerate(op.letters) if c != "I"]
    return sites[0] if len(sites) == 1 else None


def multitime_correlator_exact_input(ps: ProcessShadow, spec: CorrelatorSpec,
                                     n_groups: int = 1) -> float:
    """Correlator estimate when the input matrix is known exactly.

    Generic path: per-record functional values with the (generally
    non-Hermitian) early matrix rho_in . op_early inserted on the input
    register.  When every output frame is a Pauli product and the late
    operator touches a single site, the output factor reduces to
    +-3 (frame axis matches the letter) or 0 (it does not), so only the
    matching records contribute.
    """
    if spec.n_qubits != ps.n_qubits:
        raise ValueError("correlator register does not match the records")
    early = spec.input_state @ spec.op_early.matrix
    site = _single_site(spec.op_late)
    n = ps.n_qubits
    if site is not None and ps.all_pauli and n <= _MAX_TABLE_QUBITS:
        q, letter = site
        snaps = snapshot_matrices(n)
        vin = np.real(np.einsum("kij,ji->k", snaps, early.astype(complex)))
        kin, kout = ps.keys
        digit = (kout // 6 ** (n - 1 - q)) % 6
        axis, bit = digit // 2, digit % 2
        vout = np.where(axis == "XYZ".index(letter), 3.0 * (1 - 2 * bit), 0.0)
        values = 2**n * vin[kin] * vout
        return median_of_means(values, n_groups)
    values = single_shot_functional_values(ps, early, spec.op_late.matrix)
    return median_of_means(values, n_groups)


def multitime_correlator_shadow_input(ps: ProcessShadow, ss: ShadowEstimate,
                                      op_early: PauliString,
                                      op_late: PauliString,
                                      n_groups: int = 1) -> float:
    """Correlator estimate when the input state is itself a shadow.

    Each (record, snapshot) pair contributes
    2^n Tr[snap_in . snap_state . op_early] Tr[snap_out . op_late]; the
    double sum is contracted through key histograms.  Median-of-means
    pairs the j-th chunk of records with the j-th chunk of snapshots so
    the group means stay independent.
    """
    n = ps.n_qubits
    if ss.n_qubits != n or op_early.n_qubits != n or op_late.n_qubits != n:
        raise ValueError("operand register sizes disagree")
    if not ps.all_pauli:
        raise ValueError("shadow-input correlator requires Pauli records")
    if not all(isinstance(s.frame, PauliFrame) for s in ss.snapshots):
        raise ValueError("shadow-input correlator requires Pauli snapshots")
    snaps = snapshot_matrices(n)
    a = op_early.matrix.astype(complex)
    cross = np.real(np.einsum("rij,sjk,ki->rs", snaps, snaps, a))
    vout = np.real(np.einsum("kij,ji->k", snaps, op_late.matrix.astype(complex)))
    m, k = len(ps), len(ss.snapshots)
    if n_groups < 1 or m // n_groups < 1 or k // n_groups < 1:
        raise ValueError("group count does not fit the sample sizes")
    gm, gk = m // n_groups, k // n_groups
    kin, kout = ps.keys
    skeys = ss.keys
    means = []
    for g in range(n_groups):
        ri, ro = kin[g * gm:(g + 1) * gm], kout[g * gm:(g + 1) * gm]
        sk = skeys[g * gk:(g + 1) * gk]
        hs = np.bincount(sk, minlength=6**n).astype(float)
        per_record = cross[ri] @ hs * vout[ro]
        means.append(2**n * per_record.sum() / (gm * gk))
    return float(np.median(means))


# ---------------------------------------------------------------------------
# Quadratic functionals: purity and unitarity.
# ---------------------------------------------------------------------------

MAX_PURITY_QUBITS = 3


def _pair_product_sum(hist_a: np.ndarray, hist_b: np.ndarray,
                      n: int) -> float:
    """Sum over record pairs (one from each histogram) of Tr[zeta zeta'].

    The Choi-snapshot overlap factorizes into input-trace times
    output-trace, so the double sum collapses to a sandwich of the
    per-register trace table.
    """
    w = _register_trace_table(n)
    return float(np.sum((hist_a.T @ w @ hist_b) * w))


def _purity_from_records(kin, kout, n: int) -> float:
    """Distinct-pair U-statistic for Tr[eta_norm^2] from raw key arrays."""
    m = kin.size
    if m < 2:
        raise ValueError("purity needs at least two records")
    hist = np.bincount(kin * 6**n + kout,
                       minlength=36**n).reshape(6**n, 6**n).astype(float)
    w = _register_trace_table(n)
    full = _pair_product_sum(hist, hist, n)
    diag = float(np.sum(w[kin, kin] * w[kout, kout]))
    return (full - diag) / (m * (m - 1))


def purity_estimate(ps: ProcessShadow, n_groups: int = 1, *,
                    allow_large: bool = False,
                    pair_subsample: int = 20000,
                    rng: np.random.Generator | None = None) -> float:
    """Estimate the unnormalized Choi purity Tr[eta^2].

    Uses the U-statistic over distinct record pairs, which is unbiased
    for Tr[eta_norm^2], then rescales by 4^n.  Sample demands grow like
    4^n, so registers above MAX_PURITY_QUBITS are refused unless
    ``allow_large`` is set.  Non-Pauli record sets fall back to a
    random pair subsample of size ``pair_subsample`` per group.
    """
    n = ps.n_qubits
    if n > MAX_PURITY_QUBITS and not allow_large:
        raise ValueError(
            f"purity on {n} qubits needs allow_large=True (cost grows as 4^n)")
    m = len(ps)
    if n_groups < 1 or m // n_groups < 2:
        raise ValueError("each group needs at least two records")
    size = m // n_groups
    means = []
    if ps.all_pauli and n <= _MAX_TABLE_QUBITS:
        kin, kout = ps.keys
        for g in range(n_groups):
            sl = slice(g * size, (g + 1) * size)
            means.append(_purity_from_records(kin[sl], kout[sl], n))
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        for g in range(n_groups):
            recs = ps.records[g * size:(g + 1) * size]
            js = rng.integers(0, size, pair_subsample)
            ks = (js + rng.integers(1, size, pair_subsample)) % size
            vals = np.empty(pair_subsample)
            zetas = {}

            def zeta(i):
                if i not in zetas:
                    zetas[i] = materialize_choi_shadow(recs[i])
                return zetas[i]

            for t, (j, k) in enumerate(zip(js, ks)):
                vals[t] = np.real(np.trace(zeta(j) @ zeta(k)))
            means.append(float(vals.mean()))
    return 4**n * float(np.median(means))


@dataclass(frozen=True)
class UnitarityVerdict:
    """Decision on whether the measured channel is unitary."""

    verdict: str                      # "unitary" | "nonunitary" | "inconclusive"
    purity: float
    interval: tuple[float, float]
    threshold: float
    confidence: float


def unitarity_verdict(ps: ProcessShadow, *, threshold_fraction: float = 0.95,
                      confidence: float = 0.95, n_bootstrap: int = 200,
                      allow_large: bool = False,
                      rng: np.random.Generator | None = None) -> UnitarityVerdict:
    """Test Tr[eta^2] = d^2 (unitary channel) against a bootstrap interval.

    The verdict is "unitary" when the whole interval sits above
    d^2 * threshold_fraction, "nonunitary" when it sits below, and
    "inconclusive" when the interval straddles the threshold.
    """
    n = ps.n_qubits
    if not (ps.all_pauli and n <= _MAX_TABLE_QUBITS):
        raise ValueError("unitarity verdict requires Pauli records")
    if n > MAX_PURITY_QUBITS and not allow_large:
        raise ValueError(
            f"unitarity on {n} qubits needs allow_large=True (cost grows as 4^n)")
    rng = rng if rng is not None else np.random.default_rng(0)
    m = len(ps)
    if m < 2:
        raise ValueError("need at least two records")
    kin, kout = ps.keys
    point = 4**n * _purity_from_records(kin, kout, n)
    boots = np.empty(n_bootstrap)
    for b in range(n_bootstrap):
        idx = rng.integers(0, m, m)
        boots[b] = 4**n * _purity_from_records(kin[idx], kout[idx], n)
    alpha = 100.0 * (1.0 - confidence) / 2.0
    lo, hi = np.percentile(boots, [alpha, 100.0 - alpha])
    threshold = threshold_fraction * 4**n
    if lo > threshold:
        verdict = "unitary"
    elif hi < threshold:
        verdict = "nonunitary"
    else:
        verdict = "inconclusive"
    return UnitarityVerdict(verdict=verdict, purity=point,
                            interval=(float(lo), float(hi)),
                            threshold=threshold, confidence=confidence)
