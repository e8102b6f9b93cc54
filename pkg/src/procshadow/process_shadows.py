"""Classical shadows of quantum channels.

One acquisition round works on both sides of the channel: draw a
uniform input bit string, prepare the corresponding eigenstate of a
random input frame, send it through the channel, rotate by a random
output frame and measure.  The record of the four draws materializes to
a Choi-state snapshot

    zeta = transpose(snapshot_in) (x) snapshot_out

whose expectation is the *normalized* (trace-1) Choi state of the
channel; functionals of the unnormalized Choi matrix carry an explicit
2^n factor, applied inside the estimators.  The transpose acts per
tensor factor; on a Pauli tau matrix it just flips the outcome bit of a
Y axis, which is how the vectorized paths implement it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ensembles, state_shadows
from .ensembles import (CLIFFORD_ENSEMBLE, PAULI_ENSEMBLE, CliffordFrame, Frame,
                        PauliFrame, measure_computational, prepared_state_vector,
                        to_matrix)
from .qcore import Channel, ChoiMatrix, PauliString, apply_channel, n_qubits_of, tensor
from .state_shadows import (StateSnapshot, _MAX_TABLE_QUBITS, flip_y_key,
                            key_axes_bits, materialize_snapshot, median_of_means,
                            projector_matrices, register_key, snapshot_matrices)


def _ensemble_of(frame: Frame) -> str:
    return PAULI_ENSEMBLE if isinstance(frame, PauliFrame) else CLIFFORD_ENSEMBLE


@dataclass(frozen=True)
class ShadowRecord:
    """One acquisition round: input preparation and output measurement."""

    b_in: str
    u_in: Frame
    u_out: Frame
    b_out: str

    def __post_init__(self):
        n = self.u_in.n_qubits
        if self.u_out.n_qubits != n:
            raise ValueError("input and output frames act on different sizes")
        for bits in (self.b_in, self.b_out):
            if len(bits) != n or any(c not in "01" for c in bits):
                raise ValueError(f"bit string {bits!r} does not match {n} qubits")

    @property
    def n_qubits(self) -> int:
        return self.u_in.n_qubits

    @property
    def ensemble_in(self) -> str:
        return _ensemble_of(self.u_in)

    @property
    def ensemble_out(self) -> str:
        return _ensemble_of(self.u_out)

    @property
    def in_snapshot(self) -> StateSnapshot:
        return StateSnapshot(self.u_in, self.b_in)

    @property
    def out_snapshot(self) -> StateSnapshot:
        return StateSnapshot(self.u_out, self.b_out)


class ProcessShadow:
    """A collection of i.i.d. acquisition records for one channel."""

    def __init__(self, records, n_qubits: int | None = None):
        self.records = tuple(records)
        if not self.records and n_qubits is None:
            raise ValueError("empty shadow needs an explicit qubit count")
        self.n_qubits = n_qubits if n_qubits is not None else self.records[0].n_qubits
        for r in self.records:
            if r.n_qubits != self.n_qubits:
                raise ValueError("records have mismatched qubit counts")
        self._keys = None

    def __len__(self):
        return len(self.records)

    def take(self, m: int) -> "ProcessShadow":
        """Prefix of the first m records (records are i.i.d.)."""
        return ProcessShadow(self.records[:m], self.n_qubits)

    @property
    def all_pauli(self) -> bool:
        return all(isinstance(r.u_in, PauliFrame) and isinstance(r.u_out, PauliFrame)
                   for r in self.records)

    @property
    def keys(self) -> tuple[np.ndarray, np.ndarray]:
        """Raw-label (input, output) key arrays; Pauli/Pauli records only."""
        if self._keys is None:
            kin = np.empty(len(self.records), dtype=np.int64)
            kout = np.empty(len(self.records), dtype=np.int64)
            for i, r in enumerate(self.records):
                if not (isinstance(r.u_in, PauliFrame)
                        and isinstance(r.u_out, PauliFrame)):
                    raise ValueError("record keys exist only for Pauli frames")
                kin[i] = register_key(r.u_in.axes, r.b_in)
                kout[i] = register_key(r.u_out.axes, r.b_out)
            self._keys = (kin, kout)
        return self._keys

    def key_histogram(self) -> np.ndarray:
        """(6^n, 6^n) array of raw (input, output) key counts."""
        kin, kout = self.keys
        size = 6**self.n_qubits
        flat = np.bincount(kin * size + kout, minlength=size * size)
        return flat.reshape(size, size).astype(float)


def acquire_record(ch: Channel, ensemble_in: str, ensemble_out: str,
                   rng: np.random.Generator) -> ShadowRecord:
    """One acquisition round against a channel."""
    n = ch.n_qubits
    b_in = format(int(rng.integers(0, ch.dim)), f"0{n}b")
    u_in = ensembles.sample_frame(n, ensemble_in, rng)
    psi = prepared_state_vector(u_in, b_in)
    rho_out = apply_channel(ch, np.outer(psi, psi.conj()))
    u_out = ensembles.sample_frame(n, ensemble_out, rng)
    u = to_matrix(u_out)
    b_out = measure_computational(u @ rho_out @ u.conj().T, rng)
    return ShadowRecord(b_in, u_in, u_out, b_out)


def exact_pauli_record_distribution(ch: Channel) -> np.ndarray:
    """Joint probability of raw (input, output) keys for Pauli/Pauli rounds.

    Entry [kin, kout] multiplies the uniform preparation weight 1/6^n,
    the uniform output-frame weight 1/3^n and the Born probability of
    the output bits, so the table sums to one.
    """
    n = ch.n_qubits
    proj = projector_matrices(n)
    born = np.empty((6**n, 6**n))
    for kin in range(6**n):
        rho_out = apply_channel(ch, proj[kin])
        born[kin] = np.clip(np.real(np.einsum("kij,ji->k", proj, rho_out)), 0, None)
    return born / (18.0**n)


def _records_from_keys(kin: np.ndarray, kout: np.ndarray, n: int):
    out = []
    for a, b in zip(kin, kout):
        axes_in, b_in = key_axes_bits(int(a), n)
        axes_out, b_out = key_axes_bits(int(b), n)
        out.append(ShadowRecord(b_in, PauliFrame(axes_in), PauliFrame(axes_out), b_out))
    return out


def acquire_process_shadow(ch: Channel, m: int, ensemble_in: str, ensemble_out: str,
                           rng: np.random.Generator) -> ProcessShadow:
    """Acquire m i.i.d. records.

    Pauli/Pauli rounds have a finite joint distribution over (frame,
    outcome) labels, so they are sampled from the exact table in one
    vectorized draw; any other ensemble combination simulates the
    protocol record by record.
    """
    n = ch.n_qubits
    if (ensemble_in == PAULI_ENSEMBLE and ensemble_out == PAULI_ENSEMBLE
            and n <= _MAX_TABLE_QUBITS):
        p = exact_pauli_record_distribution(ch).reshape(-1)
        p = p / p.sum()
        flat = rng.choice(p.size, size=m, p=p)
        kin, kout = np.divmod(flat, 6**n)
        return ProcessShadow(_records_from_keys(kin, kout, n), n)
    return ProcessShadow([acquire_record(ch, ensemble_in, ensemble_out, rng)
                          for _ in range(m)], n)


def materialize_choi_shadow(r: ShadowRecord) -> np.ndarray:
    """Dense trace-1 Choi snapshot of one record."""
    a_side = materialize_snapshot(r.in_snapshot).T
    b_side = materialize_snapshot(r.out_snapshot)
    return np.kron(a_side, b_side)


def choi_mean_from_histogram(hist: np.ndarray, n: int) -> np.ndarray:
    """Weighted mean of Choi snapshots from a raw (kin, kout) histogram.

    The A side of each snapshot is the transpose of the input tau
    product, i.e. the tau product of the Y-flipped input key.
    """
    total = hist.sum()
    snaps = snapshot_matrices(n)
    flip = flip_y_key(np.arange(6**n), n)
    d = 2**n
    out = np.zeros((d * d, d * d), dtype=complex)
    for kin in range(6**n):
        row = hist[kin]
        if not row.any():
            continue
        b_mean = np.einsum("k,kij->ij", row, snaps)
        out += np.kron(snaps[flip[kin]], b_mean)
    return out / total


def reconstruct_choi(ps: ProcessShadow) -> ChoiMatrix:
    """Sample mean of the Choi snapshots, as a normalized Choi matrix."""
    if not ps.records:
        raise ValueError("cannot reconstruct from an empty shadow")
    n = ps.n_qubits
    if ps.all_pauli and n <= _MAX_TABLE_QUBITS:
        mean = choi_mean_from_histogram(ps.key_histogram(), n)
    else:
        d = 2**n
        mean = np.zeros((d * d, d * d), dtype=complex)
        for r in ps.records:
            mean += materialize_choi_shadow(r)
        mean = mean / len(ps)
    return ChoiMatrix(mean, n, normalized=True)


def estimate_output_state(ps: ProcessShadow, rho: np.ndarray) -> np.ndarray:
    """Estimate E(rho) for a known input state rho.

    Contracts the input register of each Choi snapshot with rho and
    averages the weighted output factors:
    mean of 2^n Tr[snapshot_in rho] snapshot_out.
    """
    n = ps.n_qubits
    d = 2**n
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d, d):
        raise ValueError("input state does not match the record size")
    if not ps.records:
        raise ValueError("cannot estimate from an empty shadow")
    if ps.all_pauli and n <= _MAX_TABLE_QUBITS:
        snaps = snapshot_matrices(n)
        vin = np.real(np.einsum("kij,ji->k", snaps, rho))
        coeffs = ps.key_histogram().T @ vin
        return d * np.einsum("k,kij->ij", coeffs, snaps) / len(ps)
    out = np.zeros((d, d), dtype=complex)
    for r in ps.records:
        w = np.trace(materialize_snapshot(r.in_snapshot) @ rho)
        out += np.real(w) * materialize_snapshot(r.out_snapshot)
    return d * out / len(ps)


def single_shot_functional_values(ps: ProcessShadow, rho: np.ndarray,
                                  obs: np.ndarray) -> np.ndarray:
    """Per-record estimates of Tr[E(rho) obs].

    Each record contributes 2^n Tr[snapshot_in rho] Tr[snapshot_out obs],
    the contraction of its Choi snapshot with 2^n (rho^T (x) obs).
    """
    n = ps.n_qubits
    rho = np.asarray(rho, dtype=complex)
    obs = np.asarray(obs, dtype=complex)
    d = 2**n
    if rho.shape != (d, d) or obs.shape != (d, d):
        raise ValueError("functional arguments do not match the record size")
    if ps.all_pauli and n <= _MAX_TABLE_QUBITS:
        snaps = snapshot_matrices(n)
        vin = np.real(np.einsum("kij,ji->k", snaps, rho))
        vout = np.real(np.einsum("kij,ji->k", snaps, obs))
        kin, kout = ps.keys
        return d * vin[kin] * vout[kout]
    vals = np.empty(len(ps))
    for i, r in enumerate(ps.records):
        vin = np.trace(materialize_snapshot(r.in_snapshot) @ rho)
        vout = np.trace(materialize_snapshot(r.out_snapshot) @ obs)
        vals[i] = d * np.real(vin * vout)
    return vals


def estimate_channel_functional(ps: ProcessShadow, rho: np.ndarray,
                                obs: np.ndarray, n_groups: int = 1) -> float:
    """Median-of-means estimate of Tr[E(rho) obs] from a process shadow."""
    return median_of_means(single_shot_functional_values(ps, rho, obs), n_groups)


@dataclass(frozen=True)
class BinIndependenceReport:
    """Outcome of the input-bin independence diagnostic."""

    n_sampled: int
    max_normalization_dev: float
    n_pauli_checked: int
    max_pauli_dev: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return (self.max_normalization_dev <= self.tolerance
                and self.max_pauli_dev <= self.tolerance)


def verify_bin_independence(ch: Channel, samples: int, rng: np.random.Generator,
                            ensemble_in: str = PAULI_ENSEMBLE,
                            tolerance: float = 1e-9) -> BinIndependenceReport:
    """Check that acquisition statistics cannot depend on the input bin.

    Two facts are verified against the dense Choi matrix: the trace of
    the Choi state against any prepared input projector equals one for
    sampled (frame, bits) pairs, and every nontrivial input-register
    Pauli string has vanishing expectation.  Both fail for Kraus sets
    that are not trace preserving.
    """
    n = ch.n_qubits
    from .qcore import choi_of_channel, _trace_register
    eta = choi_of_channel(ch).matrix
    d = ch.dim
    max_norm = 0.0
    for _ in range(samples):
        bits = format(int(rng.integers(0, d)), f"0{n}b")
        frame = ensembles.sample_frame(n, ensemble_in, rng)
        psi = prepared_state_vector(frame, bits)
        proj_t = np.outer(psi, psi.conj()).T
        val = np.real(np.trace(np.kron(proj_t, np.eye(d)) @ eta))
        max_norm = max(max_norm, abs(val - 1.0))
    eta_a = _trace_register(eta, d, d, "B")
    max_pauli = 0.0
    strings = PauliString.all_nontrivial(n)
    for p in strings:
        val = abs(np.trace(p.matrix @ eta_a))
        max_pauli = max(max_pauli, float(val))
    return BinIndependenceReport(samples, float(max_norm), len(strings),
                                 max_pauli, tolerance)
