"""Classical shadows of quantum states.

A snapshot is one (frame, outcome) pair; its materialized form is the
inverse-map image of the measured projector and averages to the state.
For random-Pauli frames the materialization factorizes into one 2x2
``tau`` matrix per qubit, so snapshots are indexed by a compact integer
key: per qubit ``2*axis + bit`` in {0..5} with axis order X, Y, Z, and
per register the base-6 digits with qubit 0 most significant.  The key
tables drive all the vectorized estimation paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import ensembles
from .qcore import check_density_matrix, n_qubits_of, tensor
from .ensembles import (AXES, CLIFFORD_ENSEMBLE, PAULI_ENSEMBLE, CliffordFrame,
                        Frame, PauliFrame, measure_computational, to_matrix)

_EIGENSTATES = {}
for _axis in AXES:
    _u = ensembles.AXIS_FRAME[_axis]
    _EIGENSTATES[_axis] = [_u[b, :].conj() for b in range(2)]

# PROJ1[k] is the measured projector for qubit key k; TAU1[k] = 3 PROJ1[k] - I.
# Written as exact dyadic literals (building them from the frame matrices
# would square 1/sqrt(2) and leave 1-ulp noise in every table downstream);
# they equal outer(v, v*) for the prepared vectors in _EIGENSTATES.
PROJ1 = 0.5 * np.array([
    [[1, 1], [1, 1]],
    [[1, -1], [-1, 1]],
    [[1, -1j], [1j, 1]],
    [[1, 1j], [-1j, 1]],
    [[2, 0], [0, 0]],
    [[0, 0], [0, 2]],
], dtype=complex)
TAU1 = 3.0 * PROJ1 - np.eye(2)

_MAX_TABLE_QUBITS = 4


def qubit_key(axis: str, bit: int) -> int:
    return 2 * AXES.index(axis) + (bit & 1)


def register_key(axes: str, bits: str) -> int:
    """Base-6 key of a full register's (axes, outcome bits)."""
    k = 0
    for a, b in zip(axes, bits):
        k = 6 * k + qubit_key(a, int(b))
    return k


def key_axes_bits(key: int, n: int) -> tuple[str, str]:
    digits = []
    for _ in range(n):
        digits.append(key % 6)
        key //= 6
    digits.reverse()
    axes = "".join(AXES[d // 2] for d in digits)
    bits = "".join(str(d % 2) for d in digits)
    return axes, bits


@lru_cache(maxsize=8)
def _flip_y_table(n: int) -> np.ndarray:
    """Key permutation implementing the per-qubit transpose (Y flips its bit)."""
    flip1 = np.array([0, 1, 3, 2, 4, 5])
    table = np.arange(1)
    for _ in range(n):
        table = (6 * table[:, None] + flip1[None, :]).reshape(-1)
    return table


def flip_y_key(key: int | np.ndarray, n: int):
    return _flip_y_table(n)[key]


def _key_matrix_table(base: np.ndarray, n: int) -> np.ndarray:
    out = base
    for _ in range(n - 1):
        out = np.einsum("aij,bkl->abikjl", out, base).reshape(
            out.shape[0] * 6, out.shape[1] * 2, out.shape[1] * 2)
    return out


@lru_cache(maxsize=8)
def snapshot_matrices(n: int) -> np.ndarray:
    """All 6^n materialized Pauli snapshots (tau tensor products), by key."""
    if n > _MAX_TABLE_QUBITS:
        raise ValueError(f"snapshot table too large for n={n}")
    return _key_matrix_table(TAU1, n)


@lru_cache(maxsize=8)
def projector_matrices(n: int) -> np.ndarray:
    """All 6^n measured projectors (eigenprojector tensor products), by key."""
    if n > _MAX_TABLE_QUBITS:
        raise ValueError(f"projector table too large for n={n}")
    return _key_matrix_table(PROJ1, n)


@dataclass(frozen=True)
class StateSnapshot:
    """One measured (frame, outcome) pair."""

    frame: Frame
    outcome: str

    def __post_init__(self):
        if len(self.outcome) != self.frame.n_qubits or \
                any(c not in "01" for c in self.outcome):
            raise ValueError(f"outcome {self.outcome!r} does not match frame")

    @property
    def n_qubits(self) -> int:
        return self.frame.n_qubits

    @property
    def ensemble(self) -> str:
        if isinstance(self.frame, PauliFrame):
            return PAULI_ENSEMBLE
        return CLIFFORD_ENSEMBLE

    @property
    def key(self) -> int:
        """Compact key (Pauli frames only)."""
        if not isinstance(self.frame, PauliFrame):
            raise ValueError("snapshot keys exist only for Pauli frames")
        return register_key(self.frame.axes, self.outcome)


class ShadowEstimate:
    """A collection of state snapshots acquired from one state."""

    def __init__(self, snapshots, n_qubits: int | None = None):
        self.snapshots = tuple(snapshots)
        if not self.snapshots and n_qubits is None:
            raise ValueError("empty shadow needs an explicit qubit count")
        self.n_qubits = n_qubits if n_qubits is not None else self.snapshots[0].n_qubits
        for s in self.snapshots:
            if s.n_qubits != self.n_qubits:
                raise ValueError("snapshots have mismatched qubit counts")
        self._keys = None

    def __len__(self):
        return len(self.snapshots)

    def take(self, m: int) -> "ShadowEstimate":
        """Prefix of the first m snapshots (snapshots are i.i.d.)."""
        return ShadowEstimate(self.snapshots[:m], self.n_qubits)

    @property
    def keys(self) -> np.ndarray:
        if self._keys is None:
            self._keys = np.array([s.key for s in self.snapshots], dtype=np.int64)
        return self._keys

    def key_histogram(self) -> np.ndarray:
        return np.bincount(self.keys, minlength=6**self.n_qubits).astype(float)


def inverse_map_pauli(a: np.ndarray) -> np.ndarray:
    """Single-qubit inverse measurement map 3 A - Tr(A) I."""
    a = np.asarray(a, dtype=complex)
    if a.shape != (2, 2):
        raise ValueError("inverse_map_pauli acts on single-qubit operators")
    return 3.0 * a - np.trace(a) * np.eye(2)


def inverse_map_pauli_factorwise(a: np.ndarray, n: int | None = None) -> np.ndarray:
    """Tensor-factor-wise extension of the single-qubit inverse map.

    Acts as ``inverse_map_pauli`` on every qubit of an arbitrary n-qubit
    operator (not just product operators).
    """
    a = np.asarray(a, dtype=complex)
    if n is None:
        n = n_qubits_of(a)
    t = a.reshape((2,) * (2 * n))
    eye = np.eye(2)
    for q in range(n):
        row, col = q, n + q
        traced = np.trace(t, axis1=row, axis2=col)
        t = 3.0 * t - np.multiply.outer(traced, eye).reshape(
            t.shape[:row] + t.shape[row + 1:col] + t.shape[col + 1:] + (2, 2)
        ).transpose(_restore_axes(n, q))
    return t.reshape(2**n, 2**n)


def _restore_axes(n: int, q: int) -> tuple:
    """Axis permutation that reinserts a traced qubit pair at (q, n+q)."""
    rest = [ax for ax in range(2 * n) if ax not in (q, n + q)]
    perm = [0] * (2 * n)
    for pos, ax in enumerate(rest):
        perm[ax] = pos
    perm[q] = 2 * n - 2
    perm[n + q] = 2 * n - 1
    return tuple(perm)


def inverse_map_clifford(a: np.ndarray) -> np.ndarray:
    """Global inverse measurement map (2^n + 1) A - Tr(A) I."""
    a = np.asarray(a, dtype=complex)
    d = a.shape[0]
    return (d + 1.0) * a - np.trace(a) * np.eye(d)


def materialize_snapshot(s: StateSnapshot) -> np.ndarray:
    """Dense inverse-map image of the snapshot's measured projector."""
    if isinstance(s.frame, PauliFrame):
        return tensor(*(TAU1[qubit_key(a, int(b))]
                        for a, b in zip(s.frame.axes, s.outcome)))
    u = to_matrix(s.frame)
    row = u[int(s.outcome, 2), :]
    return inverse_map_clifford(np.outer(row.conj(), row))


def acquire_state_snapshot(rho: np.ndarray, ensemble: str,
                           rng: np.random.Generator,
                           _validate: bool = True) -> StateSnapshot:
    """Rotate by a random frame, measure in the logical basis."""
    if _validate:
        check_density_matrix(rho)
    n = n_qubits_of(rho)
    frame = ensembles.sample_frame(n, ensemble, rng)
    u = to_matrix(frame)
    outcome = measure_computational(u @ rho @ u.conj().T, rng)
    return StateSnapshot(frame, outcome)


def exact_pauli_snapshot_distribution(rho: np.ndarray) -> np.ndarray:
    """Exact probability of each snapshot key under random-Pauli acquisition."""
    n = n_qubits_of(rho)
    probs = np.real(np.einsum("kij,ji->k", projector_matrices(n), rho))
    return np.clip(probs, 0.0, None) / 3**n


def _snapshots_from_keys(keys: np.ndarray, n: int):
    out = []
    for k in keys:
        axes, bits = key_axes_bits(int(k), n)
        out.append(StateSnapshot(PauliFrame(axes), bits))
    return out


def acquire_shadow(rho: np.ndarray, m: int, ensemble: str,
                   rng: np.random.Generator) -> ShadowEstimate:
    """Acquire m i.i.d. snapshots of a state.

    The Pauli ensemble is sampled from the exact joint distribution of
    (frame, outcome), which is finite; the Clifford ensemble simulates
    the rotate-and-measure protocol per snapshot.
    """
    check_density_matrix(rho)
    n = n_qubits_of(rho)
    if ensemble == PAULI_ENSEMBLE and n <= _MAX_TABLE_QUBITS:
        p = exact_pauli_snapshot_distribution(rho)
        p = p / p.sum()
        keys = rng.choice(p.size, size=m, p=p)
        return ShadowEstimate(_snapshots_from_keys(keys, n), n)
    snaps = [acquire_state_snapshot(rho, ensemble, rng, _validate=False)
             for _ in range(m)]
    return ShadowEstimate(snaps, n)


def reconstruct(est: ShadowEstimate) -> np.ndarray:
    """Mean of the materialized snapshots (Hermitian, unit trace)."""
    if not est.snapshots:
        raise ValueError("cannot reconstruct from an empty shadow")
    n = est.n_qubits
    if all(isinstance(s.frame, PauliFrame) for s in est.snapshots) \
            and n <= _MAX_TABLE_QUBITS:
        hist = est.key_histogram()
        return np.einsum("k,kij->ij", hist, snapshot_matrices(n)) / len(est)
    acc = np.zeros((2**n, 2**n), dtype=complex)
    for s in est.snapshots:
        acc += materialize_snapshot(s)
    return acc / len(est)


def median_of_means(values: np.ndarray, n_groups: int) -> float:
    """Median of the means of n_groups equal consecutive chunks.

    Trailing values that do not fill a complete chunk are dropped; an
    even group count takes the average of the two central means.
    """
    values = np.asarray(values, dtype=float)
    if n_groups < 1:
        raise ValueError("need at least one group")
    size = values.size // n_groups
    if size < 1:
        raise ValueError(f"{values.size} values cannot fill {n_groups} groups")
    chunks = values[:size * n_groups].reshape(n_groups, size)
    return float(np.median(chunks.mean(axis=1)))


def single_shot_expectations(est: ShadowEstimate, obs: np.ndarray) -> np.ndarray:
    """Tr(snapshot * obs) per snapshot."""
    obs = np.asarray(obs, dtype=complex)
    n = est.n_qubits
    if all(isinstance(s.frame, PauliFrame) for s in est.snapshots) \
            and n <= _MAX_TABLE_QUBITS:
        per_key = np.real(np.einsum("kij,ji->k", snapshot_matrices(n), obs))
        return per_key[est.keys]
    return np.array([np.real(np.trace(materialize_snapshot(s) @ obs))
                     for s in est.snapshots])


def estimate_observable(est: ShadowEstimate, obs: np.ndarray,
                        n_groups: int = 1) -> float:
    """Median-of-means estimate of Tr(rho * obs) from a shadow."""
    obs = np.asarray(obs, dtype=complex)
    if obs.shape != (2**est.n_qubits,) * 2:
        raise ValueError("observable dimension does not match the shadow")
    return median_of_means(single_shot_expectations(est, obs), n_groups)
