"""Dense linear-algebra primitives for small multi-qubit systems.

Conventions used throughout the package:

* qubit 0 is the most significant bit of a basis index, so the basis
  state labelled by the bit string ``"10"`` has index 2;
* operators are dense complex matrices of shape ``(2**n, 2**n)``;
* a bipartite operator on 2n qubits splits into register A (the first
  n qubits, most significant) and register B (the last n qubits).
"""

from __future__ import annotations

from dataclasses import InitVar, dataclass, field
from functools import reduce

import numpy as np

# Tolerances: structural invariants (positivity, trace preservation) are
# checked to 1e-9, algebraic identities to 1e-10.
ATOL_STRUCT = 1e-9
ATOL_ALGEBRA = 1e-10

ID2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": ID2, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


def n_qubits_of(a: np.ndarray) -> int:
    """Number of qubits of a square operator; raises on non-power-of-2 shape."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    d = a.shape[0]
    n = d.bit_length() - 1
    if d <= 0 or 2**n != d:
        raise ValueError(f"dimension {d} is not a power of two")
    return n


def basis_index(bits: str) -> int:
    """Index of the computational-basis state for a bit string (qubit 0 first)."""
    if not bits or any(c not in "01" for c in bits):
        raise ValueError(f"invalid bit string {bits!r}")
    return int(bits, 2)


def index_bits(i: int, n: int) -> str:
    """Bit string of length n for basis index i (qubit 0 most significant)."""
    if not 0 <= i < 2**n:
        raise ValueError(f"index {i} out of range for {n} qubits")
    return format(i, f"0{n}b")


def basis_state(bits: str) -> np.ndarray:
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[basis_index(bits)] = 1.0
    return v


def basis_projector(bits: str) -> np.ndarray:
    v = basis_state(bits)
    return np.outer(v, v.conj())


def tensor(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product; the first factor acts on the most significant qubits."""
    if not ops:
        raise ValueError("tensor() needs at least one operator")
    return reduce(np.kron, [np.asarray(o, dtype=complex) for o in ops])


def _trace_register(a: np.ndarray, dim_a: int, dim_b: int, register: str) -> np.ndarray:
    """Trace out one register of a bipartite operator with given block dims."""
    a = np.asarray(a)
    if a.shape != (dim_a * dim_b, dim_a * dim_b):
        raise ValueError(f"shape {a.shape} does not match split {dim_a}x{dim_b}")
    t = a.reshape(dim_a, dim_b, dim_a, dim_b)
    if register == "A":
        return np.einsum("aiaj->ij", t)
    if register == "B":
        return np.einsum("iaja->ij", t)
    raise ValueError(f"register must be 'A' or 'B', got {register!r}")


def partial_trace(a: np.ndarray, register: str) -> np.ndarray:
    """Trace over the named register of an operator on 2n qubits.

    Parameters
    ----------
    a : ndarray
        Operator on an even number of qubits, split evenly into
        registers A (most significant half) and B.
    register : str
        ``"A"`` or ``"B"``; the register that gets traced out.
    """
    n2 = n_qubits_of(a)
    if n2 % 2 != 0:
        raise ValueError("partial_trace needs an even number of qubits")
    d = 2 ** (n2 // 2)
    return _trace_register(a, d, d, register)


def operator_norm(a: np.ndarray) -> float:
    """Largest singular value."""
    return float(np.linalg.norm(np.asarray(a, dtype=complex), 2))


def is_hermitian(a: np.ndarray, atol: float = ATOL_ALGEBRA) -> bool:
    a = np.asarray(a)
    return bool(np.allclose(a, a.conj().T, atol=atol, rtol=0))


def check_density_matrix(rho: np.ndarray, atol_herm: float = ATOL_ALGEBRA,
                         atol_eig: float = ATOL_STRUCT) -> None:
    """Validate hermiticity, unit trace and positivity; raises ValueError."""
    rho = np.asarray(rho, dtype=complex)
    n_qubits_of(rho)
    if not is_hermitian(rho, atol_herm):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-10 or abs(np.trace(rho).imag) > 1e-10:
        raise ValueError(f"density matrix has trace {np.trace(rho)}, expected 1")
    lo = float(np.linalg.eigvalsh(rho).min())
    if lo < -atol_eig:
        raise ValueError(f"density matrix has negative eigenvalue {lo}")


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Pauli operators, e.g. ``"XIZ"``."""

    letters: str

    def __post_init__(self):
        if not self.letters or any(c not in "IXYZ" for c in self.letters):
            raise ValueError(f"invalid Pauli string {self.letters!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @property
    def support(self) -> int:
        """Number of non-identity sites."""
        return sum(1 for c in self.letters if c != "I")

    @property
    def matrix(self) -> np.ndarray:
        return tensor(*(PAULI[c] for c in self.letters))

    @staticmethod
    def all_nontrivial(n: int):
        """All 4^n - 1 non-identity Pauli strings on n qubits."""
        letters = "IXYZ"
        out = []
        for i in range(4**n):
            s = ""
            for _ in range(n):
                s = letters[i % 4] + s
                i //= 4
            if s != "I" * n:
                out.append(PauliString(s))
        return out


@dataclass(frozen=True, eq=False)
class Channel:
    """Completely positive trace-preserving map given by Kraus operators."""

    kraus: tuple
    n_qubits: int = field(init=False)
    validate: InitVar[bool] = True

    def __post_init__(self, validate):
        kraus = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        object.__setattr__(self, "kraus", kraus)
        if not kraus:
            raise ValueError("channel needs at least one Kraus operator")
        n = n_qubits_of(kraus[0])
        object.__setattr__(self, "n_qubits", n)
        d = 2**n
        for k in kraus:
            if k.shape != (d, d):
                raise ValueError("Kraus operators have mismatched shapes")
        if validate:
            s = sum(k.conj().T @ k for k in kraus)
            if not np.allclose(s, np.eye(d), atol=ATOL_STRUCT, rtol=0):
                raise ValueError("Kraus operators do not sum to the identity")

    @property
    def dim(self) -> int:
        return 2**self.n_qubits


def apply_channel(ch: Channel, rho: np.ndarray) -> np.ndarray:
    """Apply a channel to an operator (need not be a state)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (ch.dim, ch.dim):
        raise ValueError(f"operator shape {rho.shape} does not match channel on "
                         f"{ch.n_qubits} qubits")
    return sum(k @ rho @ k.conj().T for k in ch.kraus)


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    """Choi matrix of a channel on the doubled register A (input) x B (output).

    The unnormalized form has trace 2^n; the normalized form (a state)
    has trace 1.  The ``normalized`` flag records which one is stored.
    """

    matrix: np.ndarray
    n_qubits: int
    normalized: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        d2 = 4**self.n_qubits
        if m.shape != (d2, d2):
            raise ValueError(f"Choi matrix shape {m.shape} does not match "
                             f"{self.n_qubits} qubits")

    @property
    def dim(self) -> int:
        """Dimension of the single-register system."""
        return 2**self.n_qubits

    def unnormalized(self) -> np.ndarray:
        return self.matrix * self.dim if self.normalized else self.matrix

    def check(self, atol: float = ATOL_STRUCT) -> None:
        """Validate hermiticity, positivity, trace and the reduced-state identity.

        Meant for exact Choi matrices; finite-sample estimates will
        generally fail the positivity check.
        """
        eta = self.unnormalized()
        if not is_hermitian(eta, atol):
            raise ValueError("Choi matrix is not Hermitian")
        expected = float(self.dim)
        if abs(np.trace(eta).real - expected) > atol:
            raise ValueError(f"Choi trace {np.trace(eta).real}, expected {expected}")
        lo = float(np.linalg.eigvalsh(eta).min())
        if lo < -atol:
            raise ValueError(f"Choi matrix has negative eigenvalue {lo}")
        red = _trace_register(eta, self.dim, self.dim, "B")
        if not np.allclose(red, np.eye(self.dim), atol=atol, rtol=0):
            raise ValueError("partial trace over the output register is not I")


def maximally_entangled_projector(n: int) -> np.ndarray:
    """Unnormalized projector sum_{m,n} |m><n| (x) |m><n| on 2n qubits (trace 2^n)."""
    d = 2**n
    v = np.zeros(d * d, dtype=complex)
    for m in range(d):
        v[m * d + m] = 1.0
    return np.outer(v, v.conj())


def choi_of_channel(ch: Channel) -> ChoiMatrix:
    """Unnormalized Choi matrix sum_{m,n} |m><n| (x) E(|m><n|)."""
    d = ch.dim
    eta = np.zeros((d * d, d * d), dtype=complex)
    for k in ch.kraus:
        v = k.T.reshape(-1)  # v[(m, j)] = k[j, m]
        eta += np.outer(v, v.conj())
    return ChoiMatrix(eta, ch.n_qubits, normalized=False)


def channel_of_choi(choi: ChoiMatrix, rho: np.ndarray) -> np.ndarray:
    """Recover the channel output Tr_A[(rho^T (x) I) eta] from a Choi matrix."""
    d = choi.dim
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d, d):
        raise ValueError(f"input shape {rho.shape} does not match Choi on "
                         f"{choi.n_qubits} qubits")
    tr = float(np.trace(choi.matrix).real)
    expected = 1.0 if choi.normalized else float(d)
    if abs(tr - expected) > 1e-6:
        raise ValueError(f"Choi trace {tr} inconsistent with normalized="
                         f"{choi.normalized} (expected {expected})")
    eta = choi.unnormalized()
    return _trace_register((np.kron(rho.T, np.eye(d))) @ eta, d, d, "A")


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    d = 2**n
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (g + g.conj().T) / 2


def random_density_matrix(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random state from the Hilbert-Schmidt ensemble (normalized G G^dag)."""
    d = 2**n
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
