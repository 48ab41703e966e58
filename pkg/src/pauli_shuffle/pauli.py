"""Pauli strings, Bloch-vector coefficients and dense-matrix conversions.

Every ``4**k`` array in the package uses the same flattening: a Pauli string
with letters ``l_0 .. l_{k-1}`` (``I, X, Y, Z = 0, 1, 2, 3``) has index
``sum(l_q * 4**q)``, i.e. qubit 0 is the least significant digit.  Dense
matrices use the usual tensor ordering with qubit 0 as the leftmost factor.

Bloch coefficients are stored as ``Tr(sigma_i A) / 2**k`` so that
``A = sum_i coeffs[i] * sigma_i`` and the D measure of a state is simply the
L1 norm of its coefficient vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

LETTERS = "IXYZ"

HERMITIAN_TOL = 1e-12
SNAP_GRID = 2.0**-8
SNAP_TOL = 1e-13
MAX_DENSE_QUBITS = 10
MAX_BLOCH_QUBITS = 8

PAULI_MATRICES = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

# _PRODUCT[a, b] = (phase, c) with sigma_a sigma_b = phase * sigma_c
_PRODUCT_LETTER = np.array(
    [
        [0, 1, 2, 3],
        [1, 0, 3, 2],
        [2, 3, 0, 1],
        [3, 2, 1, 0],
    ]
)
_PRODUCT_PHASE = np.array(
    [
        [1, 1, 1, 1],
        [1, 1, 1j, -1j],
        [1, -1j, 1, 1j],
        [1, 1j, -1j, 1],
    ]
)


class PauliError(ValueError):
    pass


@dataclass(frozen=True)
class PauliString:
    """Signed tensor product of single-qubit Pauli matrices."""

    letters: tuple[int, ...]
    sign: int = 1

    def __post_init__(self):
        letters = tuple(int(l) for l in self.letters)
        if any(l not in (0, 1, 2, 3) for l in letters):
            raise PauliError(f"invalid Pauli letters {self.letters!r}")
        if self.sign not in (1, -1):
            raise PauliError(f"sign must be +1 or -1, got {self.sign!r}")
        object.__setattr__(self, "letters", letters)

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        """Parse labels like ``"XIZ"``, ``"-ZZ"`` or ``"+Y"`` (qubit 0 first)."""
        sign = 1
        if label[:1] in ("+", "-"):
            sign = -1 if label[0] == "-" else 1
            label = label[1:]
        try:
            letters = tuple(LETTERS.index(ch) for ch in label.upper())
        except ValueError:
            raise PauliError(f"invalid Pauli label {label!r}") from None
        if not letters:
            raise PauliError("empty Pauli label")
        return cls(letters, sign)

    @classmethod
    def from_index(cls, index: int, num_qubits: int, sign: int = 1) -> PauliString:
        if not 0 <= index < 4**num_qubits:
            raise PauliError(f"index {index} out of range for {num_qubits} qubits")
        return cls(tuple((index >> (2 * q)) & 3 for q in range(num_qubits)), sign)

    @classmethod
    def identity(cls, num_qubits: int) -> PauliString:
        return cls((0,) * num_qubits)

    @property
    def num_qubits(self) -> int:
        return len(self.letters)

    @property
    def index(self) -> int:
        return letters_to_index(self.letters)

    @property
    def label(self) -> str:
        return ("-" if self.sign < 0 else "") + "".join(LETTERS[l] for l in self.letters)

    def to_matrix(self) -> np.ndarray:
        return self.sign * pauli_matrix(self.index, self.num_qubits)

    def __str__(self) -> str:
        return self.label


def letters_to_index(letters: Sequence[int]) -> int:
    return sum(int(l) << (2 * q) for q, l in enumerate(letters))


def index_letters(index: int, num_qubits: int) -> tuple[int, ...]:
    return tuple((index >> (2 * q)) & 3 for q in range(num_qubits))


def pauli_matrix(index: int, num_qubits: int) -> np.ndarray:
    """Dense ``2**k x 2**k`` matrix of the unsigned Pauli string ``index``."""
    m = np.ones((1, 1), dtype=complex)
    for l in index_letters(index, num_qubits):
        m = np.kron(m, PAULI_MATRICES[l])
    return m


def pauli_product(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Return ``(phase, c)`` with ``a @ b == phase * c`` and ``c.sign == +1``."""
    if a.num_qubits != b.num_qubits:
        raise PauliError(f"qubit count mismatch: {a.num_qubits} vs {b.num_qubits}")
    phase = complex(a.sign * b.sign)
    letters = []
    for la, lb in zip(a.letters, b.letters):
        phase *= _PRODUCT_PHASE[la, lb]
        letters.append(int(_PRODUCT_LETTER[la, lb]))
    phase = complex(round(phase.real), round(phase.imag))
    return phase, PauliString(tuple(letters))


def commutes(a: PauliString, b: PauliString) -> bool:
    anti = sum(1 for la, lb in zip(a.letters, b.letters) if la and lb and la != lb)
    return anti % 2 == 0


def _check_support(support: Sequence[int], width: int) -> None:
    if len(set(support)) != len(support):
        raise PauliError(f"repeated qubit in support {list(support)}")
    for q in support:
        if not 0 <= q < width:
            raise PauliError(f"qubit {q} out of range for {width} qubits")


def restrict(p: PauliString, support: Sequence[int]) -> PauliString:
    """Letters of ``p`` on ``support``, in support order (sign kept)."""
    _check_support(support, p.num_qubits)
    return PauliString(tuple(p.letters[q] for q in support), p.sign)


def embed(local: PauliString, support: Sequence[int], num_qubits: int) -> PauliString:
    """Write ``local`` onto ``support`` of an identity string of width ``num_qubits``."""
    if len(support) != local.num_qubits:
        raise PauliError(
            f"support has {len(support)} qubits but the string has {local.num_qubits}"
        )
    _check_support(support, num_qubits)
    letters = [0] * num_qubits
    for q, l in zip(support, local.letters):
        letters[q] = l
    return PauliString(tuple(letters), local.sign)


@dataclass(frozen=True, eq=False)
class BlochVector:
    """Coefficients ``Tr(sigma_i A) / 2**k`` of an operator on ``k`` qubits."""

    num_qubits: int
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float).reshape(-1)
        if self.num_qubits < 0 or self.num_qubits > MAX_BLOCH_QUBITS:
            raise PauliError(f"Bloch vectors are limited to {MAX_BLOCH_QUBITS} qubits")
        if coeffs.size != 4**self.num_qubits:
            raise PauliError(
                f"expected {4**self.num_qubits} coefficients, got {coeffs.size}"
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_labels(cls, terms: dict[str, float], num_qubits: int | None = None) -> BlochVector:
        """Build from ``{"XX": 0.1, "II": 0.25}``; values are coefficients of sigma."""
        if num_qubits is None:
            num_qubits = PauliString.from_label(next(iter(terms))).num_qubits
        coeffs = np.zeros(4**num_qubits)
        for label, value in terms.items():
            p = PauliString.from_label(label)
            if p.num_qubits != num_qubits:
                raise PauliError(f"label {label!r} does not have {num_qubits} letters")
            coeffs[p.index] += p.sign * value
        return cls(num_qubits, coeffs)

    def __getitem__(self, label: str) -> float:
        p = PauliString.from_label(label)
        return p.sign * float(self.coeffs[p.index])

    def __eq__(self, other):
        if not isinstance(other, BlochVector):
            return NotImplemented
        return self.num_qubits == other.num_qubits and np.array_equal(self.coeffs, other.coeffs)

    def l1_norm(self) -> float:
        return float(np.abs(self.coeffs).sum())

    def purity(self) -> float:
        """``Tr(A^2)`` for Hermitian ``A``."""
        return float(2**self.num_qubits * np.dot(self.coeffs, self.coeffs))


def check_hermitian(matrix: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise PauliError(f"expected a square matrix, got shape {matrix.shape}")
    dim = matrix.shape[0]
    k = dim.bit_length() - 1
    if 2**k != dim:
        raise PauliError(f"matrix dimension {dim} is not a power of two")
    if k > MAX_DENSE_QUBITS:
        raise PauliError(f"dense matrices are limited to {MAX_DENSE_QUBITS} qubits")
    err = np.max(np.abs(matrix - matrix.conj().T)) if dim else 0.0
    if err > tol:
        raise PauliError(f"matrix is not Hermitian (max deviation {err:.3g})")
    return matrix


def pauli_traces(matrix: np.ndarray) -> np.ndarray:
    """``Tr(sigma_i M)`` for every Pauli string, flattened little-endian.

    Works for any square matrix (the result is complex); contracts one qubit
    at a time so the cost is ``O(k 4**k)`` rather than ``O(16**k)``.
    """
    matrix = np.asarray(matrix, dtype=complex)
    k = matrix.shape[0].bit_length() - 1
    t = matrix.reshape((2,) * (2 * k))
    # axes currently: rows r_0..r_{k-1}, cols c_0..c_{k-1}; each contraction
    # removes (r_q, c_q) and appends a Pauli axis l_q at the end.
    for q in range(k):
        rows_left = k - q
        # Tr(sigma M) = sum_{r,c} sigma[c, r] M[r, c]
        t = np.tensordot(t, PAULI_MATRICES, axes=([0, rows_left], [2, 1]))
    # remaining axes l_0..l_{k-1}; little-endian flattening wants l_0 fastest
    t = np.transpose(t, tuple(reversed(range(k)))) if k else t
    return np.asarray(t).reshape(-1)


def bloch_from_dense(matrix: np.ndarray, tol: float = HERMITIAN_TOL) -> BlochVector:
    """Bloch coefficients of a Hermitian matrix."""
    matrix = check_hermitian(matrix, tol)
    k = matrix.shape[0].bit_length() - 1
    if k > MAX_BLOCH_QUBITS:
        raise PauliError(f"Bloch vectors are limited to {MAX_BLOCH_QUBITS} qubits")
    return BlochVector(k, pauli_traces(matrix).real / 2**k)


def dense_from_bloch(v: BlochVector) -> np.ndarray:
    k = v.num_qubits
    # axes l_{k-1}..l_0 after reshape (C order, l_0 fastest)
    t = np.asarray(v.coeffs, dtype=complex).reshape((4,) * k) if k else np.asarray(v.coeffs, dtype=complex)
    if k:
        t = np.transpose(t, tuple(reversed(range(k))))
    # now axes l_0..l_{k-1}; expand each into (r_q, c_q) pairs
    for _ in range(k):
        t = np.tensordot(t, PAULI_MATRICES, axes=([0], [0]))
    # axes: r_0, c_0, r_1, c_1, ...
    if k:
        order = [2 * q for q in range(k)] + [2 * q + 1 for q in range(k)]
        t = np.transpose(t, order)
    return np.asarray(t).reshape(2**k, 2**k)


def snap_dyadic(values: np.ndarray) -> np.ndarray:
    """Round entries lying within ``SNAP_TOL`` of a multiple of ``2**-8`` onto it.

    Removes float dust from tables of Clifford maps and stabilizer states.
    """
    grid = np.round(values / SNAP_GRID) * SNAP_GRID
    return np.where(np.abs(values - grid) < SNAP_TOL, grid, values)


def ket(vector: Sequence[complex]) -> np.ndarray:
    v = np.asarray(vector, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())
