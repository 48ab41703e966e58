"""Measured observables and the per-trajectory quantities the sampler needs.

Every observable except a bare Pauli string is held as a Bloch vector on its
support (at most 8 qubits) and acts as the identity elsewhere.  That single
representation yields the forward evaluator ``Tr(E sigma_f)``, the backward
starting distribution, ``D(E)`` and ``max_f |Tr(E sigma_f)|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .pauli import (
    LETTERS,
    MAX_BLOCH_QUBITS,
    BlochVector,
    PauliError,
    PauliString,
    bloch_from_dense,
    check_hermitian,
    dense_from_bloch,
    snap_dyadic,
)
from .states import named_density

KINDS = ("product", "basis_projector", "pauli", "dense_local")


def _factor_bloch(factor) -> np.ndarray:
    """Single-qubit Bloch coefficients of a product-observable factor."""
    if isinstance(factor, str):
        if factor.upper() in LETTERS and len(factor) == 1:
            coeffs = np.zeros(4)
            coeffs[LETTERS.index(factor.upper())] = 1.0
            return coeffs
        return snap_dyadic(bloch_from_dense(named_density(factor)).coeffs)
    return bloch_from_dense(np.asarray(factor, dtype=complex)).coeffs


@dataclass(frozen=True, eq=False)
class Observable:
    kind: str
    qubits: tuple[int, ...]
    local: BlochVector | None = None
    pauli: PauliString | None = None

    @classmethod
    def basis_projector(cls, qubits: Sequence[int], bits: Sequence[int]) -> Observable:
        """``|bits><bits|`` on ``qubits``."""
        if len(qubits) != len(bits):
            raise PauliError("basis_projector needs one bit per qubit")
        if any(b not in (0, 1) for b in bits):
            raise PauliError(f"bits must be 0 or 1, got {list(bits)}")
        return cls._from_factors("basis_projector", qubits, ["zero" if b == 0 else "one" for b in bits])

    @classmethod
    def product(cls, factors: Mapping[int, object]) -> Observable:
        """Tensor product of single-qubit factors: state names (projectors),
        Pauli letters or 2x2 Hermitian matrices."""
        qubits = sorted(int(q) for q in factors)
        return cls._from_factors("product", qubits, [factors[q] for q in qubits])

    @classmethod
    def _from_factors(cls, kind, qubits, factors) -> Observable:
        qubits = tuple(int(q) for q in qubits)
        if len(qubits) > MAX_BLOCH_QUBITS:
            raise PauliError(f"observable support limited to {MAX_BLOCH_QUBITS} qubits")
        coeffs = np.ones(1)
        for f in factors:
            coeffs = np.kron(_factor_bloch(f), coeffs)
        return cls(kind, qubits, BlochVector(len(qubits), coeffs))

    @classmethod
    def from_pauli(cls, label: str | PauliString) -> Observable:
        p = PauliString.from_label(label) if isinstance(label, str) else label
        return cls("pauli", tuple(range(p.num_qubits)), pauli=p)

    @classmethod
    def dense_local(cls, qubits: Sequence[int], matrix) -> Observable:
        qubits = tuple(int(q) for q in qubits)
        matrix = check_hermitian(np.asarray(matrix, dtype=complex))
        if matrix.shape[0] != 2 ** len(qubits):
            raise PauliError(f"matrix is {matrix.shape[0]}-dimensional but support has {len(qubits)} qubits")
        return cls("dense_local", qubits, bloch_from_dense(matrix))

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PauliError(f"unknown observable kind {self.kind!r}")
        if len(set(self.qubits)) != len(self.qubits):
            raise PauliError(f"repeated qubit in observable support {list(self.qubits)}")

    def check_width(self, width: int) -> None:
        if self.kind == "pauli" and self.pauli.num_qubits != width:
            raise PauliError(f"Pauli observable has {self.pauli.num_qubits} qubits, register has {width}")
        for q in self.qubits:
            if not 0 <= q < width:
                raise PauliError(f"observable qubit {q} out of range for a {width}-qubit register")

    def d_measure(self) -> float:
        """``D(E)``; the weight of the first backward step."""
        if self.kind == "pauli":
            return 1.0
        return self.local.l1_norm()

    def max_trace(self, width: int) -> float:
        """``max_f |Tr(E sigma_f)|`` over Pauli strings on ``width`` qubits."""
        if self.kind == "pauli":
            return 2.0**width
        return 2.0**width * float(np.abs(self.local.coeffs).max())

    def to_dense(self, width: int) -> np.ndarray:
        self.check_width(width)
        if self.kind == "pauli":
            return self.pauli.to_matrix()
        return embed_operator(dense_from_bloch(self.local), self.qubits, width)

    def trace_with(self, letters: np.ndarray) -> np.ndarray:
        """``Tr(E sigma_f)`` for each row of a ``(batch, width)`` letter array."""
        width = letters.shape[1]
        if self.kind == "pauli":
            match = np.all(letters == np.asarray(self.pauli.letters, dtype=letters.dtype), axis=1)
            return np.where(match, self.pauli.sign * 2.0**width, 0.0)
        idx = np.zeros(letters.shape[0], dtype=np.int64)
        for a, q in enumerate(self.qubits):
            idx += letters[:, q].astype(np.int64) << (2 * a)
        rest = [q for q in range(width) if q not in self.qubits]
        on_identity = np.all(letters[:, rest] == 0, axis=1) if rest else True
        return np.where(on_identity, 2.0**width * self.local.coeffs[idx], 0.0)

    def sample(self, uniforms: np.ndarray, width: int) -> tuple[np.ndarray, np.ndarray]:
        """Draw starting Pauli strings for backward propagation.

        Letter index ``j`` on the support is drawn with probability
        ``|e_j| / D(E)``; the weight is ``sgn(e_j) D(E)``.
        """
        batch = uniforms.shape[0]
        letters = np.zeros((batch, width), dtype=np.int8)
        if self.kind == "pauli":
            letters[:] = np.asarray(self.pauli.letters, dtype=np.int8)
            return letters, np.full(batch, float(self.pauli.sign))
        coeffs = self.local.coeffs
        total = np.abs(coeffs).sum()
        if total == 0:
            raise PauliError("observable is zero")
        cdf = np.cumsum(np.abs(coeffs)) / total
        cdf[np.flatnonzero(coeffs)[-1] :] = 1.0
        idx = np.minimum(np.searchsorted(cdf, uniforms, side="right"), coeffs.size - 1)
        for a, q in enumerate(self.qubits):
            letters[:, q] = (idx >> (2 * a)) & 3
        return letters, np.sign(coeffs[idx]) * total


def embed_operator(matrix: np.ndarray, support: Sequence[int], width: int) -> np.ndarray:
    """``matrix`` on ``support`` tensored with identity on the other qubits."""
    rest = [q for q in range(width) if q not in support]
    full = np.kron(matrix, np.eye(2 ** len(rest)))
    # axes of ``full`` are ordered (support..., rest...) for rows and columns
    order = list(support) + rest
    perm = [order.index(q) for q in range(width)]
    t = full.reshape((2,) * (2 * width))
    t = np.transpose(t, perm + [width + p for p in perm])
    return t.reshape(2**width, 2**width)
