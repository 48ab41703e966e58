"""Named single-qubit states used by circuit files and the test suite."""

from __future__ import annotations

import numpy as np

from .pauli import BlochVector, PauliError, bloch_from_dense, check_hermitian, ket, snap_dyadic

_S = 1 / np.sqrt(2)

NAMED_KETS = {
    "zero": [1, 0],
    "one": [0, 1],
    "plus": [_S, _S],
    "minus": [_S, -_S],
    "i_plus": [_S, 1j * _S],
    "i_minus": [_S, -1j * _S],
    # T|+>, the magic state consumed by the T gadget
    "a": [_S, np.exp(1j * np.pi / 4) * _S],
}

STATE_NAMES = tuple(NAMED_KETS) + ("maximally_mixed",)

DENSITY_TOL = 1e-10


def named_density(name: str) -> np.ndarray:
    key = name.lower()
    if key == "maximally_mixed":
        return np.eye(2, dtype=complex) / 2
    if key not in NAMED_KETS:
        raise PauliError(f"unknown state {name!r}; expected one of {', '.join(STATE_NAMES)}")
    return ket(NAMED_KETS[key])


def check_density(matrix: np.ndarray, tol: float = DENSITY_TOL) -> np.ndarray:
    """Validate a density matrix: Hermitian, unit trace, PSD (all within ``tol``)."""
    matrix = check_hermitian(matrix, tol)
    tr = np.trace(matrix).real
    if abs(tr - 1) > tol:
        raise PauliError(f"density matrix has trace {tr:.12g}, expected 1")
    lo = np.linalg.eigvalsh((matrix + matrix.conj().T) / 2).min()
    if lo < -tol:
        raise PauliError(f"density matrix has negative eigenvalue {lo:.3g}")
    return matrix


def state_bloch(state) -> BlochVector:
    """Bloch vector for a state name, a density matrix or a BlochVector."""
    if isinstance(state, BlochVector):
        return state
    if isinstance(state, str):
        v = bloch_from_dense(named_density(state))
        return BlochVector(v.num_qubits, snap_dyadic(v.coeffs))
    return bloch_from_dense(check_density(np.asarray(state, dtype=complex)))
