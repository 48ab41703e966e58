"""Exact density-matrix simulation, used as ground truth for the sampler."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channels import ChannelSpec, channel_arity, kraus_operators
from .observables import Observable
from .pauli import MAX_DENSE_QUBITS, PauliError
from .register import StepLayout, step_layout
from .states import state_bloch, named_density

STATE_TOL = 1e-10


class OracleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DenseState:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] & (m.shape[0] - 1):
            raise OracleError(f"state matrix has invalid shape {m.shape}")
        if self.num_qubits_of(m) > MAX_DENSE_QUBITS:
            raise OracleError(f"dense states are limited to {MAX_DENSE_QUBITS} qubits")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > STATE_TOL:
            raise OracleError("state is not Hermitian")
        if abs(np.trace(m) - 1) > STATE_TOL:
            raise OracleError(f"state has trace {np.trace(m).real:.12g}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @staticmethod
    def num_qubits_of(m: np.ndarray) -> int:
        return m.shape[0].bit_length() - 1

    @property
    def num_qubits(self) -> int:
        return self.num_qubits_of(self.matrix)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix).min())


def product_state(factors: Sequence) -> DenseState:
    """Tensor product of single-qubit states (names or 2x2 matrices), qubit 0 first."""
    m = np.ones((1, 1), dtype=complex)
    for f in factors:
        rho = named_density(f) if isinstance(f, str) else np.asarray(f, dtype=complex)
        state_bloch(rho)  # validates
        m = np.kron(m, rho)
    return DenseState(m)


def apply_kraus(matrix: np.ndarray, kraus: Sequence[np.ndarray], layout: StepLayout) -> np.ndarray:
    """Apply a Kraus set to an arbitrary operator under the register layout."""
    w = layout.pre_width
    n, m = layout.n_in, layout.n_out
    if layout.post_width > MAX_DENSE_QUBITS:
        raise OracleError(f"register would grow to {layout.post_width} qubits (limit {MAX_DENSE_QUBITS})")
    order = list(layout.inputs) + list(layout.passthrough_pre)
    r = len(layout.passthrough_pre)
    t = np.asarray(matrix, dtype=complex).reshape((2,) * (2 * w))
    t = np.transpose(t, order + [w + q for q in order]).reshape(2 ** (n + r), 2 ** (n + r))
    ident = np.eye(2**r)
    out = np.zeros((2 ** (m + r), 2 ** (m + r)), dtype=complex)
    for k in kraus:
        big = np.kron(k, ident)
        out += big @ t @ big.conj().T
    # current axis order: outputs (channel order), then passthrough
    positions = list(layout.outputs) + list(layout.passthrough_post)
    v = layout.post_width
    perm = [positions.index(q) for q in range(v)]
    out = out.reshape((2,) * (2 * v))
    out = np.transpose(out, perm + [v + p for p in perm])
    return out.reshape(2**v, 2**v)


def apply_channel_operator(matrix: np.ndarray, spec: ChannelSpec, targets: Sequence[int]) -> np.ndarray:
    n, m = channel_arity(spec)
    width = DenseState.num_qubits_of(np.asarray(matrix))
    layout = step_layout(width, targets, n, m)
    return apply_kraus(matrix, kraus_operators(spec), layout)


def apply_channel_dense(state: DenseState, spec: ChannelSpec, targets: Sequence[int]) -> DenseState:
    out = apply_channel_operator(state.matrix, spec, targets)
    return DenseState((out + out.conj().T) / 2)


def expectation(state: DenseState, observable) -> float:
    """``Tr(E rho)`` for an :class:`Observable` or a dense Hermitian matrix."""
    if isinstance(observable, Observable):
        try:
            e = observable.to_dense(state.num_qubits)
        except PauliError as exc:
            raise OracleError(str(exc)) from None
    else:
        e = np.asarray(observable, dtype=complex)
        if e.shape != state.matrix.shape:
            raise OracleError(f"observable shape {e.shape} does not match state {state.matrix.shape}")
    value = np.trace(e @ state.matrix)
    if abs(value.imag) > 1e-10:
        raise OracleError(f"expectation has imaginary part {value.imag:.3g}")
    return float(value.real)


def choi_state(spec: ChannelSpec) -> DenseState:
    """``(I x L)`` applied to one Bell pair per channel input.

    Reference qubits come first; pair ``q`` is (reference ``q``, input ``q``).
    """
    n, m = channel_arity(spec)
    bell = np.zeros((4, 4), dtype=complex)
    bell[0, 0] = bell[0, 3] = bell[3, 0] = bell[3, 3] = 0.5
    rho = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        rho = np.kron(rho, bell)
    # reorder from (r0, s0, r1, s1, ...) to (r0, r1, ..., s0, s1, ...)
    if n:
        w = 2 * n
        order = [2 * q for q in range(n)] + [2 * q + 1 for q in range(n)]
        t = np.transpose(rho.reshape((2,) * (2 * w)), order + [w + q for q in order])
        rho = t.reshape(2**w, 2**w)
    out = apply_kraus(rho, kraus_operators(spec), step_layout(2 * n, range(n, 2 * n), n, m))
    return DenseState((out + out.conj().T) / 2)


def simulate(circuit) -> DenseState:
    """Final state of a :class:`~pauli_shuffle.circuit.Circuit`."""
    state = product_state(circuit.initial)
    for op in circuit.ops:
        state = apply_channel_dense(state, op.channel, op.targets)
    return state


def exact_value(circuit) -> float:
    return expectation(simulate(circuit), circuit.observable)
