"""Pauli transfer matrices, the named channel library and channel cost measures.

A :class:`TransferMatrix` with ``n`` input and ``m`` output qubits stores

    entries[j, i] = Tr(sigma_j L(sigma_i)) / 2**m

so column ``i`` is the Bloch vector of ``L(sigma_i)`` and applying the channel
to an operator is ``entries @ coeffs``.  The adjoint (Heisenberg-picture) map
uses the same layout with the roles of input and output swapped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Mapping, Sequence

import numpy as np

from .pauli import BlochVector, PauliError, index_letters, pauli_matrix, pauli_traces, snap_dyadic
from .states import check_density, named_density

MAX_CHANNEL_QUBITS = 3
KRAUS_TOL = 1e-10


class ChannelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    entries: np.ndarray
    in_qubits: int
    out_qubits: int
    name: str = ""
    heisenberg: bool = False

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        shape = (4**self.out_qubits, 4**self.in_qubits)
        if entries.shape != shape:
            raise ChannelError(f"transfer matrix {self.name!r} has shape {entries.shape}, expected {shape}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def column_costs(self) -> np.ndarray:
        """``D(L(sigma_i))`` for every input Pauli ``i``."""
        return np.abs(self.entries).sum(axis=0)

    @property
    def is_clifford(self) -> bool:
        """True when every column is a single ``+-1`` entry (signed permutation)."""
        if self.in_qubits != self.out_qubits:
            return False
        nz = self.entries != 0
        return bool(np.all(nz.sum(axis=0) == 1) and np.all(np.abs(self.entries[nz]) == 1))

    def signed_permutation(self) -> tuple[np.ndarray, np.ndarray]:
        """``(image, sign)`` with ``L(sigma_i) = sign[i] * sigma_{image[i]}``."""
        if not self.is_clifford:
            raise ChannelError(f"{self.name or 'channel'} is not a Clifford transfer matrix")
        image = np.argmax(self.entries != 0, axis=0)
        sign = self.entries[image, np.arange(self.entries.shape[1])].astype(int)
        return image, sign

    def is_trace_preserving(self, tol: float = 0.0) -> bool:
        if self.heisenberg:
            return False
        expected = np.zeros(4**self.in_qubits)
        expected[0] = 2.0**self.in_qubits / 2.0**self.out_qubits
        return bool(np.max(np.abs(self.entries[0] - expected)) <= tol)

    def apply(self, v: BlochVector) -> BlochVector:
        if v.num_qubits != self.in_qubits:
            raise ChannelError(f"channel takes {self.in_qubits} qubits, operator has {v.num_qubits}")
        return BlochVector(self.out_qubits, self.entries @ v.coeffs)


@dataclass(frozen=True)
class ChannelSpec:
    """Declarative description of a channel; see :data:`CHANNEL_NAMES`."""

    name: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "name", self.name.lower())
        if self.name not in CHANNEL_NAMES:
            raise ChannelError(f"unknown channel {self.name!r}")

    def __getitem__(self, key):
        return self.params[key]

    def get(self, key, default=None):
        return self.params.get(key, default)


_S2 = 1 / np.sqrt(2)

UNITARIES = {
    "i": np.eye(2),
    "x": np.array([[0, 1], [1, 0]]),
    "y": np.array([[0, -1j], [1j, 0]]),
    "z": np.diag([1, -1]),
    "h": np.array([[1, 1], [1, -1]]) * _S2,
    "s": np.diag([1, 1j]),
    "sdg": np.diag([1, -1j]),
    "t": np.diag([1, np.exp(1j * np.pi / 4)]),
    "tdg": np.diag([1, np.exp(-1j * np.pi / 4)]),
    # control is the first target
    "cnot": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]),
    "cz": np.diag([1, 1, 1, -1]),
    "swap": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]),
}
ALIASES = {"p": "s", "cx": "cnot", "id": "i"}
CLIFFORD_NAMES = ("i", "x", "y", "z", "h", "s", "sdg", "cnot", "cz", "swap")

CHANNEL_NAMES = (
    tuple(UNITARIES)
    + tuple(ALIASES)
    + (
        "rz",
        "depolarizing",
        "dephasing",
        "amplitude_damping",
        "trace_out",
        "append_state",
        "measure_control",
        "gadget",
        "kraus",
    )
)


def _unitary(name: str) -> np.ndarray:
    key = ALIASES.get(name, name)
    if key not in UNITARIES:
        raise ChannelError(f"unknown gate {name!r}")
    return np.asarray(UNITARIES[key], dtype=complex)


def _prob(spec: ChannelSpec, key: str) -> float:
    value = spec.get(key)
    if value is None:
        raise ChannelError(f"{spec.name} requires parameter {key!r}")
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ChannelError(f"{spec.name}: {key} = {value} outside [0, 1]")
    return value


def _measure_control_kraus(u: np.ndarray) -> list[np.ndarray]:
    # measure qubit 0 in Z, apply u to qubit 1 on outcome 1, discard qubit 0
    bra0 = np.array([[1, 0]], dtype=complex)
    bra1 = np.array([[0, 1]], dtype=complex)
    return [np.kron(bra0, np.eye(2)), np.kron(bra1, u)]


def _append_kraus(rho: np.ndarray, keep: int) -> list[np.ndarray]:
    w, vecs = np.linalg.eigh(rho)
    ident = np.eye(2**keep)
    out = []
    for lam, v in zip(w, vecs.T):
        if lam > 1e-15:
            out.append(np.kron(np.sqrt(lam) * v.reshape(-1, 1), ident))
    return out


def kraus_operators(spec: ChannelSpec) -> list[np.ndarray]:
    """Kraus set of a channel; operators map ``2**n`` to ``2**m`` dimensions."""
    name = ALIASES.get(spec.name, spec.name)
    if name in UNITARIES:
        return [_unitary(name)]
    if name == "rz":
        theta = float(spec.get("theta", 0.0))
        return [np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])]
    if name == "depolarizing":
        p = _prob(spec, "p")
        return [np.sqrt(1 - 3 * p / 4) * UNITARIES["i"]] + [
            np.sqrt(p / 4) * np.asarray(UNITARIES[k], dtype=complex) for k in "xyz"
        ]
    if name == "dephasing":
        p = _prob(spec, "p")
        return [np.sqrt(1 - p / 2) * np.eye(2, dtype=complex), np.sqrt(p / 2) * np.diag([1.0 + 0j, -1.0])]
    if name == "amplitude_damping":
        g = _prob(spec, "gamma")
        return [
            np.array([[1, 0], [0, np.sqrt(1 - g)]], dtype=complex),
            np.array([[0, np.sqrt(g)], [0, 0]], dtype=complex),
        ]
    if name == "trace_out":
        k = int(spec.get("qubits", 1))
        keep = int(spec.get("keep", 0))
        ident = np.eye(2**keep)
        return [np.kron(np.eye(2**k)[a : a + 1], ident) for a in range(2**k)]
    if name == "append_state":
        state = spec.get("state", "maximally_mixed")
        rho = _state_density(state)
        return _append_kraus(rho, int(spec.get("keep", 0)))
    if name == "measure_control":
        return _measure_control_kraus(_unitary(str(spec.get("clifford", "s")).lower()))
    if name == "gadget":
        # CNOT controlled by the data qubit (1) onto the magic-state qubit (0),
        # then measure qubit 0 and correct with P on outcome 1
        cnot_10 = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex)
        return [k @ cnot_10 for k in _measure_control_kraus(_unitary("s"))]
    if name == "kraus":
        ops = spec.get("operators")
        if not ops:
            raise ChannelError("kraus channel needs a non-empty 'operators' list")
        return [np.asarray(k, dtype=complex) for k in ops]
    raise ChannelError(f"no Kraus form for {spec.name!r}")


def _state_density(state) -> np.ndarray:
    if isinstance(state, str):
        return named_density(state)
    if isinstance(state, BlochVector):
        from .pauli import dense_from_bloch

        return check_density(dense_from_bloch(state))
    return check_density(np.asarray(state, dtype=complex))


def channel_arity(spec: ChannelSpec) -> tuple[int, int]:
    """``(in_qubits, out_qubits)``."""
    k = kraus_operators(spec)[0]
    m = k.shape[0].bit_length() - 1
    n = k.shape[1].bit_length() - 1
    return n, m


def _check_kraus(kraus: Sequence[np.ndarray], n: int, m: int, trace_preserving: bool) -> None:
    if max(n, m) > MAX_CHANNEL_QUBITS:
        raise ChannelError(f"channels are limited to {MAX_CHANNEL_QUBITS} qubits")
    for a, k in enumerate(kraus):
        if k.shape != (2**m, 2**n):
            raise ChannelError(f"Kraus operator {a} has shape {k.shape}, expected {(2**m, 2**n)}")
    if trace_preserving:
        total = sum(k.conj().T @ k for k in kraus)
        err = np.max(np.abs(total - np.eye(2**n)))
        if err > KRAUS_TOL:
            raise ChannelError(f"Kraus operators are not complete (deviation {err:.3g})")


def ptm_from_kraus(
    kraus: Sequence[np.ndarray],
    n: int,
    m: int,
    trace_preserving: bool = True,
    name: str = "kraus",
) -> TransferMatrix:
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    _check_kraus(kraus, n, m, trace_preserving)
    entries = np.empty((4**m, 4**n))
    for i in range(4**n):
        sigma = pauli_matrix(i, n)
        image = sum(k @ sigma @ k.conj().T for k in kraus)
        entries[:, i] = pauli_traces(image).real / 2**m
    return TransferMatrix(snap_dyadic(entries), n, m, name)


def build_named(spec: ChannelSpec) -> TransferMatrix:
    kraus = kraus_operators(spec)
    n, m = channel_arity(spec)
    tp = bool(spec.get("trace_preserving", True))
    return ptm_from_kraus(kraus, n, m, trace_preserving=tp, name=spec.name)


@lru_cache(maxsize=None)
def named(name: str, **params) -> TransferMatrix:
    """Cached :func:`build_named` for hashable parameters, e.g. ``named("t")``."""
    return build_named(ChannelSpec(name, params))


def compose(second: TransferMatrix, first: TransferMatrix) -> TransferMatrix:
    """Transfer matrix of ``second`` after ``first``."""
    if first.out_qubits != second.in_qubits:
        raise ChannelError(
            f"cannot compose: first outputs {first.out_qubits} qubits, second takes {second.in_qubits}"
        )
    if first.heisenberg != second.heisenberg:
        raise ChannelError("cannot compose a channel with an adjoint map")
    return TransferMatrix(
        snap_dyadic(second.entries @ first.entries),
        first.in_qubits,
        second.out_qubits,
        f"{second.name}*{first.name}",
        first.heisenberg,
    )


def adjoint(tm: TransferMatrix) -> TransferMatrix:
    """Heisenberg-picture dual: ``Tr(rho L*(E)) = Tr(L(rho) E)``.

    Maps observables on the channel's outputs to observables on its inputs.
    """
    scale = 2.0**tm.out_qubits / 2.0**tm.in_qubits
    name = tm.name[:-4] if tm.name.endswith("^adj") else tm.name + "^adj"
    return TransferMatrix(scale * tm.entries.T, tm.out_qubits, tm.in_qubits, name, not tm.heisenberg)


def channel_cost(tm: TransferMatrix) -> float:
    """Worst-case per-step weight ``max_i D(L(sigma_i))``."""
    return float(tm.column_costs.max())


def choi_cost(tm: TransferMatrix) -> float:
    """D of the Choi state, i.e. the mean of ``D(L(sigma_i))`` over all ``4**n`` inputs."""
    return float(tm.column_costs.sum() / 4**tm.in_qubits)


def embed_transfer(tm: TransferMatrix, positions: Sequence[int], width: int) -> TransferMatrix:
    """Extend a width-preserving channel on ``positions`` to ``width`` qubits."""
    if tm.in_qubits != tm.out_qubits or len(positions) != tm.in_qubits:
        raise ChannelError("embed_transfer needs a width-preserving channel matching positions")
    if width > MAX_CHANNEL_QUBITS:
        raise ChannelError(f"channels are limited to {MAX_CHANNEL_QUBITS} qubits")
    positions = list(positions)
    rest = [q for q in range(width) if q not in positions]
    k = len(positions)
    entries = np.zeros((4**width, 4**width))
    for i in range(4**width):
        letters = index_letters(i, width)
        local_in = sum(letters[q] << (2 * a) for a, q in enumerate(positions))
        base = sum(letters[q] << (2 * q) for q in rest)
        for local_out in range(4**k):
            value = tm.entries[local_out, local_in]
            if value:
                out = base + sum(((local_out >> (2 * a)) & 3) << (2 * q) for a, q in enumerate(positions))
                entries[out, i] = value
    return TransferMatrix(entries, width, width, tm.name, tm.heisenberg)


def identity_channel(num_qubits: int = 1) -> TransferMatrix:
    return TransferMatrix(np.eye(4**num_qubits), num_qubits, num_qubits, "identity")
