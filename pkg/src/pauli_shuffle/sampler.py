"""Monte Carlo estimation by sampling Pauli trajectories.

Forward mode draws a Pauli string from the product input state, pushes it
through each channel's transfer matrix (one random column entry per step) and
scores ``weight * Tr(E sigma_f)``.  Backward mode starts from the observable,
walks the adjoint maps in reverse order and scores ``weight * Tr(sigma_f rho)``.

Samples are processed in fixed blocks of :data:`BLOCK_SIZE`; block ``b`` draws
from a Philox stream keyed by ``(seed, b)``, so results do not depend on how
blocks are scheduled over worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import __version__
from .channels import (
    MAX_CHANNEL_QUBITS,
    TransferMatrix,
    adjoint,
    build_named,
    channel_cost,
    compose,
    embed_transfer,
)
from .circuit import Circuit
from .observables import Observable
from .pauli import BlochVector, PauliString
from .register import StepLayout, step_layout

BLOCK_SIZE = 4096
MAX_WIDTH = 256
MODES = ("forward", "backward")


class SamplerError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ColumnTable:
    """Per-column sampling data for one transfer matrix."""

    cdf: np.ndarray  # (cols, rows); dead columns are all ones
    signs: np.ndarray  # (cols, rows)
    colsum: np.ndarray  # (cols,)
    image: np.ndarray | None  # set when every column has at most one entry
    factor: np.ndarray | None  # signed column sum for the 1-sparse case

    @classmethod
    def build(cls, tm: TransferMatrix) -> ColumnTable:
        a = np.abs(tm.entries.T)
        colsum = a.sum(axis=1)
        cdf = np.ones_like(a)
        for c in np.flatnonzero(colsum):
            row = np.cumsum(a[c]) / colsum[c]
            row[np.flatnonzero(a[c])[-1] :] = 1.0
            cdf[c] = row
        signs = np.sign(tm.entries.T)
        image = factor = None
        if np.all((a != 0).sum(axis=1) <= 1):
            image = np.argmax(a != 0, axis=1)
            factor = signs[np.arange(a.shape[0]), image] * colsum
        return cls(cdf, signs, colsum, image, factor)

    def draw(self, cols: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Output indices and weight factors ``sgn(entry) * colsum`` for each column."""
        if self.image is not None:
            return self.image[cols], self.factor[cols]
        j = (self.cdf[cols] <= u[:, None]).sum(axis=1)
        j = np.minimum(j, self.cdf.shape[1] - 1)
        return j, self.signs[cols, j] * self.colsum[cols]


@dataclass(frozen=True, eq=False)
class Step:
    tm: TransferMatrix
    layout: StepLayout
    label: str = ""
    forward: ColumnTable = field(init=False)
    backward: ColumnTable = field(init=False)
    adjoint: TransferMatrix = field(init=False)

    def __post_init__(self):
        adj = adjoint(self.tm)
        object.__setattr__(self, "adjoint", adj)
        object.__setattr__(self, "forward", ColumnTable.build(self.tm))
        object.__setattr__(self, "backward", ColumnTable.build(adj))


@dataclass(frozen=True, eq=False)
class CompiledCircuit:
    initial: tuple[BlochVector, ...]
    steps: tuple[Step, ...]
    observable: Observable
    register_map: tuple[str, ...]

    @property
    def num_qubits(self) -> int:
        return len(self.initial)

    @property
    def final_width(self) -> int:
        return self.steps[-1].layout.post_width if self.steps else self.num_qubits


def compile_circuit(circuit: Circuit, precompose: bool = False) -> CompiledCircuit:
    steps = []
    width = circuit.num_qubits
    labels = [f"q{q}" for q in range(width)]
    for a, op in enumerate(circuit.ops):
        tm = build_named(op.channel)
        layout = step_layout(width, op.targets, tm.in_qubits, tm.out_qubits)
        labels = layout.relabel(labels, fresh=f"op{a}.new")
        steps.append(Step(tm, layout, op.channel.name))
        width = layout.post_width
    if width > MAX_WIDTH:
        raise SamplerError(f"register width {width} exceeds {MAX_WIDTH}")
    compiled = CompiledCircuit(tuple(circuit.initial_bloch), tuple(steps), circuit.observable, tuple(labels))
    return precompose_steps(compiled) if precompose else compiled


def _is_local(step: Step) -> bool:
    lay = step.layout
    return lay.pre_width == lay.post_width and lay.inputs == lay.outputs


def precompose_steps(compiled: CompiledCircuit) -> CompiledCircuit:
    """Greedily merge adjacent width-preserving steps with overlapping support
    whose combined support is at most three qubits."""
    merged: list[Step] = []
    for step in compiled.steps:
        if merged and _is_local(step) and _is_local(merged[-1]):
            prev = merged[-1]
            a, b = set(prev.layout.inputs), set(step.layout.inputs)
            union = sorted(a | b)
            if a & b and len(union) <= MAX_CHANNEL_QUBITS:
                pos = {q: i for i, q in enumerate(union)}
                first = embed_transfer(prev.tm, [pos[q] for q in prev.layout.inputs], len(union))
                second = embed_transfer(step.tm, [pos[q] for q in step.layout.inputs], len(union))
                tm = compose(second, first)
                width = step.layout.pre_width
                layout = step_layout(width, union, len(union), len(union))
                merged[-1] = Step(tm, layout, f"{prev.label}+{step.label}")
                continue
        merged.append(step)
    return CompiledCircuit(compiled.initial, tuple(merged), compiled.observable, compiled.register_map)


# --- batched trajectory kernels -------------------------------------------------


def _local_index(letters: np.ndarray, positions: Sequence[int]) -> np.ndarray:
    idx = np.zeros(letters.shape[0], dtype=np.int64)
    for a, q in enumerate(positions):
        idx += letters[:, q].astype(np.int64) << (2 * a)
    return idx


def _advance(letters, weights, table: ColumnTable, src, dst, dst_width, pt_src, pt_dst, u):
    cols = _local_index(letters, src)
    j, factor = table.draw(cols, u)
    out = np.zeros((letters.shape[0], dst_width), dtype=np.int8)
    if pt_src:
        out[:, list(pt_dst)] = letters[:, list(pt_src)]
    for a, q in enumerate(dst):
        out[:, q] = (j >> (2 * a)) & 3
    return out, weights * factor


def _initial_tables(initial: Sequence[BlochVector]):
    tables = []
    for q, v in enumerate(initial):
        a = np.abs(v.coeffs)
        total = a.sum()
        if total == 0:
            raise SamplerError(f"qubit {q}: all-zero Bloch vector")
        cdf = np.cumsum(a) / total
        cdf[np.flatnonzero(a)[-1] :] = 1.0
        tables.append((cdf, np.sign(v.coeffs) * total))
    return tables


def _draw_initial(tables, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    letters = np.zeros(u.shape, dtype=np.int8)
    weights = np.ones(u.shape[0])
    for q, (cdf, signed) in enumerate(tables):
        l = np.minimum(np.searchsorted(cdf, u[:, q], side="right"), 3)
        letters[:, q] = l
        weights = weights * signed[l]
    return letters, weights


def _state_traces(initial: Sequence[BlochVector], letters: np.ndarray) -> np.ndarray:
    """``Tr(sigma_f rho)`` for a product state: ``prod_q 2 r_q[f_q]``."""
    table = np.array([2 * v.coeffs for v in initial])
    out = np.ones(letters.shape[0])
    for q in range(letters.shape[1]):
        out = out * table[q][letters[:, q]]
    return out


def _run_block(compiled: CompiledCircuit, mode: str, size: int, rng: np.random.Generator):
    steps = compiled.steps
    if mode == "forward":
        n = compiled.num_qubits
        u = rng.random((size, n + len(steps)))
        letters, weights = _draw_initial(_initial_tables(compiled.initial), u[:, :n])
        for s, step in enumerate(steps):
            lay = step.layout
            letters, weights = _advance(
                letters, weights, step.forward, lay.inputs, lay.outputs, lay.post_width,
                lay.passthrough_pre, lay.passthrough_post, u[:, n + s],
            )
        values = weights * compiled.observable.trace_with(letters)
    else:
        u = rng.random((size, 1 + len(steps)))
        letters, weights = compiled.observable.sample(u[:, 0], compiled.final_width)
        for s, step in enumerate(reversed(steps)):
            lay = step.layout
            letters, weights = _advance(
                letters, weights, step.backward, lay.outputs, lay.inputs, lay.pre_width,
                lay.passthrough_post, lay.passthrough_pre, u[:, 1 + s],
            )
        values = weights * _state_traces(compiled.initial, letters)
    return values, weights


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def default_workers() -> int:
    env = os.environ.get("PAULI_SHUFFLE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def sample_values(
    compiled: CompiledCircuit,
    mode: str,
    n_samples: int,
    seed: int = 0,
    workers: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample estimator values and final trajectory weights, in sample order."""
    if mode not in MODES:
        raise SamplerError(f"mode must be one of {MODES}, got {mode!r}")
    if n_samples < 1:
        raise SamplerError("n_samples must be positive")
    values = np.empty(n_samples)
    weights = np.empty(n_samples)
    n_blocks = -(-n_samples // BLOCK_SIZE)

    def work(b: int) -> None:
        lo = b * BLOCK_SIZE
        hi = min(lo + BLOCK_SIZE, n_samples)
        v, w = _run_block(compiled, mode, hi - lo, block_rng(seed, b))
        values[lo:hi] = v
        weights[lo:hi] = w

    workers = default_workers() if workers is None else max(1, workers)
    if workers == 1 or n_blocks == 1:
        for b in range(n_blocks):
            work(b)
    else:
        with ThreadPoolExecutor(max_workers=min(workers, n_blocks)) as pool:
            list(pool.map(work, range(n_blocks)))
    return values, weights


# --- budgets, bounds and reports -------------------------------------------------


def hoeffding_samples(range_bound: float, epsilon: float, delta: float) -> int:
    """Samples needed so that ``P(|mean - P| >= eps) <= delta``.

    Two-sided Hoeffding: ``2 exp(-2 N eps^2 / range^2) <= delta``.
    """
    if not epsilon > 0:
        raise SamplerError(f"epsilon must be positive, got {epsilon}")
    if not 0 < delta < 1:
        raise SamplerError(f"delta must lie in (0, 1), got {delta}")
    if range_bound < 0:
        raise SamplerError(f"range bound must be non-negative, got {range_bound}")
    n = math.ceil(range_bound**2 * math.log(2 / delta) / (2 * epsilon**2))
    return max(1, n)


@dataclass(frozen=True)
class SamplingBudget:
    epsilon: float | None
    delta: float | None
    range_bound: float
    n_samples: int

    @classmethod
    def resolve(cls, range_bound: float, n_samples=None, epsilon=None, delta=None) -> SamplingBudget:
        if (n_samples is None) == (epsilon is None or delta is None):
            raise SamplerError("give either n_samples or both epsilon and delta")
        if n_samples is None:
            n_samples = hoeffding_samples(range_bound, epsilon, delta)
        elif n_samples < 1:
            raise SamplerError("n_samples must be positive")
        return cls(epsilon, delta, range_bound, int(n_samples))


@dataclass(frozen=True)
class Trajectory:
    current: PauliString
    weight: float
    alive: bool = True


def initial_cost(initial: Sequence[BlochVector]) -> float:
    """``prod_q D(rho_q)``."""
    return float(np.prod([v.l1_norm() for v in initial]))


def range_bound(compiled: CompiledCircuit, mode: str) -> float:
    """Analytic bound on ``max P_hat - min P_hat``."""
    if mode == "forward":
        steps = np.prod([channel_cost(s.tm) for s in compiled.steps]) if compiled.steps else 1.0
        obs = compiled.observable.max_trace(compiled.final_width)
        return float(2 * obs * initial_cost(compiled.initial) * steps)
    if mode == "backward":
        steps = np.prod([channel_cost(s.adjoint) for s in compiled.steps]) if compiled.steps else 1.0
        state = np.prod([2 * np.abs(v.coeffs).max() for v in compiled.initial])
        return float(2 * compiled.observable.d_measure() * steps * state)
    raise SamplerError(f"mode must be one of {MODES}, got {mode!r}")


@dataclass(frozen=True)
class EstimateReport:
    mean: float
    n_samples: int
    empirical_stderr: float
    range_bound: float
    mode: str
    seed: int
    epsilon: float | None = None
    delta: float | None = None
    register_map: tuple[str, ...] = ()
    precompose: bool = False
    version: str = __version__

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["register_map"] = list(self.register_map)
        return d


def estimate(
    circuit: Circuit | CompiledCircuit,
    mode: str = "forward",
    n_samples: int | None = None,
    epsilon: float | None = None,
    delta: float | None = None,
    seed: int = 0,
    precompose: bool = False,
    workers: int | None = None,
) -> EstimateReport:
    compiled = circuit if isinstance(circuit, CompiledCircuit) else compile_circuit(circuit, precompose)
    bound = range_bound(compiled, mode)
    budget = SamplingBudget.resolve(bound, n_samples, epsilon, delta)
    values, _ = sample_values(compiled, mode, budget.n_samples, seed, workers)
    n = budget.n_samples
    mean = float(values.sum() / n)
    stderr = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return EstimateReport(
        mean, n, stderr, bound, mode, seed, budget.epsilon, budget.delta,
        compiled.register_map, precompose,
    )


def estimate_forward(circuit, n_samples=None, epsilon=None, delta=None, seed=0, **kw) -> EstimateReport:
    return estimate(circuit, "forward", n_samples, epsilon, delta, seed, **kw)


def estimate_backward(circuit, n_samples=None, epsilon=None, delta=None, seed=0, **kw) -> EstimateReport:
    return estimate(circuit, "backward", n_samples, epsilon, delta, seed, **kw)


# --- single-trajectory API -------------------------------------------------------


def sample_initial(state: Sequence[BlochVector], rng: np.random.Generator) -> tuple[PauliString, float]:
    """Draw one Pauli string from a product state; returns ``(sigma, weight)``."""
    tables = _initial_tables(state)
    letters, weights = _draw_initial(tables, rng.random((1, len(state))))
    return PauliString(tuple(letters[0])), float(weights[0])


def propagate_step(
    traj: Trajectory,
    tm: TransferMatrix,
    targets: Sequence[int],
    rng: np.random.Generator,
) -> Trajectory:
    """Push one trajectory through ``tm`` acting on ``targets``.

    ``tm`` may be a channel or an adjoint map; either way its inputs are read
    from ``targets`` and the register is renumbered by
    :func:`pauli_shuffle.register.step_layout`.
    """
    if not traj.alive:
        return traj
    try:
        lay = step_layout(traj.current.num_qubits, targets, tm.in_qubits, tm.out_qubits)
    except ValueError as exc:
        raise SamplerError(str(exc)) from None
    letters = np.asarray([traj.current.letters], dtype=np.int8)
    out, w = _advance(
        letters, np.array([traj.weight]), ColumnTable.build(tm), lay.inputs, lay.outputs,
        lay.post_width, lay.passthrough_pre, lay.passthrough_post, rng.random(1),
    )
    weight = float(w[0])
    if weight == 0.0:
        return Trajectory(PauliString(tuple(out[0])), 0.0, False)
    return Trajectory(PauliString(tuple(out[0])), weight, True)


__all__ = [
    "CompiledCircuit",
    "EstimateReport",
    "SamplingBudget",
    "Trajectory",
    "compile_circuit",
    "estimate",
    "estimate_backward",
    "estimate_forward",
    "hoeffding_samples",
    "precompose_steps",
    "propagate_step",
    "range_bound",
    "sample_initial",
    "sample_values",
]
