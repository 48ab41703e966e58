"""Cost measures D and R, stabilizer enumeration and state classification.

``D(rho)`` is the L1 norm of the Bloch coefficients and governs the sampler's
cost; the robustness ``R(rho)`` is the least L1 norm of an affine combination
of pure stabilizer states equal to ``rho`` (a linear program).  States with
``R = 1`` are stabilizer mixtures, states with ``R > 1 >= D`` are bound
states, and states with ``D > 1`` are magic.
"""

from __future__ import annotations

import enum
import math
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

from .channels import embed_transfer, named
from .pauli import BlochVector, PauliString, dense_from_bloch, pauli_traces

CLASSIFY_TOL = 1e-7
RESIDUAL_TOL = 1e-8
MAX_STABILIZER_QUBITS = 3
_HIGHS_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


class MagicError(ValueError):
    pass


class SolverError(RuntimeError):
    pass


class Label(str, enum.Enum):
    STABILIZER = "stabilizer"
    BOUND = "bound"
    MAGIC = "magic"
    INVALID = "invalid"


def d_measure(v: BlochVector) -> float:
    """``(1/2^k) sum_i |Tr(sigma_i rho)|``."""
    return v.l1_norm()


# --- stabilizer states ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StabilizerStateSet:
    num_qubits: int
    # one row per state: Bloch coefficients times 2**n, entries in {-1, 0, +1}
    signs: np.ndarray

    @property
    def count(self) -> int:
        return self.signs.shape[0]

    @property
    def coeffs(self) -> np.ndarray:
        return self.signs / 2.0**self.num_qubits

    def __len__(self) -> int:
        return self.count

    def __getitem__(self, i: int) -> BlochVector:
        return BlochVector(self.num_qubits, self.coeffs[i])


def stabilizer_count(n: int) -> int:
    return 2**n * math.prod(2**k + 1 for k in range(1, n + 1))


def _clifford_generators(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    gens = []
    for q in range(n):
        for g in ("h", "s"):
            gens.append(embed_transfer(named(g), [q], n))
    for a in range(n):
        for b in range(n):
            if a != b:
                gens.append(embed_transfer(named("cnot"), [a, b], n))
    return [tm.signed_permutation() for tm in gens]


@lru_cache(maxsize=None)
def enumerate_stabilizer_states(n: int) -> StabilizerStateSet:
    """All pure ``n``-qubit stabilizer states, as the Clifford orbit of ``|0..0>``.

    Each state is stored by the signs of its stabilizer group: the Bloch
    coefficient of group element ``+-P`` is ``+-1/2^n``.
    """
    if not 1 <= n <= MAX_STABILIZER_QUBITS:
        raise MagicError(f"stabilizer enumeration supports 1 to {MAX_STABILIZER_QUBITS} qubits, got {n}")
    start = np.zeros(4**n, dtype=np.int8)
    for i in range(4**n):
        if all(l in (0, 3) for l in PauliString.from_index(i, n).letters):
            start[i] = 1
    gens = _clifford_generators(n)
    seen = {start.tobytes(): start}
    frontier = [start]
    while frontier:
        nxt = []
        for state in frontier:
            for image, sign in gens:
                new = np.zeros_like(state)
                new[image] = sign * state
                key = new.tobytes()
                if key not in seen:
                    seen[key] = new
                    nxt.append(new)
        frontier = nxt
    signs = np.array(sorted(seen.values(), key=lambda s: s.tobytes()), dtype=np.int8)
    return StabilizerStateSet(n, signs)


# --- robustness LP ----------------------------------------------------------------


@dataclass(frozen=True)
class RobustnessResult:
    value: float
    weights: np.ndarray
    residual: float


def robustness_lp(v: BlochVector, stab: StabilizerStateSet | None = None) -> RobustnessResult:
    """Solve ``min sum|q|`` s.t. ``sum_i q_i stab_i = rho`` with q split into
    non-negative parts; checks the reconstruction residual."""
    stab = stab or enumerate_stabilizer_states(v.num_qubits)
    if stab.num_qubits != v.num_qubits:
        raise MagicError(f"state has {v.num_qubits} qubits, stabilizer set has {stab.num_qubits}")
    a = stab.signs.T.astype(float)
    k = a.shape[1]
    # scale rows by 2**n so the constraint matrix is {-1, 0, 1}
    b = np.asarray(v.coeffs) * 2.0**v.num_qubits
    res = linprog(
        np.ones(2 * k),
        A_eq=np.hstack([a, -a]),
        b_eq=b,
        bounds=(0, None),
        method="highs",
        options=_HIGHS_OPTIONS,
    )
    if res.status == 2:
        raise SolverError("robustness LP is infeasible; input is not a valid Hermitian unit-trace operator")
    if res.status != 0:
        raise SolverError(f"robustness LP failed: {res.message}")
    q = res.x[:k] - res.x[k:]
    residual = float(np.max(np.abs(stab.coeffs.T @ q - v.coeffs)))
    if residual > RESIDUAL_TOL:
        raise SolverError(f"robustness LP residual {residual:.3g} exceeds {RESIDUAL_TOL}")
    return RobustnessResult(float(np.abs(q).sum()), q, residual)


def robustness(v: BlochVector, stab: StabilizerStateSet | None = None) -> float:
    return robustness_lp(v, stab).value


# --- classification ---------------------------------------------------------------


@dataclass(frozen=True)
class Classification:
    label: Label
    d_value: float
    r_value: float | None
    tol: float = CLASSIFY_TOL

    def to_dict(self) -> dict:
        return {"label": self.label.value, "d_value": self.d_value, "r_value": self.r_value, "tol": self.tol}


def classify(v: BlochVector, tol: float = CLASSIFY_TOL, full_lp: bool = False) -> Classification:
    """Stabilizer mixture, bound or magic.  Since ``D <= R``, the LP is skipped
    for states with ``D > 1 + tol`` unless ``full_lp`` is set."""
    d = d_measure(v)
    if d > 1 + tol and not full_lp:
        return Classification(Label.MAGIC, d, None, tol)
    r = robustness(v)
    if d > 1 + tol:
        label = Label.MAGIC
    elif r <= 1 + tol:
        label = Label.STABILIZER
    else:
        label = Label.BOUND
    return Classification(label, d, r, tol)


# --- random states and census -----------------------------------------------------


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> BlochVector:
    """``G G^dag / Tr(G G^dag)`` with ``G`` a ``2^n x rank`` complex Ginibre matrix.

    Full rank gives the Hilbert-Schmidt measure.
    """
    return BlochVector(n, _random_coeffs(n, 1, rng, rank)[0])


def _random_coeffs(n: int, count: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    dim = 2**n
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise MagicError(f"rank must lie in [1, {dim}], got {rank}")
    g = rng.standard_normal((count, dim, rank)) + 1j * rng.standard_normal((count, dim, rank))
    rho = g @ np.conj(np.swapaxes(g, 1, 2))
    rho /= np.trace(rho, axis1=1, axis2=2).real[:, None, None]
    return np.array([pauli_traces(r).real / dim for r in rho])


def _classify_rows(args) -> list[str]:
    n, rows, tol, full_lp = args
    return [classify(BlochVector(n, row), tol, full_lp).label.value for row in rows]


def classify_many(
    n: int,
    rows: np.ndarray,
    tol: float = CLASSIFY_TOL,
    full_lp: bool = False,
    workers: int | None = None,
) -> list[str]:
    """Labels for many Bloch coefficient rows, optionally across processes."""
    workers = workers or int(os.environ.get("PAULI_SHUFFLE_THREADS", 0)) or os.cpu_count() or 1
    if workers == 1 or len(rows) < 256:
        return _classify_rows((n, rows, tol, full_lp))
    chunks = np.array_split(rows, workers * 4)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_classify_rows, [(n, c, tol, full_lp) for c in chunks])
        return [label for part in parts for label in part]


def census(
    n: int = 2,
    count: int = 100_000,
    seed: int = 0,
    tol: float = CLASSIFY_TOL,
    full_lp: bool = False,
    workers: int | None = None,
) -> dict:
    """Classify ``count`` Hilbert-Schmidt random ``n``-qubit states."""
    if count < 1:
        raise MagicError("count must be at least 1")
    rng = np.random.default_rng(seed)
    labels: list[str] = []
    batch = 10_000
    for lo in range(0, count, batch):
        rows = _random_coeffs(n, min(batch, count - lo), rng)
        labels += classify_many(n, rows, tol, full_lp, workers)
    counts = Counter(labels)
    classes = [Label.STABILIZER.value, Label.BOUND.value, Label.MAGIC.value]
    return {
        "num_qubits": n,
        "count": count,
        "seed": seed,
        "measure": "hilbert-schmidt",
        "counts": {c: counts.get(c, 0) for c in classes},
        "fractions": {c: counts.get(c, 0) / count for c in classes},
    }


# --- cross sections ---------------------------------------------------------------

FAMILIES = {
    # (constant terms, x terms, y terms), coefficients of sigma
    "a": ({"II": 0.25}, {"XX": 1, "ZZ": 1, "YY": -1}, {"ZI": 1, "IZ": 1}),
    "b": ({"II": 0.25}, {"ZZ": 1}, {"XX": 1, "XY": 1, "YX": 1, "YY": -1}),
    "c": ({"II": 0.25, "ZZ": 0.2}, {"XX": 1, "YY": -1}, {"XY": 1, "YX": 1}),
}
INVALID_EIG_TOL = 1e-10


def family_state(family: str, x: float, y: float) -> BlochVector:
    try:
        const, xs, ys = FAMILIES[family]
    except KeyError:
        raise MagicError(f"unknown family {family!r}; expected a, b or c") from None
    terms: dict[str, float] = {}
    for part, scale in ((const, 1.0), (xs, x), (ys, y)):
        for label, c in part.items():
            terms[label] = terms.get(label, 0.0) + c * scale
    return BlochVector.from_labels(terms, 2)


def is_valid_state(v: BlochVector, tol: float = INVALID_EIG_TOL) -> bool:
    return bool(np.linalg.eigvalsh(dense_from_bloch(v)).min() >= -tol)


def classify_point(family: str, x: float, y: float, tol: float = CLASSIFY_TOL, full_lp: bool = False) -> Label:
    v = family_state(family, x, y)
    if not is_valid_state(v):
        return Label.INVALID
    return classify(v, tol, full_lp).label


def _classify_points(args):
    family, points, tol, full_lp = args
    return [classify_point(family, x, y, tol, full_lp).value for x, y in points]


def cross_section(
    family: str,
    x_range: Sequence[float] = (-0.35, 0.35),
    y_range: Sequence[float] = (-0.35, 0.35),
    resolution: int = 301,
    tol: float = CLASSIFY_TOL,
    full_lp: bool = False,
    workers: int | None = None,
) -> list[tuple[float, float, str]]:
    """Classify a ``resolution x resolution`` grid of the family's plane."""
    if resolution < 2:
        raise MagicError("resolution must be at least 2")
    family_state(family, 0.0, 0.0)
    xs = np.linspace(*x_range, resolution)
    ys = np.linspace(*y_range, resolution)
    points = [(float(x), float(y)) for y in ys for x in xs]
    workers = workers or int(os.environ.get("PAULI_SHUFFLE_THREADS", 0)) or os.cpu_count() or 1
    if workers == 1:
        labels = _classify_points((family, points, tol, full_lp))
    else:
        chunks = [points[i :: workers * 4] for i in range(workers * 4)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_classify_points, [(family, c, tol, full_lp) for c in chunks]))
        labels = [None] * len(points)
        for i, part in enumerate(parts):
            labels[i :: workers * 4] = part
    return [(x, y, label) for (x, y), label in zip(points, labels)]


def raster_csv(rows: Iterable[tuple[float, float, str]]) -> str:
    lines = ["x,y,class"]
    lines += [f"{x:.6g},{y:.6g},{label}" for x, y, label in rows]
    return "\n".join(lines) + "\n"


__all__ = [
    "Classification",
    "Label",
    "StabilizerStateSet",
    "census",
    "classify",
    "cross_section",
    "d_measure",
    "enumerate_stabilizer_states",
    "random_density",
    "robustness",
]
