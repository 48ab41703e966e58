"""Circuit description and its JSON file format.

A circuit file looks like::

    {
      "num_qubits": 2,
      "initial": ["a", "plus"],
      "ops": [
        {"gate": "gadget", "targets": [0, 1]},
        {"gate": "depolarizing", "p": 0.1, "targets": [0]}
      ],
      "observable": {"kind": "product", "factors": {"0": "a"}}
    }

``initial`` entries are state names (see :data:`pauli_shuffle.states.STATE_NAMES`)
or ``{"density": M}``.  Matrices are nested lists whose entries are real
numbers or ``[re, im]`` pairs.  Op keys other than ``gate`` and ``targets``
are channel parameters.  Observable kinds:

* ``{"kind": "basis_projector", "qubits": [...], "bits": [...]}``
* ``{"kind": "product", "factors": {"<qubit>": name | letter | matrix}}``
* ``{"kind": "pauli", "pauli": "-XZ"}`` (whole final register)
* ``{"kind": "dense_local", "qubits": [...], "matrix": M}``

Qubit indices always refer to the register as it is at that point of the
circuit; see :mod:`pauli_shuffle.register` for how ``trace_out``,
``append_state`` and ``gadget`` renumber it.
"""

from __future__ import annotations

import bisect
import json
import re
from dataclasses import dataclass
from typing import Any

import numpy as np

from .channels import ChannelError, ChannelSpec, build_named, channel_arity
from .observables import Observable
from .pauli import BlochVector, PauliError
from .register import RegisterError, step_layout
from .states import STATE_NAMES, check_density, state_bloch

MAX_QUBITS = 256


class CircuitError(ValueError):
    """Validation failure; ``where`` locates it in the document."""

    def __init__(self, where: str, message: str, line: int | None = None):
        prefix = ", ".join(p for p in (f"line {line}" if line else "", where) if p)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.where = where
        self.line = line
        self.message = message


@dataclass(frozen=True, eq=False)
class Operation:
    channel: ChannelSpec
    targets: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class Circuit:
    num_qubits: int
    initial: tuple  # state names or 2x2 density matrices
    ops: tuple[Operation, ...]
    observable: Observable
    observable_json: dict

    @property
    def initial_bloch(self) -> list[BlochVector]:
        return [state_bloch(s) for s in self.initial]

    def widths(self) -> list[int]:
        """Register width before each op, plus the final width."""
        out = [self.num_qubits]
        for op in self.ops:
            n, m = channel_arity(op.channel)
            out.append(out[-1] - n + m)
        return out

    @property
    def final_width(self) -> int:
        return self.widths()[-1]

    def to_dict(self) -> dict:
        return {
            "num_qubits": self.num_qubits,
            "initial": [s if isinstance(s, str) else {"density": matrix_to_json(s)} for s in self.initial],
            "ops": [_op_to_json(op) for op in self.ops],
            "observable": self.observable_json,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, doc: dict) -> Circuit:
        return _parse(doc)


_WS = re.compile(r"[ \t\n\r]*")


def _line_map(text: str) -> dict[str, int]:
    """Line number of every value in a valid JSON document, keyed by error path."""
    newlines = [m.start() for m in re.finditer("\n", text)]
    decoder = json.JSONDecoder()
    lines: dict[str, int] = {}

    def skip(i):
        return _WS.match(text, i).end()

    def walk(i, path):
        i = skip(i)
        lines.setdefault(path, bisect.bisect_left(newlines, i) + 1)
        if text[i] == "{":
            i = skip(i + 1)
            while text[i] != "}":
                key, i = json.decoder.scanstring(text, i + 1)
                i = walk(skip(i) + 1, f"{path}.{key}" if path else key)
                i = skip(i)
                if text[i] == ",":
                    i = skip(i + 1)
            return i + 1
        if text[i] == "[":
            i = skip(i + 1)
            k = 0
            while text[i] != "]":
                i = skip(walk(i, f"{path}[{k}]"))
                k += 1
                if text[i] == ",":
                    i = skip(i + 1)
            return i + 1
        return decoder.raw_decode(text, i)[1]

    walk(0, "")
    return lines


def _line_of(text: str, where: str) -> int | None:
    lines = _line_map(text)
    path = where
    while True:
        if path in lines:
            return lines[path]
        if not path:
            return None
        path = re.sub(r"(\.[^.\[]*|\[\d+\]|^[^.\[]+)$", "", path)


def matrix_from_json(obj: Any, where: str) -> np.ndarray:
    try:
        rows = []
        for row in obj:
            vals = []
            for x in row:
                if isinstance(x, (list, tuple)):
                    if len(x) != 2:
                        raise ValueError("complex entries must be [re, im] pairs")
                    vals.append(complex(float(x[0]), float(x[1])))
                else:
                    vals.append(complex(float(x)))
            rows.append(vals)
        m = np.array(rows, dtype=complex)
    except (TypeError, ValueError) as exc:
        raise CircuitError(where, f"malformed matrix ({exc})") from None
    if m.ndim != 2 or m.size == 0:
        raise CircuitError(where, f"malformed matrix with shape {m.shape}")
    return m


def matrix_to_json(m: np.ndarray) -> list:
    return [[[float(x.real), float(x.imag)] for x in row] for row in np.asarray(m, dtype=complex)]


def _op_to_json(op: Operation) -> dict:
    out: dict[str, Any] = {"gate": op.channel.name}
    for key, value in op.channel.params.items():
        if key == "operators":
            out[key] = [matrix_to_json(k) for k in value]
        elif key == "state" and not isinstance(value, str):
            out[key] = {"density": matrix_to_json(value)}
        else:
            out[key] = value
    out["targets"] = list(op.targets)
    return out


def _require(doc: dict, key: str, where: str):
    if not isinstance(doc, dict):
        raise CircuitError(where, "expected an object")
    if key not in doc:
        raise CircuitError(where, f"missing key {key!r}")
    return doc[key]


def _parse_state(obj, where: str):
    if isinstance(obj, str):
        if obj.lower() not in STATE_NAMES:
            raise CircuitError(where, f"unknown state {obj!r}; expected one of {', '.join(STATE_NAMES)}")
        return obj.lower()
    if isinstance(obj, dict):
        obj = _require(obj, "density", where)
        where += ".density"
    m = matrix_from_json(obj, where)
    if m.shape != (2, 2):
        raise CircuitError(where, f"single-qubit density matrix must be 2x2, got {m.shape}")
    try:
        check_density(m)
    except PauliError as exc:
        raise CircuitError(where, str(exc)) from None
    return m


def _parse_op(obj, where: str) -> Operation:
    gate = _require(obj, "gate", where)
    if not isinstance(gate, str):
        raise CircuitError(where + ".gate", "gate name must be a string")
    targets = _require(obj, "targets", where)
    if not isinstance(targets, list) or not all(isinstance(t, int) and not isinstance(t, bool) for t in targets):
        raise CircuitError(where + ".targets", "targets must be a list of integers")
    params: dict[str, Any] = {}
    for key, value in obj.items():
        if key in ("gate", "targets"):
            continue
        if key == "operators":
            if not isinstance(value, list) or not value:
                raise CircuitError(f"{where}.operators", "expected a non-empty list of matrices")
            value = tuple(matrix_from_json(k, f"{where}.operators[{a}]") for a, k in enumerate(value))
        elif key == "state":
            value = _parse_state(value, f"{where}.state")
        params[key] = value
    try:
        spec = ChannelSpec(gate, params)
        build_named(spec)
    except (ChannelError, PauliError) as exc:
        raise CircuitError(where, str(exc)) from None
    return Operation(spec, tuple(targets))


def _parse_observable(obj, width: int, where: str) -> Observable:
    kind = _require(obj, "kind", where)
    try:
        if kind == "basis_projector":
            obs = Observable.basis_projector(_require(obj, "qubits", where), _require(obj, "bits", where))
        elif kind == "product":
            factors = _require(obj, "factors", where)
            if not isinstance(factors, dict) or not factors:
                raise CircuitError(where + ".factors", "expected a non-empty object keyed by qubit")
            parsed = {}
            for key, f in factors.items():
                try:
                    q = int(key)
                except ValueError:
                    raise CircuitError(f"{where}.factors", f"qubit key {key!r} is not an integer") from None
                parsed[q] = f if isinstance(f, str) else matrix_from_json(f, f"{where}.factors.{key}")
            obs = Observable.product(parsed)
        elif kind == "pauli":
            obs = Observable.from_pauli(_require(obj, "pauli", where))
        elif kind == "dense_local":
            obs = Observable.dense_local(
                _require(obj, "qubits", where),
                matrix_from_json(_require(obj, "matrix", where), where + ".matrix"),
            )
        else:
            raise CircuitError(where + ".kind", f"unknown observable kind {kind!r}")
        obs.check_width(width)
    except PauliError as exc:
        raise CircuitError(where, str(exc)) from None
    return obs


def _parse(doc) -> Circuit:
    n = _require(doc, "num_qubits", "")
    if not isinstance(n, int) or isinstance(n, bool) or not 1 <= n <= MAX_QUBITS:
        raise CircuitError("num_qubits", f"expected an integer in [1, {MAX_QUBITS}]")
    initial = _require(doc, "initial", "")
    if not isinstance(initial, list) or len(initial) != n:
        raise CircuitError("initial", f"expected a list of {n} single-qubit states")
    states = tuple(_parse_state(s, f"initial[{q}]") for q, s in enumerate(initial))
    ops_doc = doc.get("ops", [])
    if not isinstance(ops_doc, list):
        raise CircuitError("ops", "expected a list")
    ops = []
    width = n
    for a, obj in enumerate(ops_doc):
        where = f"ops[{a}]"
        op = _parse_op(obj, where)
        n_in, n_out = channel_arity(op.channel)
        try:
            layout = step_layout(width, op.targets, n_in, n_out)
        except RegisterError as exc:
            raise CircuitError(where + ".targets", f"{exc} (register width here is {width})") from None
        width = layout.post_width
        if width > MAX_QUBITS:
            raise CircuitError(where, f"register grows beyond {MAX_QUBITS} qubits")
        ops.append(op)
    obs_doc = _require(doc, "observable", "")
    obs = _parse_observable(obs_doc, width, "observable")
    return Circuit(n, states, tuple(ops), obs, obs_doc)


def parse_circuit(text: str) -> Circuit:
    """Parse and validate a circuit JSON document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitError(f"column {exc.colno}", exc.msg, exc.lineno) from None
    try:
        return _parse(doc)
    except CircuitError as exc:
        raise CircuitError(exc.where, exc.message, _line_of(text, exc.where)) from None


def load_circuit(path) -> Circuit:
    with open(path) as fh:
        return parse_circuit(fh.read())
