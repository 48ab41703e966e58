"""Qubit bookkeeping for channels that change the register width.

A channel with ``n_in`` inputs and ``n_out`` outputs acts on ``targets``
(``n_in`` register positions, in channel order).  Conventions:

* ``n_out <= n_in``: the leading ``n_in - n_out`` targets are removed from
  the register (higher positions shift down); outputs land on the remaining
  targets in order.
* ``n_out > n_in``: ``n_out - n_in`` fresh qubits are appended at the end of
  the register; the channel's leading outputs go there, the rest land on the
  targets in order.

Structural channels in :mod:`pauli_shuffle.channels` are built so that
discarded and freshly prepared qubits are always the leading ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence


class RegisterError(ValueError):
    pass


@dataclass(frozen=True)
class StepLayout:
    pre_width: int
    post_width: int
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]
    passthrough_pre: tuple[int, ...]
    passthrough_post: tuple[int, ...]

    @property
    def n_in(self) -> int:
        return len(self.inputs)

    @property
    def n_out(self) -> int:
        return len(self.outputs)

    def relabel(self, labels: Sequence[str], fresh: str = "new") -> list[str]:
        """Carry per-position labels through the step."""
        post = [""] * self.post_width
        for a, b in zip(self.passthrough_pre, self.passthrough_post):
            post[b] = labels[a]
        n, m = self.n_in, self.n_out
        if m <= n:
            for k, b in enumerate(self.outputs):
                post[b] = labels[self.inputs[n - m + k]]
        else:
            extra = m - n
            for k, b in enumerate(self.outputs):
                post[b] = f"{fresh}{k}" if k < extra else labels[self.inputs[k - extra]]
        return post


def step_layout(width: int, targets: Sequence[int], n_in: int, n_out: int) -> StepLayout:
    targets = tuple(int(t) for t in targets)
    if len(targets) != n_in:
        raise RegisterError(f"channel takes {n_in} qubits but {len(targets)} targets were given")
    if len(set(targets)) != len(targets):
        raise RegisterError(f"repeated target in {list(targets)}")
    for t in targets:
        if not 0 <= t < width:
            raise RegisterError(f"qubit {t} out of range for a {width}-qubit register")
    others = [q for q in range(width) if q not in targets]
    if n_out <= n_in:
        dropped = set(targets[: n_in - n_out])
        survivors = [q for q in range(width) if q not in dropped]
        newpos = {q: i for i, q in enumerate(survivors)}
        return StepLayout(
            pre_width=width,
            post_width=len(survivors),
            inputs=targets,
            outputs=tuple(newpos[q] for q in targets[n_in - n_out :]),
            passthrough_pre=tuple(others),
            passthrough_post=tuple(newpos[q] for q in others),
        )
    extra = n_out - n_in
    return StepLayout(
        pre_width=width,
        post_width=width + extra,
        inputs=targets,
        outputs=tuple(range(width, width + extra)) + targets,
        passthrough_pre=tuple(others),
        passthrough_post=tuple(others),
    )
