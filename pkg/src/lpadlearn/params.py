"""Binary encoding of clause choice variables.

A ground clause with ``n`` values (explicit heads plus the implicit null)
is represented by ``n - 1`` Boolean variables.  Value ``k < n - 1`` is
``bits[0..k-1] = 0, bits[k] = 1`` and the last value is all zeros.  Bit
``k`` of clause ``i`` has ``P(bit = 1) = pi[i][k]``.
"""

from __future__ import annotations

import logging
from typing import Dict, Iterable, List, Sequence, Tuple

from .logic import ANNOTATION_TOL, Theory

log = logging.getLogger(__name__)


def binary_params(probs: Sequence[float]) -> List[float]:
    """Convert head annotations into the conditional bit probabilities."""
    if not probs:
        raise ValueError("annotation list must be non-empty")
    total = sum(probs)
    if total > 1.0 + ANNOTATION_TOL:
        raise ValueError(f"annotations sum to {total} > 1")
    n_bits = len(probs) if total < 1.0 - ANNOTATION_TOL else len(probs) - 1
    out = []
    rest = 1.0
    for k in range(n_bits):
        if rest <= 0.0:
            log.warning("no probability mass left for head %d; bit saturated at 0", k)
            out.append(0.0)
            continue
        pi = probs[k] / rest
        out.append(min(max(pi, 0.0), 1.0))
        rest *= 1.0 - out[-1]
    return out


def annotations_from_params(pis: Sequence[float], n_heads: int) -> List[float]:
    """Invert :func:`binary_params` for a clause with ``n_heads`` explicit heads.

    ``len(pis) == n_heads`` means the clause has a null value.
    """
    if len(pis) not in (n_heads, n_heads - 1):
        raise ValueError(f"{len(pis)} bits cannot encode {n_heads} heads")
    out = []
    rest = 1.0
    for pi in pis:
        out.append(pi * rest)
        rest *= 1.0 - pi
    if len(pis) == n_heads - 1:
        out.append(rest)
    return out


def value_probs(pis: Sequence[float]) -> List[float]:
    """Distribution of the multi-valued variable encoded by ``pis``."""
    out = []
    rest = 1.0
    for pi in pis:
        out.append(rest * pi)
        rest *= 1.0 - pi
    out.append(rest)
    return out


class ParamTable:
    """Bit probabilities per clause: ``table[i]`` is the list over bits."""

    def __init__(self, pis: Dict[int, Sequence[float]], n_heads: Dict[int, int]):
        self._pi = {i: list(v) for i, v in pis.items()}
        self._n_heads = dict(n_heads)

    @classmethod
    def from_theory(cls, theory: Theory) -> "ParamTable":
        return cls(
            {c.id: binary_params(c.annotations) for c in theory},
            {c.id: len(c.head) for c in theory},
        )

    def copy(self) -> "ParamTable":
        return ParamTable(self._pi, self._n_heads)

    def __getitem__(self, key: Tuple[int, int]) -> float:
        i, k = key
        return self._pi[i][k]

    def __setitem__(self, key: Tuple[int, int], value: float) -> None:
        i, k = key
        self._pi[i][k] = value

    def bits(self, i: int) -> List[float]:
        return self._pi[i]

    def n_bits(self, i: int) -> int:
        return len(self._pi[i])

    def n_values(self, i: int) -> int:
        return len(self._pi[i]) + 1

    def clauses(self) -> Iterable[int]:
        return self._pi.keys()

    def keys(self) -> Iterable[Tuple[int, int]]:
        for i, v in self._pi.items():
            for k in range(len(v)):
                yield (i, k)

    def value_probs(self, i: int) -> List[float]:
        return value_probs(self._pi[i])

    def annotations(self, i: int) -> List[float]:
        return annotations_from_params(self._pi[i], self._n_heads[i])

    def apply_to(self, theory: Theory) -> Theory:
        """Theory with head annotations recovered from the bit parameters."""
        return Theory(tuple(c.with_annotations(self.annotations(c.id)) for c in theory))

    def as_dict(self) -> Dict[int, Tuple[float, ...]]:
        return {i: tuple(v) for i, v in self._pi.items()}

    def __eq__(self, other) -> bool:
        return isinstance(other, ParamTable) and self._pi == other._pi

    def __repr__(self) -> str:
        return f"ParamTable({self._pi})"
