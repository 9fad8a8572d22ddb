"""Pauli-string words and dense single-qubit operator tables.

Letters are encoded as integers 0=I, 1=X, 2=Y, 3=Z throughout the
library; dense backends look the matrices up in PAULI_MATS.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PAULI_CHARS = "IXYZ"

PAULI_MATS = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def letters_from_str(word: str) -> np.ndarray:
    """Convert e.g. "IXZZ" to the integer letter encoding."""
    try:
        return np.array([PAULI_CHARS.index(c) for c in word], dtype=np.uint8)
    except ValueError:
        raise ValueError(f"invalid Pauli word {word!r}") from None


@dataclass
class PauliString:
    """A length-L Pauli word with a sign, optionally carrying its sampling weight."""

    letters: np.ndarray
    sign: int = 1
    weight_prob: float | None = field(default=None, compare=False)

    def __post_init__(self):
        self.letters = np.asarray(self.letters, dtype=np.uint8)
        if self.sign not in (1, -1):
            raise ValueError("sign must be +-1")

    @classmethod
    def from_str(cls, word: str, sign: int = 1) -> "PauliString":
        return cls(letters_from_str(word), sign=sign)

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        prefix = "-" if self.sign < 0 else "+"
        return prefix + "".join(PAULI_CHARS[c] for c in self.letters)

    def dense(self) -> np.ndarray:
        """Full 2^L x 2^L matrix; only sensible for small L."""
        op = np.array([[self.sign]], dtype=complex)
        for c in self.letters:
            op = np.kron(op, PAULI_MATS[c])
        return op


def pauli_dense_on_sites(letters, num_sites: int) -> np.ndarray:
    """Dense matrix of a Pauli word on `num_sites` contiguous sites."""
    op = np.array([[1.0]], dtype=complex)
    for c in list(letters) + [0] * (num_sites - len(letters)):
        op = np.kron(op, PAULI_MATS[c])
    return op
