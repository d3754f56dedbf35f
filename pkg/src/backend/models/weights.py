"""
Bayesian bootstrap weight draws and the scaled-weight mode switch.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

SIMPLEX_TOL = 1e-12


class AtomKind(str, Enum):
    OBSERVATION = "observation"
    CLUSTER = "cluster"


class ScaledWeightMode(str, Enum):
    """How cluster weight totals f_q enter the scaled bootstrap.

    PRODUCT: flat Dirichlet draw g, then g_q f_q renormalised.
    PSEUDO: Dirichlet(f_1, ..., f_l), the pseudo-likelihood posterior.
    """

    PRODUCT = "product"
    PSEUDO = "pseudo"

    @classmethod
    def parse(cls, value: "str | ScaledWeightMode") -> "ScaledWeightMode":
        if isinstance(value, cls):
            return value
        aliases = {"product": cls.PRODUCT, "productnormalized": cls.PRODUCT,
                   "pseudo": cls.PSEUDO, "pseudoposterior": cls.PSEUDO}
        key = str(value).replace("_", "").replace("-", "").lower()
        if key not in aliases:
            raise ValueError(f"unknown weight mode {value!r}; expected 'product' or 'pseudo'")
        return aliases[key]


@dataclass(frozen=True, eq=False)
class BBWeightDraw:
    """One point on the probability simplex over atoms."""

    weights: np.ndarray
    atom_kind: AtomKind = AtomKind.CLUSTER

    def __post_init__(self):
        w = np.array(self.weights, dtype=float, copy=True)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weight draw must be a non-empty vector")
        if (w < 0).any():
            raise ValueError("weight draw has negative coordinates")
        total = w.sum()
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"weight draw sums to {total!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.weights.size
