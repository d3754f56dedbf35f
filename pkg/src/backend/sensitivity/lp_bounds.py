"""
Extreme reweighted averages under a bounded density ratio.

Optimise sum_i omega_i z_i tau_i subject to 1/gamma <= z_i <= gamma and
sum_i omega_i z_i = 1. With a_i = omega_i z_i this is a box-constrained LP
with one equality, solved exactly by a greedy fill in tau order.
lp_bound_oracle enumerates the vertices of the same polytope and is only
meant for checking the greedy solver on small instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

SUM_TOL = 1e-9
ORACLE_MAX_UNITS = 12
VERTEX_TOL = 1e-12


class SensitivityError(ValueError):
    """Raised for invalid sensitivity-analysis inputs."""


@dataclass(frozen=True, eq=False)
class LPBound:
    value: float
    z: np.ndarray
    direction: str
    gamma: float


def _validate(tau, omega, gamma: float, direction: str) -> Tuple[np.ndarray, np.ndarray]:
    tau = np.asarray(tau, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if tau.ndim != 1 or tau.size == 0 or tau.shape != omega.shape:
        raise SensitivityError(f"tau ({tau.size}) and omega ({omega.size}) must be non-empty and aligned")
    if not np.all(np.isfinite(tau)):
        raise SensitivityError("effect values must be finite")
    if not np.all(np.isfinite(omega) & (omega >= 0)):
        raise SensitivityError("base weights must be nonnegative")
    if abs(omega.sum() - 1.0) > SUM_TOL:
        raise SensitivityError(f"base weights sum to {omega.sum()!r}, not 1")
    if not (np.isfinite(gamma) and gamma >= 1.0):
        raise SensitivityError(f"gamma must be finite and at least 1, got {gamma!r}")
    if direction not in ("min", "max"):
        raise SensitivityError(f"direction must be 'min' or 'max', got {direction!r}")
    return tau, omega


def lp_bound_greedy(tau: Sequence[float], omega: Sequence[float], gamma: float, direction: str = "max") -> LPBound:
    tau, omega = _validate(tau, omega, gamma, direction)
    a = omega / gamma
    caps = omega * gamma - a
    remaining = 1.0 - a.sum()
    order = np.argsort(-tau if direction == "max" else tau, kind="stable")
    cap_sorted = caps[order]
    before = np.cumsum(cap_sorted) - cap_sorted
    a[order] += np.clip(remaining - before, 0.0, cap_sorted)

    z = np.ones_like(omega)
    positive = omega > 0
    z[positive] = a[positive] / omega[positive]
    return LPBound(value=float(np.dot(a, tau)), z=z, direction=direction, gamma=float(gamma))


def lp_bound_oracle(tau: Sequence[float], omega: Sequence[float], gamma: float, direction: str = "max") -> float:
    """Vertex enumeration: n-1 coordinates at a bound, the last fixed by the equality."""
    tau, omega = _validate(tau, omega, gamma, direction)
    n = tau.size
    if n > ORACLE_MAX_UNITS:
        raise SensitivityError(f"vertex enumeration is limited to {ORACLE_MAX_UNITS} units, got {n}")
    lower, upper = omega / gamma, omega * gamma
    slack = VERTEX_TOL + abs(1.0 - omega.sum())
    if n == 1:
        return float(tau[0])

    bits = (np.arange(2 ** (n - 1))[:, None] >> np.arange(n - 1)) & 1
    best = -np.inf if direction == "max" else np.inf
    for k in range(n):
        others = np.delete(np.arange(n), k)
        fixed = np.where(bits == 1, upper[others], lower[others])
        free = 1.0 - fixed.sum(axis=1)
        feasible = (free >= lower[k] - slack) & (free <= upper[k] + slack)
        if not feasible.any():
            continue
        values = fixed[feasible] @ tau[others] + free[feasible] * tau[k]
        best = max(best, values.max()) if direction == "max" else min(best, values.min())
    return float(best)
