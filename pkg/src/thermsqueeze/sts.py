"""Squeezed-thermal-state parameters and their closed-form observables.

A squeezed thermal state is S(xi) rho_T(n_th) S(xi)^dagger with xi = u e^{i phi}.
Quadrature variances use the convention in which the vacuum has
Delta X^2 = Delta Y^2 = 1 (not 1/2).  hbar = 1 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

#: Below this the g2 denominator (2 n_th + 1) cosh 2u - 1 counts as zero (vacuum).
G2_DENOM_TOL = 1e-12


@dataclass(frozen=True)
class StsState:
    """Instantaneous squeezed-thermal-state parameters."""

    u: float
    phi: float
    n_th: float

    def __post_init__(self):
        if not self.u >= 0:
            raise DomainError(f"squeezing amplitude must be >= 0, got u={self.u}")
        if not self.n_th >= 0:
            raise DomainError(f"thermal population must be >= 0, got n_th={self.n_th}")
        if not math.isfinite(self.phi):
            raise DomainError(f"squeezing phase must be finite, got phi={self.phi}")

    @property
    def xi(self) -> complex:
        return self.u * complex(math.cos(self.phi), math.sin(self.phi))


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the cavity and its bath.

    ``theta`` is the (time-independent) phase of the pump product alpha*gamma.
    The default -pi/2 puts the initial squeeze phase at zero, so the state is
    squeezed in X for the local-oscillator phase beta(t) = omega t.
    """

    gamma_decay: float = 1.0
    n_b: float = 0.0
    omega: float = 0.0
    theta: float = -math.pi / 2

    def __post_init__(self):
        if not self.gamma_decay > 0:
            raise DomainError(f"decay rate must be > 0, got {self.gamma_decay}")
        if not self.n_b >= 0:
            raise DomainError(f"bath population must be >= 0, got {self.n_b}")
        if not self.omega >= 0:
            raise DomainError(f"cavity frequency must be >= 0, got {self.omega}")
        if not math.isfinite(self.theta):
            raise DomainError(f"pump phase must be finite, got {self.theta}")

    def with_nb(self, n_b: float) -> "ModelParams":
        return ModelParams(self.gamma_decay, n_b, self.omega, self.theta)


@dataclass(frozen=True)
class ObservableRecord:
    t: float
    g: float
    u: float
    phi: float
    n_th: float
    n: float
    dx2: float
    dy2: float
    g2: float | None

    def __post_init__(self):
        if not (self.dx2 > 0 and self.dy2 > 0):
            raise DomainError(f"non-positive variance at t={self.t}")
        if self.dx2 * self.dy2 < 1 - 1e-12:
            raise DomainError(f"uncertainty product below 1 at t={self.t}")
        if self.n < self.n_th - 1e-12 * max(1.0, self.n_th):
            raise DomainError(f"total population below thermal population at t={self.t}")


def quad_variances(state: StsState) -> tuple[float, float]:
    """Return (Delta X^2, Delta Y^2) = (2 n_th + 1) e^{-+2u}."""
    w = 2 * state.n_th + 1
    return w * math.exp(-2 * state.u), w * math.exp(2 * state.u)


def total_population(state: StsState) -> float:
    return state.n_th * math.cosh(2 * state.u) + math.sinh(state.u) ** 2


def g2_of_state(state: StsState) -> float | None:
    """Equal-time second-order coherence of a squeezed thermal state.

    Returns None when the state is (numerically) the vacuum, where g2 is
    ill-defined.
    """
    w = 2 * state.n_th + 1
    # (2 n_th + 1) cosh 2u - 1 == 2n, evaluated without cancellation
    denom = 2 * total_population(state)
    if denom < G2_DENOM_TOL:
        return None
    return 2 + (w * math.sinh(2 * state.u)) ** 2 / denom**2


def g2_array(u, n_th):
    """Vectorised g2_of_state; undefined entries are NaN."""
    u = np.asarray(u, dtype=float)
    n_th = np.asarray(n_th, dtype=float)
    w = 2 * n_th + 1
    denom = 2 * (n_th * np.cosh(2 * u) + np.sinh(u) ** 2)
    ok = denom >= G2_DENOM_TOL
    safe = np.where(ok, denom, 1.0)
    return np.where(ok, 2 + (w * np.sinh(2 * u)) ** 2 / safe**2, np.nan)


def nth0_from_nth(n_th: float, n_b: float) -> float:
    """Zero-bath thermal population, defined by 2n_th+1 = (2n_b+1)(2n_th0+1).

    Negative results are legitimate when n_th < n_b.
    """
    if n_th < 0 or n_b < 0:
        raise DomainError("n_th and n_b must be >= 0")
    return (n_th - n_b) / (2 * n_b + 1)


def nth_from_nth0(n_th0: float, n_b: float) -> float:
    if not 2 * n_th0 + 1 > 0:
        raise DomainError(f"2*n_th0 + 1 must be > 0, got n_th0={n_th0}")
    if n_b < 0:
        raise DomainError("n_b must be >= 0")
    return n_b + (2 * n_b + 1) * n_th0
