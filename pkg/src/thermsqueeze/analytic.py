"""Time evolution of squeezed-thermal-state parameters and closed-form results.

The reduced system (unchirped pump, phase locked analytically) is

    dn_th/dt = Gamma [n_b cosh 2u + sinh^2 u - n_th]
    du/dt    = Gamma g(t)/2 - (Gamma/2) sinh 2u (2 n_b + 1) / (2 n_th + 1)
    phi(t)   = theta + pi/2 - 2 omega t

and the quadrature variances obey the linear equations

    d(Delta X^2)/dt = Gamma [(2 n_b + 1) - (1 + g(t)) Delta X^2]
    d(Delta Y^2)/dt = Gamma [(2 n_b + 1) - (1 - g(t)) Delta Y^2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import pump as _pump
from .errors import DomainError, IntegrationError, NoThresholdError, SingularityError
from .pump import PumpEnvelope
from .sts import ModelParams, ObservableRecord, StsState, g2_array, nth_from_nth0

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
# smallest u for which the full phase equation is evaluated
FULL_MODE_MIN_U = 1e-12
PEAK_REL_THRESHOLD = 1e-8


def _phi1(z):
    """(e^z - 1)/z, equal to 1 at z = 0."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-300
    return np.where(small, 1.0, np.expm1(z) / np.where(small, 1.0, z))


def check_grid(t_grid, *, from_zero=True) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 1:
        raise DomainError("time grid must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(t)):
        raise DomainError("time grid contains non-finite values")
    if np.any(np.diff(t) <= 0):
        raise DomainError("time grid must be strictly increasing")
    if from_zero and t[0] != 0:
        raise DomainError(f"time grid must start at 0, starts at {t[0]}")
    return t


def uniform_grid(t_max: float, dt: float) -> np.ndarray:
    """0, dt, 2 dt, ... up to t_max (inclusive when t_max is a multiple of dt)."""
    if not (t_max > 0 and dt > 0):
        raise DomainError("t_max and dt must be > 0")
    n = int(math.floor(t_max / dt + 1e-9))
    return np.arange(n + 1) * dt


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time series of the STS parameters and derived observables.

    Arrays are aligned with ``t``; undefined g2 entries are NaN.
    """

    t: np.ndarray
    g: np.ndarray
    u: np.ndarray
    phi: np.ndarray
    n_th: np.ndarray
    params: ModelParams
    envelope: PumpEnvelope
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.t) <= 0):
            raise DomainError("trajectory times must be strictly increasing")
        prod = self.dx2 * self.dy2
        if np.any(~(prod >= 1 - 1e-12)):
            i = int(np.argmin(prod))
            raise DomainError(f"uncertainty product {prod[i]} < 1 at t={self.t[i]}")

    @property
    def n(self):
        return self.n_th * np.cosh(2 * self.u) + np.sinh(self.u) ** 2

    @property
    def dx2(self):
        return (2 * self.n_th + 1) * np.exp(-2 * self.u)

    @property
    def dy2(self):
        return (2 * self.n_th + 1) * np.exp(2 * self.u)

    @property
    def g2(self):
        return g2_array(self.u, self.n_th)

    def __len__(self):
        return self.t.size

    def state(self, i: int) -> StsState:
        return StsState(u=max(float(self.u[i]), 0.0), phi=float(self.phi[i]),
                        n_th=max(float(self.n_th[i]), 0.0))

    def records(self) -> list[ObservableRecord]:
        n, dx2, dy2, g2 = self.n, self.dx2, self.dy2, self.g2
        return [
            ObservableRecord(
                t=float(self.t[i]), g=float(self.g[i]), u=float(self.u[i]),
                phi=float(self.phi[i]), n_th=float(self.n_th[i]), n=float(n[i]),
                dx2=float(dx2[i]), dy2=float(dy2[i]),
                g2=None if math.isnan(g2[i]) else float(g2[i]),
            )
            for i in range(self.t.size)
        ]

    def table(self, gamma_decay: float | None = None) -> dict[str, np.ndarray]:
        """Columns keyed by name, with time reported as Gamma t."""
        gam = self.params.gamma_decay if gamma_decay is None else gamma_decay
        return {
            "gamma_t": gam * self.t, "g": self.g, "n": self.n, "u": self.u,
            "phi": self.phi, "n_th": self.n_th, "dx2": self.dx2, "dy2": self.dy2,
            "g2": self.g2,
        }


@dataclass(frozen=True, eq=False)
class Nth0Trajectory:
    """Solution of the bath-free form of the reduced system (u, n_th0)."""

    t: np.ndarray
    g: np.ndarray
    u: np.ndarray
    n_th0: np.ndarray
    params: ModelParams
    envelope: PumpEnvelope
    meta: dict = field(default_factory=dict)

    def to_trajectory(self, n_b: float | None = None) -> Trajectory:
        """Map back to physical thermal population for bath population n_b."""
        params = self.params if n_b is None else self.params.with_nb(n_b)
        nb = params.n_b
        n_th = nb + (2 * nb + 1) * self.n_th0
        phi = analytic_phase(params, self.t)
        return Trajectory(self.t, self.g, self.u, phi, n_th, params, self.envelope, dict(self.meta))


def analytic_phase(params: ModelParams, t):
    return params.theta + math.pi / 2 - 2 * params.omega * np.asarray(t, dtype=float)


def sts_derivatives(state: StsState, params: ModelParams, g_t: float,
                    mode: str = "reduced", t: float = 0.0) -> tuple[float, float, float]:
    """Right-hand side (dn_th/dt, du/dt, dphi/dt) at one instant.

    ``mode="reduced"`` assumes the unchirped phase lock; ``mode="full"``
    evaluates the general equations with the complex pump product at time t
    and requires u > 0.
    """
    gam, nb = params.gamma_decay, params.n_b
    u, n_th = state.u, state.n_th
    dn = gam * (nb * math.cosh(2 * u) + math.sinh(u) ** 2 - n_th)
    damp = 0.5 * gam * math.sinh(2 * u) * (2 * nb + 1) / (2 * n_th + 1)
    if mode == "reduced":
        return dn, 0.5 * gam * g_t - damp, -2 * params.omega
    if mode != "full":
        raise ValueError(f"mode must be 'reduced' or 'full', got {mode!r}")
    if u < FULL_MODE_MIN_U:
        raise SingularityError(f"full phase equation is singular at u={u}")
    ag = 0.25 * gam * g_t * complex(math.cos(params.theta - 2 * params.omega * t),
                                    math.sin(params.theta - 2 * params.omega * t))
    p = ag * complex(math.cos(state.phi), -math.sin(state.phi))
    du = -2 * p.imag - damp
    dphi = -2 * params.omega + 4 * p.real / math.tanh(2 * u)
    return dn, du, dphi


def _solve(rhs, y0, t, rtol, atol, label):
    span = (float(t[0]), float(t[-1]))
    if span[1] == span[0]:
        return np.asarray(y0, dtype=float)[:, None], {"nfev": 0}
    sol = solve_ivp(rhs, span, y0, method="RK45", t_eval=t, rtol=rtol, atol=atol)
    if sol.status != 0:
        t_fail = float(sol.t[-1]) if sol.t.size else span[0]
        raise IntegrationError(f"{label} integration failed near t={t_fail}: {sol.message}",
                               t_fail=t_fail)
    return sol.y, {"nfev": int(sol.nfev), "method": "RK45", "rtol": rtol, "atol": atol}


def integrate(initial: StsState, params: ModelParams, env: PumpEnvelope, t_grid,
              rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
              mode: str = "reduced") -> Trajectory:
    """Integrate the STS equations from ``initial`` and sample on ``t_grid``.

    In reduced mode the phase column is the analytic phase-locked value and
    the initial phase is ignored.  Full mode integrates all three equations
    and needs ``initial.u > 0``.
    """
    t = check_grid(t_grid)
    gam, nb = params.gamma_decay, params.n_b
    g_of = env if env.gamma_decay == gam else _rescaled(env, gam)

    if mode == "reduced":
        def rhs(s, y):
            n_th, u = y
            return (gam * (nb * math.cosh(2 * u) + math.sinh(u) ** 2 - n_th),
                    0.5 * gam * _pump.eval_g(g_of, s)
                    - 0.5 * gam * math.sinh(2 * u) * (2 * nb + 1) / (2 * n_th + 1))

        y, meta = _solve(rhs, [initial.n_th, initial.u], t, rtol, atol, "reduced")
        n_th, u = y
        phi = analytic_phase(params, t)
    elif mode == "full":
        if initial.u < FULL_MODE_MIN_U:
            raise SingularityError("full mode requires u(0) > 0")

        def rhs(s, y):
            st = _Raw(y[1], y[2], y[0])
            return sts_derivatives(st, params, _pump.eval_g(g_of, s), "full", s)

        y, meta = _solve(rhs, [initial.n_th, initial.u, initial.phi], t, rtol, atol, "full")
        n_th, u, phi = y
    else:
        raise ValueError(f"mode must be 'reduced' or 'full', got {mode!r}")
    meta["mode"] = mode
    return Trajectory(t, np.asarray(_pump.eval_g(g_of, t), dtype=float), u, phi, n_th,
                      params, env, meta)


@dataclass
class _Raw:
    # unvalidated state for use inside the integrator
    u: float
    phi: float
    n_th: float


def _rescaled(env: PumpEnvelope, gamma_decay: float) -> PumpEnvelope:
    if env.kind != "gaussian":
        return env
    return _pump.gaussian(env.g0, env.sigma, env.t_o, gamma_decay)


def integrate_reduced_nth0(initial_nth0: float, env: PumpEnvelope, params: ModelParams, t_grid,
                           rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
                           u0: float = 0.0) -> Nth0Trajectory:
    """Integrate the bath-free pair (n_th0, u); n_b never enters."""
    if not 2 * initial_nth0 + 1 > 0:
        raise DomainError(f"2*n_th0 + 1 must be > 0, got n_th0={initial_nth0}")
    t = check_grid(t_grid)
    gam = params.gamma_decay
    g_of = env if env.gamma_decay == gam else _rescaled(env, gam)

    def rhs(s, y):
        m, u = y
        return (gam * (math.sinh(u) ** 2 - m),
                0.5 * gam * _pump.eval_g(g_of, s) - 0.5 * gam * math.sinh(2 * u) / (2 * m + 1))

    y, meta = _solve(rhs, [initial_nth0, u0], t, rtol, atol, "reduced n_th0")
    return Nth0Trajectory(t, np.asarray(_pump.eval_g(g_of, t), dtype=float), y[1], y[0],
                          params, env, meta)


@dataclass(frozen=True)
class SteadyState:
    """Constant-pump steady state.  Divergent quantities are +inf and
    ``divergent`` is set (g0 >= 1); undefined g2 is None."""

    g0: float
    n_b: float
    u_ss: float
    n_th_ss: float
    n_ss: float
    dx2_min: float
    dy2_max: float
    g2_ss: float | None
    divergent: bool


def steady_state(g0: float, params: ModelParams) -> SteadyState:
    if not g0 >= 0:
        raise DomainError(f"g0 must be >= 0, got {g0}")
    nb = params.n_b
    dx2_min = (2 * nb + 1) / (1 + g0)
    if g0 >= 1:
        inf = math.inf
        return SteadyState(g0, nb, inf, inf, inf, dx2_min, inf, None, True)
    u_ss = 0.5 * math.atanh(g0)
    n_th_ss = nb + math.sinh(u_ss) ** 2 * (2 * nb + 1)
    n_ss = (2 * nb + g0**2) / (2 * (1 - g0**2))
    denom = 2 * nb + g0**2
    g2_ss = None if denom < 1e-12 else 2 + ((2 * nb + 1) * g0 / denom) ** 2
    return SteadyState(g0, nb, u_ss, n_th_ss, n_ss, dx2_min, (2 * nb + 1) / (1 - g0), g2_ss, False)


def quad_closed_form_constant(g0: float, params: ModelParams, dx2_0: float, dy2_0: float, t):
    """Exact (Delta X^2, Delta Y^2) at time(s) t >= 0 under a constant pump g0.

    Written as y0 e^{-a t} + c t (1 - e^{-a t})/(a t), which equals
    A + (y0 - A) e^{-a t} for a != 0 and reduces to y0 + c t at g0 = 1.
    """
    gam, c = params.gamma_decay, params.gamma_decay * (2 * params.n_b + 1)
    t = np.asarray(t, dtype=float)
    ax, ay = gam * (1 + g0), gam * (1 - g0)
    dx2 = dx2_0 * np.exp(-ax * t) + c * t * _phi1(-ax * t)
    dy2 = dy2_0 * np.exp(-ay * t) + c * t * _phi1(-ay * t)
    if t.ndim == 0:
        return float(dx2), float(dy2)
    return dx2, dy2


def quad_closed_form_general(env: PumpEnvelope, params: ModelParams, dx2_0: float, t_grid,
                             dy2_0: float | None = None, max_substep: float = 2.5e-4):
    """(Delta X^2, Delta Y^2) series on ``t_grid`` for an arbitrary envelope.

    Each sub-interval of length h is stepped exactly with the pump frozen at
    its midpoint value gm: y <- y e^{-a h} + c h phi1(-a h), a = Gamma(1 +- gm).
    This never forms the growing integrating factor, so it cannot overflow.
    Sub-intervals are at most ``max_substep`` long (in Gamma t units).
    Above threshold the anti-squeezed variance grows without bound and may
    reach inf on very long grids; Delta X^2 always stays finite.
    """
    t = check_grid(t_grid, from_zero=False)
    dy2_0 = dx2_0 if dy2_0 is None else dy2_0
    gam, c = params.gamma_decay, params.gamma_decay * (2 * params.n_b + 1)
    g_of = env if env.gamma_decay == gam else _rescaled(env, gam)

    dt = np.diff(t)
    n_sub = np.maximum(1, np.ceil(gam * dt / max_substep - 1e-9).astype(int))
    h = np.repeat(dt / n_sub, n_sub)
    start = np.repeat(t[:-1], n_sub)
    offset = np.concatenate([np.arange(k) for k in n_sub]) if dt.size else np.zeros(0)
    mid = start + (offset + 0.5) * h
    gm = np.asarray(_pump.eval_g(g_of, mid), dtype=float)
    out_idx = np.cumsum(n_sub)

    def run(y0, sign):
        a = gam * (1 + sign * gm)
        decay = np.exp(-a * h)
        src = c * h * _phi1(-a * h)
        ys = np.empty(h.size + 1)
        ys[0] = y = y0
        with np.errstate(over="ignore"):
            for k in range(h.size):
                y = y * decay[k] + src[k]
                ys[k + 1] = y
        return np.concatenate([[y0], ys[out_idx]])

    return run(dx2_0, +1.0), run(dy2_0, -1.0)


def thermal_relaxation(n_th_0: float, params: ModelParams, t):
    """Unpumped thermal population n_b + (n_th(0) - n_b) e^{-Gamma t}."""
    if n_th_0 < 0:
        raise DomainError("n_th_0 must be >= 0")
    val = params.n_b + (n_th_0 - params.n_b) * np.exp(-params.gamma_decay * np.asarray(t, float))
    return float(val) if np.ndim(t) == 0 else val


def anti_squeeze_at_threshold(g0: float, params: ModelParams) -> tuple[float, float]:
    """Delta Y^2 when Delta X^2 first reaches 1, and that time tau_1.

    Assumes an equilibrium start (both variances 2 n_b + 1) and constant pump.
    """
    nb, gam = params.n_b, params.gamma_decay
    if not g0 > 2 * nb:
        raise NoThresholdError(f"Delta X^2 never reaches 1 for g0={g0} <= 2 n_b={2 * nb}")
    ratio = (g0 - 2 * nb) / (g0 * (2 * nb + 1))
    tau1 = -math.log(ratio) / (gam * (1 + g0))
    if g0 == 1:
        return (2 * nb + 1) * (1 + gam * tau1), tau1
    expo = (1 - g0) / (1 + g0)
    dy2 = (2 * nb + 1) / (1 - g0) * (-math.expm1(expo * math.log(ratio)))
    return dy2, tau1


@dataclass(frozen=True)
class CoherenceProfile:
    """Summary of g2(t) under a constant pump from the equilibrium state."""

    g0: float
    n_b: float
    g2_ss: float | None
    g2_max: float
    tau_p: float | None
    g2_peak: float | None

    @property
    def peaked(self) -> bool:
        return self.tau_p is not None


def default_peak_horizon(g0: float, params: ModelParams) -> float:
    return 20.0 / (params.gamma_decay * (1 - g0))


def coherence_profile(g0: float, params: ModelParams, horizon: float | None = None,
                      dt_out: float = 0.01, rtol: float = DEFAULT_RTOL,
                      atol: float = DEFAULT_ATOL, trajectory: Trajectory | None = None
                      ) -> CoherenceProfile:
    """Integrate g2(t) from n_th(0) = n_b and locate its interior maximum.

    From the vacuum (n_b = 0) g2 diverges as t -> 0+, so the peak is reported
    at tau_p = 0 with infinite height whenever the pump is on.
    """
    if not 0 <= g0 < 1:
        raise DomainError(f"peak search needs a steady state, 0 <= g0 < 1, got {g0}")
    nb = params.n_b
    ss = steady_state(g0, params)
    if trajectory is None:
        h = default_peak_horizon(g0, params) if horizon is None else horizon
        grid = uniform_grid(h * params.gamma_decay, dt_out) / params.gamma_decay
        trajectory = integrate(StsState(0.0, 0.0, nb), params, _pump.constant(g0), grid,
                               rtol=rtol, atol=atol)
    g2 = trajectory.g2
    if nb == 0 and g0 > 0:
        return CoherenceProfile(g0, nb, ss.g2_ss, math.inf, 0.0, math.inf)
    finite = np.where(np.isnan(g2), -np.inf, g2)
    i = int(np.argmax(finite))
    g2_max = float(finite[i])
    ref = ss.g2_ss
    interior = 0 < i < g2.size - 1
    if ref is None or not interior or not (g2_max - ref) > PEAK_REL_THRESHOLD * ref:
        return CoherenceProfile(g0, nb, ref, g2_max, None, None)
    t = trajectory.t
    y0, y1, y2 = finite[i - 1], finite[i], finite[i + 1]
    curv = y0 - 2 * y1 + y2
    delta = 0.5 * (y0 - y2) / curv if curv < 0 else 0.0
    tau = t[i] + delta * (t[i + 1] - t[i])
    peak = y1 - 0.25 * (y0 - y2) * delta
    return CoherenceProfile(g0, nb, ref, g2_max, float(tau), float(peak))


def g2_peak_time(g0: float, params: ModelParams, horizon: float | None = None,
                 dt_out: float = 0.01, rtol: float = DEFAULT_RTOL,
                 atol: float = DEFAULT_ATOL) -> tuple[float, float] | None:
    """(tau_p, g2_peak) if g2(t) overshoots its steady value, else None."""
    prof = coherence_profile(g0, params, horizon, dt_out, rtol, atol)
    if prof.tau_p is None:
        return None
    return prof.tau_p, prof.g2_peak
