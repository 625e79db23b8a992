"""Brute-force Lindblad evolution on a truncated Fock space.

Integrates

    drho/dt = -i[H, rho] + Gamma (n_b + 1) D[b] rho + Gamma n_b D[b^dag] rho,
    H = omega b^dag b + A(t) b^dag^2 + A(t)^* b^2,   A = (Gamma g/4) e^{i theta} e^{-2 i omega t},

with fixed-step classical RK4 and compares against squeezed thermal states
built directly from (n_th, u, phi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import pump as _pump
from .analytic import check_grid, integrate, uniform_grid
from .errors import DimensionLimitError, DomainError, IntegrationError, TruncationError
from .pump import PumpEnvelope
from .sts import ModelParams, StsState

DIM_LADDER = (20, 30, 40, 60, 80, 120, 160)
DEFAULT_STEP = 1e-3
DEFAULT_TAIL_TOL = 1e-8
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-8
POSITIVITY_TOL = -1e-8
UNITARITY_TOL = 1e-8


def tail_levels(dim: int) -> int:
    """Number of top Fock levels counted as the truncation tail (10%)."""
    return max(1, math.ceil(0.1 * dim))


def ladder_ops(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Truncated annihilation and creation matrices."""
    if dim < 2:
        raise DomainError(f"dim must be >= 2, got {dim}")
    b = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    return b, b.conj().T


def thermal_density(n_th: float, dim: int) -> np.ndarray:
    """Truncated thermal state, renormalised to unit trace."""
    if n_th < 0:
        raise DomainError("n_th must be >= 0")
    k = np.arange(dim)
    if n_th == 0:
        w = (k == 0).astype(float)
    else:
        w = np.exp(k * math.log(n_th / (1 + n_th)))
    rho = np.diag(w / w.sum()).astype(complex)
    return rho


def fock_density(k: int, dim: int) -> np.ndarray:
    rho = np.zeros((dim, dim), complex)
    rho[k, k] = 1
    return rho


def check_density(rho: np.ndarray, tail_tol: float | None = None, t: float | None = None):
    """Raise if rho violates the density-matrix invariants; return diagnostics."""
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    if herm > HERMITIAN_TOL:
        raise DomainError(f"density matrix not Hermitian (defect {herm:.3e}) at t={t}")
    tr = float(np.trace(rho).real)
    if abs(tr - 1) > TRACE_TOL:
        raise DomainError(f"density matrix trace {tr!r} != 1 at t={t}")
    lam = float(np.linalg.eigvalsh(rho)[0])
    if lam < POSITIVITY_TOL:
        raise DomainError(f"density matrix has eigenvalue {lam:.3e} < 0 at t={t}")
    tail = float(np.diag(rho)[-tail_levels(rho.shape[0]):].real.sum())
    if tail_tol is not None and tail > tail_tol:
        raise TruncationError(f"tail mass {tail:.3e} exceeds {tail_tol:.1e} at t={t}",
                              t=t, dim=rho.shape[0], tail=tail)
    return {"hermitian_defect": herm, "trace": tr, "min_eig": lam, "tail": tail}


class _Generator:
    """Lindblad right-hand side using the banded structure of b and b^dag."""

    def __init__(self, dim: int, params: ModelParams, env: PumpEnvelope):
        self.dim = dim
        self.params = params
        self.env = env
        k = np.arange(dim, dtype=float)
        gam, nb = params.gamma_decay, params.n_b
        self.c_down = gam * (nb + 1)
        self.c_up = gam * nb
        bbdag = k + 1
        bbdag[-1] = 0.0  # truncated b b^dag
        self.decay = 0.5 * (self.c_down * k + self.c_up * bbdag)
        self.num = k
        self.s1 = np.sqrt(k[1:])                    # <k-1|b|k>
        self.s2 = np.sqrt(k[2:] * k[1:-1])          # <k-2|b^2|k>
        self.outer1 = np.outer(self.s1, self.s1)

    def pump(self, t: float) -> complex:
        p = self.params
        return complex(_pump.pump_product(self.env, p.theta, p.omega, t, p.gamma_decay))

    def __call__(self, t: float, rho: np.ndarray) -> np.ndarray:
        a = self.pump(t)
        omega = self.params.omega
        # K rho with K = -i H - (1/2)(c_down b^dag b + c_up b b^dag)
        krho = -self.decay[:, None] * rho
        if omega:
            krho -= 1j * omega * self.num[:, None] * rho
        if a:
            krho[2:] -= 1j * a * self.s2[:, None] * rho[:-2]        # b^dag^2 rho
            krho[:-2] -= 1j * np.conj(a) * self.s2[:, None] * rho[2:]  # b^2 rho
        out = krho + krho.conj().T
        out[:-1, :-1] += self.c_down * self.outer1 * rho[1:, 1:]     # b rho b^dag
        if self.c_up:
            out[1:, 1:] += self.c_up * self.outer1 * rho[:-1, :-1]   # b^dag rho b
        return out


def lindblad_rhs(rho: np.ndarray, t: float, params: ModelParams, env: PumpEnvelope) -> np.ndarray:
    """drho/dt for the pumped, damped cavity (hbar = 1)."""
    return _Generator(rho.shape[0], params, env)(t, rho)


def squeeze_operator_columns(xi: complex, work_dim: int, ncols: int) -> np.ndarray:
    """First ``ncols`` columns of S(xi) = exp[(xi^* b^2 - xi b^dag^2)/2] on ``work_dim`` levels.

    iK is diagonalised exactly: the generator only couples levels of equal
    parity, and after diagonal phase transforms each parity block of iK is a
    real symmetric tridiagonal matrix.
    """
    u, phi = abs(xi), float(np.angle(xi)) if xi != 0 else 0.0
    S = np.zeros((work_dim, ncols), complex)
    if u == 0:
        S[np.arange(ncols), np.arange(ncols)] = 1
        return S
    for par in (0, 1):
        levels = np.arange(par, work_dim, 2)
        cols = levels[levels < ncols]
        if cols.size == 0:
            continue
        m = levels.size
        if m == 1:
            S[levels[0], levels[0]] = 1
            continue
        kk = levels[:-1].astype(float)
        a = 0.5 * u * np.sqrt((kk + 1) * (kk + 2))
        lam, vec = eigh_tridiagonal(np.zeros(m), -a)
        j = np.arange(m)
        ev = vec * (1j ** (j % 4))[:, None]
        ncol = cols.size
        block = (ev * np.exp(-1j * lam)) @ ev[:ncol].conj().T
        ph = np.exp(0.5j * levels * phi)
        block = ph[:, None] * block * ph[:ncol].conj()[None, :]
        S[np.ix_(levels, cols)] = block
    return S


def construct_sts_density(n_th: float, xi: complex, dim: int,
                          tail_tol: float = DEFAULT_TAIL_TOL,
                          max_work_dim: int = 8192) -> np.ndarray:
    """S(xi) rho_T(n_th) S(xi)^dag projected onto the lowest ``dim`` Fock levels.

    The squeeze operator is built on a larger working space, enlarged until
    the relevant columns are unitary to 1e-8 within its lower 80%.
    Raises TruncationError if the projected state's tail mass exceeds tail_tol.
    """
    if n_th < 0:
        raise DomainError("n_th must be >= 0")
    if dim < 2:
        raise DomainError("dim must be >= 2")
    # thermal levels whose neglected remainder is far below the tail tolerance
    q = n_th / (1 + n_th)
    neglect = 1e-3 * tail_tol
    if q == 0:
        keep = 1
    else:
        keep = int(min(max_work_dim, math.ceil(math.log(neglect) / math.log(q)) + 1))
    keep = max(1, keep)
    p = (1 - q) * q ** np.arange(keep)
    work = max(2 * dim, math.ceil(1.5 * keep) + 20, 40)
    while True:
        S = squeeze_operator_columns(xi, work, keep)
        lower = int(0.8 * work)
        Sl = S[:lower]
        defect = float(np.max(np.abs(Sl.conj().T @ Sl - np.eye(keep))))
        if defect <= UNITARITY_TOL:
            break
        if 2 * work > max_work_dim:
            raise TruncationError(
                f"squeeze operator not unitary to {UNITARITY_TOL} below work dim {work} "
                f"(defect {defect:.2e})", dim=dim)
        work *= 2
    Sd = S[:dim]
    rho = (Sd * p) @ Sd.conj().T
    tr = float(np.trace(rho).real)
    tail = float(np.diag(rho)[-tail_levels(dim):].real.sum()) + max(0.0, 1 - tr)
    if tail > tail_tol:
        raise TruncationError(
            f"STS(n_th={n_th}, |xi|={abs(xi)}) has tail mass {tail:.3e} > {tail_tol:.1e} "
            f"at dim={dim}", dim=dim, tail=tail)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / tr


def squeeze_aligned_lo_phase(params: ModelParams, t):
    """Local-oscillator phase beta(t) for which X is the squeezed quadrature.

    With the default theta = -pi/2 this is exactly omega t.
    """
    return params.omega * np.asarray(t, float) - 0.5 * (params.theta + math.pi / 2)


@dataclass(frozen=True)
class OracleObservables:
    n: float
    dx2: float
    dy2: float
    g2: float | None
    purity: float
    trace: float
    min_eig: float
    tail: float


def observables(rho: np.ndarray, beta_phase: float = 0.0) -> OracleObservables:
    """Moments of rho; quadratures X, Y at local-oscillator phase beta.

    Uses b b^dag = b^dag b + 1 so the vacuum has Delta X^2 = Delta Y^2 = 1.
    """
    dim = rho.shape[0]
    k = np.arange(dim, dtype=float)
    diag = np.diag(rho).real
    tr = float(diag.sum())
    n = float(k @ diag)
    # Tr(b rho) and Tr(b^2 rho) live on the first and second sub-diagonals
    mean_b = complex(np.sum(np.sqrt(k[1:]) * np.diag(rho, -1)))
    mean_bb = complex(np.sum(np.sqrt(k[2:] * k[1:-1]) * np.diag(rho, -2)))
    z = mean_b * np.exp(1j * beta_phase)
    zz = mean_bb * np.exp(2j * beta_phase)
    x2 = 2 * zz.real + 2 * n + 1
    y2 = -2 * zz.real + 2 * n + 1
    dx2 = x2 - (2 * z.real) ** 2
    dy2 = y2 - (2 * z.imag) ** 2
    g2 = float(k * (k - 1) @ diag) / n**2 if n >= 1e-10 else None
    purity = float(np.vdot(rho, rho).real)
    lam = float(np.linalg.eigvalsh(rho)[0])
    tail = float(diag[-tail_levels(dim):].sum())
    return OracleObservables(n, float(dx2), float(dy2), g2, purity, tr, lam, tail)


def trace_distance(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """Half the trace norm of rho1 - rho2."""
    if rho1.shape != rho2.shape:
        raise DomainError(f"dimension mismatch: {rho1.shape} vs {rho2.shape}")
    lam = np.linalg.eigvalsh(rho1 - rho2)
    return 0.5 * float(np.sum(np.abs(lam)))


@dataclass(eq=False)
class OracleRun:
    params: ModelParams
    envelope: PumpEnvelope
    dim: int
    t: np.ndarray
    n: np.ndarray
    dx2: np.ndarray
    dy2: np.ndarray
    g2: np.ndarray
    purity: np.ndarray
    trace: np.ndarray
    min_eig: np.ndarray
    tail: np.ndarray
    snapshots: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def table(self) -> dict[str, np.ndarray]:
        return {"gamma_t": self.params.gamma_decay * self.t, "n": self.n, "dx2": self.dx2,
                "dy2": self.dy2, "g2": self.g2, "purity": self.purity, "trace": self.trace,
                "min_eig": self.min_eig, "tail": self.tail}


def _rk4_states(gen: _Generator, rho0: np.ndarray, t: np.ndarray, step: float):
    """Yield rho at every grid time using fixed RK4 substeps of at most ``step``."""
    rho = rho0.copy()
    yield rho
    for t0, t1 in zip(t[:-1], t[1:]):
        nsub = max(1, math.ceil((t1 - t0) / step - 1e-9))
        h = (t1 - t0) / nsub
        for j in range(nsub):
            s = t0 + j * h
            k1 = gen(s, rho)
            k2 = gen(s + 0.5 * h, rho + 0.5 * h * k1)
            k3 = gen(s + 0.5 * h, rho + 0.5 * h * k2)
            k4 = gen(s + h, rho + h * k3)
            rho = rho + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            rho = 0.5 * (rho + rho.conj().T)
            if not np.all(np.isfinite(rho)):
                raise IntegrationError(f"RK4 produced non-finite values at t={s + h}", s + h)
        yield rho


def evolve(rho0: np.ndarray, params: ModelParams, env: PumpEnvelope, t_grid, *,
           step: float = DEFAULT_STEP, tail_tol: float = DEFAULT_TAIL_TOL,
           lo_phase: Callable | None = None, snapshot_times=(), richardson: bool = True,
           callback: Callable | None = None) -> OracleRun:
    """Evolve rho0 under the master equation and record observables on t_grid.

    ``step`` is in units of 1/Gamma.  With ``richardson`` a second pass at
    twice the step gives an error estimate, stored in ``meta``.  ``callback``
    is called as ``callback(t, rho)`` at every grid time.
    """
    t = check_grid(t_grid)
    rho0 = np.asarray(rho0, complex)
    dim = rho0.shape[0]
    if rho0.shape != (dim, dim) or dim < 2:
        raise DomainError(f"rho0 must be a square matrix with dim >= 2, got {rho0.shape}")
    check_density(rho0, tail_tol, t=float(t[0]))
    h = step / params.gamma_decay
    gen = _Generator(dim, params, env)
    lo = lo_phase or (lambda s: squeeze_aligned_lo_phase(params, s))
    snap_idx = {int(np.argmin(np.abs(t - ts))): float(ts) for ts in snapshot_times}

    cols = {k: np.empty(t.size) for k in ("n", "dx2", "dy2", "g2", "purity", "trace",
                                           "min_eig", "tail")}
    snapshots = {}
    coarse = _rk4_states(gen, rho0, t, 2 * h) if richardson else None
    rich_err = 0.0
    for i, rho in enumerate(_rk4_states(gen, rho0, t, h)):
        obs = observables(rho, float(lo(t[i])))
        herm = float(np.max(np.abs(rho - rho.conj().T)))
        if obs.tail > tail_tol:
            raise TruncationError(
                f"tail mass {obs.tail:.3e} exceeds {tail_tol:.1e} at t={t[i]:.6g} with dim={dim}; "
                "increase the truncation dimension", t=float(t[i]), dim=dim, tail=obs.tail)
        if abs(obs.trace - 1) > TRACE_TOL or obs.min_eig < POSITIVITY_TOL or herm > HERMITIAN_TOL:
            raise IntegrationError(
                f"density-matrix invariant violated at t={t[i]:.6g}: trace={obs.trace!r}, "
                f"min_eig={obs.min_eig:.3e}, hermitian defect={herm:.3e}", float(t[i]))
        for k in cols:
            v = getattr(obs, k)
            cols[k][i] = np.nan if v is None else v
        if coarse is not None:
            rich_err = max(rich_err, float(np.max(np.abs(rho - next(coarse)))) / 15)
        if i in snap_idx:
            snapshots[snap_idx[i]] = rho.copy()
        if callback is not None:
            callback(float(t[i]), rho)
    meta = {"integrator": "RK4", "step": step, "tail_tol": tail_tol}
    if richardson:
        meta["richardson_error"] = rich_err
    return OracleRun(params, env, dim, t, snapshots=snapshots, meta=meta, **cols)


def analytic_population_peak(params: ModelParams, env: PumpEnvelope, horizon: float,
                             n_th0: float | None = None, dt: float = 0.01) -> float:
    nth0 = params.n_b if n_th0 is None else n_th0
    grid = uniform_grid(horizon * params.gamma_decay, dt) / params.gamma_decay
    traj = integrate(StsState(0.0, 0.0, nth0), params, env, grid)
    return float(np.max(traj.n))


def auto_dim(params: ModelParams, env: PumpEnvelope, horizon: float,
             tail_tol: float = DEFAULT_TAIL_TOL, n_th0: float | None = None,
             trial_step: float = 5e-3, dt_out: float = 0.05) -> int:
    """Smallest ladder dimension whose trial evolution keeps the tail below tail_tol.

    The starting rung is estimated as ceil(10 (n_max + 1)) from the analytic
    population maximum over the horizon; the initial state is thermal(n_th0),
    which defaults to the bath population.
    """
    nth0 = params.n_b if n_th0 is None else n_th0
    n_max = analytic_population_peak(params, env, horizon, nth0)
    dim0 = math.ceil(10 * (n_max + 1))
    if dim0 > DIM_LADDER[-1]:
        raise DimensionLimitError(
            f"analytic population reaches {n_max:.3g}; needs dim ~{dim0} > {DIM_LADDER[-1]}. "
            "Shorten the horizon.", dim=dim0)
    grid = uniform_grid(horizon * params.gamma_decay, dt_out) / params.gamma_decay
    last = None
    for dim in (d for d in DIM_LADDER if d >= dim0):
        rho0 = thermal_density(nth0, dim)
        try:
            evolve(rho0, params, env, grid, step=trial_step, tail_tol=tail_tol, richardson=False)
        except TruncationError as exc:
            last = exc
            continue
        return dim
    raise DimensionLimitError(f"no dimension up to {DIM_LADDER[-1]} keeps the tail below "
                              f"{tail_tol:.1e} ({last})", dim=DIM_LADDER[-1])


def write_snapshot(path: str | Path, rho: np.ndarray, t: float) -> None:
    """Text dump: header ``dim=N t=<t>``, then one row per line of ``re,im`` pairs."""
    dim = rho.shape[0]
    lines = [f"dim={dim} t={t!r}"]
    for row in rho:
        lines.append(" ".join(f"{z.real:.17e},{z.imag:.17e}" for z in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_snapshot(path: str | Path) -> tuple[np.ndarray, float]:
    text = Path(path).read_text().splitlines()
    try:
        head = dict(item.split("=", 1) for item in text[0].split())
        dim, t = int(head["dim"]), float(head["t"])
    except (IndexError, KeyError, ValueError):
        raise DomainError(f"{path}: bad snapshot header {text[:1]}") from None
    rows = text[1:1 + dim]
    if len(rows) != dim:
        raise DomainError(f"{path}: expected {dim} rows, got {len(rows)}")
    rho = np.empty((dim, dim), complex)
    for i, line in enumerate(rows):
        pairs = line.split()
        if len(pairs) != dim:
            raise DomainError(f"{path}: row {i} has {len(pairs)} entries, expected {dim}")
        for j, pr in enumerate(pairs):
            re, im = pr.split(",")
            rho[i, j] = complex(float(re), float(im))
    return rho, t
