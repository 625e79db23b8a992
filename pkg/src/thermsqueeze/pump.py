"""Dimensionless pump-ratio envelopes g(t) = 4|alpha_0(t) gamma| / Gamma.

Times passed to an envelope are physical times; the Gaussian width and
centre are given in units of 1/Gamma, so the envelope needs the decay rate
to evaluate (it defaults to 1, i.e. times already in Gamma t units).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EnvelopeError

KINDS = ("constant", "gaussian", "sampled")


@dataclass(frozen=True)
class PumpEnvelope:
    kind: str
    g0: float = 0.0
    sigma: float | None = None
    t_o: float | None = None
    samples: tuple[tuple[float, float], ...] = field(default=())
    gamma_decay: float = 1.0

    def __post_init__(self):
        problems = _violations(self)
        if problems:
            raise EnvelopeError("; ".join(problems))

    def __call__(self, t):
        return eval_g(self, t)

    @property
    def peak_time(self) -> float:
        """Time at which g(t) is largest (first occurrence for sampled data)."""
        if self.kind == "gaussian":
            return self.t_o / self.gamma_decay
        if self.kind == "sampled":
            ts, gs = self._sample_arrays()
            return float(ts[np.argmax(gs)])
        return 0.0

    @property
    def peak_value(self) -> float:
        if self.kind == "sampled":
            return float(max(g for _, g in self.samples))
        return self.g0

    def _sample_arrays(self):
        arr = np.asarray(self.samples, dtype=float)
        return arr[:, 0], arr[:, 1]


def _violations(env: PumpEnvelope) -> list[str]:
    out = []
    if env.kind not in KINDS:
        return [f"kind must be one of {KINDS}, got {env.kind!r}"]
    if not env.gamma_decay > 0:
        out.append("gamma_decay must be > 0")
    if env.kind in ("constant", "gaussian"):
        if not (math.isfinite(env.g0) and env.g0 >= 0):
            out.append(f"g0 must be finite and >= 0, got {env.g0}")
    if env.kind == "gaussian":
        if env.sigma is None or not env.sigma > 0:
            out.append(f"gaussian sigma must be > 0, got {env.sigma}")
        if env.t_o is None or not math.isfinite(env.t_o):
            out.append(f"gaussian centre t_o must be finite, got {env.t_o}")
    if env.kind == "sampled":
        if len(env.samples) < 1:
            out.append("sampled envelope needs at least one (t, g) pair")
        else:
            ts = [t for t, _ in env.samples]
            gs = [g for _, g in env.samples]
            if any(b <= a for a, b in zip(ts, ts[1:])):
                out.append("sample times must be strictly increasing")
            if any(not (math.isfinite(g) and g >= 0) for g in gs):
                out.append("sample values must be finite and >= 0")
    return out


def make_envelope(desc: dict | PumpEnvelope) -> PumpEnvelope:
    """Build a validated envelope from a mapping such as ``{"kind": "constant", "g0": 0.8}``."""
    if isinstance(desc, PumpEnvelope):
        return desc
    desc = dict(desc)
    kind = desc.pop("kind", None)
    if "samples" in desc:
        desc["samples"] = tuple((float(t), float(g)) for t, g in desc["samples"])
    try:
        return PumpEnvelope(kind=kind, **desc)
    except TypeError as exc:
        raise EnvelopeError(str(exc)) from None


def constant(g0: float, gamma_decay: float = 1.0) -> PumpEnvelope:
    return PumpEnvelope("constant", g0=g0, gamma_decay=gamma_decay)


def gaussian(g0: float, sigma: float, t_o: float, gamma_decay: float = 1.0) -> PumpEnvelope:
    return PumpEnvelope("gaussian", g0=g0, sigma=sigma, t_o=t_o, gamma_decay=gamma_decay)


def sampled(samples, gamma_decay: float = 1.0) -> PumpEnvelope:
    return make_envelope({"kind": "sampled", "samples": samples, "gamma_decay": gamma_decay})


def eval_g(env: PumpEnvelope, t):
    """Pump ratio at time(s) t; scalar in, float out; array in, array out.

    The constant pump is switched on at t = 0.  Sampled envelopes are
    interpolated linearly and held flat outside the sampled range.
    """
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    if env.kind == "constant":
        g = np.where(t >= 0, env.g0, 0.0)
    elif env.kind == "gaussian":
        x = env.gamma_decay * t - env.t_o
        g = env.g0 * np.exp(-0.5 * x * x / env.sigma**2)
    else:
        ts, gs = env._sample_arrays()
        g = np.interp(t, ts, gs)
    return float(g) if scalar else g


def pump_product(env: PumpEnvelope, theta: float, omega: float, t, gamma_decay: float = 1.0):
    """Complex alpha(t)*gamma implied by g(t) (hbar = 1), pump at 2*omega."""
    mag = gamma_decay * np.asarray(eval_g(env, t)) / 4
    return mag * np.exp(1j * (theta - 2 * omega * np.asarray(t)))


def load_sampled_csv(path: str | Path, gamma_decay: float = 1.0) -> PumpEnvelope:
    """Read a two-column ``t,g`` CSV (with header) into a sampled envelope."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["t", "g"]:
            raise EnvelopeError(f"{path}: expected header 't,g', got {reader.fieldnames}")
        rows = []
        for i, row in enumerate(reader, start=2):
            try:
                rows.append((float(row["t"]), float(row["g"])))
            except (TypeError, ValueError):
                raise EnvelopeError(f"{path}:{i}: malformed row {row}") from None
    return sampled(rows, gamma_decay=gamma_decay)
