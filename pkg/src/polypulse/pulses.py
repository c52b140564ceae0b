"""Polychromatic gate pulses and their phase-space functions.

A pulse is a Fourier series ``Y(t) = sum_j c_j * omega * exp(i j omega t)``
over one period ``T = 2 pi / omega``. The conditional bus displacement is
``f(t) = int_0^t Y`` and the accumulated two-body phase is
``g(t) = Im int_0^t Y f*``. A pulse is gate-calibrated when
``sum_j |c_j|^2 / j = 1/16``, which makes ``g(T) = pi/8``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

GATE_AREA = 1.0 / 16.0
CALIBRATION_TOL = 1e-12


@dataclass(frozen=True)
class PulseSpec:
    """Fourier-series drive.

    ``components`` is a tuple of ``(harmonic, amplitude)`` pairs with
    strictly increasing harmonics >= 1 and complex unitless amplitudes.
    """

    fundamental_frequency: float
    components: tuple[tuple[int, complex], ...]
    calibrated: bool = False

    def __post_init__(self):
        if not self.fundamental_frequency > 0:
            raise InvalidArgument("fundamental_frequency must be positive")
        comps = tuple((int(j), complex(c)) for j, c in self.components)
        harmonics = [j for j, _ in comps]
        if any(j < 1 for j in harmonics):
            raise InvalidArgument("harmonic indices must be >= 1")
        if any(b <= a for a, b in zip(harmonics, harmonics[1:])):
            raise InvalidArgument("harmonic indices must be strictly increasing")
        object.__setattr__(self, "components", comps)
        if self.calibrated and abs(gate_area(self) - GATE_AREA) > CALIBRATION_TOL:
            raise InvalidArgument(
                f"pulse flagged calibrated but sum |c_j|^2/j = {gate_area(self)!r}"
            )

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.fundamental_frequency

    @property
    def harmonics(self) -> np.ndarray:
        return np.array([j for j, _ in self.components], dtype=int)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([c for _, c in self.components], dtype=complex)

    @property
    def max_harmonic(self) -> int:
        return int(self.harmonics.max()) if self.components else 0

    def dense_amplitudes(self) -> np.ndarray:
        """Amplitudes as a dense array indexed by harmonic, entry 0 unused."""
        out = np.zeros(self.max_harmonic + 1, dtype=complex)
        for j, c in self.components:
            out[j] = c
        return out

    def drive(self, t):
        """Drive amplitude Y(t)."""
        t = np.asarray(t, dtype=float)
        w = self.fundamental_frequency
        out = np.zeros(t.shape, dtype=complex)
        for j, c in self.components:
            out = out + c * w * np.exp(1j * j * w * t)
        return out

    def to_dict(self) -> dict:
        return {
            "fundamental_frequency": _fmt(self.fundamental_frequency),
            "components": [
                {"harmonic": j, "re": _fmt(c.real), "im": _fmt(c.imag)}
                for j, c in self.components
            ],
            "calibrated": bool(self.calibrated),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PulseSpec":
        comps = sorted(
            (int(c["harmonic"]), complex(float(c["re"]), float(c["im"])))
            for c in data["components"]
        )
        return cls(
            float(data["fundamental_frequency"]),
            tuple(comps),
            bool(data.get("calibrated", False)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "PulseSpec":
        return cls.from_dict(json.loads(text))


def _fmt(x: float) -> float:
    # 12 significant digits; the shortest repr of the rounded value has <= 12
    return float(f"{float(x):.12g}")


@dataclass(frozen=True)
class LambdaSolution:
    m: int
    lam: float
    b: float


@dataclass(frozen=True)
class TrajectoryPoint:
    t: float
    f_re: float
    f_im: float
    g: float


def gate_area(pulse: PulseSpec) -> float:
    """sum_j |c_j|^2 / j, equal to 1/16 for a maximally entangling gate."""
    return float(sum(abs(c) ** 2 / j for j, c in pulse.components))


def _lambda_residual(lam: float, j: np.ndarray) -> float:
    return float(np.sum(1.0 / (1.0 - j * lam)))


def solve_lambda(m: int, eps: float = 1e-9, tol: float = 1e-12) -> LambdaSolution:
    """Smallest root of ``sum_{j<=m} 1/(1 - j lam) = 0`` and the matching ``b``.

    The root is bracketed by the poles at ``1/m`` and ``1/(m-1)``; the sum
    increases monotonically between them, so bisection always converges.
    A few Newton steps polish the bisection result.
    """
    if not isinstance(m, (int, np.integer)) or m < 2:
        raise InvalidArgument(
            f"m must be an integer >= 2 (zero-mean constraint needs two harmonics), got {m!r}"
        )
    j = np.arange(1, m + 1, dtype=float)
    lo, hi = 1.0 / m + eps, 1.0 / (m - 1) - eps
    if not (_lambda_residual(lo, j) < 0 < _lambda_residual(hi, j)):
        raise InvalidArgument(f"root not bracketed for m={m}")
    while hi - lo > tol * max(1.0, abs(lo)):
        mid = 0.5 * (lo + hi)
        if _lambda_residual(mid, j) < 0:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    for _ in range(3):
        d = 1.0 - j * lam
        step = np.sum(1.0 / d) / np.sum(j / d**2)
        if not (1.0 / m < lam - step < 1.0 / (m - 1)):
            break
        lam -= step
    b = -0.25 / math.sqrt(float(np.sum(j / (1.0 - j * lam) ** 2)))
    return LambdaSolution(int(m), float(lam), float(b))


def optimal_pulse(m: int, omega: float = 1.0) -> PulseSpec:
    """Real-amplitude pulse minimising sum |c_j|^2/j^2 at zero mean displacement."""
    sol = solve_lambda(m)
    comps = tuple(
        (j, complex(j * sol.b / (1.0 - j * sol.lam))) for j in range(1, m + 1)
    )
    return PulseSpec(omega, comps, calibrated=True)


def monochromatic_pulse(m: int, omega: float = 1.0) -> PulseSpec:
    """Conventional single-tone gate of detuning ``m * omega`` lasting ``2 pi / omega``.

    The amplitude ``sqrt(m)/4`` corresponds to ``eta * Omega = sqrt(m) omega / 4``.
    """
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise InvalidArgument(f"m must be an integer >= 1, got {m!r}")
    return PulseSpec(omega, ((int(m), complex(math.sqrt(m) / 4.0)),), calibrated=True)


def _check_time(pulse: PulseSpec, t):
    t = np.asarray(t, dtype=float)
    T = pulse.period
    if np.any(t < -1e-12 * T) or np.any(t > T * (1 + 1e-12)):
        raise InvalidArgument("t must lie in [0, T]")
    return t


def displacement(pulse: PulseSpec, t):
    """Closed-form f(t) = -i sum_j (c_j / j)(exp(i j omega t) - 1)."""
    t = _check_time(pulse, t)
    w = pulse.fundamental_frequency
    out = np.zeros(t.shape, dtype=complex)
    for j, c in pulse.components:
        out = out + (c / j) * np.expm1(1j * j * w * t)
    out = -1j * out
    return complex(out) if out.ndim == 0 else out


def _phase_integral(n: int, w: float, t):
    # int_0^t exp(i n w s) ds
    if n == 0:
        return t.astype(complex)
    return np.expm1(1j * n * w * t) / (1j * n * w)


def accumulated_phase(pulse: PulseSpec, t):
    """g(t) = Im int_0^t Y f*, integrated term by term in closed form."""
    t = _check_time(pulse, t)
    w = pulse.fundamental_frequency
    total = np.zeros(t.shape, dtype=complex)
    for j, cj in pulse.components:
        ij = _phase_integral(j, w, t)
        for k, ck in pulse.components:
            total = total + cj * np.conj(ck) / k * (_phase_integral(j - k, w, t) - ij)
    out = (1j * w * total).imag
    return float(out) if out.ndim == 0 else out


def intensity(pulse: PulseSpec) -> float:
    w = pulse.fundamental_frequency
    return float(sum(abs(c * w) ** 2 for _, c in pulse.components))


def trajectory(pulse: PulseSpec, samples: int) -> list[TrajectoryPoint]:
    if samples < 2:
        raise InvalidArgument("samples must be >= 2")
    ts = np.linspace(0.0, pulse.period, samples)
    f = displacement(pulse, ts)
    g = accumulated_phase(pulse, ts)
    return [
        TrajectoryPoint(float(t), float(fv.real), float(fv.imag), float(gv))
        for t, fv, gv in zip(ts, f, g)
    ]
