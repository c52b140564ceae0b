"""First-order error map of the dissipative gate and the infidelity built from it.

To leading order in the bus-mode rates the gate error is the map

    Xi(rho) = sum_ij zeta_ij xi_i rho xi_j

on the qubits, with ``xi_0 = 1`` and ``xi_i`` the normalised sums of i-fold
sigma_x strings. Three routes to the 5x5 matrix ``zeta`` are provided:

* :func:`assemble_zeta_printed` transcribes the reference coefficient block
  literally (including its M-matrices);
* :func:`polypulse.oracle.zeta_oracle` builds Xi numerically from the
  interaction-frame Lindblad operators and projects it onto the xi basis;
* :func:`assemble_zeta` is the closed-form expansion that agrees with the
  oracle. It differs from the printed block as listed in ``PRINTED_DIFFERENCES``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, RatioUndefined
from .operators import N_XI, binom, sx_power_in_xi
from .pulses import PulseSpec, monochromatic_pulse, optimal_pulse

PROVENANCES = ("printed", "oracle", "reconciled")
METRICS = ("frobenius", "frobenius_sq")

PRINTED_DIFFERENCES = (
    "M1[1,1] is N, not 2N: only then is the thermalisation/dephasing term trace preserving",
    "the four-body dephasing coefficient is gamma_d * <|f|^4>; the printed block has "
    "-4 f2 (zeta_0) against +4|g1|^4 (zeta_13), which cancel for a single tone",
    "the <a^2> dephasing term multiplies the M1 pattern, not M4",
    "the coherent-displacement term is a commutator -i h [S_x, .] with "
    "h = (gamma_- - gamma_+ + gamma_d) Re(<a> <f>); on the M6 pattern its weight is "
    "-(2 pi / omega) Im(g1 <a>) (gamma_+ - gamma_- - gamma_d), not "
    "(4 pi / omega) Im(g1 <a>) (gamma_+ - gamma_- + gamma_d)",
    "the <a>-dependent dephasing cross term is -2 gamma_d Im(<a> <|f|^2 f>) on "
    "S_x rho S_x^2 + S_x^2 rho S_x - {S_x^3, rho}, not an M5 term",
)


@dataclass(frozen=True)
class EnvironmentRates:
    gamma_plus: float = 0.0
    gamma_minus: float = 0.0
    gamma_dephase: float = 0.0

    def __post_init__(self):
        if min(self.gamma_plus, self.gamma_minus, self.gamma_dephase) < 0:
            raise InvalidArgument("rates must be non-negative")

    def scaled(self, s: float) -> "EnvironmentRates":
        return EnvironmentRates(s * self.gamma_plus, s * self.gamma_minus, s * self.gamma_dephase)

    @property
    def any_nonzero(self) -> bool:
        return (self.gamma_plus, self.gamma_minus, self.gamma_dephase) != (0.0, 0.0, 0.0)

    def to_dict(self) -> dict:
        return {
            "gamma_plus": _fmt(self.gamma_plus),
            "gamma_minus": _fmt(self.gamma_minus),
            "gamma_dephase": _fmt(self.gamma_dephase),
        }


@dataclass(frozen=True)
class BusMoments:
    """<n>, <a> and <a^2> of the bus mode."""

    n_mean: float = 0.0
    a_mean: complex = 0.0
    a2_mean: complex = 0.0

    def __post_init__(self):
        if self.n_mean < 0:
            raise InvalidArgument("n_mean must be >= 0")

    @classmethod
    def ground(cls) -> "BusMoments":
        return cls()

    @classmethod
    def thermal(cls, nbar: float) -> "BusMoments":
        return cls(float(nbar), 0.0, 0.0)

    @classmethod
    def coherent(cls, alpha: complex) -> "BusMoments":
        alpha = complex(alpha)
        return cls(abs(alpha) ** 2, alpha, alpha * alpha)

    @classmethod
    def from_density_matrix(cls, rho: np.ndarray) -> "BusMoments":
        k = rho.shape[0]
        a = np.diag(np.sqrt(np.arange(1, k, dtype=float)), 1)
        return cls(
            float(np.real(np.trace(a.T @ a @ rho))),
            complex(np.trace(a @ rho)),
            complex(np.trace(a @ a @ rho)),
        )


@dataclass(frozen=True)
class PulseMoments:
    g1: complex
    g2: complex
    f1: float
    f2: float


@dataclass(frozen=True)
class FMoments:
    """Time integrals over one gate period of f, f^2, |f|^2 f, |f|^2 and |f|^4."""

    avg_f: complex
    avg_f2: complex
    avg_abs2f: complex
    avg_abs2: float
    avg_abs4: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.avg_f, self.avg_f2, self.avg_abs2f, self.avg_abs2, self.avg_abs4],
            dtype=complex,
        )


@dataclass(frozen=True)
class ZetaMatrix:
    entries: np.ndarray
    provenance: str
    residual: float | None = None

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise InvalidArgument(f"unknown provenance {self.provenance!r}")
        e = np.asarray(self.entries, dtype=complex)
        if e.shape != (N_XI, N_XI):
            raise InvalidArgument("zeta must be 5x5")
        object.__setattr__(self, "entries", e)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def to_dict(self) -> dict:
        return {
            "basis": [f"xi{i}" for i in range(N_XI)],
            "provenance": self.provenance,
            "entries": [
                [{"re": _fmt(z.real), "im": _fmt(z.imag)} for z in row]
                for row in self.entries
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "ZetaMatrix":
        entries = np.array([[complex(z["re"], z["im"]) for z in row] for row in data["entries"]])
        return cls(entries, data["provenance"])


def _fmt(x: float) -> float:
    v = float(f"{float(x):.12g}")
    return 0.0 if v == 0 else v


def pulse_moments(pulse: PulseSpec) -> PulseMoments:
    """g1, g2, f1, f2 of a Fourier pulse.

    With d_k = c_k / k and A_s = sum_{i+j=s} d_i d_j, the Kronecker-delta sums
    reduce to g2 = sum_p A_p conj(d_p) and f2 = sum_s |A_s|^2.
    """
    c = pulse.dense_amplitudes()
    d = np.zeros_like(c)
    d[1:] = c[1:] / np.arange(1, len(c))
    conv = np.convolve(d, d)
    g1 = complex(d.sum())
    g2 = complex(np.sum(conv[: len(d)] * d.conj()))
    f1 = float(np.sum(np.abs(d) ** 2))
    f2 = float(np.sum(np.abs(conv) ** 2))
    return PulseMoments(g1, g2, f1, f2)


def f_moments(pm: PulseMoments, omega: float) -> FMoments:
    T = 2.0 * math.pi / omega
    g1, g2, f1, f2 = pm.g1, pm.g2, pm.f1, pm.f2
    a1 = abs(g1) ** 2
    return FMoments(
        avg_f=1j * T * g1,
        avg_f2=-T * g1**2,
        avg_abs2f=-1j * T * (g2 - 2 * f1 * g1 - a1 * g1),
        avg_abs2=T * (f1 + a1),
        avg_abs4=T * (f2 - 4 * (g2 * g1.conjugate()).real + a1**2 + 4 * f1 * a1),
    )


def f_moments_quadrature(pulse: PulseSpec, points: int | None = None) -> FMoments:
    """Rectangle-rule moments on a periodic grid.

    The integrands are trigonometric polynomials of degree <= 2m, so any grid
    with more than 2m points is exact up to rounding.
    """
    m = max(pulse.max_harmonic, 1)
    if points is None:
        points = 16 * m + 1
    if points < 8 * m + 1:
        raise InvalidArgument(f"need at least {8 * m + 1} quadrature points, got {points}")
    T = pulse.period
    t = np.arange(points) * (T / points)
    w = pulse.fundamental_frequency
    f = np.zeros(points, dtype=complex)
    for j, c in pulse.components:
        f += (c / j) * np.expm1(1j * j * w * t)
    f *= -1j
    a2 = np.abs(f) ** 2
    dt = T / points
    return FMoments(
        avg_f=complex(f.sum() * dt),
        avg_f2=complex((f * f).sum() * dt),
        avg_abs2f=complex((a2 * f).sum() * dt),
        avg_abs2=float(a2.sum() * dt),
        avg_abs4=float((a2 * a2).sum() * dt),
    )


def m_matrices(n_ions: int) -> tuple[np.ndarray, ...]:
    """The six 5x5 coefficient patterns M1..M6 for N ions."""
    if n_ions < 1:
        raise InvalidArgument("N must be >= 1")
    N = n_ions
    r = {p: math.sqrt(binom(N, p)) for p in range(5)}
    G1 = binom(N, 1)

    def z():
        return np.zeros((N_XI, N_XI), dtype=complex)

    m1 = z()
    m1[0, 0], m1[1, 1] = -N, 2 * G1
    m1[0, 2] = m1[2, 0] = -r[2]
    m2 = z()
    m2[0, 0], m2[2, 2] = 1, -2
    m2[0, 2] = m2[2, 0] = r[2]
    m2[0, 4] = m2[4, 0] = -3 * r[4]
    m3 = z()
    m3[0, 0], m3[2, 2] = -(N - 1), 2 * (N - 1)
    m3[0, 2] = m3[2, 0] = -r[2] * (N - 1)
    m3[0, 4] = m3[4, 0] = 3 * r[4]
    m4 = z()
    m4[1, 1] = N
    m4[0, 2] = m4[2, 0] = r[2]
    m5 = z()
    m5[0, 1] = m5[1, 0] = math.sqrt(N) * (N - 1)
    m5[0, 3] = m5[3, 0] = 3 * r[3]
    m5[1, 2] = m5[2, 1] = -r[1] * r[2]
    m6 = z()
    m6[0, 1], m6[1, 0] = -1j * math.sqrt(N), 1j * math.sqrt(N)
    return m1, m2, m3, m4, m5, m6


def assemble_zeta_printed(
    pulse: PulseSpec, n_ions: int, rates: EnvironmentRates, bus: BusMoments
) -> ZetaMatrix:
    """Literal transcription of the zeta_0 + zeta_11..zeta_16 block."""
    if n_ions < 2:
        raise InvalidArgument("the printed block is stated for N >= 2")
    pm = pulse_moments(pulse)
    g1, g2, f1, f2 = pm.g1, pm.g2, pm.f1, pm.f2
    a1 = abs(g1) ** 2
    gp, gm, gd = rates.gamma_plus, rates.gamma_minus, rates.gamma_dephase
    n, alpha, beta = bus.n_mean, bus.a_mean, bus.a2_mean
    N = n_ions
    M1, M2, M3, M4, M5, M6 = m_matrices(N)
    thermal = gp + gm + (2 * n + 1) * gd
    z0 = 2 * f1 * thermal * M1 - 4 * f2 * gd * N * (N - 1) * M2
    z1 = (
        2 * a1 * thermal * M1
        + 16 * a1 * f1 * gd * N * M3
        + 4 * gd * (a1**2 - 4 * (g1 * g2.conjugate()).real) * N * (N - 1) * M2
        + 4 * (g1**2 * beta).real * gd * M4
        + 8 * (g1 * a1 * alpha).real * gd * M5
        + 4 * (g1 * alpha).imag * (gp - gm + gd) * M6
    )
    zeta = (math.pi / pulse.fundamental_frequency) * (z0 + z1)
    return ZetaMatrix(zeta, "printed")


def _sandwich(P: np.ndarray, k: int, l: int) -> np.ndarray:
    # S^k rho S^l in the xi basis
    return np.outer(P[k], P[l]).astype(complex)


def _anticommutator(P: np.ndarray, p: int) -> np.ndarray:
    # {S^p, rho} in the xi basis
    out = np.zeros((N_XI, N_XI), dtype=complex)
    out[:, 0] += P[p]
    out[0, :] += P[p]
    return out


def assemble_zeta(
    pulse: PulseSpec, n_ions: int, rates: EnvironmentRates, bus: BusMoments
) -> ZetaMatrix:
    """Closed-form first-order error map, checked against the numerical oracle.

    Tracing the interaction-frame dissipators over the bus leaves

        Xi = C11 D[S] + C22 D[S^2]
             + C12 (S rho S^2 + S^2 rho S - {S^3, rho}) - i h [S, rho]

    with D[X] rho = X rho X - {X^2, rho}/2, S = S_x and

        C11 = (g+ + g-) <|f|^2> + gd ((2<n> + 1) <|f|^2> - 2 Re(<a^2> <f^2>))
        C22 = gd <|f|^4>
        C12 = -2 gd Im(<a> <|f|^2 f>)
        h   = (g- - g+ + gd) Re(<a> <f>)

    where <.> of pulse functions is the integral over the gate period.
    """
    if n_ions < 1:
        raise InvalidArgument("N must be >= 1")
    fm = f_moments(pulse_moments(pulse), pulse.fundamental_frequency)
    gp, gm, gd = rates.gamma_plus, rates.gamma_minus, rates.gamma_dephase
    n, alpha, beta = bus.n_mean, complex(bus.a_mean), complex(bus.a2_mean)

    c11 = (gp + gm) * fm.avg_abs2 + gd * (
        (2 * n + 1) * fm.avg_abs2 - 2 * (beta * fm.avg_f2).real
    )
    c22 = gd * fm.avg_abs4
    c12 = -2 * gd * (alpha * fm.avg_abs2f).imag
    h = (gm - gp + gd) * (alpha * fm.avg_f).real

    P = sx_power_in_xi(n_ions)
    zeta = (
        c11 * (_sandwich(P, 1, 1) - 0.5 * _anticommutator(P, 2))
        + c22 * (_sandwich(P, 2, 2) - 0.5 * _anticommutator(P, 4))
        + c12 * (_sandwich(P, 1, 2) + _sandwich(P, 2, 1) - _anticommutator(P, 3))
        - 1j * h * (_sandwich(P, 1, 0) - _sandwich(P, 0, 1))
    )
    return ZetaMatrix(zeta, "reconciled")


def infidelity(zeta: ZetaMatrix | np.ndarray, metric: str = "frobenius") -> float:
    """tr(zeta^dag zeta) for ``frobenius_sq``, its square root for ``frobenius``."""
    z = zeta.entries if isinstance(zeta, ZetaMatrix) else np.asarray(zeta)
    sq = float(np.real(np.trace(z.conj().T @ z)))
    if metric == "frobenius_sq":
        return sq
    if metric == "frobenius":
        return math.sqrt(sq)
    raise InvalidArgument(f"unknown metric {metric!r}")


def improvement_R(
    m: int,
    n_ions: int,
    rates: EnvironmentRates,
    bus: BusMoments,
    metric: str = "frobenius",
    variant: str = "reconciled",
) -> tuple[float, float, float]:
    """Infidelity of the single-tone gate over that of the optimal pulse.

    Returns ``(I_mono, I_poly, R)``.
    """
    if m < 2:
        raise InvalidArgument("m must be >= 2")
    if not rates.any_nonzero:
        raise InvalidArgument("at least one rate must be nonzero")
    assemble = {"reconciled": assemble_zeta, "printed": assemble_zeta_printed}[variant]
    i_mono = infidelity(assemble(monochromatic_pulse(m), n_ions, rates, bus), metric)
    i_poly = infidelity(assemble(optimal_pulse(m), n_ions, rates, bus), metric)
    if i_poly == 0:
        raise RatioUndefined("polychromatic infidelity vanished")
    return i_mono, i_poly, i_mono / i_poly
