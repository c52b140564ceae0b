"""Brute-force construction of the first-order error map.

Each interaction-frame Lindblad operator is a sum of qubit powers of S_x times
bus operators,

    E-(t) = a          - i f*(t) S_x
    E+(t) = a^dag      + i f(t)  S_x
    Ed(t) = n + i(f a - f* a^dag) S_x + |f|^2 S_x^2

so ``tr_B D[E](rho x rho_B)`` only needs bus expectation values, evaluated
here on an explicit truncated-Fock density matrix. The period integral is a
rectangle rule on a periodic grid, exact for the trigonometric-polynomial
integrands. The resulting superoperator on 2**N x 2**N matrices is built
explicitly and projected onto ``xi_i . xi_j``.
"""

from __future__ import annotations

import numpy as np

from .errors import InconsistencyError, InvalidArgument
from .infidelity import EnvironmentRates, ZetaMatrix
from .operators import N_XI, annihilation, collective_sx, xi_operators
from .pulses import PulseSpec, displacement

MAX_ORACLE_IONS = 6


def _channels(pulse: PulseSpec, rates: EnvironmentRates, cutoff: int, t: np.ndarray):
    a = annihilation(cutoff)
    ad = a.conj().T
    n = ad @ a
    one = np.eye(cutoff, dtype=complex)
    f = displacement(pulse, t)
    out = []
    if rates.gamma_minus:
        out.append((rates.gamma_minus, lambda k: [a, -1j * np.conj(f[k]) * one]))
    if rates.gamma_plus:
        out.append((rates.gamma_plus, lambda k: [ad, 1j * f[k] * one]))
    if rates.gamma_dephase:
        out.append((rates.gamma_dephase, lambda k: [
            n,
            1j * (f[k] * a - np.conj(f[k]) * ad),
            abs(f[k]) ** 2 * one,
        ]))
    return out


def error_superoperator(
    pulse: PulseSpec,
    n_ions: int,
    rates: EnvironmentRates,
    bus_state: np.ndarray,
    points: int | None = None,
) -> np.ndarray:
    """Row-major superoperator of Xi acting on vec(rho), rho on 2**N states."""
    m = max(pulse.max_harmonic, 1)
    points = 16 * m + 1 if points is None else points
    if points < 4 * m + 1:
        raise InvalidArgument(f"need at least {4 * m + 1} time points")
    cutoff = bus_state.shape[0]
    T = pulse.period
    t = np.arange(points) * (T / points)
    dt = T / points

    sx = collective_sx(n_ions)
    dim = sx.shape[0]
    powers = [np.eye(dim, dtype=complex), sx, sx @ sx]

    # W[k, l] multiplies S^k rho S^l; Hc[k, l] multiplies S^(k+l) in E^dag E
    W = np.zeros((3, 3), dtype=complex)
    Hc = np.zeros((3, 3), dtype=complex)
    for gamma, bus_ops in _channels(pulse, rates, cutoff, t):
        for k in range(points):
            B = bus_ops(k)
            for i, Bi in enumerate(B):
                Bi_rho = Bi @ bus_state
                for j, Bj in enumerate(B):
                    Bj_dag = Bj.conj().T
                    W[i, j] += gamma * dt * np.trace(Bi_rho @ Bj_dag)
                    Hc[i, j] += gamma * dt * np.trace(Bj_dag @ Bi_rho)

    eye = np.eye(dim, dtype=complex)
    K = np.zeros((dim, dim), dtype=complex)
    sup = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(3):
        for j in range(3):
            if W[i, j] != 0:
                sup += W[i, j] * np.kron(powers[i], powers[j].conj())
            K += Hc[i, j] * powers[j].conj().T @ powers[i]
    sup -= 0.5 * (np.kron(K, eye) + np.kron(eye, K.T))
    return sup


def project_onto_xi(sup: np.ndarray, n_ions: int) -> tuple[np.ndarray, float]:
    """Coefficients of ``sup`` on xi_i . xi_j and the relative residual norm."""
    xis = xi_operators(n_ions)
    dim = xis[0].shape[0]
    zeta = np.zeros((N_XI, N_XI), dtype=complex)
    fitted = np.zeros_like(sup)
    for i in range(N_XI):
        if not xis[i].any():
            continue
        for j in range(N_XI):
            if not xis[j].any():
                continue
            basis = np.kron(xis[i], xis[j].conj())
            zeta[i, j] = np.vdot(basis, sup) / dim**2
            fitted += zeta[i, j] * basis
    norm = np.linalg.norm(sup)
    residual = float(np.linalg.norm(sup - fitted) / norm) if norm > 0 else 0.0
    return zeta, residual


def zeta_oracle(
    pulse: PulseSpec,
    n_ions: int,
    rates: EnvironmentRates,
    bus_state: np.ndarray,
    points: int | None = None,
    residual_tol: float = 1e-8,
) -> ZetaMatrix:
    if not 1 <= n_ions <= MAX_ORACLE_IONS:
        raise InvalidArgument(f"oracle supports 1 <= N <= {MAX_ORACLE_IONS}")
    bus_state = np.asarray(bus_state, dtype=complex)
    sup = error_superoperator(pulse, n_ions, rates, bus_state, points)
    zeta, residual = project_onto_xi(sup, n_ions)
    if residual > residual_tol:
        raise InconsistencyError(
            f"error map leaves the five-operator span: relative residual {residual:.3e}"
        )
    return ZetaMatrix(zeta, "oracle", residual)
