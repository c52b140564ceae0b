"""Dense operators on N qubits and a truncated bosonic mode."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import comb

from .errors import InvalidArgument

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)

N_XI = 5


def binom(n: int, k: int) -> float:
    """Binomial coefficient, zero when k > n."""
    return float(comb(n, k, exact=True)) if 0 <= k <= n else 0.0


def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), 1).astype(complex)


def number(cutoff: int) -> np.ndarray:
    return np.diag(np.arange(cutoff, dtype=float)).astype(complex)


def _local(op: np.ndarray, site: int, n_qubits: int) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for k in range(n_qubits):
        out = np.kron(out, op if k == site else np.eye(2, dtype=complex))
    return out


@lru_cache(maxsize=None)
def collective_sx(n_qubits: int) -> np.ndarray:
    """S_x = sum_j sigma_x^(j) on 2**n_qubits states (qubit 0 most significant)."""
    dim = 2**n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for k in range(n_qubits):
        out += _local(SIGMA_X, k, n_qubits)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def xi_operators(n_qubits: int) -> tuple[np.ndarray, ...]:
    """The five operators xi_0..xi_4.

    xi_i is the normalised sum over all i-fold sigma_x strings; it is the zero
    operator for i > n_qubits. They satisfy tr(xi_i xi_j) = 2**N delta_ij.
    """
    dim = 2**n_qubits
    # elementary symmetric polynomials of the commuting sigma_x^(j)
    elem = [np.eye(dim, dtype=complex)] + [np.zeros((dim, dim), complex) for _ in range(4)]
    for k in range(n_qubits):
        s = _local(SIGMA_X, k, n_qubits)
        for i in range(4, 0, -1):
            elem[i] = elem[i] + elem[i - 1] @ s
    out = []
    for i, e in enumerate(elem):
        g = binom(n_qubits, i)
        x = e / math.sqrt(g) if g > 0 else np.zeros_like(e)
        x.setflags(write=False)
        out.append(x)
    return tuple(out)


def sx_power_in_xi(n_qubits: int, max_power: int = 4) -> np.ndarray:
    """Matrix P with S_x**p = sum_i P[p, i] xi_i for p = 0..max_power.

    Uses e_1 e_i = (i+1) e_{i+1} + (N-i+1) e_{i-1} for the elementary
    symmetric sums e_i of the sigma_x^(j), then rescales by sqrt(C(N, i)).
    Exact for max_power <= 4 because S_x**4 only reaches e_4.
    """
    if max_power > 4:
        raise InvalidArgument("powers above 4 leave the five-operator span")
    n = n_qubits
    e = np.zeros((max_power + 1, N_XI))
    e[0, 0] = 1.0
    for p in range(1, max_power + 1):
        for i in range(N_XI):
            c = e[p - 1, i]
            if c == 0.0:
                continue
            if i + 1 < N_XI and i + 1 <= n:
                e[p, i + 1] += (i + 1) * c
            if i >= 1:
                e[p, i - 1] += (n - i + 1) * c
    scale = np.array([math.sqrt(binom(n, i)) for i in range(N_XI)])
    return e * scale


def thermal_state(nbar: float, cutoff: int) -> np.ndarray:
    """Thermal bus state truncated to ``cutoff`` levels and renormalised."""
    if nbar < 0:
        raise InvalidArgument("nbar must be >= 0")
    if nbar == 0:
        p = np.zeros(cutoff)
        p[0] = 1.0
    else:
        q = nbar / (nbar + 1.0)
        p = q ** np.arange(cutoff) / (nbar + 1.0)
        p /= p.sum()
    return np.diag(p).astype(complex)


def coherent_state(alpha: complex, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff)
    logfact = np.array([math.lgamma(k + 1) for k in n])
    amp = np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * logfact) * complex(alpha) ** n
    amp /= np.linalg.norm(amp)
    return np.outer(amp, amp.conj())


def fock_state(level: int, cutoff: int) -> np.ndarray:
    if not 0 <= level < cutoff:
        raise InvalidArgument("Fock level outside the cutoff")
    out = np.zeros((cutoff, cutoff), dtype=complex)
    out[level, level] = 1.0
    return out


def thermal_cutoff(nbar: float, tail: float = 1e-10, minimum: int = 2) -> int:
    """Smallest cutoff whose discarded thermal tail weight is <= ``tail``."""
    if nbar <= 0:
        return minimum
    q = nbar / (nbar + 1.0)
    return max(minimum, int(math.ceil(math.log(tail) / math.log(q))))


def coherent_cutoff(alpha: complex, tail: float = 1e-10, minimum: int = 2) -> int:
    """Smallest cutoff whose discarded Poisson tail weight is <= ``tail``."""
    mu = abs(alpha) ** 2
    if mu == 0:
        return minimum
    k, term, acc = 0, math.exp(-mu), 0.0
    while 1.0 - acc - term > tail:
        acc += term
        k += 1
        term *= mu / k
    return max(minimum, k + 2)
