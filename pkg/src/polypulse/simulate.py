"""Exact master-equation propagation of N qubits coupled to a truncated bus mode.

The lab-frame generator is

    d rho / dt = -i [H(t), rho] + sum_j gamma_j D[E_j] rho,
    H(t) = (Y(t) a + Y*(t) a^dag) S_x,   E- = a, E+ = a^dag, Ed = a^dag a,

integrated with fixed-step RK4 over one gate period. States are ordered
qubits (most significant) then Fock level.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse
from scipy.linalg import expm

from .errors import CutoffTooSmallError, IntegrationFailure, InvalidArgument, RatioUndefined
from .infidelity import EnvironmentRates
from .integrate import rk4
from .operators import SIGMA_Y, annihilation, collective_sx
from .pulses import PulseSpec, accumulated_phase, displacement, monochromatic_pulse, optimal_pulse

TRACE_TOL = 1e-9
HERMITIAN_TOL = 1e-10
POSITIVITY_TOL = 1e-8
CHECKPOINTS = 10


@dataclass(frozen=True)
class SimConfig:
    n_qubits: int = 2
    fock_cutoff: int = 12
    steps: int = 400
    leakage_threshold: float = 1e-8

    def __post_init__(self):
        if self.n_qubits < 1:
            raise InvalidArgument("n_qubits must be >= 1")
        if self.fock_cutoff < 2:
            raise InvalidArgument("fock_cutoff must be >= 2")
        if self.steps < 100:
            raise InvalidArgument("steps must be >= 100")

    @classmethod
    def default_for(cls, m: int, n_qubits: int = 2, nbar: float = 0.0) -> "SimConfig":
        """Reference settings: 400 m steps and a cutoff that keeps leakage below 1e-8."""
        cutoff = 12 if nbar == 0 else _thermal_default_cutoff(nbar)
        return cls(n_qubits, cutoff, 400 * max(m, 1))

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "fock_cutoff": self.fock_cutoff,
            "steps": self.steps,
            "leakage_threshold": self.leakage_threshold,
        }


def _thermal_default_cutoff(nbar: float) -> int:
    # population of the top two levels of a thermal state must stay below 1e-9
    q = nbar / (nbar + 1.0)
    k = math.ceil(math.log(1e-9 * (nbar + 1.0) / (1.0 + q)) / math.log(q))
    return max(12, k + 2, math.ceil(8 + 6 * nbar))


@dataclass
class QuantumState:
    """Density matrix on qubits x bus, optionally remembering a pure qubit input."""

    rho: np.ndarray
    n_qubits: int
    fock_cutoff: int
    qubit_input: np.ndarray | None = None

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=complex)
        dim = 2**self.n_qubits * self.fock_cutoff
        if self.rho.shape != (dim, dim):
            raise InvalidArgument(f"density matrix must be {dim}x{dim}")

    @classmethod
    def product(cls, qubits: np.ndarray, bus_rho: np.ndarray) -> "QuantumState":
        psi = np.asarray(qubits, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        n = int(round(math.log2(psi.size)))
        if 2**n != psi.size:
            raise InvalidArgument("qubit vector length must be a power of two")
        rho = np.kron(np.outer(psi, psi.conj()), bus_rho)
        return cls(rho, n, bus_rho.shape[0], psi)

    def qubit_state(self) -> np.ndarray:
        d = 2**self.n_qubits
        r = self.rho.reshape(d, self.fock_cutoff, d, self.fock_cutoff)
        return np.einsum("ikjk->ij", r)

    def fock_populations(self) -> np.ndarray:
        d = 2**self.n_qubits
        diag = np.real(np.diag(self.rho)).reshape(d, self.fock_cutoff)
        return diag.sum(axis=0)


@dataclass
class SimResult:
    final_qubit_state: np.ndarray
    gate_fidelity: float | None
    concurrence: float | None
    eof: float | None
    leakage: float
    trace_drift: float = 0.0
    min_eigenvalue: float = 0.0
    hermiticity_error: float = 0.0
    final_state: QuantumState | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "gate_fidelity": self.gate_fidelity,
            "concurrence": self.concurrence,
            "eof": self.eof,
            "leakage": self.leakage,
            "trace_drift": self.trace_drift,
            "min_eigenvalue": self.min_eigenvalue,
        }


def _operators(n_qubits: int, cutoff: int):
    sx = collective_sx(n_qubits)
    a = annihilation(cutoff)
    eye_q = np.eye(sx.shape[0], dtype=complex)
    coupling = np.kron(sx, a)
    big_a = np.kron(eye_q, a)
    return sx, coupling, big_a


def _liouvillian_parts(rates: EnvironmentRates, n_qubits: int, cutoff: int):
    """Sparse superoperators (drive, conjugate drive, dissipator) on row-major vec(rho).

    vec(X rho) = (X kron 1) vec(rho) and vec(rho X) = (1 kron X^T) vec(rho).
    """
    _, A, a = _operators(n_qubits, cutoff)
    A = sparse.csr_matrix(A)
    a = sparse.csr_matrix(a)
    eye = sparse.identity(A.shape[0], dtype=complex, format="csr")

    def comm(X):
        return -1j * (sparse.kron(X, eye) - sparse.kron(eye, X.T))

    drive = comm(A).tocsr()
    drive_conj = comm(A.conj().T).tocsr()
    diss = sparse.csr_matrix((A.shape[0] ** 2,) * 2, dtype=complex)
    for gamma, L in (
        (rates.gamma_minus, a),
        (rates.gamma_plus, a.conj().T),
        (rates.gamma_dephase, a.conj().T @ a),
    ):
        if gamma:
            LdL = L.conj().T @ L
            diss = diss + gamma * (
                sparse.kron(L, L.conj())
                - 0.5 * sparse.kron(LdL, eye)
                - 0.5 * sparse.kron(eye, LdL.T)
            )
    return drive, drive_conj, diss.tocsr()


def _lindblad_rhs(pulse: PulseSpec, rates: EnvironmentRates, n_qubits: int, cutoff: int):
    drive, drive_conj, diss = _liouvillian_parts(rates, n_qubits, cutoff)
    has_drive = bool(pulse.components)
    has_diss = diss.nnz > 0

    def rhs(t, vec):
        out = diss @ vec if has_diss else np.zeros_like(vec)
        if has_drive:
            y = complex(pulse.drive(t))
            out += y * (drive @ vec) + np.conj(y) * (drive_conj @ vec)
        return out

    return rhs


def propagate(
    initial: QuantumState,
    pulse: PulseSpec,
    rates: EnvironmentRates,
    config: SimConfig,
) -> SimResult:
    """Integrate the master equation over one gate period and score the result."""
    if initial.n_qubits != config.n_qubits or initial.fock_cutoff != config.fock_cutoff:
        raise InvalidArgument("initial state dimensions do not match the config")
    _check_density(initial.rho, "initial state")
    K = config.fock_cutoff
    d = 2**config.n_qubits
    rhs = _lindblad_rhs(pulse, rates, config.n_qubits, K)
    check_every = max(1, config.steps // CHECKPOINTS)
    stats = {"leak": 0.0, "drift": 0.0, "mineig": 1.0, "herm": 0.0}

    def monitor(k, t, vec):
        rho = vec.reshape(d * K, d * K)
        diag = np.real(np.diag(rho))
        if not np.all(np.isfinite(diag)):
            raise IntegrationFailure(f"non-finite density matrix at t={t:.6g}")
        leak = float(diag.reshape(d, K)[:, -2:].sum())
        stats["leak"] = max(stats["leak"], leak)
        if leak > config.leakage_threshold:
            raise CutoffTooSmallError(
                f"Fock leakage {leak:.3e} exceeds {config.leakage_threshold:.1e} at "
                f"cutoff {K}; retry with cutoff {K + 5}",
                retry_cutoff=K + 5,
            )
        if k % check_every == 0 or k == config.steps:
            if not np.all(np.isfinite(rho)):
                raise IntegrationFailure(f"non-finite density matrix at t={t:.6g}")
            herm = float(np.max(np.abs(rho - rho.conj().T)))
            drift = abs(float(np.real(np.trace(rho))) - 1.0)
            mineig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
            stats["herm"] = max(stats["herm"], herm)
            stats["drift"] = max(stats["drift"], drift)
            stats["mineig"] = min(stats["mineig"], mineig)
            if herm > HERMITIAN_TOL or drift > TRACE_TOL or mineig < -POSITIVITY_TOL:
                raise IntegrationFailure(
                    f"state lost validity at t={t:.6g}: hermiticity {herm:.2e}, "
                    f"trace drift {drift:.2e}, min eigenvalue {mineig:.2e}"
                )

    vec_T = rk4(rhs, initial.rho.ravel(), 0.0, pulse.period, config.steps, monitor)
    rho_T = vec_T.reshape(d * K, d * K)
    final = QuantumState(rho_T, config.n_qubits, K, initial.qubit_input)
    rq = final.qubit_state()

    fidelity = None
    if initial.qubit_input is not None:
        target = ideal_state(initial.qubit_input, config.n_qubits)
        fidelity = float(np.real(target.conj() @ rq @ target))
    conc = eof_val = None
    if config.n_qubits == 2:
        rq_h = 0.5 * (rq + rq.conj().T)
        conc = concurrence(rq_h)
        eof_val = eof_from_concurrence(conc)
    return SimResult(
        final_qubit_state=rq,
        gate_fidelity=fidelity,
        concurrence=conc,
        eof=eof_val,
        leakage=stats["leak"],
        trace_drift=stats["drift"],
        min_eigenvalue=stats["mineig"],
        hermiticity_error=stats["herm"],
        final_state=final,
    )


def ideal_state(initial_qubits: np.ndarray, n_qubits: int) -> np.ndarray:
    """Apply the target gate exp(-i pi/8 S_x^2)."""
    psi = np.asarray(initial_qubits, dtype=complex)
    if psi.size != 2**n_qubits:
        raise InvalidArgument("state length does not match n_qubits")
    sx = collective_sx(n_qubits)
    return expm(-1j * (math.pi / 8) * (sx @ sx)) @ psi


def closed_form_propagator(pulse: PulseSpec, n_qubits: int, cutoff: int, t: float) -> np.ndarray:
    """exp(-i((f a + f* a^dag) S_x + g S_x^2)) on qubits x bus.

    Built in the S_x eigenbasis, where it is a bus displacement by -i s f*
    times the phase exp(-i g s^2) for each eigenvalue s.
    """
    f = displacement(pulse, t)
    g = accumulated_phase(pulse, t)
    sx = collective_sx(n_qubits)
    svals, vecs = np.linalg.eigh(sx)
    a = annihilation(cutoff)
    gen = f * a + np.conj(f) * a.conj().T
    d = sx.shape[0]
    U = np.zeros((d * cutoff, d * cutoff), dtype=complex)
    for s, v in zip(svals, vecs.T):
        proj = np.outer(v, v.conj())
        U += np.kron(proj, expm(-1j * s * gen) * np.exp(-1j * g * s * s))
    return U


@lru_cache(maxsize=64)
def _frame_cutoff(
    pulse: PulseSpec, n: int, K: int, probe_levels: int, padding: int, tol: float
) -> int:
    # smallest cutoff whose top two levels stay empty along the whole period
    d = 2**n
    path = np.linspace(0.0, pulse.period, 8 * max(pulse.max_harmonic, 1) + 2)[1:]
    start = K
    while K <= start + 4 * padding:
        Kbig = K + padding
        src = [q * Kbig + k for q in range(d) for k in range(min(probe_levels, K))]
        top = [q * Kbig + k for q in range(d) for k in (K - 2, K - 1)]
        worst = max(
            np.linalg.norm(closed_form_propagator(pulse, n, Kbig, s)[np.ix_(top, src)], 2)
            for s in path
        )
        if worst <= tol:
            return K
        K += 2
    raise CutoffTooSmallError(f"frame check needs a Fock cutoff above {K}", retry_cutoff=K)


def interaction_frame_check(
    pulse: PulseSpec,
    config: SimConfig,
    t: float,
    probe_levels: int = 2,
    padding: int = 30,
    boundary_tol: float = 1e-9,
) -> float:
    """Operator-norm distance between the RK4 propagator and its closed form.

    The comparison is restricted to inputs with at most ``probe_levels - 1``
    phonons: a truncated ladder does not close the commutator algebra, so
    columns that start near the cutoff are not meaningful. The closed form is
    evaluated with ``padding`` extra Fock levels and then truncated.

    Truncation error enters at amplitude level, so the working cutoff is
    raised above ``config.fock_cutoff`` until the exact amplitude in the top
    two retained levels is below ``boundary_tol``.
    """
    if not 0.0 <= t <= pulse.period * (1 + 1e-12):
        raise InvalidArgument("t must lie in [0, T]")
    if t == 0:
        return 0.0
    n = config.n_qubits
    d = 2**n
    K = _frame_cutoff(pulse, n, config.fock_cutoff, probe_levels, padding, boundary_tol)
    Kbig = K + padding
    U = closed_form_propagator(pulse, n, Kbig, t)
    src = [q * Kbig + k for q in range(d) for k in range(min(probe_levels, K))]
    keep = [q * Kbig + k for q in range(d) for k in range(K)]
    exact = U[np.ix_(keep, src)]

    _, A, _ = _operators(n, K)
    Ad = A.conj().T

    def rhs(s, psi):
        y = complex(pulse.drive(s))
        return -1j * ((y * A + np.conj(y) * Ad) @ psi)

    steps = max(1, math.ceil(config.steps * t / pulse.period))
    cols = [q * K + k for q in range(d) for k in range(min(probe_levels, K))]
    psi0 = np.eye(d * K, dtype=complex)[:, cols]
    numeric = rk4(rhs, psi0, 0.0, t, steps)
    return float(np.linalg.norm(numeric - exact, 2))


def _check_density(rho: np.ndarray, what: str = "density matrix") -> None:
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidArgument(f"{what} must be square")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-8:
        raise InvalidArgument(f"{what} is not Hermitian")
    if abs(np.trace(rho) - 1) > 1e-8:
        raise InvalidArgument(f"{what} does not have unit trace")


def concurrence(rho: np.ndarray) -> float:
    """Wootters concurrence of a two-qubit density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise InvalidArgument("concurrence needs a 4x4 density matrix")
    _check_density(rho)
    yy = np.kron(SIGMA_Y, SIGMA_Y)
    tilde = yy @ rho.conj() @ yy
    ev = np.linalg.eigvals(rho @ tilde)
    mu = np.sort(np.sqrt(np.clip(ev.real, 0.0, None)))[::-1]
    return float(min(1.0, max(0.0, mu[0] - mu[1] - mu[2] - mu[3])))


def _binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return float(-x * math.log2(x) - (1 - x) * math.log2(1 - x))


def eof_from_concurrence(c: float) -> float:
    c = min(1.0, max(0.0, c))
    return _binary_entropy(0.5 * (1 + math.sqrt(max(0.0, 1 - c * c))))


def eof(rho: np.ndarray) -> float:
    """Entanglement of formation of a two-qubit state."""
    return eof_from_concurrence(concurrence(rho))


def ground_input(n_qubits: int, cutoff: int, bus_level: int = 0) -> QuantumState:
    """|0...0> on the qubits times Fock state |bus_level>."""
    psi = np.zeros(2**n_qubits, dtype=complex)
    psi[0] = 1.0
    bus = np.zeros((cutoff, cutoff), dtype=complex)
    bus[bus_level, bus_level] = 1.0
    return QuantumState.product(psi, bus)


def propagate_ground(
    pulse: PulseSpec,
    rates: EnvironmentRates,
    config: SimConfig,
    bus_level: int = 0,
    max_cutoff: int = 80,
) -> SimResult:
    """Propagate |0...0> x |bus_level>, raising the cutoff while the leakage monitor objects."""
    while True:
        try:
            start = ground_input(config.n_qubits, config.fock_cutoff, bus_level)
            return propagate(start, pulse, rates, config)
        except CutoffTooSmallError as err:
            if err.retry_cutoff > max_cutoff:
                raise
            config = replace(config, fock_cutoff=err.retry_cutoff)


def improvement_RE(
    m: int, rates: EnvironmentRates, config: SimConfig | None = None
) -> tuple[float, float, float]:
    """(1 - E_mono) / (1 - E_poly) for two qubits starting in |00> with the bus in |0>.

    Returns ``(E_mono, E_poly, R_E)``.
    """
    if not rates.any_nonzero:
        raise InvalidArgument("at least one rate must be nonzero")
    config = config or SimConfig.default_for(m)
    if config.n_qubits != 2:
        raise InvalidArgument("entanglement of formation needs two qubits")
    e_mono = propagate_ground(monochromatic_pulse(m), rates, config).eof
    e_poly = propagate_ground(optimal_pulse(m), rates, config).eof
    if 1 - e_poly < 1e-12:
        raise RatioUndefined("polychromatic gate reached unit entanglement")
    return e_mono, e_poly, (1 - e_mono) / (1 - e_poly)
