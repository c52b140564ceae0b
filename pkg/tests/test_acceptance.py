"""Acceptance criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python3 tests/test_acceptance.py``. Figure data are written as
CSV to ``results/``.
"""

import math
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from polypulse.cli import fmt, run
from polypulse.infidelity import (
    BusMoments,
    EnvironmentRates,
    assemble_zeta,
    f_moments,
    f_moments_quadrature,
    improvement_R,
    pulse_moments,
)
from polypulse.operators import coherent_cutoff, coherent_state, thermal_cutoff, thermal_state
from polypulse.oracle import zeta_oracle
from polypulse.pulses import (
    intensity,
    monochromatic_pulse,
    optimal_pulse,
    solve_lambda,
)
from polypulse.simulate import SimConfig, interaction_frame_check, propagate_ground

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:
    ACCEPTANCE_LINES = []

RESULTS = Path(__file__).resolve().parents[1] / "results"

TABLE_LAMBDA = {2: 0.667, 3: 0.388, 4: 0.276, 5: 0.215, 6: 0.177, 7: 0.150, 8: 0.130}
TABLE_C = {
    2: [-0.144, 0.288],
    3: [-0.032, -0.179, 0.368],
    4: [-0.015, -0.051, -0.201, 0.435],
    5: [-0.009, -0.026, -0.064, -0.218, 0.493],
    6: [-0.006, -0.016, -0.034, -0.073, -0.231, 0.546],
    7: [-0.004, -0.011, -0.022, -0.040, -0.081, -0.242, 0.595],
    8: [-0.003, -0.008, -0.015, -0.026, -0.046, -0.088, -0.252, 0.641],
}
CLOSED_LAMBDA = {
    2: 2 / 3,
    3: (6 - math.sqrt(3)) / 11,
    4: (5 - math.sqrt(5)) / 10,
    5: (3 * (75 + math.sqrt(145)) - math.sqrt(10830 + 802 * math.sqrt(145))) / 548,
    6: (98 + 7 * math.sqrt(7) - math.sqrt(2891 + 868 * math.sqrt(7))) / 252,
}
THERM = EnvironmentRates(1.0, 1.0, 0.0)
DEPH = EnvironmentRates(0.0, 0.0, 1.0)
MIXED = EnvironmentRates(1.0, 1.0, 1.0)


def report(tag, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {tag}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def write_csv(name, header, rows):
    RESULTS.mkdir(exist_ok=True)
    text = ",".join(header) + "\n" + "".join(",".join(fmt(v) for v in r) + "\n" for r in rows)
    (RESULTS / name).write_text(text)


# 1 -------------------------------------------------------------------------


def test_c1_table():
    t0 = time.perf_counter()
    lam_ok = all(round(solve_lambda(m).lam, 3) == TABLE_LAMBDA[m] for m in range(2, 9))
    closed = max(abs(solve_lambda(m).lam - CLOSED_LAMBDA[m]) for m in range(2, 7))
    amp = max(
        float(np.max(np.abs(optimal_pulse(m).amplitudes.real - TABLE_C[m]))) for m in range(2, 9)
    )
    elapsed = time.perf_counter() - t0
    ok = lam_ok and closed <= 1e-10 and amp < 1e-3 and elapsed < 1.0
    report("1 (table)", ok,
           f"lambda 3-decimal match={lam_ok}, closed-form err={closed:.1e}, "
           f"max amplitude diff={amp:.1e} (<1e-3), {elapsed:.2f}s")


# 2 -------------------------------------------------------------------------


def test_c2_constraints():
    worst = [0.0, 0.0, 0.0]
    energy_ok = True
    for m in range(2, 13):
        p = optimal_pulse(m)
        c, j = p.amplitudes, p.harmonics
        worst[0] = max(worst[0], abs(np.sum(np.abs(c) ** 2 / j) - 1 / 16))
        worst[1] = max(worst[1], abs(np.sum(c / j)))
        worst[2] = max(worst[2], abs(np.sum(c**2 / j**2) - solve_lambda(m).lam / 16))
        mono = intensity(monochromatic_pulse(m))
        energy_ok &= intensity(p) <= mono and abs(mono - m / 16) < 1e-14
    ok = worst[0] <= 1e-12 and worst[1] <= 1e-12 and worst[2] <= 1e-10 and energy_ok
    report("2 (constraints)", ok,
           f"area err={worst[0]:.1e}, sum c/j={worst[1]:.1e}, "
           f"sum c^2/j^2 - lambda/16={worst[2]:.1e}, intensity bound={energy_ok}")


# 3 -------------------------------------------------------------------------


def test_c3_moments():
    worst = 0.0
    mono_err = 0.0
    for m in range(1, 11):
        pulses = [monochromatic_pulse(m)] + ([optimal_pulse(m)] if m > 1 else [])
        for p in pulses:
            a = f_moments(pulse_moments(p), p.fundamental_frequency).as_array()
            worst = max(worst, float(np.max(np.abs(a - f_moments_quadrature(p).as_array()))))
        fm = f_moments(pulse_moments(monochromatic_pulse(m)), 1.0)
        mono_err = max(mono_err, abs(fm.avg_abs2 - 2 * math.pi / (8 * m)))
    ok = worst <= 1e-10 and mono_err <= 1e-10
    report("3 (moments)", ok, f"analytic vs quadrature={worst:.1e}, single-tone <|f|^2> err={mono_err:.1e}")


# 4 -------------------------------------------------------------------------


def test_c4_oracle():
    t0 = time.perf_counter()
    buses = [
        (thermal_state(0.0, 2), BusMoments.ground()),
        (thermal_state(2.0, thermal_cutoff(2.0)), BusMoments.thermal(2.0)),
        (coherent_state(0.5, coherent_cutoff(0.5)), BusMoments.coherent(0.5)),
    ]
    worst_rel = worst_res = 0.0
    cases = 0
    for m in range(1, 6):
        pulse = optimal_pulse(m) if m > 1 else monochromatic_pulse(1)
        for n in range(2, 6):
            for rates in (THERM, DEPH, MIXED):
                for rho, mom in buses:
                    z_or = zeta_oracle(pulse, n, rates, rho)
                    z_rc = assemble_zeta(pulse, n, rates, mom)
                    rel = np.max(np.abs(z_or.entries - z_rc.entries)) / np.max(np.abs(z_or.entries))
                    worst_rel, worst_res = max(worst_rel, rel), max(worst_res, z_or.residual)
                    cases += 1
    elapsed = time.perf_counter() - t0
    ok = worst_rel <= 1e-6 and worst_res <= 1e-8 and elapsed < 120
    report("4 (zeta oracle)", ok,
           f"{cases} cases, max relative diff={worst_rel:.1e}, max residual={worst_res:.1e}, {elapsed:.1f}s")


# 5 -------------------------------------------------------------------------


def _r(m, n, rates, bus=None):
    return improvement_R(m, n, rates, bus or BusMoments.ground())[2]


def test_c5a_thermalisation_m2():
    r = _r(2, 2, THERM)
    report("5a (R, m=2, thermalisation)", abs(r - 1.5) <= 1e-3, f"R={r:.6f}, target 1.500+-0.001")


def test_c5b_thermalisation_m8():
    r = _r(8, 2, THERM)
    report("5b (R, m=8, thermalisation)", abs(r - 1.923) <= 2e-3, f"R={r:.6f}, target 1.923+-0.002")


def test_c5c_dephasing_hot_bus():
    r = _r(5, 2, DEPH, BusMoments.thermal(100.0))
    report("5c (R, m=5, dephasing, nbar=100)", 1.8 <= r <= 2.0, f"R={r:.4f}, band [1.8, 2.0]")


def test_c5d_n_independence():
    spread = 0.0
    for m in range(2, 9):
        rs = [_r(m, n, THERM) for n in range(2, 51)]
        spread = max(spread, max(rs) - min(rs))
    report("5d (R independent of N without dephasing)", spread <= 1e-10, f"max spread={spread:.1e}")


@lru_cache(maxsize=None)
def _n_curve(m):
    return [_r(m, n, DEPH) for n in range(2, 51)]


def test_c5e_growth_m3():
    rs = _n_curve(3)
    mono = all(b >= a - 1e-12 for a, b in zip(rs, rs[1:]))
    ok = mono and max(rs) > 3
    report("5e (R vs N, m=3, dephasing)", ok, f"non-decreasing={mono}, max over N<=50={max(rs):.4f} (>3)")


def test_c5f_growth_m5():
    rs = _n_curve(5)
    mono = all(b >= a - 1e-12 for a, b in zip(rs, rs[1:]))
    ok = mono and max(rs) > 4
    report("5f (R vs N, m=5, dephasing)", ok, f"non-decreasing={mono}, max over N<=50={max(rs):.4f} (>4)")


# 6 -------------------------------------------------------------------------


def _unitary_pulses():
    return [monochromatic_pulse(1)] + [optimal_pulse(m) for m in range(2, 7)]


@lru_cache(maxsize=None)
def _run(kind, m, gamma_over_delta, bus_level=0):
    pulse = optimal_pulse(m) if kind == "optimal" else monochromatic_pulse(m)
    g = gamma_over_delta * m * pulse.fundamental_frequency
    return propagate_ground(pulse, EnvironmentRates(g, g, g), SimConfig.default_for(m), bus_level)


def test_c6_unitarity():
    t0 = time.perf_counter()
    worst_fid = 0.0
    for p in _unitary_pulses():
        m, kind = p.max_harmonic, "optimal" if len(p.components) > 1 else "mono"
        for level in (0, 1):
            worst_fid = max(worst_fid, 1 - _run(kind, m, 0.0, level).gate_fidelity)
    t1 = time.perf_counter()
    worst_frame = 0.0
    for p in _unitary_pulses():
        cfg = SimConfig.default_for(p.max_harmonic)
        for k in range(1, 11):
            worst_frame = max(worst_frame, interaction_frame_check(p, cfg, k * p.period / 10))
    elapsed = time.perf_counter() - t0
    ok = worst_fid <= 1e-6 and worst_frame <= 1e-7 and elapsed < 60
    report("6 (unitary limit)", ok,
           f"max 1-F={worst_fid:.1e}, max frame distance={worst_frame:.1e}, "
           f"fidelity {t1 - t0:.1f}s + frame {elapsed - (t1 - t0):.1f}s")


# 7 -------------------------------------------------------------------------


def _re_curve(gamma):
    out = []
    for m in range(2, 7):
        e_m, e_p = _run("mono", m, gamma).eof, _run("optimal", m, gamma).eof
        out.append((m, gamma, e_m, e_p, (1 - e_m) / (1 - e_p)))
    return out


def test_c7a_weak_dissipation():
    rows = _re_curve(1e-3)
    rs = [r[-1] for r in rows]
    mono = all(b >= a for a, b in zip(rs, rs[1:]))
    ok = min(rs) > 1 and mono and abs(rs[-1] - 2.0) <= 0.3
    report("7a (R_E, gamma=1e-3 delta)", ok,
           "R_E(m=2..6)=" + ", ".join(f"{r:.3f}" for r in rs) + f", non-decreasing={mono}")


def test_c7b_strong_dissipation():
    rs = [r[-1] for r in _re_curve(1e-2)]
    report("7b (R_E, gamma=1e-2 delta)", min(rs) > 1,
           "R_E(m=2..6)=" + ", ".join(f"{r:.3f}" for r in rs))


def test_c7c_figure_data():
    RESULTS.mkdir(exist_ok=True)
    for m in (2, 3, 6):
        for kind in ("optimal", "mono"):
            run(["trajectory", "--m", str(m), "--kind", kind, "--samples", "201",
                 "--output", str(RESULTS / f"fig1_trajectory_{kind}_m{m}.csv")])
    for name, rates in (("dephasing", ("--gamma-dephase", "1")),
                        ("thermalisation", ("--gamma-plus", "1", "--gamma-minus", "1"))):
        run(["sweep", "--vary", "m", "--m", "2:8", *rates,
             "--output", str(RESULTS / f"fig2_R_vs_m_{name}.csv")])
    run(["sweep", "--vary", "nbar", "--m", "5", "--gamma-dephase", "1", "--bus", "thermal",
         "--nbar-list", ",".join(str(x) for x in (0, 0.5, 1, 2, 5, 10, 20, 50, 100)),
         "--output", str(RESULTS / "fig2_inset_R_vs_nbar.csv")])
    for name, rates in (("dephasing", ("--gamma-dephase", "1")),
                        ("equal_rates", ("--gamma-plus", "1", "--gamma-minus", "1", "--gamma-dephase", "1"))):
        run(["sweep", "--vary", "N", "--m", "3,5", "--ions", "2:50", *rates,
             "--output", str(RESULTS / f"fig3_R_vs_N_{name}.csv")])
    rows = _re_curve(1e-3) + _re_curve(5e-3) + _re_curve(1e-2)
    write_csv("fig4_RE_vs_m.csv", ("m", "gamma_over_delta", "E_mono", "E_poly", "R_E"), rows)
    files = sorted(p.name for p in RESULTS.glob("fig*.csv"))
    report("7c (figure data)", len(files) == 12, f"{len(files)} CSV files in results/")


# 8 -------------------------------------------------------------------------


def test_c8_validity():
    runs = _accepted_runs()
    drift = max(r.trace_drift for r in runs)
    mineig = min(r.min_eigenvalue for r in runs)
    leak = max(r.leakage for r in runs)
    deltas = []
    for kind, m, g in (("mono", 1, 0.0), ("optimal", 2, 1e-3), ("optimal", 6, 1e-3), ("mono", 6, 1e-2)):
        pulse = optimal_pulse(m) if kind == "optimal" else monochromatic_pulse(m)
        base = _run(kind, m, g)
        cfg = SimConfig(2, base.final_state.fock_cutoff, SimConfig.default_for(m).steps)
        ga = g * m * pulse.fundamental_frequency
        rates = EnvironmentRates(ga, ga, ga)
        fine = propagate_ground(pulse, rates, SimConfig(2, cfg.fock_cutoff, 2 * cfg.steps))
        wide = propagate_ground(pulse, rates, SimConfig(2, cfg.fock_cutoff + 5, cfg.steps))
        deltas.append(max(abs(fine.gate_fidelity - base.gate_fidelity),
                          abs(wide.gate_fidelity - base.gate_fidelity)))
    ok = drift <= 1e-9 and mineig >= -1e-8 and leak <= 1e-8 and max(deltas) < 1e-8
    report("8 (state validity)", ok,
           f"{len(runs)} runs: trace drift={drift:.1e}, min eigenvalue={mineig:.1e}, "
           f"leakage={leak:.1e}; step-halving/cutoff+5 fidelity change={max(deltas):.1e}")


def _accepted_runs():
    # the runs behind criteria 6 and 7, served from the cache when already done
    runs = []
    for p in _unitary_pulses():
        kind = "optimal" if len(p.components) > 1 else "mono"
        runs += [_run(kind, p.max_harmonic, 0.0, level) for level in (0, 1)]
    for m in range(2, 7):
        for g in (1e-3, 1e-2):
            runs += [_run("mono", m, g), _run("optimal", m, g)]
    return runs


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
