"""Acceptance suite: one PASS/FAIL line per criterion at its pinned tolerance.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python tests/test_acceptance.py``.
"""

import dataclasses
import functools
import json
import time

import numpy as np
import pytest

from mstground import config as cfgmod
from mstground.geometry import Scatterer, Scene, doubled_free_scene
from mstground.ground import FreeField
from mstground.scatterers import shell_factors
from mstground.solver import boundary_residual, insertion_loss, simulate_point
from mstground.sweep import find_extrema, global_extremum, run_sweep, two_ray_dip

REPORT = []

BETA_ZERO = "ground=" + json.dumps({"type": "impedance", "model": {"type": "constant", "beta": [0.0, 0.0]}})


def _record(tag, ok, detail):
    line = f"{tag:<5} {'PASS' if ok else 'FAIL'}  {detail}"
    REPORT.append(line)
    return ok


@functools.lru_cache(maxsize=None)
def _config(name, overrides=()):
    return cfgmod.preset(name, list(overrides))


@functools.lru_cache(maxsize=None)
def _sweep(name, overrides=()):
    return run_sweep(_config(name, overrides), workers=1)


def _max_diff(a, b):
    assert np.array_equal(a.frequencies, b.frequencies)
    return float(np.max(np.abs(a.il - b.il)))


# ---------------------------------------------------------------------------
# criteria


def check_c1():
    cfg = _config("fig2")
    start = time.perf_counter()
    grounded = run_sweep(cfg, workers=1)
    doubled = dataclasses.replace(
        cfg, scene=doubled_free_scene(cfg.scene), ground=FreeField(), array=None, ground_data={"type": "free"}
    )
    free = run_sweep(doubled, frequencies=grounded.frequencies, workers=1)
    elapsed = time.perf_counter() - start
    diff = _max_diff(grounded, free)
    ok = diff <= 1e-8 and elapsed < 120.0 and len(grounded) == 512
    return _record("C1", ok, f"max|dIL| 5x3 rigid vs 10x3 free = {diff:.2e} dB (tol 1e-8), {elapsed:.0f} s single-threaded (limit 120 s)")


def check_c2():
    peak = global_extremum(_sweep("fig2"), (100.0, 1200.0), "peak")
    ok = peak is not None and 520.0 <= peak.frequency <= 630.0
    details = [f"fig2 max IL at {peak.frequency:.1f} Hz (window 520-630)"]
    for name in ("fig6a", "fig6c"):
        cfg = _config(name)
        peaks = [e for e in find_extrema(_sweep(name), (2200.0, 2800.0)) if e.kind == "peak"]
        ok &= bool(peaks)
        where = ", ".join(f"{e.frequency:.0f}" for e in peaks) or "none"
        details.append(f"7x3 receiver y={cfg.scene.receiver.y}: maxima in 2200-2800 at [{where}] Hz")
    return _record("C2", ok, "; ".join(details))


def check_c3():
    ok = True
    details = []
    for name in ("fig6b", "fig6c"):
        cfg = _config(name)
        pred = two_ray_dip(cfg.scene.source, cfg.scene.receiver, cfg.medium.sound_speed)
        dips = [e for e in find_extrema(_sweep(name), (0.85 * pred, 1.15 * pred)) if e.kind == "dip"]
        hit = min(dips, key=lambda e: abs(e.frequency - pred)) if dips else None
        ok &= hit is not None
        got = f"{hit.frequency:.0f} Hz ({100 * (hit.frequency / pred - 1):+.1f}%)" if hit else "none"
        details.append(f"receiver y={cfg.scene.receiver.y}: two-ray {pred:.0f} Hz, IL dip {got}")
    return _record("C3", ok, "; ".join(details) + " (tol +-15%)")


def check_c4a():
    worst = 0.0
    parts = []
    for name in ("fig2", "fig6b", "fig4"):
        d = _max_diff(_sweep(name), _sweep(name, (BETA_ZERO,)))
        worst = max(worst, d)
        parts.append(f"{name} {d:.1e}")
    return _record("C4a", worst <= 1e-10, f"beta=0 impedance vs rigid ground max|dIL| = {worst:.2e} dB [{', '.join(parts)}] (tol 1e-10)")


def check_c4b():
    cfg = _config("fig4")
    heavy = dataclasses.replace(cfg.scatterer, density=cfg.scatterer.density * 1e6)
    shell = dataclasses.replace(cfg, scatterer=heavy)
    s = heavy.mid_radius
    rigid_scene = Scene(
        cfg.scene.source, cfg.scene.receiver,
        tuple(Scatterer(c.center, s) for c in cfg.scene.scatterers), cfg.scene.ground,
    )
    rigid = dataclasses.replace(cfg, scatterer=None, scene=rigid_scene, array=None)
    d = _max_diff(run_sweep(shell, workers=1), run_sweep(rigid, workers=1))
    return _record("C4b", d <= 1e-3, f"shell with density x1e6 vs rigid radius S: max|dIL| = {d:.2e} dB (tol 1e-3)")


PROBES = np.linspace(100.0, 1200.0, 20)


def _probe_il(order):
    cfg = _config("fig2")
    out = []
    for f in PROBES:
        value, _, _ = simulate_point(cfg.scene, None, cfg.ground, f, order, cfg.medium)
        out.append(insertion_loss(value)[0])
    return np.array(out)


def check_c5():
    il = {n: _probe_il(n) for n in (4, 6, 8, 10)}
    # four significant figures: |IL6 - IL8| <= 5e-4 |IL8|, floor 5e-4 dB near IL = 0
    tol = np.maximum(5e-4 * np.abs(il[8]), 5e-4)
    err = np.abs(il[6] - il[8])
    ok = bool(np.all(err <= tol))
    worst = int(np.argmax(err / tol))
    steps = [float(np.max(np.abs(il[n] - il[n + 2]))) for n in (4, 6, 8)]
    mono = steps[0] > steps[1] > steps[2]
    return _record(
        "C5",
        ok and mono,
        f"N=6 vs N=8 at 20 probes: worst {err[worst]:.2e} dB at {PROBES[worst]:.0f} Hz "
        f"(tol {tol[worst]:.2e}); max|IL_N-IL_N+2| for N=4,6,8 = "
        + ", ".join(f"{v:.1e}" for v in steps)
        + (" (decreasing)" if mono else " (NOT decreasing)"),
    )


RESIDUAL_ORDER = 24


def _worst_residual(cfg, frequencies, order):
    worst = 0.0
    for f in frequencies:
        _, system, coeffs = simulate_point(cfg.scene, None, cfg.ground, f, order, cfg.medium)
        for m in range(len(cfg.scene.scatterers)):
            dp, dp0 = boundary_residual(cfg.scene, system, coeffs, m)
            worst = max(worst, dp / dp0)
    return worst


def check_c6():
    worst = 0.0
    modes = set()
    skipped = []
    for name in sorted(cfgmod.PRESETS):
        cfg = _config(name)
        if cfg.scatterer is not None:
            skipped.append(name)
            continue
        modes.add(cfg.ground_data["type"])
        worst = max(worst, _worst_residual(cfg, np.linspace(cfg.grid.f_min, cfg.grid.f_max, 5), RESIDUAL_ORDER))
    ok = worst <= 1e-6 and modes == {"free", "rigid", "impedance"}
    return _record(
        "C6",
        ok,
        f"max surface |dp/dr| / max |dp0/dr| = {worst:.2e} (tol 1e-6) at N={RESIDUAL_ORDER}, "
        f"5 frequencies x {len(cfgmod.PRESETS) - len(skipped)} rigid-cylinder presets, grounds {sorted(modes)}",
    )


def check_c6_order8():
    cfg = _config("fig2")
    worst = _worst_residual(cfg, np.linspace(100.0, 1200.0, 5), 8)
    return _record("C6-N8", worst <= 1e-6, f"fig2 at N=8: residual {worst:.2e} (tol 1e-6); limited by truncation of neighbour modes above N")


def _breathing_peak(name):
    """IL peak produced by the axisymmetric (n = 0) shell resonance.

    The resonance is where |Z_0| is largest below the Bragg band; the IL
    peak nearest to it (within 10%) is returned as (f_res, peak).
    """
    cfg = _config(name)
    spectrum = _sweep(name)
    f = spectrum.frequencies
    below = f < 520.0
    z0 = np.array([abs(shell_factors(0, cfg.medium.wavenumber(x), cfg.medium, cfg.scatterer)[0][0]) for x in f[below]])
    f_res = float(f[below][np.argmax(z0)])
    peaks = [e for e in find_extrema(spectrum, (0.9 * f_res, 1.1 * f_res)) if e.kind == "peak"]
    return f_res, (min(peaks, key=lambda e: abs(e.frequency - f_res)) if peaks else None)


def check_c7():
    thin_res, thin = _breathing_peak("fig4")
    thick_res, thick = _breathing_peak("fig4-thick")
    bragg = global_extremum(_sweep("fig2"), (520.0, 630.0), "peak")
    ok = thin is not None and thick is not None and thick.frequency < thin.frequency < bragg.frequency

    def fmt(res, pk):
        return f"n=0 resonance {res:.0f} Hz, IL peak " + (f"{pk.frequency:.0f} Hz ({pk.il:.1f} dB)" if pk else "none")

    return _record(
        "C7",
        ok,
        f"2h=1 mm: {fmt(thin_res, thin)}; 2h=2 mm: {fmt(thick_res, thick)}; rigid Bragg peak {bragg.frequency:.0f} Hz",
    )


BRAGG_BAND = (450.0, 700.0)


def check_c8():
    soft = float(np.max(_sweep("fig5b-20").il[_band("fig5b-20")]))
    hard = float(np.max(_sweep("fig5b-250").il[_band("fig5b-250")]))
    return _record(
        "C8",
        hard - soft >= 3.0,
        f"Bragg-band ({BRAGG_BAND[0]:.0f}-{BRAGG_BAND[1]:.0f} Hz) max IL: sigma_e 250k {hard:.1f} dB, 20k {soft:.1f} dB, "
        f"reduction {hard - soft:.1f} dB (need >= 3)",
    )


def _band(name):
    f = _sweep(name).frequencies
    return (f >= BRAGG_BAND[0]) & (f <= BRAGG_BAND[1])


def check_c9():
    return _record(
        "C9",
        True,
        "statement: measured spectra and boundary-element curves are not reproduced; "
        "covered ordinally by C2, C3, C8 and by the invariant tests (Graf identity, Wronskian, parity, "
        "mirror symmetry, parallel determinism)",
    )


# ---------------------------------------------------------------------------
# pytest entry points

pytestmark = pytest.mark.slow


def test_c1_doubled_array_equivalence():
    assert check_c1()


def test_c2_bragg_gap_location():
    assert check_c2()


def test_c3_ground_effect_dips():
    assert check_c3()


def test_c4a_zero_admittance_limit():
    assert check_c4a()


def test_c4b_heavy_shell_limit():
    assert check_c4b()


def test_c5_truncation_convergence():
    assert check_c5()


def test_c6_boundary_residual():
    assert check_c6()


@pytest.mark.xfail(strict=True, reason="residual at N=8 is limited by truncation of neighbour modes above N")
def test_c6_boundary_residual_order8():
    assert check_c6_order8()


def test_c7_shell_resonance_ordering():
    assert check_c7()


def test_c8_impedance_ground_reduction():
    assert check_c8()


def test_c9_statement():
    assert check_c9()


if __name__ == "__main__":
    for check in (check_c1, check_c2, check_c3, check_c4a, check_c4b, check_c5,
                  check_c6, check_c6_order8, check_c7, check_c8, check_c9):
        check()
        print(REPORT[-1], flush=True)
