import math

import numpy as np
import pytest
from scipy import special

from mstground.errors import ConvergenceError, GeometryError, SingularSystemError
from mstground.geometry import (
    ArrayConfig,
    Point2,
    Scatterer,
    Scene,
    doubled_free_scene,
    lattice_scatterers,
    mirror_image,
)
from mstground.ground import ConstantAdmittance, FreeField, ImpedanceGround, OneParameter, RigidGround
from mstground.scatterers import Medium
from mstground.solver import (
    assemble,
    boundary_residual,
    FieldValue,
    evaluate_field,
    field_at,
    graf_coefficients,
    graf_translate,
    insertion_loss,
    residual_norm,
    simulate_point,
    solve,
)

AIR = Medium()
LARGE = ArrayConfig(3, 5, 0.3, 1.5, 0.15, 0.1)
SMALL = ArrayConfig(3, 7, 0.069, 0.755, 0.0345, 0.0275)


def _il(scene, ground, f, order=7):
    value, _, _ = simulate_point(scene, None, ground, f, order, AIR)
    return insertion_loss(value)[0]


@pytest.mark.parametrize("sign", ["direct", "reflected"])
@pytest.mark.parametrize("n", [-3, 0, 2, 5])
def test_graf_identity(sign, n):
    k = 7.0
    big_r, alpha = 0.9, 0.6
    # local point about m, and the same point seen from p = m + R e^{i alpha}
    r_m, th_m = 0.25, 2.1
    px, py = r_m * math.cos(th_m), r_m * math.sin(th_m)
    dx, dy = px - big_r * math.cos(alpha), py - big_r * math.sin(alpha)
    r_p, th_p = math.hypot(dx, dy), math.atan2(dy, dx)
    s = 1 if sign == "direct" else -1
    want = special.hankel1(n, k * r_p) * np.exp(1j * s * n * th_p)
    got = graf_translate(n, k, (r_m, th_m), (big_r, alpha), sign, qmax=40)
    assert abs(got - want) < 1e-11 * abs(want)


def test_graf_coefficients_shape_and_divergence():
    q, c = graf_coefficients(2, 3.0, (1.0, 0.3), qmax=10)
    assert q.shape == c.shape == (21,)
    with pytest.raises(ConvergenceError):
        graf_translate(0, 3.0, (1.2, 0.0), (1.0, 0.0))
    with pytest.raises(ValueError):
        graf_coefficients(0, 1.0, (1.0, 0.0), sign="sideways")


def _single_cylinder_exact(k, a, src, obs, nmax=30):
    """Exact field of a line source and a rigid cylinder at the origin."""
    r0, th0 = math.hypot(src.x, src.y), math.atan2(src.y, src.x)
    r, th = math.hypot(obs.x, obs.y), math.atan2(obs.y, obs.x)
    inc = special.hankel1(0, k * math.hypot(obs.x - src.x, obs.y - src.y))
    n = np.arange(-nmax, nmax + 1)
    t = -special.jvp(n, k * a) / special.h1vp(n, k * a)
    scat = np.sum(t * special.hankel1(n, k * r0) * special.hankel1(n, k * r) * np.exp(1j * n * (th - th0)))
    return inc + scat, inc


@pytest.mark.parametrize("f", [120.0, 600.0, 1500.0])
def test_single_cylinder_closed_form(f):
    k = AIR.wavenumber(f)
    src, obs = Point2(-1.3, 0.4), Point2(0.8, -0.5)
    scene = Scene(src, obs, (Scatterer(Point2(0, 0), 0.1),), "free")
    value, _, _ = simulate_point(scene, None, FreeField(), f, order=25, medium=AIR)
    total, ref = _single_cylinder_exact(k, 0.1, src, obs)
    assert abs(value.p_reference - ref) < 1e-12
    assert abs(value.p_total - total) < 1e-10 * abs(total)


def test_no_scatterers_gives_zero_il():
    scene = Scene(Point2(0, 0.2), Point2(3, 0.4), ())
    for ground in (FreeField(), RigidGround(), ImpedanceGround(OneParameter(2e4))):
        mode_scene = Scene(scene.source, scene.receiver, (), "free" if isinstance(ground, FreeField) else "rigid")
        assert _il(mode_scene, ground, 700.0) == 0.0


def test_free_mode_has_unit_diagonal():
    scene = Scene(Point2(0, 0), Point2(10, 0), lattice_scatterers(LARGE, grounded=False), "free")
    system = assemble(scene, None, FreeField(), AIR.wavenumber(400.0), 5)
    np.testing.assert_array_equal(np.diag(system.matrix), np.ones(15 * 11))


def test_equilibrated_residual_is_small():
    scene = Scene(Point2(0, 0.235), Point2(1.203, 0), lattice_scatterers(SMALL))
    for f in (100.0, 2500.0):
        system = assemble(scene, None, RigidGround(), AIR.wavenumber(f), 7, AIR, f)
        a = solve(system)
        assert residual_norm(system, a) < 1e-10


@pytest.mark.parametrize("f", [150.0, 573.0, 1100.0])
def test_rigid_ground_equals_doubled_free_array(f):
    scene = Scene(Point2(0, 0), Point2(10, 0), lattice_scatterers(LARGE))
    doubled = doubled_free_scene(scene)
    assert abs(_il(scene, RigidGround(), f) - _il(doubled, FreeField(), f)) < 1e-9


@pytest.mark.parametrize("f", [300.0, 900.0])
def test_mirror_symmetry(f):
    scene = Scene(Point2(0, 0.2), Point2(6, 0.7), lattice_scatterers(LARGE))
    assert abs(_il(scene, RigidGround(), f) - _il(mirror_image(scene), RigidGround(), f)) < 1e-9


def test_zero_admittance_reproduces_rigid():
    scene = Scene(Point2(0, 0.235), Point2(1.203, 0.117), lattice_scatterers(SMALL))
    wvdp = ImpedanceGround(ConstantAdmittance(0j))
    for f in (700.0, 2400.0):
        assert abs(_il(scene, wvdp, f) - _il(scene, RigidGround(), f)) <= 1e-10


def _surface_check(scene, ground, f, order=20):
    value, system, coeffs = simulate_point(scene, None, ground, f, order, AIR)
    worst = 0.0
    for m in range(len(scene.scatterers)):
        dp, dp0 = boundary_residual(scene, system, coeffs, m)
        worst = max(worst, dp / dp0)
    return worst


@pytest.mark.parametrize(
    "ground",
    [FreeField(), RigidGround(), ImpedanceGround(OneParameter(2e4))],
    ids=["free", "rigid", "impedance"],
)
def test_neumann_condition_on_every_cylinder(ground):
    kind = "free" if isinstance(ground, FreeField) else "rigid"
    cfg = ArrayConfig(2, 2, 0.3, 1.5, 0.15, 0.1)
    scene = Scene(Point2(0, 0.1), Point2(4, 0.3), lattice_scatterers(cfg), kind)
    assert _surface_check(scene, ground, 500.0) < 1e-6


def test_surface_residual_decays_with_order():
    # the residual is the truncation error of the neighbours' re-expansion
    cfg = ArrayConfig(2, 2, 0.3, 1.5, 0.15, 0.1)
    scene = Scene(Point2(0, 0.1), Point2(4, 0.3), lattice_scatterers(cfg))
    res = [_surface_check(scene, RigidGround(), 500.0, order) for order in (4, 8, 12, 16)]
    assert all(b < 0.2 * a for a, b in zip(res, res[1:]))


def test_residual_rejects_unanchored_field_for_impedance_ground():
    # the linear system freezes Q at each centre, so only the anchored field
    # satisfies the boundary condition exactly
    cfg = ArrayConfig(1, 1, 0.3, 0.5, 0.15, 0.1)
    scene = Scene(Point2(0, 0.1), Point2(2, 0.3), lattice_scatterers(cfg))
    _, system, coeffs = simulate_point(scene, None, ImpedanceGround(OneParameter(2e4)), 800.0, 20, AIR)
    anchored, ref = boundary_residual(scene, system, coeffs, 0, anchor=True)
    loose, _ = boundary_residual(scene, system, coeffs, 0, anchor=False)
    assert anchored / ref < 1e-6
    assert loose > anchored


def test_field_inside_scatterer_is_rejected():
    scene = Scene(Point2(0, 0), Point2(10, 0), lattice_scatterers(LARGE))
    _, system, coeffs = simulate_point(scene, None, RigidGround(), 300.0, 5, AIR)
    with pytest.raises(GeometryError):
        field_at(scene, system, coeffs, 1.6, 0.15)
    with pytest.raises(GeometryError):
        evaluate_field(scene, system, coeffs, Point2(0, 0))


def test_condition_limit_raises():
    scene = Scene(Point2(0, 0), Point2(10, 0), lattice_scatterers(LARGE))
    system = assemble(scene, None, RigidGround(), AIR.wavenumber(300.0), 5)
    with pytest.raises(SingularSystemError) as info:
        solve(system, max_condition=1.0)
    assert info.value.condition > 1.0


def test_insertion_loss_definition():
    assert insertion_loss(FieldValue(1 + 1j, 1 + 1j)) == (0.0, False)
    assert insertion_loss(FieldValue(0.1, 1.0))[0] == pytest.approx(20.0)
    il, flagged = insertion_loss(FieldValue(0.0, 1.0))
    assert flagged and il == 300.0


def test_q_magnitude_is_flagged_not_fatal():
    scene = Scene(Point2(0, 0.02), Point2(3, 0.02), lattice_scatterers(ArrayConfig(1, 1, 0.3, 1.0, 0.12, 0.1)))
    ground = ImpedanceGround(ConstantAdmittance(0.05 - 0.6j))
    value, system, _ = simulate_point(scene, None, ground, 900.0, 7, AIR)
    q = np.abs(np.concatenate((system.image_q.ravel(), system.source_q)))
    assert np.any(q > 1 + 1e-9)
    assert "q_anomaly" in system.flags
    assert np.isfinite(value.p_total)
