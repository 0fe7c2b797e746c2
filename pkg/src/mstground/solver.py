"""Multiple-scattering solver for cylinder arrays in free field or above a ground.

The field of a unit line source plus M cylinders is

    p = p0 + sum_m sum_n A_n^m Z_n^m [H_n(k r_m) e^{i n theta_m}
                                      + Q_m H_n(k r'_m) e^{-i n theta'_m}]

where primed quantities refer to mirror images in y = 0.  ``mode`` selects
which image terms are present:

* ``"free"``  -- no images;
* ``"rigid"`` -- images with Q = 1 (method of images);
* ``"wvdp"``  -- images weighted by the spherical-wave reflection coefficient
  Q evaluated for each source/scatterer and observation point.

The unknowns A_n^m (n = -N..N) follow from the Neumann condition on every
cylinder after re-expanding all other waves about its centre with Graf's
addition theorem.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import linalg
from scipy.linalg import lapack

from . import specfun
from .errors import ConvergenceError, GeometryError, SingularSystemError
from .ground import FreeField, ImpedanceGround, RigidGround, q_spherical
from .scatterers import Medium, RigidCylinder, factors_table

MAX_CONDITION = 1e12
RESIDUAL_RTOL = 1e-10
DEFAULT_ORDER = 7
Q_ANOMALY_TOL = 1e-9


def ground_mode(ground):
    if isinstance(ground, FreeField):
        return "free"
    if isinstance(ground, RigidGround):
        return "rigid"
    if isinstance(ground, ImpedanceGround):
        return "wvdp"
    raise TypeError(f"unsupported ground model {ground!r}")


# ---------------------------------------------------------------------------
# Graf's addition theorem


def graf_coefficients(n, k, translation, sign="direct", qmax=20):
    """Coefficients c_q (q = -qmax..qmax) of Graf's re-expansion.

    With ``translation = (R, alpha)`` locating centre p as seen from centre m,
    a point at (r_m, theta_m) about m and (r_p, theta_p) about p satisfies

        direct:    H_n(k r_p) e^{+i n theta_p} = sum_q c_q J_q(k r_m) e^{i q theta_m}
        reflected: H_n(k r_p) e^{-i n theta_p} = sum_q c_q J_q(k r_m) e^{i q theta_m}

    with c_q = H_{n-q}(kR) e^{i(n-q)(pi+alpha)} for the direct form and
    c_q = H_{n+q}(kR) e^{-i(n+q) alpha + i n pi} for the reflected form.
    """
    big_r, alpha = translation
    q = np.arange(-qmax, qmax + 1)
    if sign == "direct":
        nu = n - q
        phase = np.exp(1j * nu * (math.pi + alpha))
    elif sign == "reflected":
        nu = n + q
        phase = np.exp(-1j * nu * alpha + 1j * n * math.pi)
    else:
        raise ValueError(f"sign must be 'direct' or 'reflected', got {sign!r}")
    h = _hankel_signed(int(np.max(np.abs(nu))), k * big_r)
    return q, h[nu + (h.shape[0] // 2)] * phase


def graf_translate(n, k, local, translation, sign="direct", qmax=20):
    """Evaluate the truncated Graf series at the local point ``(r_m, theta_m)``.

    Returns the right-hand side sum; it converges to H_n(k r_p) e^{+-i n theta_p}
    only inside the disc r_m < R, and points outside it are rejected.
    """
    r_m, theta_m = local
    big_r = translation[0]
    if not r_m < big_r:
        raise ConvergenceError(
            f"Graf expansion diverges: local radius {r_m:g} >= translation {big_r:g}"
        )
    q, c = graf_coefficients(n, k, translation, sign, qmax)
    if r_m > 0:
        j, _ = specfun.jy_orders(qmax, k * r_m)
        jq = np.where((q < 0) & (q % 2 == 1), -1.0, 1.0) * j[np.abs(q)]
    else:
        jq = (q == 0).astype(float)
    return complex(np.sum(c * jq * np.exp(1j * q * theta_m)))


def _hankel_signed(nmax, x):
    """H_nu(x) for nu = -nmax..nmax stacked along axis 0 (index nu + nmax)."""
    h = specfun.hankel1_orders(nmax, x)
    sign = np.where(np.arange(1, nmax + 1) % 2, -1.0, 1.0)
    sign = sign.reshape((-1,) + (1,) * (h.ndim - 1))
    return np.concatenate((h[:0:-1] * sign[::-1], h), axis=0)


# ---------------------------------------------------------------------------
# System assembly


@dataclass
class ScatteringSystem:
    """Dense system ``matrix @ A = rhs`` for one frequency.

    ``matrix`` rows and columns are ordered (m, n) with n = -N..N fastest.
    ``z`` holds Z_n^m with shape (M, 2N+1); ``source_q`` and ``image_q`` the
    reflection coefficients used for the image source and image scatterers.
    """

    matrix: np.ndarray
    rhs: np.ndarray
    mode: str
    frequency: float
    k: float
    order: int
    z: np.ndarray
    beta: complex = 0j
    flags: set = field(default_factory=set)
    source_q: np.ndarray = None
    image_q: np.ndarray = None


def _models_for(scene, models):
    if models is None:
        return [RigidCylinder(r) for r in scene.radii]
    if not isinstance(models, (list, tuple)):
        return [models] * len(scene.scatterers)
    if len(models) != len(scene.scatterers):
        raise GeometryError("one scatterer model per scatterer is required")
    return list(models)


def _polar(dx, dy):
    return np.hypot(dx, dy), np.arctan2(dy, dx)


def _centers(scene):
    xy = np.array([(c.x, c.y) for c in scene.centers], dtype=float).reshape(-1, 2)
    return xy[:, 0], xy[:, 1]


def boundary_factor_table(scene, models, k, medium, order):
    """Z_n^m with shape (M, 2N+1) and the near-singular flag."""
    models = _models_for(scene, models)
    rows = []
    flagged = False
    cache = {}
    for model in models:
        if model not in cache:
            cache[model] = factors_table(model, order, k, medium)
        z, flag = cache[model]
        flagged |= flag
        rows.append(z)
    return np.array(rows, dtype=complex).reshape(len(models), 2 * order + 1), flagged


def assemble(scene, models, ground, k, order=DEFAULT_ORDER, medium=None, frequency=None):
    """Assemble the truncated multiple-scattering system at wavenumber ``k``."""
    if not k > 0:
        raise ValueError("wavenumber must be positive")
    medium = medium or Medium()
    if frequency is None:
        frequency = k * medium.sound_speed / (2.0 * math.pi)
    mode = ground_mode(ground)
    nn = 2 * order + 1
    m_count = len(scene.scatterers)
    z, flagged = boundary_factor_table(scene, models, k, medium, order)
    flags = {"near_singular"} if flagged else set()
    beta = 0j if mode != "wvdp" else complex(ground.admittance(frequency))

    x, y = _centers(scene)
    n = np.arange(-order, order + 1)
    q = n
    matrix = np.zeros((m_count, nn, m_count, nn), dtype=complex)
    rhs = np.zeros((m_count, nn), dtype=complex)
    source_q = image_q = None

    if m_count:
        # direct coupling, p != m
        dist, ang = _polar(x[None, :] - x[:, None], y[None, :] - y[:, None])
        off = ~np.eye(m_count, dtype=bool)
        if np.any(dist[off] == 0):
            raise GeometryError("coincident scatterer centres")
        nu = q[None, :] - n[:, None]  # (n, q)
        if m_count > 1:
            h = _hankel_signed(2 * order, k * dist[off])  # (nu, pairs)
            g = h[nu + 2 * order] * np.exp(1j * nu[:, :, None] * (math.pi + ang[off])[None, None, :])
            block = np.zeros((m_count, m_count, nn, nn), dtype=complex)
            block[off] = np.moveaxis(g, 2, 0)
            matrix += np.transpose(block, (0, 2, 1, 3)) * z[None, None, :, :]

        # source
        src = scene.source
        r0, a0 = _polar(x - src.x, y - src.y)
        if np.any(r0 == 0):
            raise GeometryError("source coincides with a scatterer centre")
        h0 = _hankel_signed(order, k * r0)  # (n, m)
        rhs -= (h0 * np.exp(-1j * n[:, None] * (math.pi + a0[None, :]))).T

        if mode != "free":
            # image scatterers: R'_mp from centre m to image of p
            dist_i, ang_i = _polar(x[None, :] - x[:, None], -y[None, :] - y[:, None])
            if np.any(dist_i == 0):
                raise GeometryError("scatterer touches its own image")
            nu_i = q[None, :] + n[:, None]
            h = _hankel_signed(2 * order, k * dist_i)  # (nu, m, p)
            g = h[nu_i + 2 * order] * np.exp(-1j * nu_i[:, :, None, None] * ang_i[None, None])
            # g: (n, q, m, p) -> (m, n, p, q)
            g = np.transpose(g, (2, 0, 3, 1))
            qsign = np.where(q % 2, -1.0, 1.0)
            coupling = g * (z * qsign[None, :])[None, None, :, :]
            image_q = np.ones((m_count, m_count), dtype=complex)
            if mode == "wvdp":
                cos_i = (y[None, :] + y[:, None]) / dist_i
                image_q = q_spherical(beta, dist_i, np.clip(cos_i, 0.0, 1.0), k)
                coupling = coupling * image_q[:, None, :, None]
            matrix += coupling

            # image source
            r0i, a0i = _polar(x - src.x, y + src.y)
            h0i = _hankel_signed(order, k * r0i)
            source_q = np.ones(m_count, dtype=complex)
            if mode == "wvdp":
                source_q = q_spherical(beta, r0i, np.clip((y + src.y) / r0i, 0.0, 1.0), k)
            rhs -= (h0i * np.exp(-1j * n[:, None] * (math.pi + a0i[None, :]))).T * source_q[:, None]

    if mode == "wvdp" and m_count:
        # heuristic Q for image scatterers: flag, do not fail, |Q| above 1
        q_all = np.concatenate((np.ravel(image_q), np.ravel(source_q)))
        if np.any(np.abs(q_all) > 1.0 + Q_ANOMALY_TOL):
            flags.add("q_anomaly")

    size = m_count * nn
    matrix = matrix.reshape(size, size)
    matrix[np.diag_indices(size)] += 1.0
    return ScatteringSystem(
        matrix=matrix,
        rhs=rhs.reshape(size),
        mode=mode,
        frequency=float(frequency),
        k=float(k),
        order=order,
        z=z,
        beta=beta,
        flags=flags,
        source_q=source_q,
        image_q=image_q,
    )


def solve(system, max_condition=MAX_CONDITION):
    """Solve the assembled system by dense LU with partial pivoting.

    The matrix is equilibrated first and the one-norm condition estimate
    refers to the equilibrated matrix.  Returns A_n^m with shape (M, 2N+1).
    Raises :class:`SingularSystemError` when that estimate exceeds
    ``max_condition`` or the row-equilibrated relative residual (see
    :func:`residual_norm`) exceeds 1e-10.
    """
    nn = 2 * system.order + 1
    size = system.rhs.size
    if size == 0:
        return np.zeros((0, nn), dtype=complex)
    a = system.matrix
    # row/column equilibration: columns carry Z_n, which spans many decades
    rscale, cscale, _, _, _, info = lapack.zgeequ(a)
    if info > 0:
        raise SingularSystemError(
            f"zero row or column at {system.frequency:g} Hz", frequency=system.frequency
        )
    scaled = a * rscale[:, None] * cscale[None, :]
    anorm = np.linalg.norm(scaled, 1)
    lu, piv, info = lapack.zgetrf(scaled)
    if info > 0:
        raise SingularSystemError(
            f"singular matrix at {system.frequency:g} Hz", frequency=system.frequency
        )
    rcond, _ = lapack.zgecon(lu, anorm, norm="1")
    cond = math.inf if rcond == 0 else 1.0 / rcond
    if cond > max_condition:
        raise SingularSystemError(
            f"ill-conditioned system at {system.frequency:g} Hz (cond ~ {cond:.3g})",
            frequency=system.frequency,
            condition=cond,
        )
    sol = cscale * linalg.lu_solve((lu, piv), rscale * system.rhs)
    # one step of iterative refinement on the unscaled system
    sol += cscale * linalg.lu_solve((lu, piv), rscale * (system.rhs - a @ sol))
    resid = _scaled_residual(a, sol, system.rhs, rscale)
    if resid > RESIDUAL_RTOL:
        raise SingularSystemError(
            f"residual {resid:.3g} above tolerance at {system.frequency:g} Hz",
            frequency=system.frequency,
            condition=cond,
        )
    return sol.reshape(-1, nn)


def _scaled_residual(a, x, b, rscale):
    r = rscale * (a @ x - b)
    bn = np.linalg.norm(rscale * b)
    return float(np.linalg.norm(r) / bn) if bn > 0 else float(np.linalg.norm(r))


def residual_norm(system, coefficients, equilibrated=True):
    """Relative residual ||matrix A - rhs|| / ||rhs||.

    With ``equilibrated`` every equation is first divided by its largest
    coefficient magnitude, which removes the arbitrary row scale of the
    high-order equations.
    """
    a = system.matrix
    rscale = 1.0 / np.max(np.abs(a), axis=1) if equilibrated else np.ones(a.shape[0])
    return _scaled_residual(a, coefficients.ravel(), system.rhs, rscale)


# ---------------------------------------------------------------------------
# Field evaluation


@dataclass(frozen=True)
class FieldValue:
    p_total: complex
    p_reference: complex


def _reference_field(scene, system, px, py, anchor):
    k = system.k
    src = scene.source
    r0 = np.hypot(px - src.x, py - src.y)
    if np.any(r0 == 0):
        raise GeometryError("field point coincides with the source")
    p0 = specfun.hankel1_orders(0, k * r0)[0]
    if system.mode == "free":
        return p0
    r0i = np.hypot(px - src.x, py + src.y)
    if np.any(r0i == 0):
        raise GeometryError("field point coincides with the image source")
    qs = 1.0
    if system.mode == "wvdp":
        ax, ay = (px, py) if anchor is None else (anchor.x, anchor.y)
        ri = np.hypot(ax - src.x, ay + src.y)
        qs = q_spherical(system.beta, ri, np.clip((ay + src.y) / ri, 0.0, 1.0), k)
    return p0 + qs * specfun.hankel1_orders(0, k * r0i)[0]


def field_at(scene, system, coefficients, px, py, anchor=None, inside_rtol=1e-9):
    """Total and reference field at arrays of points ``(px, py)``.

    In ``"wvdp"`` mode the reflection coefficients depend on the observation
    point; ``anchor`` (a Point2) freezes them at that point instead, which is
    how the linear system itself treats each cylinder.
    """
    px = np.atleast_1d(np.asarray(px, dtype=float))
    py = np.atleast_1d(np.asarray(py, dtype=float))
    order = system.order
    x, y = _centers(scene)
    radii = np.array(scene.radii, dtype=float)
    p_ref = _reference_field(scene, system, px, py, anchor)
    if not len(radii):
        return p_ref, p_ref.copy()

    dx = px[None, :] - x[:, None]
    dy = py[None, :] - y[:, None]
    r, theta = _polar(dx, dy)
    if np.any(r < radii[:, None] * (1.0 - inside_rtol)):
        raise GeometryError("field point lies inside a scatterer")
    n = np.arange(-order, order + 1)
    weights = coefficients * system.z  # (M, 2N+1)
    h = _hankel_signed(order, system.k * r)  # (n, M, P)
    scat = np.einsum("mn,nmp->p", weights, h * np.exp(1j * n[:, None, None] * theta[None]))
    if system.mode != "free":
        ri, thi = _polar(dx, py[None, :] + y[:, None])
        hi = _hankel_signed(order, system.k * ri)
        terms = np.einsum("mn,nmp->mp", weights, hi * np.exp(-1j * n[:, None, None] * thi[None]))
        if system.mode == "wvdp":
            if anchor is None:
                qi = q_spherical(system.beta, ri, np.clip((py[None, :] + y[:, None]) / ri, 0, 1), system.k)
            else:
                ra = np.hypot(anchor.x - x, anchor.y + y)
                qi = q_spherical(system.beta, ra, np.clip((anchor.y + y) / ra, 0, 1), system.k)[:, None]
            terms = terms * qi
        scat = scat + terms.sum(axis=0)
    return p_ref + scat, p_ref


def evaluate_field(scene, system, coefficients, point, anchor=None):
    """Total and reference pressure at ``point`` (outside every scatterer)."""
    total, ref = field_at(scene, system, coefficients, point.x, point.y, anchor=anchor)
    return FieldValue(complex(total[0]), complex(ref[0]))


IL_FLOOR = 1e-300
IL_CEILING_DB = 300.0


def insertion_loss(value):
    """IL = 20 log10 |p_reference / p_total| in dB.

    Returns ``(il, flagged)``; a vanishing total field gives +IL_CEILING_DB
    and a vanishing reference field -IL_CEILING_DB, both flagged.
    """
    pt = abs(value.p_total)
    pr = abs(value.p_reference)
    if pt < IL_FLOOR:
        return IL_CEILING_DB, True
    if pr < IL_FLOOR:
        return -IL_CEILING_DB, True
    return 20.0 * math.log10(pr / pt), False


def boundary_residual(scene, system, coefficients, index, angles=64, step=None, anchor=True):
    """Normal-derivative residual on the surface of scatterer ``index``.

    Uses a one-sided second-order finite difference (points at a, a+h, a+2h)
    and returns ``(max |dp/dr|, max |dp0/dr|)`` over ``angles`` surface
    points.  With ``anchor`` the WvdP reflection coefficients are frozen at
    the cylinder centre, matching the assembled system.
    """
    c = scene.scatterers[index]
    a = c.radius
    h = step or 1e-5 * a
    th = 2.0 * math.pi * np.arange(angles) / angles
    anchor_pt = c.center if anchor else None
    vals = []
    refs = []
    for rr in (a, a + h, a + 2 * h):
        tot, ref = field_at(
            scene,
            system,
            coefficients,
            c.center.x + rr * np.cos(th),
            c.center.y + rr * np.sin(th),
            anchor=anchor_pt,
        )
        vals.append(tot)
        refs.append(ref)
    dp = (-3 * vals[0] + 4 * vals[1] - vals[2]) / (2 * h)
    dp0 = (-3 * refs[0] + 4 * refs[1] - refs[2]) / (2 * h)
    return float(np.max(np.abs(dp))), float(np.max(np.abs(dp0)))


def simulate_point(scene, models, ground, frequency, order=DEFAULT_ORDER, medium=None):
    """Assemble, solve and evaluate at the receiver for one frequency.

    Returns ``(FieldValue, system, coefficients)``.
    """
    medium = medium or Medium()
    k = medium.wavenumber(frequency)
    system = assemble(scene, models, ground, k, order, medium, frequency)
    coeffs = solve(system)
    return evaluate_field(scene, system, coeffs, scene.receiver), system, coeffs
