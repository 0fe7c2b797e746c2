"""Boundary factors Z_n for rigid cylinders and thin elastic shells.

Z_n multiplies the outgoing wave of mode n in the scattered field.  For a
rigid cylinder it is J_n'(ka) / H_n'(ka).  For a thin shell it carries the
fluid-loaded shell response U_n.  Radial derivatives are k times argument
derivatives, and the k factor is kept everywhere so both terms of the shell
denominator have units of 1/m.
"""

from dataclasses import dataclass
import math
import warnings

import numpy as np

from . import specfun
from .errors import ConfigurationError

NEAR_SINGULAR_RTOL = 1e-12


class NearSingularWarning(RuntimeWarning):
    """A shell factor was evaluated next to a cancelling denominator."""


@dataclass(frozen=True)
class Medium:
    sound_speed: float = 344.0
    density: float = 1.2

    def __post_init__(self):
        problems = []
        if not self.sound_speed > 0:
            problems.append(("medium.sound_speed", "must be positive"))
        if not self.density > 0:
            problems.append(("medium.density", "must be positive"))
        if problems:
            raise ConfigurationError(problems)

    def wavenumber(self, frequency):
        return 2.0 * math.pi * frequency / self.sound_speed


@dataclass(frozen=True)
class RigidCylinder:
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigurationError([("radius", "must be positive")])

    @property
    def outer_radius(self):
        return self.radius

    def factors(self, nmax, k, medium=None):
        """Z_0..Z_nmax and a near-singular flag (always False)."""
        return rigid_factors(nmax, k * self.radius), False


@dataclass(frozen=True)
class ElasticShell:
    """Thin elastic shell of outer radius ``outer_radius`` and wall 2h.

    ``k3_density`` selects the density inside k_3 = omega sqrt(rho (1 - nu^2) / E):
    ``"air"`` uses the surrounding medium, ``"shell"`` uses the shell material.
    """

    density: float
    young: float
    poisson: float
    shear_speed: float
    half_thickness: float
    outer_radius: float
    k3_density: str = "air"

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ConfigurationError(problems)

    def problems(self):
        out = []
        for name in ("density", "young", "shear_speed", "half_thickness", "outer_radius"):
            if not getattr(self, name) > 0:
                out.append((name, "must be positive"))
        if not 0 < self.poisson < 0.5:
            out.append(("poisson", "must lie in (0, 0.5)"))
        if self.half_thickness >= self.outer_radius:
            out.append(("half_thickness", "must be smaller than outer_radius"))
        if self.k3_density not in ("air", "shell"):
            out.append(("k3_density", "must be 'air' or 'shell'"))
        return out

    @property
    def mid_radius(self):
        return self.outer_radius - self.half_thickness

    @property
    def radius(self):
        return self.outer_radius

    def factors(self, nmax, k, medium):
        return shell_factors(nmax, k, medium, self)


def rigid_factors(nmax, ka):
    """Z_n = J_n'(ka) / H_n'(ka) for n = 0..nmax."""
    j, y = specfun.jy_orders(nmax + 1, ka)
    dj = specfun.derivative_orders(j)
    dh = dj + 1j * specfun.derivative_orders(y)
    return dj / dh


def shell_factors(nmax, k, medium, shell):
    """Z_0..Z_nmax for a thin shell plus a near-singular flag.

    The shell term is cleared of its poles, giving
    Z = dJ^2 D / (dH dJ D + i c (n^2 - k3^2 S^2)), where D = 1 + n^2 - k3^2 S^2,
    c = (eps / kappa) / (pi S h), dJ = k J_n'(kS) and dH = k H_n'(kS).
    """
    s = shell.mid_radius
    h = shell.half_thickness
    omega = k * medium.sound_speed
    rho_k3 = medium.density if shell.k3_density == "air" else shell.density
    k3 = omega * math.sqrt(rho_k3 * (1.0 - shell.poisson**2) / shell.young)
    eps = medium.density * medium.sound_speed / (shell.density * shell.shear_speed)
    kappa = medium.sound_speed / shell.shear_speed
    coef = (eps / kappa) / (math.pi * s * h)

    j, y = specfun.jy_orders(nmax + 1, k * s)
    dj = k * specfun.derivative_orders(j)
    dh = dj + 1j * k * specfun.derivative_orders(y)
    n2 = np.arange(nmax + 1, dtype=float) ** 2
    k3s2 = (k3 * s) ** 2
    d = 1.0 + n2 - k3s2
    num = dj * dj * d
    first = dh * dj * d
    second = 1j * coef * (n2 - k3s2)
    den = first + second
    scale = np.abs(first) + np.abs(second)
    flagged = bool(np.any(np.abs(den) < NEAR_SINGULAR_RTOL * scale))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = num / den
    # D = 0 and dJ != 0 leaves Z = 0 exactly; anything else non-finite is flagged
    bad = ~np.isfinite(z)
    if bad.any():
        flagged = True
        z = np.where(bad, 0.0, z)
    return z, flagged


def z_rigid(n, k, a):
    """Rigid-cylinder factor Z_n for wavenumber ``k`` and radius ``a``."""
    n = abs(int(n))
    return complex(rigid_factors(n, k * a)[n])


def z_shell(n, omega, medium, shell):
    """Thin-shell factor Z_n at angular frequency ``omega``.

    Emits :class:`NearSingularWarning` when the evaluation sits on a
    cancelling denominator.
    """
    n = abs(int(n))
    z, flagged = shell_factors(n, omega / medium.sound_speed, medium, shell)
    if flagged:
        warnings.warn(
            f"near-singular shell factor at omega={omega:g} rad/s, n={n}",
            NearSingularWarning,
            stacklevel=2,
        )
    return complex(z[n])


def factors_table(model, nmax, k, medium):
    """Z for orders -nmax..nmax (index n + nmax) and the near-singular flag."""
    z, flagged = model.factors(nmax, k, medium)
    return np.concatenate((z[:0:-1], z)), flagged
