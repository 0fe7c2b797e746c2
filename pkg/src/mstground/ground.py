"""Ground models: surface admittance and the spherical-wave reflection coefficient.

Time dependence is exp(-i omega t) (outgoing waves are H^(1)), so a passive
locally reacting surface has normalised impedance Z with Re Z > 0 and, for
porous media, Im Z > 0.  Admittance is beta = 1 / Z.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, ExtrapolationError
from .specfun import f_boundary_loss


def _inverse(z):
    out = 1.0 / z
    return out if np.ndim(out) else complex(out)


@dataclass(frozen=True)
class OneParameter:
    """Miki's single-parameter model with effective flow resistivity in Pa s/m^2."""

    sigma_e: float

    def __post_init__(self):
        if not self.sigma_e > 0:
            raise ConfigurationError([("sigma_e", "must be positive")])

    def impedance(self, f):
        x = (1.0e3 * np.asarray(f, dtype=float) / self.sigma_e) ** -0.632
        return 1.0 + 5.50 * x + 8.43j * x

    def admittance(self, f):
        return _inverse(self.impedance(f))


@dataclass(frozen=True)
class TwoParameter:
    """Variable-porosity surface impedance (sigma_e in Pa s/m^2, alpha_e in 1/m).

    Z = 0.436 (1 + i) sqrt(sigma_e / f) + 19.74 i alpha_e / f.  The measured
    foam layer's exact model is unknown; this form is a documented stand-in.
    """

    sigma_e: float
    alpha_e: float

    def __post_init__(self):
        problems = []
        if not self.sigma_e > 0:
            problems.append(("sigma_e", "must be positive"))
        if not self.alpha_e >= 0:
            problems.append(("alpha_e", "must be non-negative"))
        if problems:
            raise ConfigurationError(problems)

    def impedance(self, f):
        f = np.asarray(f, dtype=float)
        return 0.436 * (1 + 1j) * np.sqrt(self.sigma_e / f) + 19.74j * self.alpha_e / f

    def admittance(self, f):
        return _inverse(self.impedance(f))


@dataclass(frozen=True)
class ConstantAdmittance:
    """Frequency-independent admittance; beta = 0 reproduces a rigid plane."""

    beta: complex

    def __post_init__(self):
        if complex(self.beta).real < 0:
            raise ConfigurationError([("beta", "Re(beta) must be >= 0 (passive surface)")])

    def admittance(self, f):
        return np.full(np.shape(f), complex(self.beta)) if np.ndim(f) else complex(self.beta)


@dataclass(frozen=True)
class Tabulated:
    """Admittance table (Hz, Re beta, Im beta) with linear interpolation."""

    frequency: tuple
    beta_re: tuple
    beta_im: tuple

    def __post_init__(self):
        problems = []
        f = np.asarray(self.frequency, dtype=float)
        if f.ndim != 1 or f.size < 2:
            problems.append(("frequency", "needs at least two entries"))
        elif np.any(np.diff(f) <= 0):
            problems.append(("frequency", "must be strictly increasing"))
        if len(self.beta_re) != len(self.frequency) or len(self.beta_im) != len(self.frequency):
            problems.append(("beta", "column lengths differ"))
        elif np.any(np.asarray(self.beta_re) < 0):
            problems.append(("beta_re", "Re(beta) must be >= 0 (passive surface)"))
        if problems:
            raise ConfigurationError(problems)

    @classmethod
    def from_text(cls, text):
        rows = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 3:
                raise ConfigurationError([(f"line {lineno}", "expected 3 columns: f re im")])
            try:
                rows.append(tuple(float(p) for p in parts))
            except ValueError as exc:
                raise ConfigurationError([(f"line {lineno}", str(exc))]) from None
        if not rows:
            raise ConfigurationError([("table", "no data rows")])
        f, re, im = zip(*rows)
        return cls(f, re, im)

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            return cls.from_text(fh.read())

    def admittance(self, f):
        fa = np.asarray(f, dtype=float)
        lo, hi = self.frequency[0], self.frequency[-1]
        if np.any(fa < lo) or np.any(fa > hi):
            raise ExtrapolationError(f"frequency outside tabulated range [{lo:g}, {hi:g}] Hz")
        out = np.interp(fa, self.frequency, self.beta_re) + 1j * np.interp(
            fa, self.frequency, self.beta_im
        )
        return out if out.ndim else complex(out)


@dataclass(frozen=True)
class FreeField:
    kind = "free"


@dataclass(frozen=True)
class RigidGround:
    kind = "rigid"

    def admittance(self, f):
        return 0j


@dataclass(frozen=True)
class ImpedanceGround:
    admittance_model: object
    kind = "impedance"

    def admittance(self, f):
        return self.admittance_model.admittance(f)


def admittance(model, f):
    """Admittance beta of ``model`` (an admittance model or a ground) at ``f`` Hz."""
    if not np.all(np.asarray(f) > 0):
        raise DomainError("frequency must be positive")
    if isinstance(model, FreeField):
        raise ConfigurationError([("ground", "free field has no admittance")])
    return model.admittance(f)


def q_spherical(beta, image_distance, cos_alpha, k):
    """Spherical-wave reflection coefficient Q = V + (1 - V) F(w).

    ``image_distance`` is the path length from the image point, ``cos_alpha``
    the cosine of the incidence angle from the ground normal.  Arrays
    broadcast.  beta == 0 returns exactly 1.
    """
    beta_arr = np.asarray(beta, dtype=complex)
    r = np.asarray(image_distance, dtype=float)
    c = np.asarray(cos_alpha, dtype=float)
    scalar = beta_arr.ndim == 0 and r.ndim == 0 and c.ndim == 0
    if np.all(beta_arr == 0):
        out = np.ones(np.broadcast(beta_arr, r, c).shape, dtype=complex)
        return complex(out) if scalar else out
    if np.any(r <= 0) or not k > 0:
        raise DomainError("q_spherical needs r > 0 and k > 0")
    if np.any(c < -1e-12) or np.any(c > 1 + 1e-12):
        raise DomainError("cos_alpha must lie in [0, 1]")
    denom = c + beta_arr
    v = (c - beta_arr) / denom
    w = np.sqrt(0.5j * k * r) * denom
    try:
        f = f_boundary_loss(w)
    except DomainError as exc:
        raise DomainError(f"{exc} (k={k:g} 1/m, r={np.max(r):g} m)") from None
    out = v + (1.0 - v) * f
    return complex(out) if scalar else out
