"""Integer-order Bessel and Hankel functions and the boundary-loss function.

Everything here is self-contained numpy.  The Bessel kernel works on whole
order tables: a single backward (Miller) recurrence yields J_0..J_K at every
argument, Y_0 and Y_1 follow from Neumann series over that table and higher
Y orders come from upward recurrence.  Small arguments (x <= 1) use the power
series instead of Miller's recurrence.

Accuracy targets: 1e-10 relative (relative to the local modulus
sqrt(J_n^2 + Y_n^2) for oscillatory x > n) for 0 < x <= 2000 and |n| <= 60.
"""

import math

import numpy as np

from .errors import DomainError

N_MAX = 200
"""Largest |order| accepted by the Bessel routines."""

X_MAX = 1.0e4
"""Largest argument accepted by the Bessel routines."""

_EULER_GAMMA = 0.57721566490153286061
_SERIES_LIMIT = 1.0
_RESCALE = 1.0e200


def _as_positive(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x <= 0.0):
        raise DomainError("Bessel functions require finite arguments x > 0")
    if np.any(x > X_MAX):
        raise DomainError(f"Bessel argument above supported maximum {X_MAX:g}")
    return x


def _check_order(nmax):
    if nmax < 0 or nmax > N_MAX:
        raise DomainError(f"Bessel order must satisfy |n| <= {N_MAX}")


def _j_series(kmax, x):
    """J_0..J_kmax by power series; x is 1-D with x <= 1."""
    half = 0.5 * x
    q = -half * half
    n = np.arange(kmax + 1, dtype=float)[:, None]
    ratio = np.ones((kmax + 1, x.size))
    ratio[1:] = half[None, :] / n[1:]
    lead = np.cumprod(ratio, axis=0)
    term = np.ones_like(lead)
    total = np.ones_like(lead)
    for k in range(1, 30):
        term = term * q / (k * (n + k))
        total += term
    return lead * total


def _j_miller(kmax, x):
    """J_0..J_kmax by normalised backward recurrence; x is 1-D."""
    top = max(kmax, float(x.max()))
    start = int(top + 30 + 12 * math.sqrt(top))
    start += start % 2
    out = np.zeros((max(kmax, start) + 1, x.size))
    inv = 2.0 / x
    upper = np.zeros_like(x)
    cur = np.full_like(x, 1.0e-30)
    norm = np.zeros_like(x)
    for k in range(start, 0, -1):
        out[k] = cur
        if k % 2 == 0:
            norm += 2.0 * cur
        lower = k * inv * cur - upper
        upper, cur = cur, lower
        big = np.abs(cur) > _RESCALE
        if big.any():
            scale = np.where(big, 1.0 / _RESCALE, 1.0)
            cur *= scale
            upper *= scale
            norm *= scale
            out[k:] *= scale
    out[0] = cur
    norm += cur
    return out / norm


def _j_table(kmax, x):
    """J_0..J_K at 1-D x, where K >= kmax also covers the Neumann sums."""
    small = x <= _SERIES_LIMIT
    need = max(kmax, 40) if small.all() else None
    if need is not None:
        return _j_series(need, x)
    big = ~small
    miller = _j_miller(kmax, x[big])
    out = np.zeros((miller.shape[0], x.size))
    out[:, big] = miller
    if small.any():
        ser = _j_series(min(out.shape[0] - 1, max(kmax, 40)), x[small])
        out[: ser.shape[0], small] = ser
    return out


def _y01(jt, x):
    """Y_0 and Y_1 from Neumann series over the J table ``jt``."""
    kmax = jt.shape[0] - 1
    log_term = np.log(0.5 * x) + _EULER_GAMMA
    s0 = np.zeros_like(x)
    s1 = np.zeros_like(x)
    sign = -1.0
    for k in range(1, kmax // 2 + 1):
        j2k = jt[2 * k]
        s0 += sign * j2k / k
        hi = jt[2 * k + 1] if 2 * k + 1 <= kmax else 0.0
        s1 += sign * (jt[2 * k - 1] - hi) / k
        sign = -sign
    y0 = (2.0 / math.pi) * (log_term * jt[0] - 2.0 * s0)
    y1 = (2.0 / math.pi) * (log_term * jt[1] - jt[0] / x + s1)
    return y0, y1


def jy_orders(nmax, x):
    """Return ``(J, Y)`` with ``J[n] = J_n(x)`` for n = 0..nmax.

    ``x`` may be any array shape; the outputs have shape ``(nmax + 1,) + x.shape``.
    """
    _check_order(nmax)
    x = _as_positive(x)
    shape = x.shape
    flat = x.ravel()
    jt = _j_table(max(nmax, 1), flat)
    y0, y1 = _y01(jt, flat)
    ys = np.empty((max(nmax, 1) + 1, flat.size))
    ys[0] = y0
    ys[1] = y1
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, nmax):
            ys[n + 1] = (2.0 * n / flat) * ys[n] - ys[n - 1]
    # Y_n -> -inf as x -> 0+; keep overflowed orders at -inf rather than NaN
    ys[~np.isfinite(ys)] = -np.inf
    j = jt[: nmax + 1].reshape((nmax + 1,) + shape)
    y = ys[: nmax + 1].reshape((nmax + 1,) + shape)
    return j, y


def hankel1_orders(nmax, x):
    """Return ``H[n] = H_n^(1)(x)`` for n = 0..nmax (same shape rules as jy_orders)."""
    j, y = jy_orders(nmax, x)
    return j + 1j * y


def _parity(n):
    return -1.0 if n % 2 else 1.0


def bessel_j(n, x):
    """Bessel function of the first kind J_n(x) for integer n and x > 0."""
    n = int(n)
    _check_order(abs(n))
    j, _ = jy_orders(abs(n), x)
    val = j[abs(n)]
    return val * _parity(n) if n < 0 else val


def bessel_y(n, x):
    """Bessel function of the second kind Y_n(x) for integer n and x > 0."""
    n = int(n)
    _check_order(abs(n))
    _, y = jy_orders(abs(n), x)
    val = y[abs(n)]
    return val * _parity(n) if n < 0 else val


def hankel1(n, x):
    """Hankel function of the first kind, H_n^(1)(x) = J_n(x) + i Y_n(x).

    Negative orders use H_{-n} = (-1)^n H_n, so the parity relation is exact.
    """
    n = int(n)
    _check_order(abs(n))
    j, y = jy_orders(abs(n), x)
    val = j[abs(n)] + 1j * y[abs(n)]
    return val * _parity(n) if n < 0 else val


def dr_bessel(kind, n, z):
    """Argument derivative d/dz C_n(z) = (C_{n-1}(z) - C_{n+1}(z)) / 2.

    ``kind`` is ``"J"`` or ``"H1"``.  The radial derivative of C_n(k r) is
    ``k * dr_bessel(kind, n, k r)``; callers supply the k factor.
    """
    func = {"J": bessel_j, "H1": hankel1}.get(kind)
    if func is None:
        raise ValueError(f"unknown Bessel kind {kind!r}; expected 'J' or 'H1'")
    n = int(n)
    return 0.5 * (func(n - 1, z) - func(n + 1, z))


def derivative_orders(c):
    """Argument derivatives for an order table ``c[0..nmax]`` (nmax >= 1).

    Returns ``d[0..nmax-1]`` with ``d[n] = (c[n-1] - c[n+1]) / 2`` and
    ``c[-1] = -c[1]``.
    """
    d = np.empty((c.shape[0] - 1,) + c.shape[1:], dtype=c.dtype)
    d[0] = -c[1]
    d[1:] = 0.5 * (c[:-2] - c[2:])
    return d


# ---------------------------------------------------------------------------
# Faddeeva function and the boundary-loss function F(w)

_WEIDEMAN_N = 40
_CF_RADIUS = 8.0
_CF_DEPTH = 120
_EXP_LIMIT = 700.0


def _weideman_coefficients(n):
    m = 2 * n
    l = math.sqrt(n / math.sqrt(2.0))
    k = np.arange(-m + 1, m)
    t = l * np.tan(k * math.pi / (2 * m))
    f = np.concatenate(([0.0], np.exp(-t * t) * (l * l + t * t)))
    a = np.real(np.fft.fft(np.fft.fftshift(f))) / (2 * m)
    return l, np.flipud(a[1 : n + 1])


_WL, _WA = _weideman_coefficients(_WEIDEMAN_N)


def _w_upper(z):
    """Faddeeva w(z) for Im z >= 0 by Weideman's rational expansion."""
    denom = _WL - 1j * z
    zz = (_WL + 1j * z) / denom
    p = np.polyval(_WA, zz)
    return 2.0 * p / denom**2 + (1.0 / math.sqrt(math.pi)) / denom


def _cf_tail(z):
    """T(z) of the Laplace continued fraction w(z) = (i/sqrt(pi)) / (z - T(z))."""
    t = np.zeros_like(z)
    for k in range(_CF_DEPTH, 0, -1):
        t = (0.5 * k) / (z - t)
    return t


def _reflection_exponent(z):
    """Real part of -z^2, the growth exponent of the lower half-plane term."""
    return np.real(-(z * z))


def faddeeva(z):
    """Scaled complementary error function w(z) = exp(-z^2) erfc(-i z)."""
    z = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise DomainError("faddeeva requires a finite argument")
    lower = z.imag < 0
    if np.any(lower & (_reflection_exponent(z) > _EXP_LIMIT)):
        raise DomainError("faddeeva: exp(-z^2) overflows for this lower half-plane argument")
    zu = np.where(lower, -z, z)
    far = np.abs(zu) >= _CF_RADIUS
    w = np.empty_like(zu)
    if (~far).any():
        w[~far] = _w_upper(zu[~far])
    if far.any():
        zf = zu[far]
        w[far] = (1j / math.sqrt(math.pi)) / (zf - _cf_tail(zf))
    if lower.any():
        zl = z[lower]
        w[lower] = 2.0 * np.exp(-zl * zl) - w[lower]
    return w if w.ndim else complex(w)


def f_boundary_loss(w):
    """Boundary-loss function F(w) = 1 + i sqrt(pi) w exp(-w^2) erfc(-i w).

    Large |w| uses a cancellation-free continued-fraction form, so the
    asymptote F ~ -1/(2 w^2) keeps full relative accuracy.  Stable range:
    every finite w with Im w >= 0, and Im w < 0 with Re(-w^2) <= 700;
    arguments outside it raise :class:`DomainError`.
    """
    w = np.asarray(w, dtype=complex)
    if not np.all(np.isfinite(w)):
        raise DomainError("f_boundary_loss requires a finite argument")
    lower = w.imag < 0
    if np.any(lower & (_reflection_exponent(w) > _EXP_LIMIT)):
        raise DomainError(
            "f_boundary_loss: |w| outside the stable range (exp(-w^2) overflows)"
        )
    far = np.abs(w) >= _CF_RADIUS
    out = np.empty_like(w)
    near = ~far
    if near.any():
        wn = w[near]
        out[near] = 1.0 + 1j * math.sqrt(math.pi) * wn * faddeeva(wn)
    if far.any():
        wf = w[far]
        flip = wf.imag < 0
        zu = np.where(flip, -wf, wf)
        t = _cf_tail(zu)
        # T is odd in z, so F_cf(-z) = F_cf(z)
        val = -t / (zu - t)
        extra = np.where(flip, 2j * math.sqrt(math.pi) * wf * np.exp(-np.where(flip, wf, 0) ** 2), 0)
        out[far] = val + extra
    return out if out.ndim else complex(out)
