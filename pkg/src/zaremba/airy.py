"""Airy ratio ``alpha(x) = -w Ai'(w x) / Ai(w x)`` with ``w = exp(2 i eps pi / 3)`` and its barrier ``beta``.

``Ai`` is evaluated on the rotated rays by the Maclaurin series in extended
precision for ``|z| < 8`` and by the large-argument expansion with optimal
truncation beyond.  The expansion coefficients come from the recurrence

    u_k = u_{k-1} (6k-5)(6k-3)(6k-1) / (216 k (2k-1)),   v_k = -(6k+1)/(6k-1) u_k,

so ``u_1 = 5/72``, ``v_1 = -7/72``.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import List

import mpmath
import numpy as np

from .geometry import smooth_step, smooth_step_prime

__all__ = [
    "SWITCH_RADIUS",
    "C0",
    "C_REMAINDER",
    "airy_ai",
    "alpha",
    "alpha_prime",
    "beta",
    "beta_prime",
    "gamma1",
    "gamma2",
    "chi0",
    "asymptotic_coefficients",
    "fit_first_coefficient",
    "search_C0",
    "verify",
]

SWITCH_RADIUS = 8.0
N_SERIES = 160

# Ai(0) and -Ai'(0) to full extended precision
_mpmath_dps = 30
with mpmath.workdps(_mpmath_dps):
    _C1 = np.longdouble(mpmath.nstr(1 / (mpmath.cbrt(9) * mpmath.gamma(mpmath.mpf(2) / 3)), 25))
    _C2 = np.longdouble(mpmath.nstr(1 / (mpmath.cbrt(3) * mpmath.gamma(mpmath.mpf(1) / 3)), 25))

# largest admissible barrier constant is min over [0, 1] of |Ai(w x)| <x>^{1/4} = Ai(0);
# frozen with a relative margin of 1e-3 after the bracketing search in search_C0
C0 = 0.3546

# sup over [5, 50] of |alpha + sqrt(x) - 1/(4x)| x^{5/2} from the mpmath oracle is 0.18348 (at x = 5),
# frozen rounded up; the limit as x -> infinity is 5/32
C_REMAINDER = 0.19


@lru_cache(maxsize=None)
def asymptotic_coefficients(n: int = 40):
    """``(u_k, v_k)`` for ``k = 0..n-1`` as floats."""
    u = [1.0]
    v = [1.0]
    for k in range(1, n):
        u.append(u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / (216.0 * k * (2 * k - 1)))
        v.append(-(6 * k + 1) / (6 * k - 1) * u[-1])
    return np.array(u), np.array(v)


def _series(z):
    """``(Ai, Ai')`` for moderate ``|z|`` by the Maclaurin series in clongdouble."""
    z = np.asarray(z, dtype=np.clongdouble)
    z3 = z**3
    f = np.ones_like(z)
    g = z.copy()
    fp = np.zeros_like(z)
    gp = np.ones_like(z)
    tf = np.ones_like(z)
    tg = z.copy()
    tfp = z * z / 2
    tgp = np.ones_like(z)
    for k in range(N_SERIES):
        kk = np.longdouble(3 * k)
        tf = tf * z3 / ((kk + 2) * (kk + 3))
        tg = tg * z3 / ((kk + 3) * (kk + 4))
        f = f + tf
        g = g + tg
        if k == 0:
            fp = fp + tfp
        else:
            tfp = tfp * z3 / (kk * (kk + 2))
            fp = fp + tfp
        tgp = tgp * z3 / ((kk + 1) * (kk + 3))
        gp = gp + tgp
    return _C1 * f - _C2 * g, _C1 * fp - _C2 * gp


def _asymptotic_sums(z):
    """Optimally truncated sums ``S_u``, ``S_v`` in powers of ``-1/zeta``."""
    z = np.asarray(z, dtype=complex)
    zeta = (2.0 / 3.0) * z**1.5
    u, v = asymptotic_coefficients()
    Su = np.ones_like(z)
    Sv = np.ones_like(z)
    best = np.full(z.shape, np.inf)
    done = np.zeros(z.shape, dtype=bool)
    p = np.ones_like(z)
    for k in range(1, u.size):
        p = p * (-1.0 / zeta)
        tu = u[k] * p
        tv = v[k] * p
        mag = np.maximum(np.abs(tu), np.abs(tv))
        grow = mag >= best
        done |= grow
        use = ~done
        Su = np.where(use, Su + tu, Su)
        Sv = np.where(use, Sv + tv, Sv)
        best = np.where(use, mag, best)
        if done.all():
            break
    return zeta, Su, Sv


def airy_ai(z):
    """``(Ai(z), Ai'(z))`` for complex ``z`` off the negative real axis beyond the switch radius."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    ai = np.empty(z.shape, dtype=complex)
    aip = np.empty(z.shape, dtype=complex)
    small = np.abs(z) < SWITCH_RADIUS
    if small.any():
        a, b = _series(z[small])
        ai[small] = a.astype(complex)
        aip[small] = b.astype(complex)
    big = ~small
    if big.any():
        zb = z[big]
        zeta, Su, Sv = _asymptotic_sums(zb)
        pref = np.exp(-zeta) / (2.0 * math.sqrt(math.pi))
        ai[big] = pref * zb ** (-0.25) * Su
        aip[big] = -pref * zb**0.25 * Sv
    return ai, aip


def _omega(epsilon: int) -> complex:
    if epsilon not in (1, -1):
        raise ValueError("epsilon must be +1 or -1")
    return complex(np.exp(2j * epsilon * math.pi / 3))


def alpha(x, epsilon: int = 1):
    """``-w Ai'(w x) / Ai(w x)``; scalar in, scalar out."""
    w = _omega(epsilon)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    z = w * xa
    out = np.empty(xa.shape, dtype=complex)
    small = np.abs(z) < SWITCH_RADIUS
    if small.any():
        a, b = _series(z[small])
        out[small] = -w * (b / a).astype(complex)
    big = ~small
    if big.any():
        zb = z[big]
        _, Su, Sv = _asymptotic_sums(zb)
        out[big] = w * np.sqrt(zb) * Sv / Su
    return out[0] if np.ndim(x) == 0 else out


def alpha_prime(x, epsilon: int = 1):
    """From the Riccati equation ``alpha' = alpha^2 - x``."""
    a = alpha(x, epsilon)
    return a * a - np.asarray(x, dtype=float)


def gamma1(x):
    """``|Ai(w x)|``; independent of the sign of ``eps`` for real ``x``."""
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    ai, _ = airy_ai(_omega(1) * xa)
    out = np.abs(ai)
    return out[0] if np.ndim(x) == 0 else out


def gamma2(x, c0: float = C0):
    x = np.asarray(x, dtype=float)
    return c0 * (1.0 + x * x) ** (-0.125)


def chi0(x):
    return smooth_step(x)


def beta(x, c0: float = C0):
    """Barrier ``chi0 gamma2 + (1 - chi0) gamma1``."""
    x = np.asarray(x, dtype=float)
    c = chi0(x)
    out = c * gamma2(x, c0) + (1.0 - c) * gamma1(x)
    return float(out) if out.ndim == 0 else out


def beta_prime(x, c0: float = C0):
    x = np.asarray(x, dtype=float)
    c = chi0(x)
    dc = smooth_step_prime(x)
    g1 = gamma1(x)
    g2 = gamma2(x, c0)
    dg1 = -g1 * np.real(alpha(x, 1))
    dg2 = -c0 * 0.25 * x * (1.0 + x * x) ** (-1.125)
    out = dc * (g2 - g1) + c * dg2 + (1.0 - c) * dg1
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# calibration helpers


def fit_first_coefficient(xs=(20.0, 30.0, 40.0, 60.0, 80.0), dps: int = 40) -> float:
    """Estimate ``u_1`` from high-precision values of ``Ai`` on the rotated ray.

    Uses ``Ai(z) 2 sqrt(pi) z^{1/4} e^{zeta} = 1 - u_1/zeta + u_2/zeta^2 - ...``
    and a least-squares fit in ``1/zeta``.
    """
    w = mpmath.exp(2j * mpmath.pi / 3)
    rows, rhs = [], []
    with mpmath.workdps(dps):
        for x in xs:
            z = w * x
            zeta = mpmath.mpf(2) / 3 * z**1.5
            ratio = mpmath.airyai(z) * 2 * mpmath.sqrt(mpmath.pi) * z**0.25 * mpmath.exp(zeta)
            t = 1 / zeta
            # (ratio - 1) / t = -u1 + u2 t - u3 t^2
            y = (ratio - 1) / t
            rows.append([1.0, complex(t), complex(t * t)])
            rhs.append(complex(y))
    A = np.array(rows, dtype=complex)
    coef, *_ = np.linalg.lstsq(A, np.array(rhs), rcond=None)
    return float(-coef[0].real)


def search_C0(n: int = 2001, tol: float = 1e-12) -> float:
    """Bracketing search for the supremum of ``C`` with ``C <x>^{-1/4} < |Ai(w x)|`` on ``[0, 1]``."""
    xs = np.linspace(0.0, 1.0, n)
    g1 = gamma1(xs)
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if np.all(gamma2(xs, mid) < g1):
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# verification table


def _fd4(f, x, h):
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)


def verify(c0: float = C0) -> List[dict]:
    """Property table: each entry has ``property``, ``grid``, ``worst``, ``threshold`` and ``pass``."""
    rows = []

    def add(name, grid, worst, thr, ok):
        rows.append({"property": name, "grid": grid, "worst": float(worst), "threshold": float(thr), "pass": bool(ok)})

    x = np.arange(-10.0, 10.0 + 1e-9, 1e-2)
    h = 1e-3
    for eps in (1, -1):
        a = alpha(x, eps)
        da = _fd4(lambda t: alpha(t, eps), x, h)
        worst = float(np.max(np.abs(da - (a * a - x))))
        add(f"ode_residual_eps{eps:+d}", "[-10,10] step 1e-2, 4th-order FD h=1e-3", worst, 1e-6, worst <= 1e-6)

    xn = np.linspace(-50.0, 50.0, 100001)
    worst = float(np.max(np.real(alpha(xn, 1))))
    add("re_alpha_negative", "[-50,50] 100001 points", worst, 0.0, worst < 0)

    xc = np.linspace(-50.0, 50.0, 2001)
    worst = float(np.max(np.abs(alpha(xc, -1) - np.conj(alpha(xc, 1)))))
    add("conjugation_symmetry", "[-50,50] 2001 points", worst, 1e-12, worst <= 1e-12)

    xr = np.linspace(5.0, 50.0, 4501)
    rem = np.abs(alpha(xr, 1) + np.sqrt(xr) - 1.0 / (4.0 * xr)) * xr**2.5
    worst = float(np.max(rem))
    add("remainder_bound", "[5,50] 4501 points", worst, C_REMAINDER, worst <= C_REMAINDER)

    xb = np.round(np.arange(-20.0, 20.0 + 1e-9, 1e-2), 12)
    b = beta(xb, c0)
    add("beta_positive", "[-20,20] step 1e-2", float(np.min(b)), 0.0, np.min(b) > 0)
    ra = np.real(alpha(xb, 1))
    barrier = -beta_prime(xb, c0) - b * ra
    add("barrier_inequality", "[-20,20] step 1e-2, analytic beta'", float(np.min(barrier)), -1e-7, np.min(barrier) >= -1e-7)
    bfd = _fd4(lambda t: beta(t, c0), xb, 1e-4)
    barrier_fd = -bfd - b * ra
    add("barrier_inequality_fd", "[-20,20] step 1e-2, 4th-order FD h=1e-4", float(np.min(barrier_fd)), -1e-7, np.min(barrier_fd) >= -1e-7)
    lower = float(np.min(b * (1.0 + xb * xb) ** 0.125))
    add("beta_lower_bound", "[-20,20] step 1e-2", lower, 0.0, lower > 0)
    return rows
