"""Spherical Bessel functions and m = 0 angular coupling coefficients."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

MAX_ORDER = 64

_RESCALE = 1e200


def _j0_j1(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed forms, with Taylor series for j1 where the closed form cancels."""
    j0 = np.sinc(x / np.pi)
    small = x < 0.25
    xs = np.where(small, x, 1.0)
    xl = np.where(small, 1.0, x)
    x2 = xs * xs
    series = xs / 3.0 * (1 - x2 / 10 * (1 - x2 / 28 * (1 - x2 / 54 * (1 - x2 / 88))))
    closed = (np.sin(xl) / xl - np.cos(xl)) / xl
    return j0, np.where(small, series, closed)


def spherical_bessel_all(order_max: int, x) -> np.ndarray:
    """j_0 ... j_order_max at every x, shape (order_max + 1, *x.shape).

    Miller's downward recurrence started well above max(order_max, x), with
    rescaling against overflow, normalized to whichever of the closed-form j0
    or j1 is larger in magnitude at each point (they never vanish together).
    """
    if not 0 <= order_max <= MAX_ORDER:
        raise ValueError(f"order must be in [0, {MAX_ORDER}], got {order_max}")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("spherical_bessel needs finite arguments")
    if np.any(x < 0):
        raise ValueError("spherical_bessel is defined here for x >= 0")
    shape = x.shape
    x = x.ravel()
    out = np.zeros((order_max + 1, x.size))
    zero = x == 0.0
    nz = ~zero
    out[0, zero] = 1.0
    if nz.any():
        xn = x[nz]
        start = order_max + int(math.ceil(xn.max())) + int(math.ceil(3.0 * math.sqrt(order_max + xn.max() + 1.0))) + 20
        f_next = np.zeros(xn.size)
        f_cur = np.full(xn.size, 1e-300)
        vals = np.zeros((order_max + 1, xn.size))
        for k in range(start, 0, -1):
            f_prev = (2 * k + 1) / xn * f_cur - f_next
            if k - 1 <= order_max:
                vals[k - 1] = f_prev
            f_next, f_cur = f_cur, f_prev
            big = np.abs(f_cur) > _RESCALE
            if big.any():
                f_cur[big] /= _RESCALE
                f_next[big] /= _RESCALE
                vals[:, big] /= _RESCALE
        # f_cur is now the unnormalized j0; vals[1] the unnormalized j1 (if stored).
        j0, j1 = _j0_j1(xn)
        f0 = vals[0]
        f1 = vals[1] if order_max >= 1 else f_next
        use0 = np.abs(j0) >= np.abs(j1)
        scale = np.where(use0, j0 / np.where(use0, f0, 1.0), j1 / np.where(use0, 1.0, f1))
        vals *= scale
        vals[0] = j0
        if order_max >= 1:
            vals[1] = j1
        out[:, nz] = vals
    return out.reshape((order_max + 1,) + shape)


def spherical_bessel(order: int, x):
    """Spherical Bessel function of the first kind j_order(x) for x >= 0."""
    if int(order) != order or order < 0:
        raise ValueError(f"order must be a non-negative integer, got {order}")
    res = spherical_bessel_all(int(order), x)[int(order)]
    return float(res) if np.ndim(res) == 0 else res


@lru_cache(maxsize=None)
def threej_zero(l1: int, l2: int, l3: int) -> float:
    """Wigner 3j symbol (l1 l2 l3; 0 0 0)."""
    J = l1 + l2 + l3
    if J % 2 or l3 < abs(l1 - l2) or l3 > l1 + l2 or min(l1, l2, l3) < 0:
        return 0.0
    g = J // 2
    lg = math.lgamma
    logv = 0.5 * (lg(J - 2 * l1 + 1) + lg(J - 2 * l2 + 1) + lg(J - 2 * l3 + 1) - lg(J + 2))
    logv += lg(g + 1) - lg(g - l1 + 1) - lg(g - l2 + 1) - lg(g - l3 + 1)
    return (-1) ** g * math.exp(logv)


@lru_cache(maxsize=None)
def angular_weight(l_final: int, l_initial: int, lam: int, m: int = 0) -> float:
    """int Y*_{l_final,0} P_lam(cos theta) Y_{l_initial,0} dOmega.

    Equals sqrt((2l'+1)(2l+1)) (l' lam l; 0 0 0)^2, which vanishes unless
    |l - l'| <= lam <= l + l' and l + l' + lam is even.
    """
    if min(l_final, l_initial, lam) < 0:
        raise ValueError("angular momenta must be non-negative")
    if m != 0:
        raise ValueError("only m = 0 is supported")
    w = threej_zero(l_final, lam, l_initial)
    if w == 0.0:
        return 0.0
    return math.sqrt((2 * l_final + 1) * (2 * l_initial + 1)) * w * w


def dipole_angular(l_final: int, l_initial: int) -> float:
    """<l' 0| cos theta |l 0> = max(l, l') / sqrt((2l+1)(2l'+1)) for |l - l'| = 1."""
    if abs(l_final - l_initial) != 1:
        return 0.0
    return max(l_final, l_initial) / math.sqrt((2 * l_final + 1) * (2 * l_initial + 1))
