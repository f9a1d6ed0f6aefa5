"""
Bessel functions of order 0 and 1.

J accepts complex arguments, Y real positive ones. Ascending series are
summed in extended precision for ``|z| <= 12``; beyond that the Hankel
asymptotic expansion is used, truncated at its smallest term.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError

SERIES_RADIUS = 12.0
_EULER = np.longdouble("0.577215664901532860606512090082402431")
_PI = np.longdouble("3.14159265358979323846264338327950288")


def _j_series(n: int, z):
    z = np.asarray(z, dtype=np.clongdouble)
    q = -(z * z) / 4
    term = (z / 2) ** n / (1 if n == 0 else 1)
    total = term.copy()
    for k in range(1, 200):
        term = term * q / (k * (k + n))
        total = total + term
        if np.all(np.abs(term) <= 1e-21 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def _y_series(n: int, x):
    x = np.asarray(x, dtype=np.longdouble)
    q = -(x * x) / 4
    log_term = 2 / _PI * np.log(x / 2)
    if n == 0:
        # (2/pi)(ln(x/2) + gamma) J0 - (2/pi) sum_k H_k q^k / (k!)^2
        term = np.ones_like(x)
        harmonic = np.longdouble(0)
        acc = np.zeros_like(x)
        for k in range(1, 200):
            term = term * q / (k * k)
            harmonic += np.longdouble(1) / k
            step = harmonic * term
            acc = acc + step
            if np.all(np.abs(step) <= 1e-21 * np.maximum(np.abs(acc), 1e-300)):
                break
        j0 = _j_series(0, x).real
        return (log_term + 2 / _PI * _EULER) * j0 - 2 / _PI * acc
    # n == 1: -2/(pi x) + (2/pi) ln(x/2) J1 - (1/pi) sum_k (psi(k+1)+psi(k+2)) (x/2)^(2k+1) q'^k/(k!(k+1)!)
    term = x / 2
    h_k = np.longdouble(0)
    h_k1 = np.longdouble(1)
    acc = (h_k + h_k1 - 2 * _EULER) * term
    for k in range(1, 200):
        term = term * q / (k * (k + 1))
        h_k += np.longdouble(1) / k
        h_k1 += np.longdouble(1) / (k + 1)
        step = (h_k + h_k1 - 2 * _EULER) * term
        acc = acc + step
        if np.all(np.abs(step) <= 1e-21 * np.maximum(np.abs(acc), 1e-300)):
            break
    j1 = _j_series(1, x).real
    return -2 / (_PI * x) + log_term * j1 - acc / _PI


def _hankel_pq(n: int, z):
    """P and Q of the Hankel expansion, truncated at the smallest term."""
    z = np.asarray(z, dtype=complex)
    mu = 4.0 * n * n
    p = np.ones_like(z)
    q = np.zeros_like(z)
    a = np.ones_like(z)  # running a_k(nu) / z^k
    prev = np.full(z.shape, np.inf)
    active = np.ones(z.shape, dtype=bool)
    for k in range(1, 60):
        a = a * (mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
        mag = np.abs(a)
        active &= mag < prev
        if not active.any():
            break
        sign = -1.0 if (k // 2) % 2 else 1.0  # (-1)^(k//2)
        if k % 2 == 0:
            p = p + np.where(active, sign * a, 0)
        else:
            q = q + np.where(active, sign * a, 0)
        prev = np.where(active, mag, prev)
        active &= mag > 1e-17
    return p, q


def _asymptotic(n: int, kind: str, z):
    z = np.asarray(z, dtype=complex)
    p, q = _hankel_pq(n, z)
    chi = z - (n / 2.0 + 0.25) * np.pi
    amp = np.sqrt(2.0 / (np.pi * z))
    if kind == "J":
        return amp * (p * np.cos(chi) - q * np.sin(chi))
    return amp * (p * np.sin(chi) + q * np.cos(chi))


def bessel(order: int, kind: str, z):
    """
    Evaluate ``J_order(z)`` or ``Y_order(z)`` for ``order`` in {0, 1}.

    Returns a float for real input to Y or real input to J, a complex value
    for complex J input; arrays are handled elementwise.
    """
    if order not in (0, 1):
        raise DomainError("only orders 0 and 1 are supported")
    if kind not in ("J", "Y"):
        raise DomainError("kind must be 'J' or 'Y'")
    arr = np.asarray(z)
    is_complex = np.iscomplexobj(arr)
    if kind == "Y":
        if is_complex:
            if np.any(arr.imag != 0):
                raise DomainError("Y requires a real argument")
            arr = arr.real
        arr = arr.astype(float)
        if np.any(~(arr > 0)):
            raise DomainError("Y requires a positive argument")
    flat = np.atleast_1d(arr).ravel()
    out = np.empty(flat.shape, dtype=complex)
    small = np.abs(flat) <= SERIES_RADIUS
    if small.any():
        vals = _j_series(order, flat[small]) if kind == "J" else _y_series(order, flat[small].real)
        out[small] = np.asarray(vals, dtype=np.clongdouble).astype(complex)
    if (~small).any():
        out[~small] = _asymptotic(order, kind, flat[~small])
    out = out.reshape(np.shape(arr))
    if not is_complex:
        out = out.real
    return out.item() if out.ndim == 0 else out


def j1_over_j0(z):
    """Ratio ``J1(z)/J0(z)`` that stays finite where both overflow (large ``|Im z|``)."""
    arr = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.empty(arr.shape, dtype=complex)
    small = np.abs(arr) <= SERIES_RADIUS
    if small.any():
        s = arr[small]
        out[small] = (_j_series(1, s) / _j_series(0, s)).astype(complex)
    if (~small).any():
        b = arr[~small]
        p0, q0 = _hankel_pq(0, b)
        p1, q1 = _hankel_pq(1, b)
        t = np.tan(b - 0.25 * np.pi)
        out[~small] = (p1 * t + q1) / (p0 - q0 * t)
    out = out.reshape(np.shape(z))
    return out.item() if out.ndim == 0 else out
