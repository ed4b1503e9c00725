"""Closed-form arithmetic on SE(2), its Lie algebra and the dual.

Conventions
-----------
* A pose (group element) is an array ``(x, y, theta)``. ``theta`` is kept
  unwrapped; only :func:`log` reduces it to ``[-pi, pi)``.
* An algebra vector is ``(vx, vy, omega)``; a covector has three components
  and pairs with algebra vectors through the ordinary dot product.
* Every function broadcasts over leading batch dimensions, so ``(N, 3)``
  stacks of poses or vectors are accepted wherever a single one is.
"""
from __future__ import annotations

import numpy as np
from scipy.special import bernoulli

from .errors import InjectivityRadius, Singular

IDENTITY = np.zeros(3)

#: default distance from +-pi at which ``log`` refuses to invert
THETA_MARGIN = 1e-9

_SMALL_OMEGA = 1e-4
# below this |omega| the dlog coefficient is summed from its Bernoulli series;
# 15 terms leave a truncation error under 1e-16 there, the closed form loses ~1e-13 to cancellation
_SERIES_OMEGA = 0.5
_SERIES_TERMS = 15
_BERNOULLI_OVER_FACTORIAL = np.array(
    [b / np.prod(np.arange(1, n + 1, dtype=float)) for n, b in enumerate(bernoulli(_SERIES_TERMS - 1))]
)


def _parts(a):
    a = np.asarray(a, dtype=float)
    return a[..., 0], a[..., 1], a[..., 2]


def compose(g1, g2):
    x1, y1, t1 = _parts(g1)
    x2, y2, t2 = _parts(g2)
    c, s = np.cos(t1), np.sin(t1)
    return np.stack([x1 + c * x2 - s * y2, y1 + s * x2 + c * y2, t1 + t2], axis=-1)


def inverse(g):
    x, y, t = _parts(g)
    c, s = np.cos(t), np.sin(t)
    return np.stack([-(c * x + s * y), s * x - c * y, -t], axis=-1)


def matrix(g):
    """3x3 homogeneous matrix of a pose."""
    x, y, t = _parts(g)
    c, s = np.cos(t), np.sin(t)
    out = np.zeros(np.shape(t) + (3, 3))
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    out[..., 0, 2] = x
    out[..., 1, 2] = y
    out[..., 2, 2] = 1.0
    return out


def from_matrix(m):
    m = np.asarray(m, dtype=float)
    return np.stack([m[..., 0, 2], m[..., 1, 2], np.arctan2(m[..., 1, 0], m[..., 0, 0])], axis=-1)


def hat(X):
    vx, vy, w = _parts(X)
    out = np.zeros(np.shape(w) + (3, 3))
    out[..., 0, 1] = -w
    out[..., 1, 0] = w
    out[..., 0, 2] = vx
    out[..., 1, 2] = vy
    return out


def vee(m):
    m = np.asarray(m, dtype=float)
    return np.stack([m[..., 0, 2], m[..., 1, 2], m[..., 1, 0]], axis=-1)


def pair(a, X):
    """Dual pairing <a, X> in the fixed basis."""
    return np.sum(np.asarray(a, dtype=float) * np.asarray(X, dtype=float), axis=-1)


def _sin_terms(w):
    """(sin w / w, (1 - cos w) / w), both evaluated without cancellation."""
    w = np.asarray(w, dtype=float)
    small = np.abs(w) < _SMALL_OMEGA
    safe = np.where(small, 1.0, w)
    w2 = w * w
    a = np.where(small, 1.0 - w2 / 6.0 + w2 * w2 / 120.0, np.sin(safe) / safe)
    b = np.where(small, w / 2.0 - w * w2 / 24.0 + w * w2 * w2 / 720.0, 2.0 * np.sin(safe / 2.0) ** 2 / safe)
    return a, b


def exp(X):
    vx, vy, w = _parts(X)
    a, b = _sin_terms(w)
    return np.stack([a * vx - b * vy, b * vx + a * vy, w], axis=-1)


def wrap_angle(theta):
    """Representative of ``theta`` in [-pi, pi)."""
    return np.mod(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi


def _check_radius(theta, margin):
    if np.any(np.abs(theta) >= np.pi - margin):
        raise InjectivityRadius(f"rotation angle {np.max(np.abs(theta))!r} is outside |theta| < pi - {margin:g}")


def log(g, margin: float = THETA_MARGIN):
    x, y, t = _parts(g)
    t = wrap_angle(t)
    _check_radius(t, margin)
    a, b = _sin_terms(t)
    det = a * a + b * b
    return np.stack([(a * x + b * y) / det, (a * y - b * x) / det, t], axis=-1)


def Ad_matrix(g):
    x, y, t = _parts(g)
    c, s = np.cos(t), np.sin(t)
    out = np.zeros(np.shape(t) + (3, 3))
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    out[..., 0, 2] = y
    out[..., 1, 2] = -x
    out[..., 2, 2] = 1.0
    return out


def Ad(g, X):
    return np.einsum("...ij,...j->...i", Ad_matrix(g), np.asarray(X, dtype=float))


def coAd(g, a):
    """a -> Ad*_g a, defined by <Ad*_g a, X> = <a, Ad_g X>."""
    return np.einsum("...ji,...j->...i", Ad_matrix(g), np.asarray(a, dtype=float))


def ad_matrix(X):
    """Matrix of Y -> [X, Y]."""
    vx, vy, w = _parts(X)
    out = np.zeros(np.shape(w) + (3, 3))
    out[..., 0, 1] = -w
    out[..., 1, 0] = w
    out[..., 0, 2] = vy
    out[..., 1, 2] = -vx
    return out


def _quadratic_in_ad(X, a, b):
    """Entries of I + a ad_X + b ad_X^2 (ad_X^2 = [[-w^2, 0, w vx], [0, -w^2, w vy], [0, 0, 0]])."""
    vx, vy, w = _parts(X)
    out = np.zeros(np.shape(w) + (3, 3))
    diag = 1.0 - b * w * w
    out[..., 0, 0] = diag
    out[..., 1, 1] = diag
    out[..., 0, 1] = -a * w
    out[..., 1, 0] = a * w
    out[..., 0, 2] = a * vy + b * w * vx
    out[..., 1, 2] = -a * vx + b * w * vy
    out[..., 2, 2] = 1.0
    return out


def _dlog_coefficient(w):
    """c(w) in M(X) = I + ad/2 + c(w) ad^2.

    ad^3 = -w^2 ad, so the Bernoulli series sum B_n/n! (-ad)^n collapses to
    c(w) = sum_m B_2m/(2m)! (-w^2)^(m-1) = (1 - (w/2) cot(w/2)) / w^2.
    """
    w = np.asarray(w, dtype=float)
    small = np.abs(w) < _SERIES_OMEGA
    half = np.where(small, 1.0, w / 2.0)
    closed = (1.0 - half / np.tan(half)) / np.where(small, 1.0, w * w)
    if not np.any(small):
        return closed
    series = np.zeros_like(w)
    for m, coef in enumerate(_BERNOULLI_OVER_FACTORIAL[2::2], start=1):
        series = series + coef * (-w * w) ** (m - 1)
    return np.where(small, series, closed)


def _dexp_coefficients(w):
    """(a, b) with M(X)^{-1} = I + a ad + b ad^2, i.e. the series sum (-ad)^n / (n+1)!."""
    w = np.asarray(w, dtype=float)
    small = np.abs(w) < 1e-2
    safe = np.where(small, 1.0, w)
    w2 = w * w
    a = np.where(small, -(0.5 - w2 / 24.0 + w2 * w2 / 720.0 - w2**3 / 40320.0), -2.0 * np.sin(safe / 2.0) ** 2 / (safe * safe))
    b = np.where(small, 1.0 / 6.0 - w2 / 120.0 + w2 * w2 / 5040.0 - w2**3 / 362880.0, (safe - np.sin(safe)) / safe**3)
    return a, b


def dlog_matrix(X):
    """M(X) with log(exp(X) exp(s*eta)) = X + s*M(X) eta + O(s^2).

    Closed form of the Bernoulli series sum B_n/n! (-ad_X)^n; for
    |omega| < 0.5 the scalar coefficient is summed from the series instead.
    """
    X = np.asarray(X, dtype=float)
    return _quadratic_in_ad(X, 0.5, _dlog_coefficient(X[..., 2]))


def dexp_matrix(X):
    """Inverse of :func:`dlog_matrix`: exp(X)^{-1} exp(X + s*eta) = exp(s*dexp(X) eta) + O(s^2)."""
    X = np.asarray(X, dtype=float)
    a, b = _dexp_coefficients(X[..., 2])
    return _quadratic_in_ad(X, a, b)


def _transpose_apply(F, a):
    return np.einsum("...ji,...j->...i", F, np.asarray(a, dtype=float))


def dlog_star(X, zeta, margin: float = THETA_MARGIN):
    """rho = M(X)^T zeta: pulls a covector at exp(X) back to the algebra at X."""
    X = np.asarray(X, dtype=float)
    _check_radius(X[..., 2], margin)
    return _transpose_apply(dlog_matrix(X), zeta)


def dlog_star_inv(X, rho, margin: float = THETA_MARGIN):
    """zeta with dlog_star(X, zeta) = rho, applied as dexp(X)^T rho."""
    X = np.asarray(X, dtype=float)
    _check_radius(X[..., 2], margin)
    w = X[..., 2]
    # det M(X) = ((w/2) / sin(w/2))^2; blows up only at |w| = 2 pi
    det_inv = np.sinc(w / (2.0 * np.pi)) ** 2
    if np.any(det_inv < 1e-12):
        raise Singular("trivialized log-derivative is numerically singular")
    return _transpose_apply(dexp_matrix(X), rho)
