"""Quaternion and dual-quaternion kernels.

Arrays are component-major: a quaternion array has shape ``(4, ...)`` with
components ``(a, b, c, d)`` = scalar, i, j, k along the first axis, and a dual
quaternion array has shape ``(8, ...)`` holding the real part ``q`` in rows
0-3 and the dual part ``p`` (the coefficient of epsilon) in rows 4-7. Every
kernel broadcasts over the trailing axes, so a single quaternion, a vector of
``n`` coordinates and a batch of node vectors all go through the same code.

There is no slot for an epsilon**2 term, so dual arithmetic is exact by
construction.
"""
from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np


class DegenerateInputError(ValueError):
    """Raised when an operation needs a nonzero quaternion norm and gets zero."""


class DualNumber(NamedTuple):
    real: float
    dual: float

    def __mul__(self, other):  # type: ignore[override]
        return DualNumber(
            self.real * other.real, self.real * other.dual + self.dual * other.real
        )


def _elementwise(x, y):
    return x * y


def hamilton_bilinear(x, y, mul: Callable = _elementwise) -> np.ndarray:
    """Hamilton product table with an arbitrary bilinear component product.

    With ``mul`` elementwise this is the ordinary Hamilton product. Passing a
    matrix product lifts the table to quaternion matrices, which is how the
    matvec kernels and their weight gradients are built.
    """
    a1, b1, c1, d1 = x[0], x[1], x[2], x[3]
    a2, b2, c2, d2 = y[0], y[1], y[2], y[3]
    return np.stack(
        [
            mul(a1, a2) - mul(b1, b2) - mul(c1, c2) - mul(d1, d2),
            mul(a1, b2) + mul(b1, a2) + mul(c1, d2) - mul(d1, c2),
            mul(a1, c2) - mul(b1, d2) + mul(c1, a2) + mul(d1, b2),
            mul(a1, d2) + mul(b1, c2) - mul(c1, b2) + mul(d1, a2),
        ]
    )


def hamilton(x, y) -> np.ndarray:
    """Hamilton product ``x (x) y`` of two broadcastable quaternion arrays."""
    return hamilton_bilinear(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))


def quat_conjugate(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = -x
    out[0] = x[0]
    return out


def quat_norm(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.sqrt(np.sum(x * x, axis=0))


def quat_normalize(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    norm = quat_norm(x)
    if np.any(norm == 0.0):
        raise DegenerateInputError("cannot normalize a zero-norm quaternion")
    return x / norm


def quat_dot(x, y) -> np.ndarray:
    """Four-component dot product, reduced over the component axis only."""
    return np.sum(np.asarray(x) * np.asarray(y), axis=0)


def quat_inner(x, y) -> float:
    """Quaternion-inner product of two quaternion vectors of equal length."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    return float(np.sum(x * y))


# -- dual quaternions --------------------------------------------------------


def dq_parts(h) -> tuple[np.ndarray, np.ndarray]:
    h = np.asarray(h, dtype=np.float64)
    return h[:4], h[4:]


def dq_join(q, p) -> np.ndarray:
    return np.concatenate([q, p], axis=0)


def dq_add(h1, h2) -> np.ndarray:
    return np.asarray(h1, dtype=np.float64) + np.asarray(h2, dtype=np.float64)


def dq_multiply(h1, h2) -> np.ndarray:
    q1, p1 = dq_parts(h1)
    q2, p2 = dq_parts(h2)
    return dq_join(hamilton(q1, q2), hamilton(q1, p2) + hamilton(p1, q2))


def dq_conjugate(h) -> np.ndarray:
    q, p = dq_parts(h)
    return dq_join(quat_conjugate(q), quat_conjugate(p))


def dq_norm(h) -> DualNumber:
    """Dual-number norm ``||q|| + eps (q.p)/||q||``.

    Floats for a single dual quaternion; arrays over trailing axes otherwise.
    """
    q, p = dq_parts(h)
    nq = quat_norm(q)
    if np.any(nq == 0.0):
        raise DegenerateInputError("dual-quaternion norm undefined for ||q|| = 0")
    dual = quat_dot(q, p) / nq
    if nq.ndim == 0:
        return DualNumber(float(nq), float(dual))
    return DualNumber(nq, dual)


def dq_normalize(h) -> np.ndarray:
    q, p = dq_parts(h)
    nq = quat_norm(q)
    if np.any(nq == 0.0):
        raise DegenerateInputError("cannot normalize a dual quaternion with ||q|| = 0")
    q_unit = q / nq
    return dq_join(q_unit, p / nq - q_unit * (quat_dot(q, p) / nq**2))


# -- matrix forms --------------------------------------------------------------


def _matvec(w, x):
    # w: (n_out, n_in); x: (..., n_in)
    return x @ w.T


def quat_matvec(W, x) -> np.ndarray:
    """``y_i = sum_j W[i, j] (x) x_j``.

    ``W`` has shape ``(4, n_out, n_in)``; ``x`` has shape ``(4, n_in)`` or
    ``(4, batch, n_in)`` for a batch of vectors.
    """
    W = np.asarray(W, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if W.shape[0] != 4 or x.shape[0] != 4:
        raise ValueError("quaternion arrays need a leading axis of size 4")
    if W.shape[-1] != x.shape[-1]:
        raise ValueError(f"shape mismatch: W has {W.shape[-1]} columns, x has length {x.shape[-1]}")
    return hamilton_bilinear(W, x, _matvec)


def quat_matvec_grad_weight(g, x) -> np.ndarray:
    """Gradient of ``sum <g, W (x) x>`` w.r.t. ``W`` over a batch: ``sum_n g_n (x) x_n*``.

    ``g`` is ``(4, batch, n_out)`` and ``x`` is ``(4, batch, n_in)``.
    """
    return hamilton_bilinear(g, quat_conjugate(x), lambda u, v: u.T @ v)


def quat_matvec_grad_input(W, g) -> np.ndarray:
    """Gradient w.r.t. ``x`` of ``sum <g, W (x) x>``: ``W^H (x) g`` (conjugate transpose)."""
    Wh = np.swapaxes(quat_conjugate(W), -1, -2)
    return quat_matvec(Wh, g)


def dq_matvec(W, x) -> np.ndarray:
    """``(W_q (x) x_q) + eps (W_q (x) x_p + W_p (x) x_q)``.

    ``W`` has shape ``(8, n_out, n_in)``, ``x`` has shape ``(8, n_in)`` or
    ``(8, batch, n_in)``.
    """
    Wq, Wp = dq_parts(W)
    xq, xp = dq_parts(x)
    return dq_join(quat_matvec(Wq, xq), quat_matvec(Wq, xp) + quat_matvec(Wp, xq))


def dq_matvec_backward(W, x, g) -> tuple[np.ndarray, np.ndarray]:
    """Gradients ``(dW, dx)`` of ``sum <g, dq_matvec(W, x)>`` for batched ``x``."""
    Wq, Wp = dq_parts(W)
    xq, xp = dq_parts(x)
    gq, gp = dq_parts(g)
    dWq = quat_matvec_grad_weight(gq, xq) + quat_matvec_grad_weight(gp, xp)
    dWp = quat_matvec_grad_weight(gp, xq)
    dxq = quat_matvec_grad_input(Wq, gq) + quat_matvec_grad_input(Wp, gp)
    dxp = quat_matvec_grad_input(Wq, gp)
    return dq_join(dWq, dWp), dq_join(dxq, dxp)


def concat_dual_to_quat(h) -> np.ndarray:
    """Concatenate the two quaternion coefficients of each dual quaternion vector.

    ``(8, ..., n)`` -> ``(4, ..., 2n)``: coordinates ``[0, n)`` are the real
    parts, ``[n, 2n)`` the dual parts.
    """
    q, p = dq_parts(h)
    return np.concatenate([q, p], axis=-1)


def split_quat_to_dual(x) -> np.ndarray:
    """Inverse of :func:`concat_dual_to_quat`."""
    x = np.asarray(x)
    n = x.shape[-1] // 2
    return dq_join(x[..., :n], x[..., n:])
