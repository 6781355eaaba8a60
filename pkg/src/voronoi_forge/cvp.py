"""Sphere-decoding kernels for closest-point searches.

The kernels work on the upper-triangular Cholesky factor R of a lattice Gram
matrix, so distances are measured in coefficient space:

    dist2(u) = || R (u - t) ||^2

for integer coefficient vectors u and a real target t.  Floating point is
only used to locate candidates; callers re-check distances exactly.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True)
def enum_nearest(R, t):
    """Return (dist2, u) of one nearest integer vector to t under R.

    Depth-first Schnorr-Euchner enumeration with radius shrinking.
    """
    k = R.shape[0]
    u = np.zeros(k, dtype=np.int64)
    best_u = np.zeros(k, dtype=np.int64)
    step = np.zeros(k, dtype=np.int64)
    center = np.zeros(k)
    partial = np.zeros(k + 1)
    best = np.inf

    i = k - 1
    # center at the deepest level depends only on t
    s = 0.0
    center[i] = t[i]
    u[i] = np.int64(np.rint(center[i]))
    step[i] = 1 if u[i] <= center[i] else -1
    descending = True
    while True:
        d = R[i, i] * (u[i] - center[i])
        dist = partial[i + 1] + d * d
        if dist <= best:
            if i == 0:
                if dist < best:
                    best = dist
                    best_u[:] = u
                # move to sibling
                u[i] += step[i]
                step[i] = -step[i] - (1 if step[i] > 0 else -1)
            else:
                partial[i] = dist
                i -= 1
                s = 0.0
                for j in range(i + 1, k):
                    s += R[i, j] * (u[j] - t[j])
                center[i] = t[i] - s / R[i, i]
                u[i] = np.int64(np.rint(center[i]))
                step[i] = 1 if u[i] <= center[i] else -1
        else:
            # prune: go back up
            i += 1
            if i >= k:
                return best, best_u
            u[i] += step[i]
            step[i] = -step[i] - (1 if step[i] > 0 else -1)


@njit(cache=True)
def enum_within(R, t, radius2, out):
    """Collect all integer u with ||R(u - t)||^2 <= radius2 into out.

    Returns the number of vectors found, or -1 if out is too small.
    """
    k = R.shape[0]
    u = np.zeros(k, dtype=np.int64)
    step = np.zeros(k, dtype=np.int64)
    center = np.zeros(k)
    partial = np.zeros(k + 1)
    count = 0

    i = k - 1
    center[i] = t[i]
    u[i] = np.int64(np.rint(center[i]))
    step[i] = 1 if u[i] <= center[i] else -1
    while True:
        d = R[i, i] * (u[i] - center[i])
        dist = partial[i + 1] + d * d
        if dist <= radius2:
            if i == 0:
                if count >= out.shape[0]:
                    return -1
                out[count, :] = u
                count += 1
                u[i] += step[i]
                step[i] = -step[i] - (1 if step[i] > 0 else -1)
            else:
                partial[i] = dist
                i -= 1
                s = 0.0
                for j in range(i + 1, k):
                    s += R[i, j] * (u[j] - t[j])
                center[i] = t[i] - s / R[i, i]
                u[i] = np.int64(np.rint(center[i]))
                step[i] = 1 if u[i] <= center[i] else -1
        else:
            i += 1
            if i >= k:
                return count
            u[i] += step[i]
            step[i] = -step[i] - (1 if step[i] > 0 else -1)


@njit(cache=True, parallel=True)
def enum_nearest_batch(R, T, out_u):
    """Nearest integer vector for every row of T; fills out_u row by row."""
    for q in prange(T.shape[0]):
        _, u = enum_nearest(R, T[q])
        out_u[q, :] = u
