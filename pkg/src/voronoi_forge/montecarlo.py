"""Monte-Carlo estimation of second moments and quantizer constants.

Sampling folds uniform points of a fundamental parallelepiped into the
Voronoi region by subtracting the nearest lattice point (floating-point
decoding; exact ties occur with probability zero).  The counter-based
Philox generator is split into one substream per fixed-size chunk, so
results are bit-reproducible for a given seed regardless of scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import Lattice

CHUNK = 1 << 16


@dataclass(frozen=True)
class McEstimate:
    """Second-moment and quantizer-constant estimates with variances."""

    N: int
    U_hat: float
    var_hat_U: float
    G_hat: float
    var_hat_G: float
    seed: int


def _chunk_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed).jumped(stream))


def _is_cubic(L: Lattice) -> bool:
    return (L.n == L.m and L._basis_den == 1
            and np.array_equal(L._basis_int, np.eye(L.n, dtype=np.int64)))


def sample_voronoi(L: Lattice, rng: np.random.Generator, count: int = 1) -> np.ndarray:
    """Uniform samples from the Voronoi region, one per row."""
    t = rng.random((count, L.n))
    u = t @ L._basis_f
    if _is_cubic(L):
        return u - np.round(u)
    return u - L.nearest_float(u) @ L._basis_f


def _norm2_chunks(L: Lattice, N: int, seed: int, stream_base: int = 0):
    """Yield squared sample norms in deterministic fixed-size chunks."""
    done = 0
    stream = stream_base
    while done < N:
        count = min(CHUNK, N - done)
        x = sample_voronoi(L, _chunk_rng(seed, stream), count)
        yield np.einsum("ij,ij->i", x, x)
        done += count
        stream += 1


def _volume(L: Lattice) -> float:
    return math.sqrt(float(L.volume_sq))


def _nv_factor(L: Lattice) -> float:
    """n * V**(1+2/n) as a float."""
    return L.n * _volume(L) ** (1.0 + 2.0 / L.n)


def estimate(L: Lattice, N: int, seed: int = 0) -> McEstimate:
    """Sample-mean estimate of U and G with unbiased variance estimates.

    U_hat estimates the unnormalized second moment, so the sample mean of
    the squared norms (which estimates U/V under the uniform density 1/V)
    is scaled by the region volume V; G_hat = U_hat / (n V^(1+2/n)) then
    targets the quantizer constant.  The direct one-pass variance form is
    used, with per-chunk partial sums combined by compensated summation.
    """
    if N < 2:
        raise ValueError("need at least two samples")
    s2_parts, s4_parts = [], []
    for w in _norm2_chunks(L, N, seed):
        s2_parts.append(float(w.sum()))
        s4_parts.append(float((w * w).sum()))
    S2 = math.fsum(s2_parts)
    S4 = math.fsum(s4_parts)
    mean = S2 / N
    var_mean = max(S4 / N - mean * mean, 0.0) / (N - 1)
    V = _volume(L)
    U_hat = V * mean
    var_hat_U = V * V * var_mean
    denom = _nv_factor(L)
    return McEstimate(N, U_hat, var_hat_U, U_hat / denom,
                      var_hat_U / (denom * denom), seed)


def jackknife_variance(samples, g: int) -> float:
    """Grouped variance estimate of the grand mean.

    The samples are split, in the given order, into g contiguous groups
    (a non-dividing tail is truncated); the sample variance of the group
    means divided by g estimates the variance of the overall mean.
    """
    if g < 2:
        raise ValueError("need at least two groups")
    samples = np.asarray(samples, dtype=np.float64)
    k = samples.size // g
    if k < 1:
        raise ValueError("more groups than samples")
    means = samples[: k * g].reshape(g, k).mean(axis=1)
    return float(means.var(ddof=1)) / g


def compare_estimators(L: Lattice, N: int = 100000, g: int = 100,
                       reps: int = 1000, seed: int = 0) -> dict:
    """Direct vs. grouped (jackknife) standard-deviation estimates of U_hat.

    Runs `reps` independent experiments of N samples each and reports both
    estimators' values per repetition plus their spread (root-mean-square
    deviation) around the exact reference, which for Zn is sqrt(n/(180 N)).
    """
    exact_ref = None
    if _is_cubic(L):
        exact_ref = math.sqrt(L.n / (180.0 * N))
    streams_per_rep = (N + CHUNK - 1) // CHUNK
    direct = np.empty(reps)
    jack = np.empty(reps)
    for r in range(reps):
        parts = list(_norm2_chunks(L, N, seed, stream_base=r * streams_per_rep))
        w = np.concatenate(parts)
        U_hat = math.fsum(float(p.sum()) for p in parts) / N
        s4 = math.fsum(float((p * p).sum()) for p in parts)
        var_direct = max(s4 / N - U_hat * U_hat, 0.0) / (N - 1)
        direct[r] = math.sqrt(var_direct)
        jack[r] = math.sqrt(jackknife_variance(w, g))
    out = {
        "N": N, "g": g, "reps": reps, "seed": seed,
        "exact_ref": exact_ref,
        "direct": direct, "jackknife": jack,
    }
    if reps > 1 and exact_ref is not None:
        out["spread_direct"] = float(np.sqrt(np.mean((direct - exact_ref) ** 2)))
        out["spread_jackknife"] = float(np.sqrt(np.mean((jack - exact_ref) ** 2)))
    return out
