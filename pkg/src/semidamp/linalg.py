"""Small linear-algebra helpers shared by the lab modules."""

from __future__ import annotations

import os
import zlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import PowerIterationStall

WORKERS_ENV = "SEMIDAMP_WORKERS"

# Dense SVD is preferred below this size; above it the iterative path wins.
DENSE_SVD_LIMIT = 600


def stable_seed(*labels) -> int:
    """Deterministic 32-bit seed from a tuple of labels (CRC of the repr)."""
    text = "|".join(repr(x) for x in labels)
    return zlib.crc32(text.encode("utf-8"))


def worker_count(default: int = 1) -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, default)))
    except ValueError:
        return default


def parallel_map(fn, items, workers: int | None = None):
    """Order-preserving map, threaded when the worker count allows it."""
    items = list(items)
    n = worker_count() if workers is None else workers
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))


def as_dense(m) -> np.ndarray:
    if sp.issparse(m):
        return m.toarray()
    return np.asarray(m)


def hermiticity_defect(m) -> float:
    """max |M - M*| entrywise."""
    md = as_dense(m)
    return float(np.max(np.abs(md - md.conj().T))) if md.size else 0.0


def spectral_norm(m, seed_label="spectral_norm", rtol: float = 1e-8) -> float:
    """Largest singular value of a dense matrix.

    Exact SVD below DENSE_SVD_LIMIT, deterministic power iteration above.
    """
    md = as_dense(m)
    n = max(md.shape)
    if n <= DENSE_SVD_LIMIT:
        if md.size == 0:
            return 0.0
        return float(sla.svdvals(md)[0])
    return power_iteration_norm(
        lambda v: md @ v, lambda v: md.conj().T @ v, md.shape[1],
        seed_label=seed_label, rtol=rtol,
    )


def power_iteration_norm(apply_m, apply_mh, dim: int, seed_label="power",
                         rtol: float = 1e-8, max_iter: int = 20000) -> float:
    """sigma_max via power iteration on M*M with a deterministic start vector.

    Raises PowerIterationStall if the Rayleigh estimate has not settled
    after max_iter sweeps.
    """
    rng = np.random.default_rng(stable_seed(seed_label, dim))
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    sigma = 0.0
    hits = 0
    for _ in range(max_iter):
        w = apply_m(v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        u = apply_mh(w)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return 0.0
        sigma_new = float(np.sqrt(nu))  # ||M*M v|| -> sigma^2
        v = u / nu
        if sigma > 0 and abs(sigma_new - sigma) <= rtol * sigma_new:
            hits += 1
            if hits >= 3:
                return sigma_new
        else:
            hits = 0
        sigma = sigma_new
    raise PowerIterationStall(
        f"power iteration did not settle to rtol={rtol} in {max_iter} sweeps")


def loglog_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares slope of log(y) against log(x).

    Returns (slope, intercept, rms_residual) in log space.
    """
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    a = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(a, ly, rcond=None)
    resid = ly - a @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    return float(coef[0]), float(coef[1]), rms


def golden_section_max(f, lo: float, hi: float, tol: float,
                       max_iter: int = 80) -> tuple[float, float]:
    """Deterministic golden-section maximizer on [lo, hi].

    Returns (argmax, value). Assumes a single dominant peak on the bracket;
    with several peaks it converges to one of them, which is all the sup
    refinement needs.
    """
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    best = max((fc, c), (fd, d))
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
            best = max(best, (fc, c))
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
            best = max(best, (fd, d))
    return best[1], best[0]
