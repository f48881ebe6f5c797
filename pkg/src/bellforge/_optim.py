"""Multi-start plumbing shared by the optimizers."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.spatial.transform import Rotation


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("BELLFORGE_THREADS", "1")))
    except ValueError:
        return 1


def child_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """Independent generators, one per restart, fixed by ``seed`` alone."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def best_of(run: Callable, starts: Sequence) -> tuple[float, object]:
    """Run ``run(start) -> (value, payload)`` for every start, keep the maximum.

    Ties go to the earliest start, so the result does not depend on the
    worker count.
    """
    workers = min(worker_count(), len(starts))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(s) for s in starts]
    best = max(range(len(results)), key=lambda i: (results[i][0], -i))
    return results[best]


def nelder_mead_max(fun: Callable[[np.ndarray], float], x0: np.ndarray, tol: float = 1e-9):
    """Local simplex maximization from ``x0``; returns (value, x)."""
    dim = len(x0)
    opts = {"xatol": 1e-7, "fatol": tol, "maxiter": 20000 * dim, "maxfev": 20000 * dim, "adaptive": dim > 3}
    res = minimize(lambda p: -fun(p), np.asarray(x0, dtype=float), method="Nelder-Mead", options=opts)
    return -float(res.fun), res.x


def rotation_matrix(v: np.ndarray) -> np.ndarray:
    """Rodrigues formula for a rotation vector."""
    theta = float(np.sqrt(v @ v))
    if theta < 1e-15:
        return np.eye(3)
    k = v / theta
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(theta) * kx + (1 - np.cos(theta)) * (kx @ kx)


# rotation vectors taking (x, y) to the three coordinate planes
PLANE_ROTVECS = {
    "xy": np.zeros(3),
    "xz": Rotation.from_matrix(np.array([[1, 0, 0], [0, 0, -1], [0, 1, 0]], float)).as_rotvec(),
    "yz": Rotation.from_matrix(np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]], float)).as_rotvec(),
}


def random_rotvecs(rng: np.random.Generator, count: int) -> np.ndarray:
    return Rotation.random(count, random_state=rng).as_rotvec().reshape(count, 3)


def random_unit_vectors(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    v = rng.normal(size=shape + (3,))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)
