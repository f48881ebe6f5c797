"""Compiled inner loop of the multisetting objective."""

import numpy as np
from numba import njit


@njit(cache=True)
def rotations_from_params(params):
    """Rodrigues rotation for each consecutive triple of ``params``."""
    npairs = params.size // 3
    out = np.empty((npairs, 3, 3))
    for p in range(npairs):
        v0, v1, v2 = params[3 * p], params[3 * p + 1], params[3 * p + 2]
        th = np.sqrt(v0 * v0 + v1 * v1 + v2 * v2)
        if th < 1e-15:
            out[p] = np.eye(3)
            continue
        k0, k1, k2 = v0 / th, v1 / th, v2 / th
        s = np.sin(th)
        c = 1.0 - np.cos(th)
        out[p, 0, 0] = 1.0 - c * (k1 * k1 + k2 * k2)
        out[p, 0, 1] = -s * k2 + c * k0 * k1
        out[p, 0, 2] = s * k1 + c * k0 * k2
        out[p, 1, 0] = s * k2 + c * k0 * k1
        out[p, 1, 1] = 1.0 - c * (k0 * k0 + k2 * k2)
        out[p, 1, 2] = -s * k0 + c * k1 * k2
        out[p, 2, 0] = -s * k1 + c * k0 * k2
        out[p, 2, 1] = s * k0 + c * k1 * k2
        out[p, 2, 2] = 1.0 - c * (k0 * k0 + k1 * k1)
    return out


@njit(cache=True)
def leaf_blocks(block_flat, rots):
    """Split the flattened N-index block down to the 3x3 leaves.

    Level order: observer N first (one pair), then observer N-1 (two pairs),
    down to observer 3.  Child 2b + x of branch b uses column x of its pair.
    """
    cur = block_flat.reshape(1, -1).copy()
    size = block_flat.size
    pos = 0
    nb = 1
    while size > 9:
        m = size // 3
        new = np.zeros((2 * nb, m))
        for b in range(nb):
            r = rots[pos + b]
            for i in range(m):
                for c in range(3):
                    v = cur[b, i * 3 + c]
                    new[2 * b, i] += v * r[c, 0]
                    new[2 * b + 1, i] += v * r[c, 1]
        pos += nb
        nb *= 2
        size = m
        cur = new
    return cur


@njit(cache=True)
def multisetting_objective(block_flat, params):
    leaves = leaf_blocks(block_flat, rotations_from_params(params))
    total = 0.0
    for l in range(leaves.shape[0]):
        m = leaves[l].reshape(3, 3)
        ev = np.linalg.eigvalsh(m.T @ m)
        total += ev[1] + ev[2]
    return total
