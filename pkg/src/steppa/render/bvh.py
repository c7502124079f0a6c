"""Axis-aligned bounding volume hierarchy over triangles and ray traversal."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

LEAF_SIZE = 4
STACK_DEPTH = 64
RAY_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class BVH:
    """Flattened tree. Node k covers [lo[k], hi[k]]; leaves have count > 0.

    Inner nodes store their children in ``left``/``right``; leaves store a
    range ``[start, start + count)`` into ``order``, which indexes ``tris``.
    """

    tris: np.ndarray  # (n, 3, 3)
    lo: np.ndarray
    hi: np.ndarray
    left: np.ndarray
    right: np.ndarray
    start: np.ndarray
    count: np.ndarray
    order: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.lo.shape[0])


def build_bvh(tris: np.ndarray, leaf_size: int = LEAF_SIZE) -> BVH:
    tris = np.ascontiguousarray(tris, dtype=np.float64).reshape(-1, 3, 3)
    n = tris.shape[0]
    tlo, thi = tris.min(axis=1), tris.max(axis=1)
    cent = (tlo + thi) / 2
    lo, hi, left, right, start, count = [], [], [], [], [], []
    order = np.arange(n, dtype=np.int64)

    def new_node():
        lo.append(np.zeros(3))
        hi.append(np.zeros(3))
        left.append(-1)
        right.append(-1)
        start.append(0)
        count.append(0)
        return len(lo) - 1

    if n == 0:
        new_node()
        lo[0], hi[0] = np.full(3, np.inf), np.full(3, -np.inf)
    else:
        # iterative build over index ranges into ``order``
        root = new_node()
        work = [(root, 0, n)]
        while work:
            node, a, b = work.pop()
            idx = order[a:b]
            lo[node], hi[node] = tlo[idx].min(axis=0), thi[idx].max(axis=0)
            if b - a <= leaf_size:
                start[node], count[node] = a, b - a
                continue
            c = cent[idx]
            axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
            # stable sort keeps the build deterministic for equal centroids
            order[a:b] = idx[np.argsort(c[:, axis], kind="stable")]
            mid = (a + b) // 2
            l_node, r_node = new_node(), new_node()
            left[node], right[node] = l_node, r_node
            work.append((r_node, mid, b))
            work.append((l_node, a, mid))
    return BVH(
        tris=tris,
        lo=np.array(lo),
        hi=np.array(hi),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        start=np.array(start, dtype=np.int64),
        count=np.array(count, dtype=np.int64),
        order=order,
    )


@numba.njit(cache=True, nogil=True)
def _hit_triangle(ox, oy, oz, dx, dy, dz, tri):
    e1x, e1y, e1z = tri[1, 0] - tri[0, 0], tri[1, 1] - tri[0, 1], tri[1, 2] - tri[0, 2]
    e2x, e2y, e2z = tri[2, 0] - tri[0, 0], tri[2, 1] - tri[0, 1], tri[2, 2] - tri[0, 2]
    px, py, pz = dy * e2z - dz * e2y, dz * e2x - dx * e2z, dx * e2y - dy * e2x
    det = e1x * px + e1y * py + e1z * pz
    if abs(det) < RAY_EPS:
        return np.inf
    inv = 1.0 / det
    sx, sy, sz = ox - tri[0, 0], oy - tri[0, 1], oz - tri[0, 2]
    u = (sx * px + sy * py + sz * pz) * inv
    if u < 0.0 or u > 1.0:
        return np.inf
    qx, qy, qz = sy * e1z - sz * e1y, sz * e1x - sx * e1z, sx * e1y - sy * e1x
    v = (dx * qx + dy * qy + dz * qz) * inv
    if v < 0.0 or u + v > 1.0:
        return np.inf
    t = (e2x * qx + e2y * qy + e2z * qz) * inv
    if t <= RAY_EPS:
        return np.inf
    return t


@numba.njit(cache=True, nogil=True)
def _box_entry(ox, oy, oz, ix, iy, iz, lo, hi, t_best):
    t0, t1 = 0.0, t_best
    for o, inv, a, b in ((ox, ix, lo[0], hi[0]), (oy, iy, lo[1], hi[1]), (oz, iz, lo[2], hi[2])):
        ta = (a - o) * inv
        tb = (b - o) * inv
        if ta > tb:
            ta, tb = tb, ta
        # NaN arises for zero direction components with the origin on a slab face
        if ta == ta and ta > t0:
            t0 = ta
        if tb == tb and tb < t1:
            t1 = tb
        if t0 > t1:
            return np.inf
    return t0


@numba.njit(cache=True, nogil=True)
def _trace(origin, dirs, tris, lo, hi, left, right, start, count, order, out_t, out_i, r0, r1):
    stack = np.empty(STACK_DEPTH, dtype=np.int64)
    ox, oy, oz = origin[0], origin[1], origin[2]
    for r in range(r0, r1):
        dx, dy, dz = dirs[r, 0], dirs[r, 1], dirs[r, 2]
        ix = 1.0 / dx if dx != 0.0 else np.inf
        iy = 1.0 / dy if dy != 0.0 else np.inf
        iz = 1.0 / dz if dz != 0.0 else np.inf
        best, best_i = np.inf, -1
        sp = 0
        stack[sp] = 0
        sp += 1
        while sp > 0:
            sp -= 1
            node = stack[sp]
            if _box_entry(ox, oy, oz, ix, iy, iz, lo[node], hi[node], best) == np.inf:
                continue
            c = count[node]
            if c > 0:
                s = start[node]
                for k in range(s, s + c):
                    ti = order[k]
                    t = _hit_triangle(ox, oy, oz, dx, dy, dz, tris[ti])
                    # ties resolve to the lower triangle index for determinism
                    if t < best or (t == best and ti < best_i):
                        best, best_i = t, ti
            else:
                stack[sp] = left[node]
                stack[sp + 1] = right[node]
                sp += 2
        out_t[r] = best
        out_i[r] = best_i


def thread_count() -> int:
    env = os.environ.get("STEPPA_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


def trace_rays(bvh: BVH, origin, dirs, threads: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Nearest hit parameter and triangle index per ray (inf / -1 when nothing is hit)."""
    dirs = np.ascontiguousarray(dirs, dtype=np.float64).reshape(-1, 3)
    origin = np.ascontiguousarray(origin, dtype=np.float64).reshape(3)
    n = dirs.shape[0]
    out_t = np.full(n, np.inf)
    out_i = np.full(n, -1, dtype=np.int64)
    if n == 0 or bvh.tris.shape[0] == 0:
        return out_t, out_i
    args = (origin, dirs, bvh.tris, bvh.lo, bvh.hi, bvh.left, bvh.right, bvh.start, bvh.count, bvh.order, out_t, out_i)
    threads = min(threads or thread_count(), max(1, n // 2048))
    if threads <= 1:
        _trace(*args, 0, n)
        return out_t, out_i
    bounds = np.linspace(0, n, threads + 1).astype(int)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(_trace, *args, int(a), int(b)) for a, b in zip(bounds, bounds[1:])]
        for f in futures:
            f.result()
    return out_t, out_i
