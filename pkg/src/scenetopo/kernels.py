"""Loop-heavy numerical kernels with numba and pure-numpy implementations.

Each public kernel dispatches on :data:`scenetopo._accel.USE_NUMBA`.  The
``*_nb`` and ``*_np`` variants are importable directly so tests and the
benchmark can compare them.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit

SPHERE, CUBE, CYLINDER = 0, 1, 2


# ---------------------------------------------------------------------------
# permutation energies
# ---------------------------------------------------------------------------

@njit
def permutation_energies_nb(G, L, perms):
    n_perm, m = perms.shape
    out = np.empty(n_perm)
    for p in range(n_perm):
        acc = 0.0
        for i in range(m):
            pi = perms[p, i]
            for j in range(m):
                acc += L[i, j] * G[pi, perms[p, j]]
        out[p] = acc
    return out


def permutation_energies_np(G, L, perms, chunk=256):
    n_perm, m = perms.shape
    out = np.empty(n_perm)
    for s in range(0, n_perm, chunk):
        P = perms[s:s + chunk]
        Gp = G[P[:, :, None], P[:, None, :]]
        out[s:s + chunk] = np.einsum("pij,ij->p", Gp, L)
    return out


def permutation_energies(G, L, perms):
    """Dirichlet energies ``tr((PH)^T L (PH))`` for a batch of row permutations.

    Parameters
    ----------
    G : ndarray, shape (m, m)
        Gram matrix ``H @ H.T`` of the unpermuted rows.
    L : ndarray, shape (m, m)
        Graph Laplacian.
    perms : ndarray of int, shape (n_perm, m)
        Each row maps position ``i`` to source row ``perms[p, i]``.

    Returns
    -------
    ndarray, shape (n_perm,)
    """
    G = np.ascontiguousarray(G, dtype=np.float64)
    L = np.ascontiguousarray(L, dtype=np.float64)
    perms = np.ascontiguousarray(perms, dtype=np.int64)
    if USE_NUMBA:
        return permutation_energies_nb(G, L, perms)
    return permutation_energies_np(G, L, perms)


# ---------------------------------------------------------------------------
# ray / primitive visibility
# ---------------------------------------------------------------------------

@njit
def _ray_sphere(ex, ey, ez, dx, dy, dz, cx, cy, cz, r):
    ox, oy, oz = cx - ex, cy - ey, cz - ez
    b = dx * ox + dy * oy + dz * oz
    c = ox * ox + oy * oy + oz * oz - r * r
    disc = b * b - c
    if disc < 0.0:
        return np.inf
    s = math.sqrt(disc)
    t = b - s
    if t > 0.0:
        return t
    t = b + s
    return t if t > 0.0 else np.inf


@njit
def _ray_box(ex, ey, ez, dx, dy, dz, cx, cy, cz, h):
    tmin = -np.inf
    tmax = np.inf
    e = (ex, ey, ez)
    d = (dx, dy, dz)
    c = (cx, cy, cz)
    for a in range(3):
        lo = c[a] - h
        hi = c[a] + h
        if d[a] == 0.0:
            if e[a] < lo or e[a] > hi:
                return np.inf
            continue
        t1 = (lo - e[a]) / d[a]
        t2 = (hi - e[a]) / d[a]
        if t1 > t2:
            t1, t2 = t2, t1
        if t1 > tmin:
            tmin = t1
        if t2 < tmax:
            tmax = t2
    if tmax < max(tmin, 0.0):
        return np.inf
    return tmin if tmin > 0.0 else tmax


@njit
def _ray_cylinder(ex, ey, ez, dx, dy, dz, cx, cy, cz, r):
    # vertical cylinder, radius r, height 2r, centred at c
    best = np.inf
    ox, oy = ex - cx, ey - cy
    a = dx * dx + dy * dy
    if a > 0.0:
        b = 2.0 * (dx * ox + dy * oy)
        c = ox * ox + oy * oy - r * r
        disc = b * b - 4.0 * a * c
        if disc >= 0.0:
            s = math.sqrt(disc)
            for t in ((-b - s) / (2.0 * a), (-b + s) / (2.0 * a)):
                if t > 0.0 and t < best:
                    z = ez + t * dz
                    if abs(z - cz) <= r:
                        best = t
    if dz != 0.0:
        for zc in (cz - r, cz + r):
            t = (zc - ez) / dz
            if t > 0.0 and t < best:
                px = ox + t * dx
                py = oy + t * dy
                if px * px + py * py <= r * r:
                    best = t
    return best


@njit
def raster_owner_nb(dirs, uv, eye, kind, center, half, sph_dir, sph_cos,
                    poly, nvert, active):
    S = dirs.shape[0]
    m = kind.shape[0]
    owner = np.full(S, -1, np.int64)
    ex, ey, ez = eye[0], eye[1], eye[2]
    for s in range(S):
        dx, dy, dz = dirs[s, 0], dirs[s, 1], dirs[s, 2]
        u, v = uv[s, 0], uv[s, 1]
        best = np.inf
        for o in range(m):
            if not active[o]:
                continue
            if kind[o] == SPHERE:
                inside = dx * sph_dir[o, 0] + dy * sph_dir[o, 1] + dz * sph_dir[o, 2] >= sph_cos[o]
            else:
                inside = nvert[o] >= 3
                nv = nvert[o]
                for k in range(nv):
                    k2 = k + 1 if k + 1 < nv else 0
                    ax, ay = poly[o, k, 0], poly[o, k, 1]
                    bx, by = poly[o, k2, 0], poly[o, k2, 1]
                    if (bx - ax) * (v - ay) - (by - ay) * (u - ax) < 0.0:
                        inside = False
                        break
            if not inside:
                continue
            cx, cy, cz = center[o, 0], center[o, 1], center[o, 2]
            if kind[o] == SPHERE:
                t = _ray_sphere(ex, ey, ez, dx, dy, dz, cx, cy, cz, half[o])
            elif kind[o] == CUBE:
                t = _ray_box(ex, ey, ez, dx, dy, dz, cx, cy, cz, half[o])
            else:
                t = _ray_cylinder(ex, ey, ez, dx, dy, dz, cx, cy, cz, half[o])
            if t == np.inf:
                # inside the region test but missed the primitive (hull slack)
                t = math.sqrt((cx - ex) ** 2 + (cy - ey) ** 2 + (cz - ez) ** 2)
            if t < best:
                best = t
                owner[s] = o
    return owner


def _ray_sphere_np(E, D, c, r):
    O = c - E
    b = D @ O
    disc = b * b - (O @ O - r * r)
    with np.errstate(invalid="ignore"):
        s = np.sqrt(disc)
    t = np.where(b - s > 0, b - s, np.where(b + s > 0, b + s, np.inf))
    return np.where(disc >= 0, t, np.inf)


def _ray_box_np(E, D, c, h):
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (c - h - E) / D
        t2 = (c + h - E) / D
    lo = np.minimum(t1, t2)
    hi = np.maximum(t1, t2)
    # axis-parallel rays: slab is everything or nothing
    par = D == 0
    inslab = (E >= c - h) & (E <= c + h)
    lo = np.where(par, np.where(inslab, -np.inf, np.inf), lo)
    hi = np.where(par, np.where(inslab, np.inf, -np.inf), hi)
    tmin = lo.max(axis=1)
    tmax = hi.min(axis=1)
    hit = tmax >= np.maximum(tmin, 0.0)
    t = np.where(tmin > 0, tmin, tmax)
    return np.where(hit, t, np.inf)


def _ray_cylinder_np(E, D, c, r):
    ox, oy = E[0] - c[0], E[1] - c[1]
    dx, dy, dz = D[:, 0], D[:, 1], D[:, 2]
    best = np.full(D.shape[0], np.inf)
    a = dx * dx + dy * dy
    b = 2.0 * (dx * ox + dy * oy)
    cc = ox * ox + oy * oy - r * r
    disc = b * b - 4 * a * cc
    ok = (a > 0) & (disc >= 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.sqrt(np.where(ok, disc, 0.0))
        for sign in (-1.0, 1.0):
            t = np.where(ok, (-b + sign * s) / (2 * np.where(a > 0, a, 1.0)), np.inf)
            z = E[2] + t * dz
            good = ok & (t > 0) & (np.abs(z - c[2]) <= r)
            best = np.where(good & (t < best), t, best)
        for zc in (c[2] - r, c[2] + r):
            t = np.where(dz != 0, (zc - E[2]) / np.where(dz != 0, dz, 1.0), np.inf)
            px = ox + t * dx
            py = oy + t * dy
            good = (t > 0) & np.isfinite(t) & (px * px + py * py <= r * r)
            best = np.where(good & (t < best), t, best)
    return best


def raster_owner_np(dirs, uv, eye, kind, center, half, sph_dir, sph_cos,
                    poly, nvert, active):
    S = dirs.shape[0]
    best = np.full(S, np.inf)
    owner = np.full(S, -1, np.int64)
    for o in range(kind.shape[0]):
        if not active[o]:
            continue
        if kind[o] == SPHERE:
            inside = dirs @ sph_dir[o] >= sph_cos[o]
        else:
            nv = nvert[o]
            if nv < 3:
                continue
            A = poly[o, :nv]
            B = np.roll(A, -1, axis=0)
            cross = ((B[:, 0] - A[:, 0])[None, :] * (uv[:, 1:2] - A[None, :, 1])
                     - (B[:, 1] - A[:, 1])[None, :] * (uv[:, 0:1] - A[None, :, 0]))
            inside = (cross >= 0).all(axis=1)
        if not inside.any():
            continue
        idx = np.nonzero(inside)[0]
        D = dirs[idx]
        c = center[o]
        if kind[o] == SPHERE:
            t = _ray_sphere_np(eye, D, c, half[o])
        elif kind[o] == CUBE:
            t = _ray_box_np(eye, D, c, half[o])
        else:
            t = _ray_cylinder_np(eye, D, c, half[o])
        t = np.where(np.isfinite(t), t, np.linalg.norm(c - eye))
        closer = t < best[idx]
        best[idx[closer]] = t[closer]
        owner[idx[closer]] = o
    return owner


def raster_owner(dirs, uv, eye, kind, center, half, sph_dir, sph_cos,
                 poly, nvert, active):
    """Index of the visible object along each sample ray (``-1`` for none).

    A sample belongs to an object when it falls inside that object's
    silhouette region; among candidates the one with the nearest analytic
    ray hit wins.
    """
    args = (
        np.ascontiguousarray(dirs, dtype=np.float64),
        np.ascontiguousarray(uv, dtype=np.float64),
        np.ascontiguousarray(eye, dtype=np.float64),
        np.ascontiguousarray(kind, dtype=np.int64),
        np.ascontiguousarray(center, dtype=np.float64),
        np.ascontiguousarray(half, dtype=np.float64),
        np.ascontiguousarray(sph_dir, dtype=np.float64),
        np.ascontiguousarray(sph_cos, dtype=np.float64),
        np.ascontiguousarray(poly, dtype=np.float64),
        np.ascontiguousarray(nvert, dtype=np.int64),
        np.ascontiguousarray(active, dtype=np.bool_),
    )
    if USE_NUMBA:
        return raster_owner_nb(*args)
    return raster_owner_np(*args)


# ---------------------------------------------------------------------------
# dense symmetric eigensolver: Householder tridiagonalisation + implicit QL
# ---------------------------------------------------------------------------

@njit
def _tred2(V, d, e):
    n = V.shape[0]
    for j in range(n):
        d[j] = V[n - 1, j]
    for i in range(n - 1, 0, -1):
        scale = 0.0
        h = 0.0
        for k in range(i):
            scale += abs(d[k])
        if scale == 0.0:
            e[i] = d[i - 1]
            for j in range(i):
                d[j] = V[i - 1, j]
                V[i, j] = 0.0
                V[j, i] = 0.0
        else:
            for k in range(i):
                d[k] /= scale
                h += d[k] * d[k]
            f = d[i - 1]
            g = math.sqrt(h)
            if f > 0:
                g = -g
            e[i] = scale * g
            h = h - f * g
            d[i - 1] = f - g
            for j in range(i):
                e[j] = 0.0
            for j in range(i):
                f = d[j]
                V[j, i] = f
                g = e[j] + V[j, j] * f
                for k in range(j + 1, i):
                    g += V[k, j] * d[k]
                    e[k] += V[k, j] * f
                e[j] = g
            f = 0.0
            for j in range(i):
                e[j] /= h
                f += e[j] * d[j]
            hh = f / (h + h)
            for j in range(i):
                e[j] -= hh * d[j]
            for j in range(i):
                f = d[j]
                g = e[j]
                for k in range(j, i):
                    V[k, j] -= f * e[k] + g * d[k]
                d[j] = V[i - 1, j]
                V[i, j] = 0.0
        d[i] = h
    for i in range(n - 1):
        V[n - 1, i] = V[i, i]
        V[i, i] = 1.0
        h = d[i + 1]
        if h != 0.0:
            for k in range(i + 1):
                d[k] = V[k, i + 1] / h
            for j in range(i + 1):
                g = 0.0
                for k in range(i + 1):
                    g += V[k, i + 1] * V[k, j]
                for k in range(i + 1):
                    V[k, j] -= g * d[k]
        for k in range(i + 1):
            V[k, i + 1] = 0.0
    for j in range(n):
        d[j] = V[n - 1, j]
        V[n - 1, j] = 0.0
    V[n - 1, n - 1] = 1.0
    e[0] = 0.0


@njit
def _tql2(V, d, e):
    n = V.shape[0]
    for i in range(1, n):
        e[i - 1] = e[i]
    e[n - 1] = 0.0
    f = 0.0
    tst1 = 0.0
    eps = 2.0 ** -52
    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        m = l
        while m < n:
            if abs(e[m]) <= eps * tst1:
                break
            m += 1
        if m > l:
            while True:
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = math.hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                for i in range(l + 2, n):
                    d[i] -= h
                f += h
                p = d[m]
                c = 1.0
                c2 = c
                c3 = c
                el1 = e[l + 1]
                s = 0.0
                s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = math.hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    for k in range(n):
                        h = V[k, i + 1]
                        V[k, i + 1] = s * V[k, i] + c * h
                        V[k, i] = c * V[k, i] - s * h
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if not abs(e[l]) > eps * tst1:
                    break
        d[l] = d[l] + f
        e[l] = 0.0


@njit
def symmetric_eig_nb(A):
    n = A.shape[0]
    V = A.copy()
    d = np.zeros(n)
    e = np.zeros(n)
    if n == 1:
        return A[0:1, 0].copy(), np.ones((1, 1))
    _tred2(V, d, e)
    _tql2(V, d, e)
    order = np.argsort(d)
    return d[order], V[:, order].copy()


def symmetric_eig_np(A):
    return np.linalg.eigh(A)


def tridiagonal_ql_eig(A):
    """Eigenpairs of a symmetric matrix by tridiagonalisation and implicit QL.

    Uses the numba kernel when enabled, otherwise LAPACK ``eigh`` (the same
    algorithm family).  Eigenvalues are ascending.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    if USE_NUMBA:
        return symmetric_eig_nb(A)
    return symmetric_eig_np(A)
