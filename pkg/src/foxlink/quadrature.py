"""Globally adaptive Gauss-Kronrod (G7/K15) quadrature in one and two dimensions.

Integrands are vectorised: they receive a whole batch of nodes per call, so
the cost of a refinement round is one kernel invocation.
"""

import heapq

import numpy as np

_XK = np.array(
    [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ]
)
_WK = np.array(
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ]
)
_WG = np.array(
    [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ]
)

# 15 nodes on [-1, 1], Kronrod weights, and Gauss weights (zero on Kronrod-only nodes)
NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
KRONROD = np.concatenate([_WK[:-1], _WK[::-1]])
_wg_half = np.zeros(8)
_wg_half[[1, 3, 5]] = _WG[:3]
_wg_half[7] = _WG[3]
GAUSS = np.concatenate([_wg_half[:-1], _wg_half[::-1]])


def _panel_nodes(a, b):
    """Nodes (n_panels, 15) and half-widths for a batch of panels."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    return c[:, None] + h[:, None] * NODES[None, :], h


class QuadResult:
    __slots__ = ("value", "error", "evals", "converged", "panels")

    def __init__(self, value, error, evals, converged, panels):
        self.value = value
        self.error = error
        self.evals = evals
        self.converged = converged
        self.panels = panels

    def __repr__(self):
        return (
            f"QuadResult(value={self.value!r}, error={self.error!r}, "
            f"evals={self.evals}, converged={self.converged})"
        )


def gk_adaptive(f, a, b, rel_tol=1e-10, abs_tol=1e-14, max_evals=200_000, initial_panels=8):
    """Integrate a vectorised real function ``f`` over [a, b].

    The interval is split into ``initial_panels`` equal panels; each round the
    panels carrying the largest error estimates are bisected until the total
    estimated error drops below ``max(abs_tol, rel_tol * |I|)``.
    """
    edges = np.linspace(a, b, initial_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    vals, errs = _eval_panels(f, lo, hi)
    evals = 15 * lo.size
    heap = [(-e, l, r, v) for e, l, r, v in zip(errs, lo, hi, vals)]
    heapq.heapify(heap)
    total = float(np.sum(vals))
    err = float(np.sum(errs))
    while True:
        tol = max(abs_tol, rel_tol * abs(total))
        if err <= tol:
            return QuadResult(total, err, evals, True, len(heap))
        if evals >= max_evals:
            return QuadResult(total, err, evals, False, len(heap))
        # bisect the worst panels until the remaining error fits the budget
        picked = []
        remaining = err
        while heap and (remaining > 0.5 * tol or not picked) and len(picked) < 256:
            e, l, r, v = heapq.heappop(heap)
            picked.append((l, r, v, -e))
            remaining += e
        pl = np.array([p[0] for p in picked])
        pr = np.array([p[1] for p in picked])
        mid = 0.5 * (pl + pr)
        nl = np.concatenate([pl, mid])
        nr = np.concatenate([mid, pr])
        nv, ne = _eval_panels(f, nl, nr)
        evals += 15 * nl.size
        total -= sum(p[2] for p in picked)
        err -= sum(p[3] for p in picked)
        total += float(np.sum(nv))
        err += float(np.sum(ne))
        for l, r, v, e in zip(nl, nr, nv, ne):
            heapq.heappush(heap, (-e, l, r, v))
        # guard against drift in the running sums
        if len(heap) % 512 == 0:
            err = sum(-h[0] for h in heap)
            total = sum(h[3] for h in heap)


def _eval_panels(f, lo, hi):
    x, h = _panel_nodes(lo, hi)
    y = np.asarray(f(x.ravel()), float).reshape(x.shape)
    k = h * (y @ KRONROD)
    g = h * (y @ GAUSS)
    e = np.abs(k - g)
    # QUADPACK-style sharpening of the raw |K - G| estimate
    scale = h * (np.abs(y - (k / (2 * h))[:, None]) @ KRONROD)
    with np.errstate(divide="ignore", invalid="ignore"):
        sharp = np.where(scale > 0, scale * np.minimum(1.0, (200 * e / scale) ** 1.5), e)
    sharp = np.maximum(sharp, 50 * np.finfo(float).eps * np.abs(k))
    return k, sharp


def gk_adaptive_2d(f, box, rel_tol=1e-6, abs_tol=1e-14, max_evals=2_000_000, initial=(4, 4)):
    """Integrate ``f(u, v)`` over a rectangle with tensor-product G7/K15 cells.

    ``f`` receives the 15 u-nodes and 15 v-nodes of a batch of cells, arrays
    of shape (n, 15) each, and returns values of shape (n, 15, 15).  Cells are
    bisected along the direction whose one-dimensional error indicator is
    larger.
    """
    (ua, ub), (va, vb) = box
    ue = np.linspace(ua, ub, initial[0] + 1)
    ve = np.linspace(va, vb, initial[1] + 1)
    U0, V0 = np.meshgrid(np.arange(initial[0]), np.arange(initial[1]), indexing="ij")
    cells = np.stack(
        [ue[U0.ravel()], ue[U0.ravel() + 1], ve[V0.ravel()], ve[V0.ravel() + 1]], axis=1
    )
    vals, errs, dirs = _eval_cells(f, cells)
    evals = 225 * len(cells)
    heap = [(-e, tuple(c), v, d) for e, c, v, d in zip(errs, cells, vals, dirs)]
    heapq.heapify(heap)
    total = float(np.sum(vals))
    err = float(np.sum(errs))
    while True:
        tol = max(abs_tol, rel_tol * abs(total))
        if err <= tol:
            return QuadResult(total, err, evals, True, len(heap))
        if evals >= max_evals:
            return QuadResult(total, err, evals, False, len(heap))
        picked = []
        remaining = err
        while heap and (remaining > 0.5 * tol or not picked) and len(picked) < 128:
            e, c, v, d = heapq.heappop(heap)
            picked.append((c, v, -e, d))
            remaining += e
        new = []
        for c, v, e, d in picked:
            u0, u1, v0, v1 = c
            if d == 0:
                um = 0.5 * (u0 + u1)
                new += [(u0, um, v0, v1), (um, u1, v0, v1)]
            else:
                vm = 0.5 * (v0 + v1)
                new += [(u0, u1, v0, vm), (u0, u1, vm, v1)]
            total -= v
            err -= e
        new = np.array(new)
        nv, ne, nd = _eval_cells(f, new)
        evals += 225 * len(new)
        total += float(np.sum(nv))
        err += float(np.sum(ne))
        for c, v, e, d in zip(new, nv, ne, nd):
            heapq.heappush(heap, (-e, tuple(c), v, d))
        if len(heap) % 256 == 0:
            err = sum(-h[0] for h in heap)
            total = sum(h[2] for h in heap)


def _eval_cells(f, cells):
    un, hu = _panel_nodes(cells[:, 0], cells[:, 1])
    vn, hv = _panel_nodes(cells[:, 2], cells[:, 3])
    y = np.asarray(f(un, vn), float)  # (n, 15, 15)
    area = (hu * hv)[:, None, None]
    kk = np.einsum("nij,i,j->n", y, KRONROD, KRONROD) * area[:, 0, 0]
    gk = np.einsum("nij,i,j->n", y, GAUSS, KRONROD) * area[:, 0, 0]
    kg = np.einsum("nij,i,j->n", y, KRONROD, GAUSS) * area[:, 0, 0]
    eu = np.abs(kk - gk)
    ev = np.abs(kk - kg)
    e = np.maximum(eu + ev, 50 * np.finfo(float).eps * np.abs(kk))
    return kk, e, np.where(eu >= ev, 0, 1)
