"""Backend dispatch for the planar kernels (numba or numpy, see ``_accel``)."""
import numpy as np

from ._accel import USE_NUMBA

if USE_NUMBA:
    from . import _kernels2d as _backend
else:
    from . import _kernels2d_np as _backend


def lexsort2(coords):
    return np.lexsort((coords[:, 1], coords[:, 0]))


def _group_first(x, y):
    """Sorted position of the first copy of each coincident group."""
    new = np.ones(x.size, dtype=bool)
    new[1:] = (x[1:] != x[:-1]) | (y[1:] != y[:-1])
    return np.maximum.accumulate(np.where(new, np.arange(x.size), 0))


def _unsort(order, x, y, labels, vptr, verts, nlayers):
    # coincident copies: report the first one as the vertex, whatever the backend kept
    verts = _group_first(x, y)[verts]
    out = np.empty_like(labels)
    out[order] = labels
    layers = [order[verts[vptr[i]:vptr[i + 1]]] for i in range(nlayers)]
    return out, layers


def peel_2d(coords, max_layers=0, backend=None):
    """Convex peeling of an (m, 2) array.

    Returns (labels, layers): labels[i] is the layer of row i (0 = not
    reached when max_layers stops early); layers[l] lists the hull vertices of
    layer l+1 in counter-clockwise order as row indices.
    """
    be = backend or _backend
    coords = np.asarray(coords, dtype=float)
    order = lexsort2(coords)
    x = np.ascontiguousarray(coords[order, 0])
    y = np.ascontiguousarray(coords[order, 1])
    return _unsort(order, x, y, *be.peel_sorted(x, y, int(max_layers)))


def cone_peel_2d(coords, max_layers=0, backend=None):
    """Staircase peeling of an (m, 2) array of positive points.

    layers[l] lists the staircase vertices of layer l+1 from the leftmost
    point to the lowest one.
    """
    be = backend or _backend
    coords = np.asarray(coords, dtype=float)
    order = lexsort2(coords)
    x = np.ascontiguousarray(coords[order, 0])
    y = np.ascontiguousarray(coords[order, 1])
    return _unsort(order, x, y, *be.cone_peel_sorted(x, y, int(max_layers)))


def convex_position_batch(pts, backend=None):
    be = backend or _backend
    return be.convex_position_batch(np.ascontiguousarray(pts, dtype=float))


def polygon_area(coords, ring):
    """Shoelace area of the polygon with vertex rows ``ring`` (ccw)."""
    if len(ring) < 3:
        return 0.0
    p = coords[ring]
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
