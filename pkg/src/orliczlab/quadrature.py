"""Quadrature nodes for indicator-defined regions in one or two dimensions.

Three schemes are available: a plain midpoint rule on a regular grid, a
midpoint rule whose cells cut by the region boundary are subdivided
recursively, and uniform Monte Carlo sampling.  All of them return a set of
nodes with weights, so that ``sum(w * g(x))`` approximates the integral of
``g`` over the region.

The refinement core works on batches: many regions (for instance many
ball-domain intersections) are refined together, each cell carrying the index
of the region it belongs to.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .box import Box

SCHEMES = ("midpoint", "boundary_refined_midpoint", "monte_carlo")


@dataclass(frozen=True)
class QuadratureRule:
    """How to discretize a region.

    ``resolution`` is the number of cells per axis for the grid schemes and
    the number of samples for ``monte_carlo``.  ``depth`` bounds the number
    of bisection levels applied to boundary cells.  With ``rtol > 0`` the
    refinement of a region stops early once the total volume of its
    undecided boundary cells drops to ``rtol`` times its accepted volume.
    """

    scheme: str = "boundary_refined_midpoint"
    resolution: int = 128
    seed: int = 0
    depth: int = 6
    rtol: float = 0.0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown quadrature scheme {self.scheme!r}")
        if int(self.resolution) < 1:
            raise ValueError("quadrature resolution must be positive")
        if int(self.depth) < 0:
            raise ValueError("refinement depth must be nonnegative")
        if not self.rtol >= 0:
            raise ValueError("rtol must be nonnegative")

    def refined(self, factor: int = 2) -> "QuadratureRule":
        return QuadratureRule(self.scheme, self.resolution * factor, self.seed, self.depth,
                              self.rtol)

    def to_dict(self) -> dict:
        return asdict(self)


_PROBE_EDGE = 0.5 * (1.0 - 1e-7)


def _offsets(ticks, dim: int) -> np.ndarray:
    mesh = np.meshgrid(*([np.asarray(ticks)] * dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def refine_batch(indicator, centers, owners, h_owner, depth: int, rtol: float = 0.0,
                 keep_nodes: bool = True):
    """Boundary-refined midpoint rule on a batch of regions.

    Parameters
    ----------
    indicator : callable
        ``indicator(points, owners) -> bool array``; ``owners`` gives the
        region index of each point.
    centers, owners : arrays
        Initial cell centers ``(m, dim)`` and their region indices ``(m,)``.
    h_owner : array ``(k, dim)``
        Initial cell widths for each region.
    depth : int
        Maximal number of bisection levels for cut cells.
    rtol : float
        Early-stop tolerance per region, see :class:`QuadratureRule`.

    Returns
    -------
    volumes : array ``(k,)``
        Measure of each region.
    nodes : tuple or None
        ``(points, weights, owners)`` when ``keep_nodes``.
    """
    h_owner = np.asarray(h_owner, dtype=float)
    k, dim = h_owner.shape
    # probes sit a hair inside the cell so that a cell whose face lies on
    # the region boundary is not mistaken for a cut cell
    probes = _offsets([-_PROBE_EDGE, 0.0, _PROBE_EDGE], dim)
    center_idx = len(probes) // 2
    kids = _offsets([-0.25, 0.25], dim)
    cell_vol = np.prod(h_owner, axis=1)
    volumes = np.zeros(k)
    out = []
    centers = np.asarray(centers, dtype=float)
    owners = np.asarray(owners, dtype=np.intp)
    for level in range(depth + 1):
        if len(centers) == 0:
            break
        h = h_owner[owners] / 2.0 ** level
        samples = centers[:, None, :] + probes[None, :, :] * h[:, None, :]
        inside = np.asarray(indicator(samples.reshape(-1, dim), np.repeat(owners, len(probes))),
                            dtype=bool).reshape(len(centers), len(probes))
        count = inside.sum(axis=1)
        full = count == len(probes)
        cut = (count > 0) & ~full
        vol = cell_vol / 2.0 ** (dim * level)
        volumes += np.bincount(owners[full], minlength=k) * vol
        final = np.full(k, level == depth)
        if rtol > 0 and level < depth:
            pending = np.bincount(owners[cut], minlength=k) * vol
            final |= pending <= rtol * volumes
        leaf = cut & final[owners]
        by_center = leaf & inside[:, center_idx]
        volumes += np.bincount(owners[by_center], minlength=k) * vol
        if keep_nodes:
            keep = full | by_center
            out.append((centers[keep], vol[owners[keep]], owners[keep]))
        go = cut & ~final[owners]
        parents, powners = centers[go], owners[go]
        hp = h[go]
        centers = (parents[:, None, :] + kids[None, :, :] * hp[:, None, :]).reshape(-1, dim)
        owners = np.repeat(powners, len(kids))
    if not keep_nodes:
        return volumes, None
    if not out:
        return volumes, (np.empty((0, dim)), np.empty(0), np.empty(0, dtype=np.intp))
    pts, w, own = (np.concatenate(parts) for parts in zip(*out))
    return volumes, (pts, w, own)


def integration_nodes(indicator, box: Box, rule: QuadratureRule):
    """Nodes and weights for integrating over ``{x in box : indicator(x)}``.

    ``indicator`` maps an ``(m, dim)`` array to a boolean array of length ``m``.
    """
    dim = box.dim
    if rule.scheme == "midpoint":
        centers, h = box.cell_centers(rule.resolution)
        inside = np.asarray(indicator(centers), dtype=bool)
        return centers[inside], np.full(int(inside.sum()), float(np.prod(h)))
    if rule.scheme == "boundary_refined_midpoint":
        centers, h = box.cell_centers(rule.resolution)
        _, (pts, w, _) = refine_batch(lambda p, o: indicator(p), centers,
                                      np.zeros(len(centers), dtype=np.intp), h[None, :],
                                      rule.depth, rule.rtol)
        return pts, w
    rng = np.random.default_rng(rule.seed)
    pts = box.lo_arr + rng.random((rule.resolution, dim)) * box.widths
    inside = np.asarray(indicator(pts), dtype=bool)
    return pts[inside], np.full(int(inside.sum()), box.volume / rule.resolution)
