"""Quadrature rules on axis-aligned boxes.

Gauss-Legendre nodes are computed from scratch by Newton iteration on the
Legendre polynomial (Chebyshev initial guesses, three-term recurrence for
values and derivatives). Tensor rules take products of 1D rules; the 2D
output grids used for test-error norms are uniform interior grids with
equal weights and live behind the same QuadratureRule type so every
discrete norm in the package is a plain weighted sum.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .validation import check_interval, check_positive_int

MAX_GL_POINTS = 1024
_NEWTON_TOL = 1e-15
_NEWTON_MAX_ITER = 100


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes, weights, and the box they integrate over.

    nodes: (n,) for 1D rules, (n, d) for d >= 2.
    weights: (n,), strictly positive, summing to the box measure.
    domain: tuple of (lo, hi) pairs, one per dimension.
    kind: short tag used in file descriptors.
    meta: extra descriptor fields needed to rebuild the rule.
    """

    nodes: np.ndarray
    weights: np.ndarray
    domain: tuple
    kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def dim(self):
        return len(self.domain)

    @property
    def n_points(self):
        return self.weights.shape[0]

    def descriptor(self):
        d = {"kind": self.kind, "domain": [list(pair) for pair in self.domain]}
        d.update(self.meta)
        return d

    def integrate(self, values):
        """Weighted sum of values sampled at the rule's nodes."""
        values = np.asarray(values, dtype=float)
        if values.shape[0] != self.n_points:
            raise InvalidArgumentError(
                f"values: leading dim {values.shape[0]} != rule size {self.n_points}")
        return np.tensordot(self.weights, values, axes=(0, 0))

    def norm(self, values):
        """Discrete L2 norm sqrt(sum_i w_i values_i^2)."""
        values = np.asarray(values, dtype=float)
        return float(np.sqrt(np.sum(self.weights * values * values)))


def _legendre_and_derivative(n, x):
    """P_n(x) and P_n'(x) via the three-term recurrence."""
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


def gauss_legendre(n, interval=(0.0, 1.0)):
    """n-point Gauss-Legendre rule on an interval, nodes ascending.

    Exact for polynomials of degree 2n - 1. Newton iteration from
    Chebyshev initial guesses, converged to 1e-15 in the residual.
    """
    n = check_positive_int("n", n, maximum=MAX_GL_POINTS)
    a, b = check_interval("interval", interval)
    if n == 1:
        x = np.zeros(1)
        w = np.full(1, 2.0)
    else:
        # guesses descending in x; only the upper half is iterated, the
        # lower half follows by symmetry
        i = np.arange(n)
        x = np.cos(np.pi * (4 * i + 3) / (4 * n + 2))
        for _ in range(_NEWTON_MAX_ITER):
            p, dp = _legendre_and_derivative(n, x)
            dx = p / dp
            x = x - dx
            if np.max(np.abs(dx)) < _NEWTON_TOL:
                break
        # symmetrize to kill accumulated drift
        x = 0.5 * (x - x[::-1])
        _, dp = _legendre_and_derivative(n, x)
        w = 2.0 / ((1.0 - x * x) * dp * dp)
        order = np.argsort(x)
        x = x[order]
        w = w[order]
    half = 0.5 * (b - a)
    nodes = a + half * (x + 1.0)
    weights = half * w
    return QuadratureRule(nodes=nodes, weights=weights, domain=((a, b),),
                          kind="gauss_legendre", meta={"n": n})


def tensor_gauss_legendre(nx, ny, box=((0.0, 0.0), (1.0, 1.0))):
    """Tensor-product GL rule on a rectangle.

    box is ((x_lo, y_lo), (x_hi, y_hi)). Node ordering is row-major with
    the x index slowest, matching how 2D sensor vectors are flattened.
    """
    (x_lo, y_lo), (x_hi, y_hi) = box
    rx = gauss_legendre(nx, (x_lo, x_hi))
    ry = gauss_legendre(ny, (y_lo, y_hi))
    X, Y = np.meshgrid(rx.nodes, ry.nodes, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    weights = np.outer(rx.weights, ry.weights).ravel()
    return QuadratureRule(nodes=nodes, weights=weights,
                          domain=((x_lo, x_hi), (y_lo, y_hi)),
                          kind="tensor_gauss_legendre", meta={"nx": nx, "ny": ny})


def uniform_interior_grid_2d(n_per_dim, box=((0.0, 0.0), (1.0, 1.0))):
    """Equal-weight uniform interior grid on a rectangle.

    Nodes are i/(n+1) steps inside the box, i = 1..n per dimension, so no
    node touches the boundary. Weights sum to the box area; the induced
    discrete norm is the one used for 2D test errors.
    """
    n = check_positive_int("n_per_dim", n_per_dim)
    (x_lo, y_lo), (x_hi, y_hi) = box
    xs = x_lo + (x_hi - x_lo) * np.arange(1, n + 1) / (n + 1)
    ys = y_lo + (y_hi - y_lo) * np.arange(1, n + 1) / (n + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    area = (x_hi - x_lo) * (y_hi - y_lo)
    weights = np.full(nodes.shape[0], area / nodes.shape[0])
    return QuadratureRule(nodes=nodes, weights=weights,
                          domain=((x_lo, x_hi), (y_lo, y_hi)),
                          kind="uniform_interior_grid", meta={"n_per_dim": n})


def boundary_rule_1d(interval=(0.0, 1.0)):
    """Counting rule on the two endpoints of an interval.

    Flux data on a 0-dimensional boundary integrates as a plain sum, so
    each endpoint carries weight 1.
    """
    a, b = check_interval("interval", interval)
    return QuadratureRule(nodes=np.array([a, b]), weights=np.array([1.0, 1.0]),
                          domain=((a, b),), kind="boundary_endpoints", meta={})


_EDGES = ("left", "right", "bottom", "top")


def boundary_rule_2d(n_per_edge, box=((0.0, 0.0), (1.0, 1.0)), edges=_EDGES):
    """GL rule along selected edges of a rectangle, concatenated.

    Nodes have shape (n, 2) and lie on the chosen edges; weights sum to
    the total length of those edges.
    """
    (x_lo, y_lo), (x_hi, y_hi) = box
    for e in edges:
        if e not in _EDGES:
            raise InvalidArgumentError(f"edges: unknown edge {e!r}")
    nodes = []
    weights = []
    for e in edges:
        if e in ("left", "right"):
            r = gauss_legendre(n_per_edge, (y_lo, y_hi))
            x_val = x_lo if e == "left" else x_hi
            nodes.append(np.column_stack([np.full(r.n_points, x_val), r.nodes]))
        else:
            r = gauss_legendre(n_per_edge, (x_lo, x_hi))
            y_val = y_lo if e == "bottom" else y_hi
            nodes.append(np.column_stack([r.nodes, np.full(r.n_points, y_val)]))
        weights.append(r.weights)
    return QuadratureRule(nodes=np.vstack(nodes), weights=np.concatenate(weights),
                          domain=((x_lo, x_hi), (y_lo, y_hi)),
                          kind="boundary_edges",
                          meta={"n_per_edge": n_per_edge, "edges": list(edges)})


def integrate(fn, rule):
    """Integrate a vectorized callable over a rule."""
    return float(rule.integrate(fn(rule.nodes)))


def rule_from_descriptor(desc):
    """Rebuild a rule from its descriptor() dict."""
    kind = desc["kind"]
    domain = [tuple(pair) for pair in desc["domain"]]
    if kind == "gauss_legendre":
        return gauss_legendre(desc["n"], domain[0])
    if kind == "tensor_gauss_legendre":
        box = ((domain[0][0], domain[1][0]), (domain[0][1], domain[1][1]))
        return tensor_gauss_legendre(desc["nx"], desc["ny"], box)
    if kind == "uniform_interior_grid":
        box = ((domain[0][0], domain[1][0]), (domain[0][1], domain[1][1]))
        return uniform_interior_grid_2d(desc["n_per_dim"], box)
    if kind == "boundary_endpoints":
        return boundary_rule_1d(domain[0])
    if kind == "boundary_edges":
        box = ((domain[0][0], domain[1][0]), (domain[0][1], domain[1][1]))
        return boundary_rule_2d(desc["n_per_edge"], box, tuple(desc["edges"]))
    raise InvalidArgumentError(f"unknown rule kind {kind!r}")
