"""Trial bases, mass matrices, orthonormalization, and projection.

Three raw families are provided: normalized sines in 1D, a layered basis
for advection-dominated 1D problems (five sines plus ten exact single-mode
advection-diffusion solutions, which carry the outflow boundary layer),
and the tensor sine family in 2D. Orthonormalized variants are expressed
as an N x N coefficient transform over the raw components, never as
resampled values, so they can be evaluated anywhere.

Mass matrices keep both the assembled Gram matrix and an upper-triangular
factor computed from a QR of the weight-scaled value matrix. The factor
route never squares the condition number, which matters: the raw layered
basis reaches cond(M) ~ 4e11 and a Cholesky-of-M solve loses eleven digits
where the factor route loses five.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DegenerateBasisError, InvalidArgumentError
from .exact1d import Exp1dField, solve_forward_trig
from .quadrature import QuadratureRule
from .validation import as_points, check_positive_float, check_positive_int

_SQRT2 = np.sqrt(2.0)


class TrialBasis:
    """Common surface for trial bases: evaluate(points) -> (m, N)."""

    tag = "abstract"

    @property
    def n_components(self):
        raise NotImplementedError

    @property
    def spatial_dim(self):
        raise NotImplementedError

    def evaluate(self, points):
        raise NotImplementedError

    def descriptor(self):
        raise NotImplementedError


class SineBasis1d(TrialBasis):
    """phi_j(x) = sqrt(2) sin(j pi x), j = 1..n. L2-orthonormal on (0, 1)."""

    tag = "sine1d"

    def __init__(self, n):
        self.n = check_positive_int("n", n)

    @property
    def n_components(self):
        return self.n

    @property
    def spatial_dim(self):
        return 1

    @property
    def component_fields(self):
        """Closed-form Exp1dField for each component, in order."""
        return [Exp1dField([j * np.pi], [_SQRT2], [0.0])
                for j in range(1, self.n + 1)]

    def evaluate(self, points):
        x = as_points("points", points, 1)
        j = np.arange(1, self.n + 1)
        return _SQRT2 * np.sin(np.multiply.outer(x, j) * np.pi)

    def descriptor(self):
        return {"tag": self.tag, "n": self.n}


class BoundaryLayerBasis1d(TrialBasis):
    """Five sines plus ten single-mode advection-diffusion solutions.

    The layered components solve -kappa u'' + c u' = sqrt(2) sin(n pi x)
    with homogeneous Dirichlet data, n = 1..10, so for c > 0 each carries
    the exp((c/kappa)(x-1)) outflow layer the targets have. They all
    vanish at both endpoints exactly. The family is severely
    ill-conditioned (near-identical layer profiles), which is the point:
    orthonormalize before use.
    """

    tag = "boundary_layer1d"

    def __init__(self, kappa, c, n_sine=5, n_layer=10):
        self.kappa = check_positive_float("kappa", kappa)
        self.c = float(c)
        self.n_sine = check_positive_int("n_sine", n_sine)
        self.n_layer = check_positive_int("n_layer", n_layer)
        self._fields = [Exp1dField([j * np.pi], [_SQRT2], [0.0])
                        for j in range(1, self.n_sine + 1)]
        self._fields += [solve_forward_trig([n * np.pi], [_SQRT2], [0.0], self.kappa, self.c)
                         for n in range(1, self.n_layer + 1)]

    @property
    def n_components(self):
        return self.n_sine + self.n_layer

    @property
    def spatial_dim(self):
        return 1

    @property
    def component_fields(self):
        """Closed-form Exp1dField for each raw component, in order."""
        return list(self._fields)

    def evaluate(self, points):
        x = as_points("points", points, 1)
        return np.stack([f(x) for f in self._fields], axis=1)

    def descriptor(self):
        return {"tag": self.tag, "kappa": self.kappa, "c": self.c,
                "n_sine": self.n_sine, "n_layer": self.n_layer}


class TensorSineBasis2d(TrialBasis):
    """phi_(i,j)(x, y) = 2 sin(i pi x) sin(j pi y), i, j = 1..m.

    Component order is row-major with i slowest. L2-orthonormal on the
    unit square.
    """

    tag = "tensor_sine2d"

    def __init__(self, m):
        self.m = check_positive_int("m", m)

    @property
    def n_components(self):
        return self.m * self.m

    @property
    def spatial_dim(self):
        return 2

    def evaluate(self, points):
        pts = as_points("points", points, 2)
        k = np.arange(1, self.m + 1)
        sx = np.sin(np.multiply.outer(pts[:, 0], k) * np.pi)
        sy = np.sin(np.multiply.outer(pts[:, 1], k) * np.pi)
        return 2.0 * (sx[:, :, None] * sy[:, None, :]).reshape(pts.shape[0], -1)

    def descriptor(self):
        return {"tag": self.tag, "m": self.m}


class TransformedBasis(TrialBasis):
    """Basis whose components are rows of `transform` applied to a raw basis."""

    tag = "transformed"

    def __init__(self, raw, transform):
        transform = np.asarray(transform, dtype=float)
        if isinstance(raw, TransformedBasis):
            transform = transform @ raw.transform
            raw = raw.raw
        if transform.ndim != 2 or transform.shape[1] != raw.n_components:
            raise InvalidArgumentError(
                f"transform: expected (*, {raw.n_components}), got {transform.shape}")
        self.raw = raw
        self.transform = transform

    @property
    def n_components(self):
        return self.transform.shape[0]

    @property
    def spatial_dim(self):
        return self.raw.spatial_dim

    def evaluate(self, points):
        return self.raw.evaluate(points) @ self.transform.T

    def descriptor(self):
        return {"tag": self.tag, "raw": self.raw.descriptor(),
                "transform_shape": list(self.transform.shape)}


def basis_from_descriptor(desc, transform=None):
    """Rebuild a basis from its descriptor; transformed bases need the
    transform matrix passed separately (it ships as a binary block)."""
    tag = desc["tag"]
    if tag == "sine1d":
        return SineBasis1d(desc["n"])
    if tag == "boundary_layer1d":
        return BoundaryLayerBasis1d(desc["kappa"], desc["c"],
                                    desc["n_sine"], desc["n_layer"])
    if tag == "tensor_sine2d":
        return TensorSineBasis2d(desc["m"])
    if tag == "transformed":
        if transform is None:
            raise InvalidArgumentError("transformed basis needs its transform matrix")
        return TransformedBasis(basis_from_descriptor(desc["raw"]), transform)
    raise InvalidArgumentError(f"unknown basis tag {tag!r}")


@dataclass(frozen=True)
class MassMatrix:
    """Gram matrix of a basis in the discrete rule inner product.

    matrix is the assembled (phi_i, phi_j) table; rfactor is upper
    triangular with matrix = rfactor^T rfactor, obtained from a QR of the
    sqrt(weight)-scaled value matrix. Solves and inverse quadratic forms
    go through rfactor.
    """

    matrix: np.ndarray
    rfactor: np.ndarray
    lambda_min: float
    lambda_max: float
    rule_descriptor: dict

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def condition(self):
        return self.lambda_max / self.lambda_min

    def solve(self, v):
        """M^-1 v via two triangular solves against the QR factor."""
        v = np.asarray(v, dtype=float)
        y = solve_triangular(self.rfactor.T, v, lower=True)
        return solve_triangular(self.rfactor, y, lower=False)

    def quad_form_inverse(self, v):
        """v^T M^-1 v >= 0, computed as |R^-T v|^2."""
        v = np.asarray(v, dtype=float)
        y = solve_triangular(self.rfactor.T, v, lower=True)
        return float(y @ y) if y.ndim == 1 else np.sum(y * y, axis=0)


def mass_matrix(basis, rule):
    """Assemble the Gram matrix of basis in rule's inner product.

    Raises DegenerateBasisError if the Gram matrix is not numerically
    symmetric positive definite (dependent components).
    """
    if not isinstance(rule, QuadratureRule):
        raise InvalidArgumentError("rule must be a QuadratureRule")
    V = basis.evaluate(rule.nodes)
    B = np.sqrt(rule.weights)[:, None] * V
    M = B.T @ B
    M = 0.5 * (M + M.T)
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise DegenerateBasisError(
            "mass matrix is not positive definite; basis components are dependent")
    R = np.linalg.qr(B, mode="r")
    sgn = np.sign(np.diag(R))
    sgn[sgn == 0.0] = 1.0
    R = sgn[:, None] * R
    diag = np.abs(np.diag(R))
    if np.min(diag) <= 1e-14 * np.max(diag):
        raise DegenerateBasisError("mass matrix factor is numerically singular")
    eigs = np.linalg.eigvalsh(M)
    return MassMatrix(matrix=M, rfactor=R, lambda_min=float(eigs[0]),
                      lambda_max=float(eigs[-1]), rule_descriptor=rule.descriptor())


def gram_schmidt(basis, rule, rank_tol=1e-12):
    """Orthonormalize a basis in rule's inner product.

    Modified Gram-Schmidt on the weight-scaled node values with one full
    reorthogonalization pass, tracking the same row operations on a
    coefficient matrix. Returns a TransformedBasis whose components are
    rule-orthonormal and span the original space. Components whose norm
    collapses below rank_tol times their original norm raise
    DegenerateBasisError.
    """
    V = basis.evaluate(rule.nodes)
    W = np.sqrt(rule.weights)[:, None] * V
    n = basis.n_components
    T = np.eye(n)
    Q = W.copy()
    orig = np.sqrt(np.sum(W * W, axis=0))
    for i in range(n):
        for _pass in range(2):
            for j in range(i):
                r = Q[:, j] @ Q[:, i]
                Q[:, i] -= r * Q[:, j]
                T[i] -= r * T[j]
        nrm = np.sqrt(Q[:, i] @ Q[:, i])
        if nrm <= rank_tol * orig[i]:
            raise DegenerateBasisError(
                f"component {i} is dependent on earlier components "
                f"(norm ratio {nrm / orig[i]:.2e})")
        Q[:, i] /= nrm
        T[i] /= nrm
    return TransformedBasis(basis, T)


def project(values, basis, rule, mass=None):
    """Best-approximation coefficients of a field in rule's inner product.

    values: samples of the field at rule.nodes, or a callable on points.
    The residual is rule-orthogonal to every basis component.
    """
    if callable(values):
        values = values(rule.nodes)
    values = np.asarray(values, dtype=float)
    if values.shape[0] != rule.n_points:
        raise InvalidArgumentError("values must be sampled at rule.nodes")
    if mass is None:
        mass = mass_matrix(basis, rule)
    V = basis.evaluate(rule.nodes)
    moments = V.T @ (rule.weights * values) if values.ndim == 1 \
        else V.T @ (rule.weights[:, None] * values)
    return mass.solve(moments)
