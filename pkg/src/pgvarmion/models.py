"""Operator surrogates mapping a sampled forcing to a solution field.

All three models share one structure: a forcing f enters as the vector F
of its values at the sensor nodes, a coefficient vector is produced
linearly from F, and the prediction is the matching linear combination of
output fields evaluated at query points.

* PgVarmion: coefficients beta = A G F, where A holds the network outputs
  at the sensor nodes and G is the diagonal of sensor quadrature weights,
  so beta_i approximates the integral of f against the i-th learned
  weighting function; the output fields are the fixed trial basis.
* BNet: coefficients B F with a dense trainable matrix; output fields are
  the same trial basis.
* LDeepONet: coefficients B F; output fields are the columns of a
  trainable trunk network.

Every model is linear in F by construction. The estimator API follows
the fit/predict convention: fit(dataset, config) trains in place and
records loss_history_, predict evaluates at points.
"""

import numpy as np

from .basis import TrialBasis
from .errors import InvalidArgumentError
from .network import Mlp
from .quadrature import QuadratureRule
from .rng import STREAM_MATRIX, philox
from .validation import as_float_array, check_positive_int


def sensor_vector(f, rule):
    """Values of the forcing at the rule's nodes, in node order."""
    values = np.asarray(f.evaluate(rule.nodes), dtype=float)
    if not np.all(np.isfinite(values)):
        raise InvalidArgumentError("forcing not finite at sensor nodes")
    return values


class OperatorSurrogate:
    """Shared estimator behavior: parameter introspection, fit, predict."""

    _param_names = ()

    def get_params(self, deep=False):
        return {name: getattr(self, name) for name in self._param_names}

    def set_params(self, **params):
        for name, value in params.items():
            if name not in self._param_names:
                raise InvalidArgumentError(f"unknown parameter {name!r}")
            setattr(self, name, value)
        return self

    def fit(self, dataset, config):
        from .training import train
        self.loss_history_ = train(self, dataset, config)
        return self

    def predict(self, F, points):
        return self.evaluate(F, points)

    def _check_sensor_vector(self, F):
        F = as_float_array("F", F)
        if F.shape != (self.sensor_rule.n_points,):
            raise InvalidArgumentError(
                f"F: expected ({self.sensor_rule.n_points},), got {F.shape}")
        return F

    def evaluate(self, F, points):
        F = self._check_sensor_vector(F)
        return self.evaluate_batch(F[None, :], points)[0]

    def evaluate_batch(self, F_rows, points):
        """Predictions for many forcings at once -> (n_f, n_points)."""
        F_rows = np.asarray(F_rows, dtype=float)
        if F_rows.ndim != 2 or F_rows.shape[1] != self.sensor_rule.n_points:
            raise InvalidArgumentError(
                f"F_rows: expected (*, {self.sensor_rule.n_points}), got {F_rows.shape}")
        coeffs = F_rows @ self.coefficient_map().T
        return coeffs @ self.output_table(points).T


def _init_matrix(shape, seed):
    """Trainable dense matrix, fan-in uniform like a network layer."""
    bound = 1.0 / np.sqrt(shape[1])
    return philox(seed, STREAM_MATRIX).uniform(-bound, bound, shape)


class PgVarmion(OperatorSurrogate):
    """Learned weighting functions against a fixed trial basis.

    The network maps a point x to N values, one per basis function; its
    matrix A over the sensor nodes turns a sensor vector F into
    coefficients beta = A^T (gamma * F). With an orthonormal basis the
    network outputs are the weighting functions themselves; otherwise
    recover_psi applies the basis mass matrix.

    Only homogeneous Dirichlet data is supported: a boundary sensor rule
    may be recorded for interface completeness but nonzero boundary
    values are rejected.
    """

    tag = "pg-varmion"

    _param_names = ("basis", "sensor_rule", "hidden_dims", "cutoff_p",
                    "final_bias", "seed", "mass", "boundary_sensor_rule")

    def __init__(self, basis, sensor_rule, hidden_dims, cutoff_p,
                 final_bias=True, seed=0, mass=None, boundary_sensor_rule=None):
        if not isinstance(basis, TrialBasis):
            raise InvalidArgumentError("basis must be a TrialBasis")
        if not isinstance(sensor_rule, QuadratureRule):
            raise InvalidArgumentError("sensor_rule must be a QuadratureRule")
        if sensor_rule.dim != basis.spatial_dim:
            raise InvalidArgumentError("sensor rule dimension must match basis")
        self.basis = basis
        self.sensor_rule = sensor_rule
        self.hidden_dims = tuple(int(d) for d in hidden_dims)
        self.cutoff_p = cutoff_p
        self.final_bias = bool(final_bias)
        self.seed = int(seed)
        self.mass = mass
        self.boundary_sensor_rule = boundary_sensor_rule
        self.net = Mlp([basis.spatial_dim, *self.hidden_dims, basis.n_components],
                       cutoff_p=cutoff_p, final_bias=final_bias, seed=seed)

    @property
    def n_parameters(self):
        return self.net.n_parameters

    def sensor_matrix(self):
        """A with A[k, i] = i-th network output at sensor node k."""
        return self.net.forward(self.sensor_rule.nodes)

    def coefficient_map(self):
        A = self.sensor_matrix()
        return A.T * self.sensor_rule.weights[None, :]

    def coefficients(self, F, boundary_values=None):
        """beta = A^T (gamma * F); boundary data must be absent or zero."""
        F = self._check_sensor_vector(F)
        if boundary_values is not None:
            boundary_values = np.asarray(boundary_values, dtype=float)
            if self.boundary_sensor_rule is None:
                raise InvalidArgumentError("model has no boundary sensor rule")
            if boundary_values.shape != (self.boundary_sensor_rule.n_points,):
                raise InvalidArgumentError("boundary vector length mismatch")
            if np.any(boundary_values != 0.0):
                raise InvalidArgumentError(
                    "only homogeneous Dirichlet data is supported")
        return self.coefficient_map() @ F

    def output_table(self, points):
        return self.basis.evaluate(points)

    def recover_psi(self):
        """Learned weighting functions as callables, mass-corrected."""
        return [lambda pts, i=i: self.weighting_table(pts)[:, i]
                for i in range(self.basis.n_components)]

    def weighting_table(self, points):
        """psi-hat values at points -> (n_points, N)."""
        raw = self.net.forward(points)
        if self.mass is None:
            return raw
        return raw @ self.mass.matrix.T

    # training hooks -------------------------------------------------

    def _training_context(self, output_points):
        return {"table": self.basis.evaluate(output_points)}

    def _step_begin(self, ctx):
        cache = {}
        A = self.net.forward(self.sensor_rule.nodes, cache=cache)
        ctx["net_cache"] = cache
        return A.T * self.sensor_rule.weights[None, :], ctx["table"]

    _table_is_trainable = False

    def _step_apply(self, ctx, F_rows, coeff_cotangent, table_cotangent,
                    optimizer, epoch):
        dA = self.sensor_rule.weights[:, None] * (F_rows.T @ coeff_cotangent)
        grads = self.net.backward(ctx["net_cache"], dA)
        optimizer.step(self.net.parameters(), grads, epoch)

    def state_blocks(self):
        return {f"net_{i}": p for i, p in enumerate(self.net.parameters())}


class BNet(OperatorSurrogate):
    """Dense linear map from sensor vector to trial-basis coefficients."""

    tag = "bnet"
    _param_names = ("basis", "sensor_rule", "seed")

    def __init__(self, basis, sensor_rule, seed=0):
        if sensor_rule.dim != basis.spatial_dim:
            raise InvalidArgumentError("sensor rule dimension must match basis")
        self.basis = basis
        self.sensor_rule = sensor_rule
        self.seed = int(seed)
        self.B = _init_matrix((basis.n_components, sensor_rule.n_points), seed)

    @property
    def n_parameters(self):
        return self.B.size

    def coefficient_map(self):
        return self.B

    def coefficients(self, F):
        return self.B @ self._check_sensor_vector(F)

    def output_table(self, points):
        return self.basis.evaluate(points)

    # training hooks -------------------------------------------------

    def _training_context(self, output_points):
        return {"table": self.basis.evaluate(output_points)}

    def _step_begin(self, ctx):
        return self.B, ctx["table"]

    _table_is_trainable = False

    def _step_apply(self, ctx, F_rows, coeff_cotangent, table_cotangent,
                    optimizer, epoch):
        dB = coeff_cotangent.T @ F_rows
        optimizer.step([self.B], [dB], epoch)

    def state_blocks(self):
        return {"B": self.B}


class LDeepONet(OperatorSurrogate):
    """Trainable trunk fields combined through a dense branch matrix.

    The trunk network plays the role the trial basis plays for the other
    models; its width q equals the basis size used by the competing
    models so parameter budgets are comparable.
    """

    tag = "l-deeponet"
    _param_names = ("q", "spatial_dim", "sensor_rule", "hidden_dims",
                    "cutoff_p", "final_bias", "seed")

    def __init__(self, q, spatial_dim, sensor_rule, hidden_dims, cutoff_p,
                 final_bias=True, seed=0):
        self.q = check_positive_int("q", q)
        self.spatial_dim = check_positive_int("spatial_dim", spatial_dim, maximum=2)
        self.sensor_rule = sensor_rule
        self.hidden_dims = tuple(int(d) for d in hidden_dims)
        self.cutoff_p = cutoff_p
        self.final_bias = bool(final_bias)
        self.seed = int(seed)
        self.trunk = Mlp([self.spatial_dim, *self.hidden_dims, self.q],
                         cutoff_p=cutoff_p, final_bias=final_bias, seed=seed)
        self.B = _init_matrix((self.q, sensor_rule.n_points), seed)

    @property
    def n_parameters(self):
        return self.trunk.n_parameters + self.B.size

    def coefficient_map(self):
        return self.B

    def coefficients(self, F):
        return self.B @ self._check_sensor_vector(F)

    def output_table(self, points):
        return self.trunk.forward(points)

    # training hooks -------------------------------------------------

    def _training_context(self, output_points):
        return {"output_points": np.asarray(output_points, dtype=float)}

    def _step_begin(self, ctx):
        cache = {}
        table = self.trunk.forward(ctx["output_points"], cache=cache)
        ctx["trunk_cache"] = cache
        return self.B, table

    _table_is_trainable = True

    def _step_apply(self, ctx, F_rows, coeff_cotangent, table_cotangent,
                    optimizer, epoch):
        dB = coeff_cotangent.T @ F_rows
        trunk_grads = self.trunk.backward(ctx["trunk_cache"], table_cotangent)
        optimizer.step(self.trunk.parameters() + [self.B],
                       trunk_grads + [dB], epoch)

    def state_blocks(self):
        blocks = {f"trunk_{i}": p for i, p in enumerate(self.trunk.parameters())}
        blocks["B"] = self.B
        return blocks
