"""Error metrics and theory checks for trained operator surrogates.

Every report measures fields in a discrete weighted L2 inner product and
records which rule supplied the weights. Split-level table entries use
the aggregate statistic 100 * (sum of error norms) / (sum of reference
norms), the total error relative to the total solution magnitude;
per-sample relative errors and their mean/median/max ride along in every
report so either view can be recovered from the exports.
"""

from dataclasses import dataclass, field

import numpy as np

from .basis import TrialBasis, mass_matrix, project
from .datasets import LabeledDataset, _grid_axes
from .errors import InvalidArgumentError, NumericError, ZeroNormError
from .quadrature import QuadratureRule
from .reference import DEFAULT_RESOLUTION_2D, solve_adjoint_for_psi

TABLE_LABELS = {
    "projection": "Projection",
    "pg-varmion": "PG-VarMiON",
    "bnet": "BNet",
    "l-deeponet": "L-DeepONet",
}
_ROW_ORDER = tuple(TABLE_LABELS)
_SPLIT_ORDER = ("train", "test1", "test2", "test3")

# Per-sample floor slack, in percent units: pure roundoff headroom, ten
# orders below any trained-model gap.
FLOOR_SLACK = 1e-10


def _rule_weights(rule):
    if isinstance(rule, QuadratureRule):
        return rule.weights
    w = np.asarray(rule, dtype=float)
    if w.ndim != 1 or w.size == 0 or np.any(w < 0.0) or not np.all(np.isfinite(w)):
        raise InvalidArgumentError("weights must be a nonnegative finite vector")
    return w


def weighted_norms(values, weights):
    """Row-wise weighted L2 norms; a single field gives a scalar."""
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != weights.shape[0]:
        raise InvalidArgumentError("values and weights disagree on node count")
    return np.sqrt(np.sum(weights * values * values, axis=-1))


def relative_l2_error(predicted, reference, weights):
    """Percent relative weighted L2 error, per sample.

    Accepts single fields (1D arrays over the nodes) or stacked samples
    (2D, one row per sample). weights may be a QuadratureRule.
    """
    w = _rule_weights(weights)
    predicted = np.asarray(predicted, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if predicted.shape != reference.shape:
        raise InvalidArgumentError("predicted and reference shapes differ")
    num = weighted_norms(reference - predicted, w)
    den = weighted_norms(reference, w)
    if np.any(np.atleast_1d(den) == 0.0):
        idx = int(np.argmin(np.atleast_1d(den)))
        raise ZeroNormError(f"reference field {idx} has zero norm")
    return 100.0 * num / den


def aggregate_percent(error_norms, reference_norms):
    """Split-level statistic: total error over total reference magnitude."""
    error_norms = np.asarray(error_norms, dtype=float)
    reference_norms = np.asarray(reference_norms, dtype=float)
    total = float(np.sum(reference_norms))
    if total <= 0.0:
        raise ZeroNormError("reference norms sum to zero")
    return 100.0 * float(np.sum(error_norms)) / total


def central_difference(fn, points, step, axis=0):
    """Central finite difference of a field along one coordinate."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        return (fn(points + step) - fn(points - step)) / (2.0 * step)
    shift = np.zeros(points.shape[1])
    shift[axis] = step
    return (fn(points + shift) - fn(points - shift)) / (2.0 * step)


@dataclass(frozen=True)
class ErrorReport:
    """Per-sample errors of one model on one dataset split.

    errors and projection_errors are percent relative L2 errors; e_psi is
    the absolute distance between the prediction and the best in-span
    approximation, in the same rule norm. floor_violations lists samples
    where the model beat its projection floor beyond roundoff (possible
    only for models whose outputs leave the trial span).
    """

    model: str
    problem: str
    split: str
    seed: int
    dataset_digest: str
    rule_descriptor: dict
    errors: np.ndarray
    projection_errors: np.ndarray
    e_psi: np.ndarray
    error_norms: np.ndarray
    projection_norms: np.ndarray
    reference_norms: np.ndarray
    floor_violations: np.ndarray

    @property
    def n_samples(self):
        return self.errors.shape[0]

    @property
    def mean(self):
        return float(np.mean(self.errors))

    @property
    def median(self):
        return float(np.median(self.errors))

    @property
    def max(self):
        return float(np.max(self.errors))

    @property
    def aggregate(self):
        return aggregate_percent(self.error_norms, self.reference_norms)

    @property
    def projection_mean(self):
        return float(np.mean(self.projection_errors))

    @property
    def projection_aggregate(self):
        return aggregate_percent(self.projection_norms, self.reference_norms)

    def summary(self):
        return {
            "model": self.model,
            "problem": self.problem,
            "split": self.split,
            "n_samples": self.n_samples,
            "aggregate_percent": self.aggregate,
            "mean_percent": self.mean,
            "median_percent": self.median,
            "max_percent": self.max,
            "projection_aggregate_percent": self.projection_aggregate,
            "projection_mean_percent": self.projection_mean,
            "floor_violations": int(self.floor_violations.size),
        }

    def to_dict(self):
        d = self.summary()
        d.update({
            "seed": self.seed,
            "dataset_digest": self.dataset_digest,
            "rule": self.rule_descriptor,
            "errors_percent": [float(v) for v in self.errors],
            "projection_errors_percent": [float(v) for v in self.projection_errors],
            "e_psi": [float(v) for v in self.e_psi],
        })
        return d


def _projection_fields(basis, dataset, mass=None):
    """Best in-span approximations of the labels, row per sample."""
    rule = dataset.output_rule
    if mass is None:
        mass = mass_matrix(basis, rule)
    coeffs = project(dataset.labels.T, basis, rule, mass=mass)
    return coeffs.T @ basis.evaluate(rule.nodes).T, mass


def error_report(model, dataset, basis=None, mass=None):
    """Evaluate a model on a labeled split and report errors.

    The projection floor uses the model's own trial basis when it has
    one; trunk-based models must be given the problem's basis explicitly.
    Floor violations raise for in-span models (they indicate a bug) and
    are recorded for trunk models.
    """
    if not isinstance(dataset, LabeledDataset):
        raise InvalidArgumentError("dataset must be a LabeledDataset")
    if basis is None:
        basis = getattr(model, "basis", None)
    if not isinstance(basis, TrialBasis):
        raise InvalidArgumentError("a trial basis is required for the projection floor")
    rule = dataset.output_rule
    w = rule.weights
    preds = model.evaluate_batch(dataset.F, rule.nodes)
    ref_norms = weighted_norms(dataset.labels, w)
    if np.any(ref_norms == 0.0):
        idx = int(np.argmin(ref_norms))
        raise ZeroNormError(f"reference field {idx} has zero norm")
    err_norms = weighted_norms(dataset.labels - preds, w)
    ubar, _ = _projection_fields(basis, dataset, mass)
    proj_norms = weighted_norms(dataset.labels - ubar, w)
    e_psi = weighted_norms(ubar - preds, w)
    errors = 100.0 * err_norms / ref_norms
    proj_errors = 100.0 * proj_norms / ref_norms
    violations = np.nonzero(errors < proj_errors - FLOOR_SLACK)[0]
    if violations.size and not getattr(model, "_table_is_trainable", False):
        raise NumericError(
            f"in-span model beat its projection floor on sample {violations[0]}")
    return ErrorReport(
        model=getattr(model, "tag", type(model).__name__),
        problem=dataset.problem, split=dataset.split, seed=dataset.seed,
        dataset_digest=dataset.digest(), rule_descriptor=rule.descriptor(),
        errors=errors, projection_errors=proj_errors, e_psi=e_psi,
        error_norms=err_norms, projection_norms=proj_norms,
        reference_norms=ref_norms, floor_violations=violations)


def projection_report(basis, dataset, mass=None):
    """The projection row: errors of the best in-span approximation."""
    rule = dataset.output_rule
    w = rule.weights
    ref_norms = weighted_norms(dataset.labels, w)
    if np.any(ref_norms == 0.0):
        idx = int(np.argmin(ref_norms))
        raise ZeroNormError(f"reference field {idx} has zero norm")
    ubar, _ = _projection_fields(basis, dataset, mass)
    proj_norms = weighted_norms(dataset.labels - ubar, w)
    errors = 100.0 * proj_norms / ref_norms
    return ErrorReport(
        model="projection", problem=dataset.problem, split=dataset.split,
        seed=dataset.seed, dataset_digest=dataset.digest(),
        rule_descriptor=rule.descriptor(), errors=errors,
        projection_errors=errors, e_psi=np.zeros_like(proj_norms),
        error_norms=proj_norms, projection_norms=proj_norms,
        reference_norms=ref_norms, floor_violations=np.empty(0, dtype=int))


def _reference_values(setup, f, rule):
    """Reference solution of one forcing sampled at a rule's nodes."""
    sol = setup.solve(f)
    if setup.spatial_dim == 1:
        return np.asarray(sol(rule.nodes), dtype=float)
    xs, ys = _grid_axes(rule)
    return np.asarray(sol.evaluate_grid(xs, ys), dtype=float).ravel()


@dataclass(frozen=True)
class DecompositionReport:
    """Total, projection, and coefficient error norms per sample.

    All norms use the fine analysis rule, where the orthogonality
    e_total^2 = e_projection^2 + e_weighting^2 holds to roundoff.
    identity_gaps holds the relative defect of that identity per sample.
    """

    problem: str
    model: str
    rule_descriptor: dict
    e_total: np.ndarray
    e_projection: np.ndarray
    e_weighting: np.ndarray
    reference_norms: np.ndarray
    identity_gaps: np.ndarray

    @property
    def n_samples(self):
        return self.e_total.shape[0]

    @property
    def max_identity_gap(self):
        return float(np.max(self.identity_gaps))


def error_decomposition(model, setup, dataset, n_samples=None, tol=1e-6):
    """Split each sample's error into projection and coefficient parts.

    Re-solves the reference problem on the analysis rule, projects there,
    and checks the orthogonal decomposition identity; a defect beyond tol
    means the analysis rule under-resolves the basis and raises.
    """
    rule = setup.analysis_rule
    basis = setup.basis
    mass = mass_matrix(basis, rule)
    V = basis.evaluate(rule.nodes)
    C = model.coefficient_map()
    n = dataset.n_samples if n_samples is None else int(n_samples)
    if n < 1 or n > dataset.n_samples:
        raise InvalidArgumentError(f"n_samples must be in [1, {dataset.n_samples}]")
    e_tot = np.empty(n)
    e_phi = np.empty(n)
    e_psi = np.empty(n)
    ref = np.empty(n)
    gaps = np.empty(n)
    for i in range(n):
        f = dataset.forcing(i)
        u = _reference_values(setup, f, rule)
        beta_bar = project(u, basis, rule, mass=mass)
        beta_hat = C @ dataset.F[i]
        e_tot[i] = weighted_norms(u - V @ beta_hat, rule.weights)
        e_phi[i] = weighted_norms(u - V @ beta_bar, rule.weights)
        d = beta_bar - beta_hat
        e_psi[i] = float(np.sqrt(d @ mass.matrix @ d))
        ref[i] = weighted_norms(u, rule.weights)
        defect = abs(e_tot[i] ** 2 - e_phi[i] ** 2 - e_psi[i] ** 2)
        # below roundoff scale the identity is vacuous; do not let a
        # near-zero denominator masquerade as rule under-resolution
        denom = max(e_tot[i], 1e-10 * ref[i]) ** 2
        gaps[i] = defect / denom if denom > 0.0 else defect
        if gaps[i] > tol:
            raise NumericError(
                f"decomposition identity defect {gaps[i]:.3e} on sample {i}; "
                "analysis rule under-resolves the basis")
    return DecompositionReport(
        problem=setup.tag, model=getattr(model, "tag", type(model).__name__),
        rule_descriptor=rule.descriptor(), e_total=e_tot, e_projection=e_phi,
        e_weighting=e_psi, reference_norms=ref, identity_gaps=gaps)


@dataclass(frozen=True)
class TheoremBoundReport:
    """Per-sample check of the computable error bound.

    bound = e_projection + ell_gap / sqrt(lambda_min), where ell_gap is
    the Euclidean distance between the exact weighted moments of the
    forcing and the model's mass-weighted coefficients. psi_sum_bound is
    the looser field-level bound ||f|| * sum_i ||psi_i - psi_i_hat|| /
    sqrt(lambda_min); it is None for models without recoverable
    weighting fields. Constants that the theory does not make computable
    are reported verbatim as "not evaluated".
    """

    problem: str
    model: str
    lambda_min: float
    rule_descriptor: dict
    e_total: np.ndarray
    e_projection: np.ndarray
    ell_gap: np.ndarray
    bound: np.ndarray
    satisfied: np.ndarray
    f_norms: np.ndarray
    psi_sum_bound: object
    constants: dict = field(default_factory=dict)

    @property
    def n_samples(self):
        return self.e_total.shape[0]

    @property
    def all_satisfied(self):
        return bool(np.all(self.satisfied))


def theorem_bound_report(model, setup, dataset, n_samples=None):
    """Evaluate the computable part of the error bound on test samples.

    The exact moment vector pairs each forcing with the true weighting
    functions on the analysis rule; the model side is the mass-weighted
    coefficient vector. Both live in the trial-coefficient space, so the
    gap divided by sqrt(lambda_min) dominates the coefficient error.
    """
    rule = setup.analysis_rule
    basis = setup.basis
    mass = mass_matrix(basis, rule)
    lam = mass.lambda_min
    V = basis.evaluate(rule.nodes)
    C = model.coefficient_map()
    psi_true = solve_adjoint_for_psi(basis, setup.pde, _resolution_of(setup))
    psi_vals = np.column_stack([_field_values(p, rule, setup.spatial_dim)
                                for p in psi_true])
    psi_gaps = None
    if hasattr(model, "recover_psi"):
        hat_vals = np.column_stack([h(rule.nodes) for h in model.recover_psi()])
        psi_gaps = weighted_norms((psi_vals - hat_vals).T, rule.weights)
    n = dataset.n_samples if n_samples is None else int(n_samples)
    if n < 1 or n > dataset.n_samples:
        raise InvalidArgumentError(f"n_samples must be in [1, {dataset.n_samples}]")
    e_tot = np.empty(n)
    e_phi = np.empty(n)
    gap = np.empty(n)
    f_norms = np.empty(n)
    for i in range(n):
        f = dataset.forcing(i)
        u = _reference_values(setup, f, rule)
        f_vals = f.evaluate(rule.nodes)
        beta_bar = project(u, basis, rule, mass=mass)
        beta_hat = C @ dataset.F[i]
        e_tot[i] = weighted_norms(u - V @ beta_hat, rule.weights)
        e_phi[i] = weighted_norms(u - V @ beta_bar, rule.weights)
        ell_true = psi_vals.T @ (rule.weights * f_vals)
        ell_model = mass.matrix @ beta_hat
        gap[i] = float(np.linalg.norm(ell_true - ell_model))
        f_norms[i] = weighted_norms(f_vals, rule.weights)
    bound = e_phi + gap / np.sqrt(lam)
    psi_sum = None
    if psi_gaps is not None:
        psi_sum = f_norms * float(np.sum(psi_gaps)) / np.sqrt(lam)
    return TheoremBoundReport(
        problem=setup.tag, model=getattr(model, "tag", type(model).__name__),
        lambda_min=lam, rule_descriptor=rule.descriptor(), e_total=e_tot,
        e_projection=e_phi, ell_gap=gap, bound=bound,
        satisfied=e_tot <= bound, f_norms=f_norms, psi_sum_bound=psi_sum,
        constants={"domain_embedding_constant": "not evaluated",
                   "weighting_gradient_bound": "not evaluated"})


def _resolution_of(setup):
    return setup.reference_resolution or DEFAULT_RESOLUTION_2D


def _field_values(psi, rule, dim):
    if dim == 1:
        return np.asarray(psi(rule.nodes), dtype=float)
    try:
        xs, ys = _grid_axes(rule)
        return np.asarray(psi.evaluate_grid(xs, ys), dtype=float).ravel()
    except InvalidArgumentError:
        return np.asarray(psi(rule.nodes), dtype=float)


@dataclass(frozen=True)
class PsiReport:
    """Per-mode accuracy of the recovered weighting functions."""

    problem: str
    model: str
    h1_step: float
    rule_descriptor: dict
    modes: np.ndarray
    l2_percent: np.ndarray
    h1_percent: np.ndarray

    def __post_init__(self):
        for name in ("l2_percent", "h1_percent"):
            v = getattr(self, name)
            if np.any(v < 0.0) or not np.all(np.isfinite(v)):
                raise NumericError(f"{name} must be nonnegative and finite")

    def mean_over(self, modes):
        """Mean relative L2 error over a set of 1-based mode indices."""
        pick = np.isin(self.modes, np.asarray(modes, dtype=int))
        if not np.any(pick):
            raise InvalidArgumentError("no requested modes in this report")
        return float(np.mean(self.l2_percent[pick]))


def psi_error_report(model, setup, h1_step=1e-4, modes=None):
    """Compare recovered weighting functions against the true ones.

    L2 errors integrate on the analysis rule; the derivative part of the
    H1 error uses central differences with the given step on both fields
    (the recovered fields are piecewise linear, so the kink set does not
    affect the integral). modes selects 1-based indices, default all.
    """
    if not hasattr(model, "recover_psi"):
        raise InvalidArgumentError("model has no recoverable weighting functions")
    rule = setup.analysis_rule
    dim = setup.spatial_dim
    psi_true = solve_adjoint_for_psi(setup.basis, setup.pde, _resolution_of(setup))
    psi_hat = model.recover_psi()
    if len(psi_true) != len(psi_hat):
        raise InvalidArgumentError("mode count mismatch between model and basis")
    if modes is None:
        modes = np.arange(1, len(psi_true) + 1)
    modes = np.asarray(modes, dtype=int)
    if np.any(modes < 1) or np.any(modes > len(psi_true)):
        raise InvalidArgumentError("mode indices out of range")
    w = rule.weights
    l2 = np.empty(modes.size)
    h1 = np.empty(modes.size)
    for k, m in enumerate(modes):
        t, h = psi_true[m - 1], psi_hat[m - 1]
        tv = _field_values(t, rule, dim)
        hv = np.asarray(h(rule.nodes), dtype=float)
        num2 = float(np.sum(w * (tv - hv) ** 2))
        den2 = float(np.sum(w * tv * tv))
        if den2 == 0.0:
            raise ZeroNormError(f"true weighting function {m} has zero norm")
        l2[k] = 100.0 * np.sqrt(num2 / den2)
        for axis in range(dim):
            td = central_difference(t, rule.nodes, h1_step, axis)
            hd = central_difference(h, rule.nodes, h1_step, axis)
            num2 += float(np.sum(w * (td - hd) ** 2))
            den2 += float(np.sum(w * td * td))
        h1[k] = 100.0 * np.sqrt(num2 / den2)
    return PsiReport(problem=setup.tag,
                     model=getattr(model, "tag", type(model).__name__),
                     h1_step=float(h1_step), rule_descriptor=rule.descriptor(),
                     modes=modes, l2_percent=l2, h1_percent=h1)


@dataclass(frozen=True)
class ComparisonTable:
    """Aggregate percent errors, one row per model, one column per split."""

    problem: str
    row_tags: tuple
    splits: tuple
    values: np.ndarray

    def entry(self, tag, split):
        return float(self.values[self.row_tags.index(tag),
                                 self.splits.index(split)])

    def text(self):
        labels = [TABLE_LABELS.get(t, t) for t in self.row_tags]
        width = max(len(s) for s in labels + ["model"])
        head = "model".ljust(width) + "".join(f"  {s:>8}" for s in self.splits)
        lines = [head]
        for label, row in zip(labels, self.values):
            lines.append(label.ljust(width)
                         + "".join(f"  {v:8.2f}" for v in row))
        return "\n".join(lines) + "\n"

    def csv(self):
        lines = ["model," + ",".join(self.splits)]
        for tag, row in zip(self.row_tags, self.values):
            lines.append(tag + "," + ",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"


def comparison_table(reports):
    """Arrange split reports into the standard comparison table.

    Rows follow the fixed order projection, pg-varmion, bnet, l-deeponet
    (present tags only); columns follow split order. Entries are the
    aggregate percent statistic of each report.
    """
    if not reports:
        raise InvalidArgumentError("no reports to tabulate")
    problems = {r.problem for r in reports}
    if len(problems) != 1:
        raise InvalidArgumentError(f"reports mix problems {sorted(problems)}")
    seen = {}
    for r in reports:
        key = (r.model, r.split)
        if key in seen:
            raise InvalidArgumentError(f"duplicate report for {key}")
        seen[key] = r.aggregate
    tags = [t for t in _ROW_ORDER if any(k[0] == t for k in seen)]
    extra = sorted({k[0] for k in seen} - set(tags))
    tags += extra
    splits = [s for s in _SPLIT_ORDER if any(k[1] == s for k in seen)]
    values = np.full((len(tags), len(splits)), np.nan)
    for (tag, split), v in seen.items():
        values[tags.index(tag), splits.index(split)] = v
    return ComparisonTable(problem=problems.pop(), row_tags=tuple(tags),
                           splits=tuple(splits), values=values)


def histogram_export(errors, bins=40):
    """Bin per-sample errors for histogram plots, keeping the raw values.

    Accepts an ErrorReport or a plain array of percents. The returned
    record holds bin edges, counts, every raw value (for rug marks), and
    both summary statistics; aggregate is None for plain arrays.
    """
    aggregate = None
    if isinstance(errors, ErrorReport):
        aggregate = errors.aggregate
        errors = errors.errors
    values = np.asarray(errors, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise InvalidArgumentError("errors must be a nonempty vector")
    counts, edges = np.histogram(values, bins=bins)
    return {"edges": edges, "counts": counts, "values": values.copy(),
            "sample_mean": float(np.mean(values)), "aggregate": aggregate}


def histogram_csv(data):
    """Render a histogram record as CSV with a section column."""
    lines = ["section,index,value"]
    for i, v in enumerate(data["edges"]):
        lines.append(f"edge,{i},{float(v)!r}")
    for i, v in enumerate(data["counts"]):
        lines.append(f"count,{i},{int(v)}")
    for i, v in enumerate(data["values"]):
        lines.append(f"value,{i},{float(v)!r}")
    lines.append(f"stat,sample_mean,{data['sample_mean']!r}")
    if data["aggregate"] is not None:
        lines.append(f"stat,aggregate,{data['aggregate']!r}")
    return "\n".join(lines) + "\n"


def line_slices_2d(evaluate, n=257):
    """Sample a 2D field along the two diagonals of the unit square."""
    if n < 2:
        raise InvalidArgumentError("need at least two sample points")
    t = np.linspace(0.0, 1.0, n)
    diag = np.column_stack([t, t])
    anti = np.column_stack([t, 1.0 - t])
    return {"t": t,
            "diagonal": np.asarray(evaluate(diag), dtype=float),
            "antidiagonal": np.asarray(evaluate(anti), dtype=float)}


def line_slices_csv(slices):
    """Render diagonal slice samples as CSV."""
    lines = ["t,diagonal,antidiagonal"]
    for t, d, a in zip(slices["t"], slices["diagonal"], slices["antidiagonal"]):
        lines.append(f"{float(t)!r},{float(d)!r},{float(a)!r}")
    return "\n".join(lines) + "\n"
