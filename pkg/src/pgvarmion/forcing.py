"""Forcing samplers: smooth Fourier families and Gaussian random fields.

Every sample is reproducible from (family, stream_seed, index) through the
Philox streams in rng.py, and serializes as a flat record (family, seeds,
length scale, normalization, coefficient list). Fourier coefficients are
amplitudes a ~ U[-2, 2] and phases b ~ U[-1, 1]; GRF draws use a
squared-exponential kernel on a fixed 257-point grid with a jittered
Cholesky factor and cubic interpolation between grid points. All samples
are normalized so the largest magnitude on the family's reference grid
is exactly 1.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import CovarianceError, NumericError, UnsupportedForcingError
from .rng import philox
from .validation import as_points, check_positive_float

N_MODES_1D = 10
N_MODES_2D = 10
NORM_GRID_1D = 2001
NORM_GRID_2D = 201
GRF_GRID_POINTS = 257
GRF_JITTERS = (1e-10, 1e-6)

FAMILIES = ("fourier1d", "fourier2d", "grf1d")


@dataclass(frozen=True, eq=False)
class ForcingSample:
    """One forcing draw: evaluator plus everything needed to rebuild it."""

    family: str
    stream_seed: int
    index: int
    scale: float
    coefficients: np.ndarray
    length_scale: float = float("nan")

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UnsupportedForcingError(f"unknown forcing family {self.family!r}")
        object.__setattr__(self, "coefficients",
                           np.asarray(self.coefficients, dtype=float))
        self.coefficients.setflags(write=False)
        if self.family == "grf1d":
            grid = np.linspace(0.0, 1.0, GRF_GRID_POINTS)
            object.__setattr__(self, "_spline",
                               CubicSpline(grid, self.scale * self.coefficients))

    @property
    def dim(self):
        return 2 if self.family == "fourier2d" else 1

    @property
    def spline(self):
        """Piecewise-cubic evaluator (GRF family only)."""
        if self.family != "grf1d":
            raise UnsupportedForcingError("spline is only defined for grf1d samples")
        return self._spline

    def evaluate(self, points):
        if self.family == "fourier1d":
            x = as_points("points", points, 1)
            a = self.coefficients[:N_MODES_1D]
            b = self.coefficients[N_MODES_1D:]
            j = np.arange(1, N_MODES_1D + 1)
            return self.scale * (np.sin(np.multiply.outer(x, j) * np.pi + b) @ a)
        if self.family == "fourier2d":
            pts = as_points("points", points, 2)
            a, b, c = self._mode_tables()
            j = np.arange(1, N_MODES_2D + 1)
            sx = np.sin(np.multiply.outer(pts[:, 0], j)[:, :, None] * np.pi + b)
            sy = np.sin(np.multiply.outer(pts[:, 1], j)[:, None, :] * np.pi + c)
            return self.scale * np.einsum("jk,mjk,mjk->m", a, sx, sy)
        x = as_points("points", points, 1)
        return self._spline(x)

    def evaluate_grid(self, xs, ys):
        """Fast tensor-grid evaluation for the 2D family: returns (len(xs), len(ys))."""
        if self.family != "fourier2d":
            raise UnsupportedForcingError("evaluate_grid is only defined for fourier2d")
        a, b, c = self._mode_tables()
        j = np.arange(1, N_MODES_2D + 1)
        # sin(j pi x + b) = sin(j pi x) cos b + cos(j pi x) sin b, so the
        # double sum splits into four separable matrix products
        argx = np.multiply.outer(np.asarray(xs, float), j) * np.pi
        argy = np.multiply.outer(np.asarray(ys, float), j) * np.pi
        sx, cx = np.sin(argx), np.cos(argx)
        sy, cy = np.sin(argy), np.cos(argy)
        cb, sb = np.cos(b), np.sin(b)
        cc, sc = np.cos(c), np.sin(c)
        out = (sx @ (a * cb * cc) @ sy.T + cx @ (a * sb * cc) @ sy.T
               + sx @ (a * cb * sc) @ cy.T + cx @ (a * sb * sc) @ cy.T)
        return self.scale * out

    def _mode_tables(self):
        n2 = N_MODES_2D * N_MODES_2D
        a = self.coefficients[:n2].reshape(N_MODES_2D, N_MODES_2D)
        b = self.coefficients[n2:2 * n2].reshape(N_MODES_2D, N_MODES_2D)
        c = self.coefficients[2 * n2:].reshape(N_MODES_2D, N_MODES_2D)
        return a, b, c

    def record(self):
        return {"family": self.family, "stream_seed": int(self.stream_seed),
                "index": int(self.index), "scale": float(self.scale),
                "length_scale": float(self.length_scale),
                "coefficients": [float(v) for v in self.coefficients]}


def forcing_from_record(rec):
    return ForcingSample(family=rec["family"], stream_seed=rec["stream_seed"],
                         index=rec["index"], scale=rec["scale"],
                         coefficients=np.asarray(rec["coefficients"], dtype=float),
                         length_scale=rec.get("length_scale", float("nan")))


def fourier_forcing_1d(stream_seed, index=0):
    """Ten-mode random sine sum, normalized to unit max on a 2001-point grid."""
    rng = philox(stream_seed, index)
    a = rng.uniform(-2.0, 2.0, N_MODES_1D)
    b = rng.uniform(-1.0, 1.0, N_MODES_1D)
    x = np.linspace(0.0, 1.0, NORM_GRID_1D)
    j = np.arange(1, N_MODES_1D + 1)
    raw = np.sin(np.multiply.outer(x, j) * np.pi + b) @ a
    peak = np.max(np.abs(raw))
    if peak == 0.0:
        raise NumericError("degenerate forcing draw: identically zero")
    return ForcingSample(family="fourier1d", stream_seed=stream_seed, index=index,
                         scale=1.0 / peak, coefficients=np.concatenate([a, b]))


def fourier_forcing_2d(stream_seed, index=0):
    """Ten-by-ten mode random product-sine sum on the unit square."""
    rng = philox(stream_seed, index)
    n2 = N_MODES_2D * N_MODES_2D
    a = rng.uniform(-2.0, 2.0, n2)
    b = rng.uniform(-1.0, 1.0, n2)
    c = rng.uniform(-1.0, 1.0, n2)
    sample = ForcingSample(family="fourier2d", stream_seed=stream_seed, index=index,
                           scale=1.0, coefficients=np.concatenate([a, b, c]))
    g = np.linspace(0.0, 1.0, NORM_GRID_2D)
    peak = np.max(np.abs(sample.evaluate_grid(g, g)))
    if peak == 0.0:
        raise NumericError("degenerate forcing draw: identically zero")
    return ForcingSample(family="fourier2d", stream_seed=stream_seed, index=index,
                         scale=1.0 / peak, coefficients=sample.coefficients)


def _stable_cholesky(K):
    """Cholesky with escalating diagonal jitter; CovarianceError if both fail."""
    for jitter in GRF_JITTERS:
        try:
            return np.linalg.cholesky(K + jitter * np.eye(K.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise CovarianceError(
        f"covariance not positive definite after jitter {GRF_JITTERS[-1]:g}")


@lru_cache(maxsize=8)
def _grf_factor(length_scale):
    x = np.linspace(0.0, 1.0, GRF_GRID_POINTS)
    d = x[:, None] - x[None, :]
    K = np.exp(-0.5 * (d / length_scale) ** 2)
    return _stable_cholesky(K)


def grf_forcing(stream_seed, index=0, length_scale=0.1):
    """Squared-exponential GRF on [0, 1], cubic between grid points.

    The field is not conditioned to vanish at the boundary; normalization
    divides by the max magnitude over the 257 grid values.
    """
    length_scale = check_positive_float("length_scale", length_scale)
    L = _grf_factor(length_scale)
    rng = philox(stream_seed, index)
    raw = L @ rng.standard_normal(GRF_GRID_POINTS)
    peak = np.max(np.abs(raw))
    if peak == 0.0:
        raise NumericError("degenerate GRF draw: identically zero")
    return ForcingSample(family="grf1d", stream_seed=stream_seed, index=index,
                         scale=1.0 / peak, coefficients=raw,
                         length_scale=length_scale)


def sample_forcing(family, stream_seed, index=0, length_scale=None):
    """Dispatch by family tag."""
    if family == "fourier1d":
        return fourier_forcing_1d(stream_seed, index)
    if family == "fourier2d":
        return fourier_forcing_2d(stream_seed, index)
    if family == "grf1d":
        if length_scale is None:
            raise UnsupportedForcingError("grf1d needs a length_scale")
        return grf_forcing(stream_seed, index, length_scale)
    raise UnsupportedForcingError(f"unknown forcing family {family!r}")
