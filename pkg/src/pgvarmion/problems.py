"""Per-experiment wiring: PDE, basis, rules, architectures, defaults.

Three benchmark problems ship with the package:

* diffusion1d: -(kappa u')' = f on (0,1), kappa = 0.01, sine basis.
* advdiff1d: -kappa u'' + c u' = f, kappa = 1e-4, c = 0.1, an
  orthonormalized sine + boundary-layer basis.
* advdiff2d: -kappa (Laplacian u) + c.grad u = f on the unit square,
  kappa = 1e-3, rotating vortex velocity, tensor sine basis.

Each setup carries two run profiles: "paper" runs the full training
sizes and epochs, "desk" is a scaled-down version that finishes on a
laptop. The profiles differ only for the 2D problem, where desk trades
dataset size for optimizer steps: fewer functions and epochs, but small
batches and a compressed decay schedule so the run still converges.
"""

from dataclasses import dataclass
from functools import lru_cache

from .basis import (BoundaryLayerBasis1d, SineBasis1d, TensorSineBasis2d,
                    gram_schmidt)
from .errors import InvalidArgumentError
from .forcing import sample_forcing
from .quadrature import (gauss_legendre, tensor_gauss_legendre,
                         uniform_interior_grid_2d)
from .reference import (VORTEX_TAG, PdeConfig, solve_advdiff_1d,
                        solve_advdiff_2d, solve_diffusion_1d)
from .training import TrainConfig
from .validation import check_choice

PROBLEM_TAGS = ("diffusion1d", "advdiff1d", "advdiff2d")
MODEL_TAGS = ("pg-varmion", "bnet", "l-deeponet")
PROFILES = ("paper", "desk")

_MODEL_SEED_OFFSETS = {"pg-varmion": 10, "bnet": 11, "l-deeponet": 12}


@dataclass(frozen=True)
class RunProfile:
    n_train: int
    n_test: int
    epochs: int
    batch_size: int
    batch_unit: str  # "pairs" or "functions"
    n_r: int
    schedule_interval: int = 100


@dataclass(frozen=True)
class ProblemSetup:
    tag: str
    pde: PdeConfig
    basis: object
    sensor_rule: object
    output_rule: object
    analysis_rule: object
    hidden_dims: tuple
    cutoff_p: float
    final_bias: bool
    base_seed: int
    reference_resolution: int
    profiles: dict

    @property
    def spatial_dim(self):
        return self.pde.spatial_dim

    @property
    def test_splits(self):
        if self.spatial_dim == 1:
            return ("test1", "test2", "test3")
        return ("test1",)

    def profile(self, name):
        check_choice("profile", name, PROFILES)
        return self.profiles[name]

    def forcing_family(self, split):
        """(family tag, length scale or None) for a dataset split."""
        if split in ("train", "test1"):
            return ("fourier1d", None) if self.spatial_dim == 1 \
                else ("fourier2d", None)
        if self.spatial_dim != 1:
            raise InvalidArgumentError(
                f"problem {self.tag} has no split {split!r}")
        if split == "test2":
            return ("grf1d", 0.1)
        if split == "test3":
            return ("grf1d", 0.05)
        raise InvalidArgumentError(f"unknown split {split!r}")

    def draw_forcing(self, split, stream_seed, index):
        family, length_scale = self.forcing_family(split)
        return sample_forcing(family, stream_seed, index,
                              length_scale=length_scale)

    def solve(self, forcing):
        if self.tag == "diffusion1d":
            return solve_diffusion_1d(forcing, self.pde.kappa)
        if self.tag == "advdiff1d":
            return solve_advdiff_1d(forcing, self.pde.kappa, self.pde.velocity)
        return solve_advdiff_2d(forcing, self.pde,
                                resolution=self.reference_resolution)

    def make_model(self, kind, seed=None):
        from .models import BNet, LDeepONet, PgVarmion
        check_choice("model", kind, MODEL_TAGS)
        if seed is None:
            seed = self.base_seed + _MODEL_SEED_OFFSETS[kind]
        if kind == "pg-varmion":
            return PgVarmion(self.basis, self.sensor_rule, self.hidden_dims,
                             self.cutoff_p, final_bias=self.final_bias,
                             seed=seed)
        if kind == "bnet":
            return BNet(self.basis, self.sensor_rule, seed=seed)
        return LDeepONet(self.basis.n_components, self.spatial_dim,
                         self.sensor_rule, self.hidden_dims, self.cutoff_p,
                         final_bias=self.final_bias, seed=seed)

    def train_config(self, profile="paper", seed=None):
        prof = self.profile(profile)
        return TrainConfig(epochs=prof.epochs, batch_size=prof.batch_size,
                           batch_unit=prof.batch_unit, n_r=prof.n_r,
                           schedule_interval=prof.schedule_interval,
                           seed=self.base_seed if seed is None else int(seed))


@lru_cache(maxsize=None)
def get_problem(tag):
    check_choice("problem", tag, PROBLEM_TAGS)
    if tag == "diffusion1d":
        prof = RunProfile(n_train=4000, n_test=2000, epochs=1000,
                          batch_size=8000, batch_unit="pairs", n_r=20)
        return ProblemSetup(
            tag=tag,
            pde=PdeConfig(kappa=0.01, velocity=0.0, spatial_dim=1),
            basis=SineBasis1d(10),
            sensor_rule=gauss_legendre(40),
            output_rule=gauss_legendre(200),
            analysis_rule=gauss_legendre(400),
            hidden_dims=(10, 20, 30),
            cutoff_p=100.0,
            final_bias=True,
            base_seed=1001,
            reference_resolution=0,
            profiles={"paper": prof, "desk": prof},
        )
    if tag == "advdiff1d":
        kappa, c = 1e-4, 0.1
        analysis_rule = gauss_legendre(400)
        raw = BoundaryLayerBasis1d(kappa, c)
        prof = RunProfile(n_train=4000, n_test=2000, epochs=2000,
                          batch_size=12000, batch_unit="pairs", n_r=30)
        return ProblemSetup(
            tag=tag,
            pde=PdeConfig(kappa=kappa, velocity=c, spatial_dim=1),
            basis=gram_schmidt(raw, analysis_rule),
            sensor_rule=gauss_legendre(40),
            output_rule=gauss_legendre(200),
            analysis_rule=analysis_rule,
            hidden_dims=(10, 20, 30, 40, 30),
            cutoff_p=400.0,
            final_bias=True,
            base_seed=2002,
            reference_resolution=0,
            profiles={"paper": prof, "desk": prof},
        )
    return ProblemSetup(
        tag=tag,
        pde=PdeConfig(kappa=1e-3, velocity=VORTEX_TAG, spatial_dim=2),
        basis=TensorSineBasis2d(10),
        sensor_rule=tensor_gauss_legendre(40, 40),
        output_rule=uniform_interior_grid_2d(67),
        analysis_rule=tensor_gauss_legendre(80, 80),
        hidden_dims=(50, 100),
        cutoff_p=100.0,
        final_bias=False,
        base_seed=3003,
        reference_resolution=64,
        profiles={
            "paper": RunProfile(n_train=4000, n_test=2000, epochs=900,
                                batch_size=200, batch_unit="functions", n_r=60),
            "desk": RunProfile(n_train=500, n_test=500, epochs=200,
                               batch_size=10, batch_unit="functions", n_r=60,
                               schedule_interval=20),
        },
    )
