"""Closed-form solutions of -kappa u'' + c u' = f on (0, 1), u(0) = u(1) = 0,
for trigonometric right-hand sides, plus the adjoint counterpart.

Fields are represented explicitly as

    sum_m [alpha_m sin(w_m x) + beta_m cos(w_m x)]
    + const + slope * x
    + ce1 * exp(r1 * (x - s1)) + ce2 * exp(r2 * (x - s2))

with anchors s chosen so every exponent is <= 0 on [0, 1]; nothing here can
overflow no matter how small kappa gets. The advection rate a = c / kappa
may be 1000 or more in the experiments, which is why all boundary matching
is done with expm1 and anchored exponentials.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class Exp1dField:
    """Explicit trig + constant + linear + two-exponential 1D field."""

    omegas: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    const: float = 0.0
    slope: float = 0.0
    ce1: float = 0.0
    r1: float = 0.0
    s1: float = 0.0
    ce2: float = 0.0
    r2: float = 0.0
    s2: float = 0.0

    def __post_init__(self):
        for name in ("omegas", "alpha", "beta"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        arg = np.multiply.outer(x, self.omegas)
        out = np.sin(arg) @ self.alpha + np.cos(arg) @ self.beta
        out = out + self.const + self.slope * x
        if self.ce1 != 0.0:
            out = out + self.ce1 * np.exp(self.r1 * (x - self.s1))
        if self.ce2 != 0.0:
            out = out + self.ce2 * np.exp(self.r2 * (x - self.s2))
        return out

    def derivative(self):
        """Termwise exact derivative, again an Exp1dField."""
        return Exp1dField(self.omegas, -self.beta * self.omegas,
                          self.alpha * self.omegas, const=self.slope,
                          ce1=self.ce1 * self.r1, r1=self.r1, s1=self.s1,
                          ce2=self.ce2 * self.r2, r2=self.r2, s2=self.s2)


def _particular_trig(omegas, a_sin, a_cos, kappa, c):
    """Particular solution coefficients for each trig mode.

    For f = A_s sin(w x) + A_c cos(w x), u_p = alpha sin + beta cos solves
    kappa w^2 alpha - c w beta = A_s and kappa w^2 beta + c w alpha = A_c.
    """
    w = omegas
    den = (kappa * w * w) ** 2 + (c * w) ** 2
    alpha = (kappa * w * w * a_sin + c * w * a_cos) / den
    beta = (kappa * w * w * a_cos - c * w * a_sin) / den
    return alpha, beta


def solve_forward_trig(omegas, a_sin, a_cos, kappa, c):
    """Exact solution of -kappa u'' + c u' = sum_m [a_sin sin + a_cos cos].

    Homogeneous part: A + B x when c = 0, else A + B exp(a (x - anchor))
    with a = c / kappa and the anchor at the outflow boundary so the
    exponential is bounded.
    """
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    a_sin = np.atleast_1d(np.asarray(a_sin, dtype=float))
    a_cos = np.atleast_1d(np.asarray(a_cos, dtype=float))
    if kappa <= 0.0:
        raise InvalidArgumentError(f"kappa must be positive, got {kappa}")
    alpha, beta = _particular_trig(omegas, a_sin, a_cos, kappa, c)
    up0 = float(np.sum(beta))
    up1 = float(np.sin(omegas) @ alpha + np.cos(omegas) @ beta)
    if c == 0.0:
        # A + B x with u(0) = u(1) = 0
        const = -up0
        slope = up0 - up1
        return Exp1dField(omegas, alpha, beta, const=const, slope=slope)
    a = c / kappa
    if c > 0.0:
        # A + B exp(a (x - 1)); boundary layer at x = 1
        B = (up0 - up1) / (-np.expm1(-a))
        A = -up1 - B
        return Exp1dField(omegas, alpha, beta, const=A, ce1=B, r1=a, s1=1.0)
    # c < 0: A + B exp(a x); layer at x = 0 (a < 0 keeps it bounded)
    B = (up1 - up0) / (-np.expm1(a))
    A = -up0 - B
    return Exp1dField(omegas, alpha, beta, const=A, ce1=B, r1=a, s1=0.0)


def solve_adjoint_trig(rhs, kappa, c):
    """Exact solution of -kappa psi'' - c psi' = rhs, psi(0) = psi(1) = 0.

    rhs must be an Exp1dField with at most trig + const + one exponential
    term of rate a = c / kappa (the shape of every forward solution and of
    every trial-basis component). The result gains a linear term from the
    constant part of rhs and a decaying exponential from the homogeneous
    part; pure diffusion only supports trig right-hand sides.
    """
    if not isinstance(rhs, Exp1dField):
        raise InvalidArgumentError("rhs must be an Exp1dField")
    if rhs.slope != 0.0 or rhs.ce2 != 0.0:
        raise InvalidArgumentError("rhs outside the solvable closed-form family")
    if c == 0.0:
        if rhs.const != 0.0 or rhs.ce1 != 0.0:
            raise InvalidArgumentError("pure diffusion adjoint needs a trig rhs")
        w = rhs.omegas
        return Exp1dField(w, rhs.alpha / (kappa * w * w), rhs.beta / (kappa * w * w))
    a = c / kappa
    if rhs.ce1 != 0.0 and not np.isclose(rhs.r1, a):
        raise InvalidArgumentError("rhs exponential rate must equal c/kappa")
    # adjoint operator on trig modes: same 2x2 system with c -> -c
    alpha, beta = _particular_trig(rhs.omegas, rhs.alpha, rhs.beta, kappa, -c)
    # constant A0 -> particular -A0 x / c
    slope = -rhs.const / c
    # B1 exp(a (x - s)) -> particular -B1/(2 c a) exp(a (x - s))
    ce1 = -rhs.ce1 / (2.0 * c * a) if rhs.ce1 != 0.0 else 0.0
    # particular values at the endpoints
    def part(x):
        arg = x * rhs.omegas
        v = float(np.sin(arg) @ alpha + np.cos(arg) @ beta) + slope * x
        if ce1 != 0.0:
            v += ce1 * np.exp(a * (x - rhs.s1))
        return v
    p0, p1 = part(0.0), part(1.0)
    # homogeneous: A + B exp(-a (x - anchor)), anchored so the exponent
    # stays non-positive (left layer for c > 0)
    s2 = 0.0 if c > 0.0 else 1.0
    e0 = np.exp(-a * (0.0 - s2))
    e1 = np.exp(-a * (1.0 - s2))
    B = (p1 - p0) / (e0 - e1)
    A = -p0 - B * e0
    return Exp1dField(rhs.omegas, alpha, beta, const=A, slope=slope,
                      ce1=ce1, r1=a, s1=rhs.s1, ce2=B, r2=-a, s2=s2)
