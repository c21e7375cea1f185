"""Parametric copula models: exact CDFs, i.i.d. sampling and reference values.

Supported families: independence (pi), comonotone (m), countermonotone (w),
Gaussian, Gumbel, the half-square ordinal sum (2*Pi on [0,1/2]^2, min
elsewhere) and the noisy-parabola regression model y = (x-1/2)^2 + sigma*z,
which is sampling-only.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from ._normal import bvn_cdf, norm_ppf

__all__ = [
    "CopulaModel", "UnsupportedModelError", "UnsupportedPairError",
    "independence", "comonotone", "countermonotone", "gaussian", "gumbel",
    "ordinal_sum_half_pi", "noisy_parabola", "parse_model",
    "cdf", "sample", "analytic_value",
]


class UnsupportedModelError(ValueError):
    """The requested operation is not defined for this model."""


class UnsupportedPairError(ValueError):
    """No published formula for this (model, measure) pair."""


_KINDS = ("pi", "m", "w", "gauss", "gumbel", "ordsum", "parabola")


@dataclass(frozen=True)
class CopulaModel:
    kind: str
    param: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown copula kind {self.kind!r}")
        if self.kind == "gauss":
            if self.param is None or not -1.0 < self.param < 1.0:
                raise ValueError("Gaussian correlation must lie strictly inside (-1, 1)")
        elif self.kind == "gumbel":
            if self.param is None or self.param < 1.0:
                raise ValueError("Gumbel parameter must satisfy theta >= 1")
        elif self.kind == "parabola":
            if self.param is None or self.param < 0.0:
                raise ValueError("noise scale sigma must be >= 0")
        elif self.param is not None:
            raise ValueError(f"model {self.kind!r} takes no parameter")

    @property
    def has_cdf(self) -> bool:
        return self.kind != "parabola"

    def spec_string(self) -> str:
        if self.kind == "gauss":
            return f"gauss:p={self.param:g}"
        if self.kind == "gumbel":
            return f"gumbel:theta={self.param:g}"
        if self.kind == "parabola":
            return f"parabola:sigma={self.param:g}"
        return self.kind


def independence() -> CopulaModel:
    return CopulaModel("pi")


def comonotone() -> CopulaModel:
    return CopulaModel("m")


def countermonotone() -> CopulaModel:
    return CopulaModel("w")


def gaussian(p: float) -> CopulaModel:
    return CopulaModel("gauss", float(p))


def gumbel(theta: float) -> CopulaModel:
    return CopulaModel("gumbel", float(theta))


def ordinal_sum_half_pi() -> CopulaModel:
    return CopulaModel("ordsum")


def noisy_parabola(sigma: float) -> CopulaModel:
    return CopulaModel("parabola", float(sigma))


def parse_model(text: str) -> CopulaModel:
    """Parse a CLI model string such as ``gauss:p=0.75`` or ``pi``."""
    name, _, args = text.strip().partition(":")
    name = name.lower()
    if name in ("pi", "m", "w", "ordsum"):
        if args:
            raise ValueError(f"model {name!r} takes no parameter")
        return CopulaModel(name)
    if name in ("gauss", "gumbel", "parabola"):
        expected = {"gauss": "p", "gumbel": "theta", "parabola": "sigma"}[name]
        key, _, value = args.partition("=")
        if key.strip() != expected or not value:
            raise ValueError(f"model {name!r} needs {expected}=<value>")
        return CopulaModel(name, float(value))
    raise ValueError(f"unknown model {text!r}")


def cdf(model: CopulaModel, u, v):
    """Copula CDF C(u, v); vectorized over u and v."""
    if not model.has_cdf:
        raise UnsupportedModelError("the noisy parabola is a sampling-only model")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    scalar = u.ndim == 0 and v.ndim == 0
    u, v = np.broadcast_arrays(u, v)
    u, v = np.atleast_1d(u).copy(), np.atleast_1d(v).copy()
    if np.any((u < 0) | (u > 1)) or np.any((v < 0) | (v > 1)):
        raise ValueError("arguments must lie in the unit square")

    if model.kind == "pi":
        out = u * v
    elif model.kind == "m":
        out = np.minimum(u, v)
    elif model.kind == "w":
        out = np.maximum(u + v - 1.0, 0.0)
    elif model.kind == "ordsum":
        out = np.where((u <= 0.5) & (v <= 0.5), 2.0 * u * v, np.minimum(u, v))
    elif model.kind == "gumbel":
        theta = model.param
        out = np.zeros_like(u)
        pos = (u > 0) & (v > 0)
        lu = -np.log(u[pos])
        lv = -np.log(v[pos])
        out[pos] = np.exp(-(lu ** theta + lv ** theta) ** (1.0 / theta))
    else:  # gauss
        out = np.zeros_like(u)
        interior = (u > 0) & (v > 0) & (u < 1) & (v < 1)
        out[interior] = bvn_cdf(norm_ppf(u[interior]), norm_ppf(v[interior]), model.param)
        out[(u == 1)] = v[(u == 1)]
        out[(v == 1)] = u[(v == 1)]
        out[(u == 0) | (v == 0)] = 0.0
    return float(out[0]) if scalar else out


def _stable_frailty(theta: float, size: int, rng: np.random.Generator) -> np.ndarray:
    # Chambers-Mallows-Stuck positive stable with Laplace transform exp(-t^(1/theta))
    alpha = 1.0 / theta
    angle = rng.uniform(0.0, np.pi, size)
    expo = rng.exponential(1.0, size)
    a = np.sin(alpha * angle) / np.sin(angle) ** (1.0 / alpha)
    b = (np.sin((1.0 - alpha) * angle) / expo) ** ((1.0 - alpha) / alpha)
    return a * b


def sample(model: CopulaModel, n: int, seed=None) -> np.ndarray:
    """Draw n i.i.d. pairs; returns an (n, 2) array, deterministic given seed."""
    if n < 1:
        raise ValueError("sample size must be >= 1")
    rng = np.random.default_rng(seed)
    if model.kind == "pi":
        return rng.random((n, 2))
    if model.kind == "m":
        u = rng.random(n)
        return np.column_stack((u, u))
    if model.kind == "w":
        u = rng.random(n)
        return np.column_stack((u, 1.0 - u))
    if model.kind == "gauss":
        p = model.param
        z = rng.standard_normal((n, 2))
        return np.column_stack((z[:, 0], p * z[:, 0] + np.sqrt(1.0 - p * p) * z[:, 1]))
    if model.kind == "gumbel":
        theta = model.param
        e = rng.exponential(1.0, (n, 2))
        if theta == 1.0:
            return np.exp(-e)
        frailty = _stable_frailty(theta, n, rng)
        return np.exp(-(e / frailty[:, None]) ** (1.0 / theta))
    if model.kind == "ordsum":
        upper = rng.random(n) < 0.5
        a = rng.random((n, 2))
        pairs = 0.5 * a
        diag = 0.5 + 0.5 * a[:, 0]
        pairs[upper, 0] = diag[upper]
        pairs[upper, 1] = diag[upper]
        return pairs
    # noisy parabola
    x = rng.random(n)
    z = rng.standard_normal(n)
    return np.column_stack((x, (x - 0.5) ** 2 + model.param * z))


def _gumbel_rho(theta: float) -> float:
    def integrand(t):
        return (1.0 + (t ** theta + (1.0 - t) ** theta) ** (1.0 / theta)) ** (-2.0)

    value, _ = quad(integrand, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12)
    return 12.0 * value - 3.0


def analytic_value(model: CopulaModel, measure) -> float:
    """Published value of a dependence measure for a model, when one exists."""
    from .measures import MeasureKind

    kind = MeasureKind.parse(measure)
    name = kind.name
    if model.kind == "pi" or (model.kind == "gauss" and model.param == 0.0) or \
            (model.kind == "gumbel" and model.param == 1.0):
        return 0.0
    if model.kind == "m":
        return 1.0
    if model.kind == "w":
        if name in ("rho", "tau", "gini", "blomqvist"):
            return -1.0
        return 1.0
    if model.kind == "gauss":
        p = model.param
        if name == "rho":
            return 6.0 / np.pi * np.arcsin(0.5 * p)
        if name == "tau":
            return 2.0 / np.pi * np.arcsin(p)
        if name == "r":
            return 3.0 / np.pi * np.arcsin(0.5 * (1.0 + p * p)) - 0.5
    if model.kind == "gumbel":
        theta = model.param
        if name == "tau":
            return (theta - 1.0) / theta
        if name == "rho":
            return _gumbel_rho(theta)
    if model.kind == "ordsum" and name == "blomqvist":
        return 1.0
    raise UnsupportedPairError(f"no published value for ({model.spec_string()}, {kind})")
