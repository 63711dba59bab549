"""Predictive prior for a new study's effect, built from a single study.

Under the normal hierarchical model with an improper uniform prior on the
overall mean, a single estimate (y1, s1) leaves the heterogeneity posterior
equal to its prior, and the predictive distribution for a second study's
effect is the normal scale mixture

    theta_2 | tau  ~  Normal(y1, s1^2 + 2 tau^2),    tau ~ tau_prior.

:class:`MapPrior` represents that mixture exactly (location y1, base variance
s1^2, mixing prior on tau) and evaluates density, CDF, quantiles, variance
and draws by quadrature over tau.  Heavy-tailed mixing priors are fully
supported; only the variance becomes infinite for them, every other
evaluation stays finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import InvalidParameterError, QuadratureError
from .priors import HeterogeneityPrior
from .quadrature import mix_against_prior
from .study import StudyEstimate

__all__ = ["MapPrior", "conditional_moments"]

#: grid points evaluated per mixing-quadrature call, bounds peak memory
_BLOCK = 512

#: probability tolerance for quantile inversion
_QUANTILE_TOL = 1e-8


def conditional_moments(study: StudyEstimate, tau: float) -> tuple[float, float]:
    """Predictive mean and variance for a new effect at fixed heterogeneity.

    The mean is the study's estimate; the variance adds the estimation
    variance and twice the squared heterogeneity (one tau^2 for the
    uncertainty about the underlying mean, one for the new study's own
    deviation from it).
    """
    if tau < 0:
        raise InvalidParameterError(f"heterogeneity must be >= 0, got {tau!r}")
    return study.y, study.variance + 2.0 * tau ** 2


@dataclass(frozen=True)
class MapPrior:
    """Normal scale mixture prior for a new study's effect.

    Immutable; all evaluations are pure functions, safe for concurrent use.
    """

    location: float
    base_variance: float
    tau_prior: HeterogeneityPrior

    def __post_init__(self):
        if not (math.isfinite(self.location)):
            raise InvalidParameterError(f"location must be finite, got {self.location!r}")
        if not (math.isfinite(self.base_variance) and self.base_variance > 0):
            raise InvalidParameterError(
                f"base variance must be > 0, got {self.base_variance!r}")

    @classmethod
    def from_study(cls, study: StudyEstimate, tau_prior: HeterogeneityPrior) -> "MapPrior":
        """Predictive prior contributed by ``study`` under ``tau_prior``."""
        return cls(location=study.y, base_variance=study.variance, tau_prior=tau_prior)

    @property
    def base_se(self) -> float:
        return math.sqrt(self.base_variance)

    def _mixture_variances(self, tau: np.ndarray) -> np.ndarray:
        return self.base_variance + 2.0 * np.square(tau)

    # -- pointwise evaluations -------------------------------------------

    def _map_blocks(self, kernel, theta, components: int | None = None,
                    abs_floor: float = 0.0):
        """Evaluate a tau-quadrature kernel over theta in memory-bounded blocks.

        ``kernel(d_column)`` returns a function of tau suitable for
        :func:`mix_against_prior`, where ``d_column`` is a (k, 1) array of
        offsets from the location.  The integrand's tau feature scales are
        derived from each block: structure no finer than half the base
        standard error, none beyond the largest offset.
        """
        theta = np.asarray(theta, dtype=float)
        flat = np.atleast_1d(theta).ravel()
        shape = (flat.size,) if components is None else (components, flat.size)
        out = np.empty(shape, dtype=float)
        for start in range(0, flat.size, _BLOCK):
            block = flat[start:start + _BLOCK]
            d = (block - self.location)[:, None]
            piece = mix_against_prior(
                kernel(d), self.tau_prior, abs_floor=abs_floor,
                inner_scale=0.5 * self.base_se,
                outer_scale=float(np.max(np.abs(d))) + self.base_se)
            out[..., start:start + block.size] = piece
        if theta.ndim == 0:
            return out[..., 0]
        return out.reshape(shape[:-1] + theta.shape)

    def density(self, theta):
        """Mixture density, symmetric about the location; vectorized."""
        def kernel(d):
            dsq = np.square(d)

            def f(tau):
                v = self._mixture_variances(tau)
                return np.exp(-0.5 * dsq / v) / np.sqrt(2.0 * math.pi * v)

            return f

        result = self._map_blocks(kernel, theta)
        return float(result) if np.ndim(result) == 0 else result

    def cdf(self, theta):
        """Mixture CDF; evaluated through the nearer tail for accuracy."""
        theta = np.asarray(theta, dtype=float)

        def kernel(d):
            a = -np.abs(d)

            def f(tau):
                v = self._mixture_variances(tau)
                return special.ndtr(a / np.sqrt(v))

            return f

        # tail probabilities below 1e-13 are indistinguishable from zero for
        # every consumer (quantile tolerance is 1e-8), so the refinement may
        # stop on an absolute criterion there
        tail = self._map_blocks(kernel, theta, abs_floor=1e-13)
        result = np.where(theta <= self.location, tail, 1.0 - tail)
        return float(result) if result.ndim == 0 else result

    def log_density_curvature(self, theta):
        """Second derivative of the log density, by differentiation under
        the integral; used as the analytic cross-check for finite-difference
        local-information estimates."""
        def kernel(d):
            dsq = np.square(d)

            def f(tau):
                v = self._mixture_variances(tau)
                phi = np.exp(-0.5 * dsq / v) / np.sqrt(2.0 * math.pi * v)
                g1 = -(d / v) * phi
                g2 = (dsq / np.square(v) - 1.0 / v) * phi
                return np.stack([phi, g1, g2])

            return f

        p, p1, p2 = self._map_blocks(kernel, theta, components=3)
        with np.errstate(divide="ignore", invalid="ignore"):
            curv = p2 / p - np.square(p1 / p)
        return float(curv) if np.ndim(curv) == 0 else curv

    # -- quantiles --------------------------------------------------------

    def quantiles(self, p) -> np.ndarray:
        """Vectorized inverse CDF by bracketed bisection.

        Converges to 1e-8 in probability; the initial bracket is grown from
        the base standard error and the tau prior's matching tail quantile,
        then widened geometrically if needed (heavy-tailed mixing priors put
        extreme quantiles tens of units out).
        """
        p = np.asarray(p, dtype=float)
        if np.any((p <= 0.0) | (p >= 1.0)):
            raise InvalidParameterError("quantile needs probabilities in (0, 1)")
        flat = np.atleast_1d(p).ravel()

        tail_p = np.maximum(flat, 1.0 - flat)
        half = 10.0 * (self.base_se + 2.0 * np.asarray(self.tau_prior.quantile(tail_p)))
        lo = self.location - half
        hi = self.location + half
        for _ in range(60):
            too_high = self.cdf(lo) > flat
            too_low = self.cdf(hi) < flat
            if not (too_high.any() or too_low.any()):
                break
            lo = np.where(too_high, self.location - 2.0 * (self.location - lo), lo)
            hi = np.where(too_low, self.location + 2.0 * (hi - self.location), hi)
        else:
            raise QuadratureError("could not bracket mixture quantiles")

        mid = 0.5 * (lo + hi)
        err = np.inf
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            c = self.cdf(mid)
            err = float(np.max(np.abs(c - flat)))
            if err <= _QUANTILE_TOL:
                break
            go_up = c < flat
            lo = np.where(go_up, mid, lo)
            hi = np.where(go_up, hi, mid)
        else:
            raise QuadratureError("quantile bisection stalled", achieved=err)

        exact_median = flat == 0.5
        if exact_median.any():
            mid = np.where(exact_median, self.location, mid)
        return mid.reshape(p.shape) if p.ndim else mid[0]

    def quantile(self, p: float) -> float:
        return float(self.quantiles(p))

    # -- moments and sampling ---------------------------------------------

    def variance(self) -> float:
        """Marginal variance: base variance plus twice E[tau^2]; ``inf``
        when the mixing prior's second moment does not exist."""
        second = self.tau_prior.mean_sq()
        return self.base_variance + 2.0 * second if math.isfinite(second) else math.inf

    def sd(self) -> float:
        return math.sqrt(self.variance())

    def sample(self, count: int, seed: int) -> np.ndarray:
        """Deterministic draws: inverse-CDF tau, then a normal given tau."""
        if count < 1:
            raise InvalidParameterError(f"need count >= 1, got {count!r}")
        rng = np.random.default_rng(seed)
        u = np.maximum(rng.random(count), np.finfo(float).tiny)
        tau = np.asarray(self.tau_prior.quantile(u))
        sd = np.sqrt(self._mixture_variances(tau))
        return self.location + rng.standard_normal(count) * sd
