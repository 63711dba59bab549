"""Deterministic Gauss-Legendre quadrature for the mixing integrals.

Everything downstream (mixture densities, CDFs, shrinkage posteriors,
information integrals) reduces to integrals of smooth integrands against a
heterogeneity prior on [0, inf).  Heavy-tailed priors (half-Cauchy, Lomax)
defeat naive truncation, so the half-line is mapped to the unit interval with

    u = tau / (tau + c),    tau = c * u / (1 - u),

where the pivot c is the prior median.  A composite Gauss-Legendre rule
(3 panels of 67 nodes, a 201-node starting rule) is refined by doubling the
uniform panel count until two successive estimates agree to a relative
tolerance.

Far-field evaluations concentrate the integrand within a sliver near an
endpoint of the unit interval (density thirty units out lives at
1 - u ~ c / |theta - y1|), which uniform doubling can never resolve.  The
uniform panels are therefore augmented with dyadic panels toward both
endpoints, deep enough to straddle the caller-declared feature scales; each
dyadic panel spans one octave of tau, over which the integrands here are
spectrally smooth.

Priors with bounded support (uniform) are integrated directly on [0, s] with
the same dyadic refinement toward 0; pushing them through the substitution
would place a density jump mid-panel and stall convergence.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import QuadratureError

#: nodes per Gauss-Legendre panel; 3 uniform panels = the 201-node start
PANEL_ORDER = 67

#: starting number of uniform panels for adaptive refinement
START_PANELS = 3

#: uniform-panel doublings tried before giving up
MAX_DOUBLINGS = 7

#: values below this fraction of the largest component are held to an
#: absolute rather than relative tolerance during refinement
RELATIVE_FLOOR = 1e-12

#: deepest dyadic endpoint refinement (2**-80 ~ 8e-25 of the interval)
_MAX_DEPTH = 80


@lru_cache(maxsize=32)
def _leggauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def panel_nodes(edges: np.ndarray, order: int = PANEL_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights over consecutive panels.

    Parameters
    ----------
    edges : np.ndarray
        Strictly increasing panel boundaries, shape (m + 1,) for m panels.
    order : int
        Nodes per panel.

    Returns
    -------
    (nodes, weights)
        Flat arrays of length ``m * order``.
    """
    edges = np.asarray(edges, dtype=float)
    x, w = _leggauss(order)
    lo = edges[:-1]
    half = 0.5 * np.diff(edges)
    nodes = (lo + half)[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def fixed_quad(f: Callable[[np.ndarray], np.ndarray],
               edges: np.ndarray, order: int = PANEL_ORDER) -> np.ndarray:
    """Integrate ``f`` over the panels given by ``edges`` (no refinement).

    ``f`` maps an array of abscissae to values whose *last* axis matches the
    abscissae; leading axes are integrated componentwise.
    """
    nodes, weights = panel_nodes(edges, order)
    return np.asarray(f(nodes)) @ weights


def _depth_for(fraction: float, minimum: int) -> int:
    """Dyadic depth needed to reach an endpoint sliver of relative width
    ``fraction``, with two octaves of margin."""
    if not (fraction > 0.0) or fraction >= 1.0:
        return minimum
    return int(min(_MAX_DEPTH, max(minimum, math.ceil(-math.log2(fraction)) + 2)))


def _dyadic_edges(a: float, b: float, panels: int,
                  lo_fraction: float, hi_fraction: float) -> np.ndarray:
    """Uniform panel edges on [a, b] plus dyadic refinement toward each end,
    deep enough to straddle features at the given relative distances."""
    width = b - a
    base = int(math.ceil(math.log2(max(panels, 2)))) + 1
    lo_depth = _depth_for(lo_fraction, base)
    hi_depth = _depth_for(hi_fraction, base)
    pieces = [np.linspace(a, b, panels + 1)]
    if lo_depth > base:
        pieces.append(a + width * 0.5 ** np.arange(base, lo_depth + 1))
    if hi_depth > base:
        pieces.append(b - width * 0.5 ** np.arange(base, hi_depth + 1))
    return np.unique(np.concatenate(pieces))


def _refinement_error(new: np.ndarray, old: np.ndarray, abs_floor: float) -> float:
    peak = float(np.max(np.abs(new), initial=0.0))
    if peak == 0.0:
        return 0.0
    scale = np.maximum(np.abs(new), max(RELATIVE_FLOOR * peak, abs_floor))
    return float(np.max(np.abs(new - old) / scale))


def adaptive_quad(f: Callable[[np.ndarray], np.ndarray],
                  a: float, b: float,
                  rel_tol: float = 1e-9,
                  abs_floor: float = 0.0,
                  lo_fraction: float = 0.0,
                  hi_fraction: float = 0.0,
                  start_panels: int = START_PANELS,
                  max_doublings: int = MAX_DOUBLINGS) -> np.ndarray:
    """Integrate ``f`` over [a, b], doubling uniform panels until convergence.

    ``f`` may be vector valued (last axis = abscissae); convergence requires
    every component to be reproduced to ``rel_tol`` relative.  Components
    smaller than 1e-12 of the largest (or smaller than ``abs_floor``, when
    given) are held to a matching absolute tolerance instead.
    ``lo_fraction`` / ``hi_fraction`` declare the relative width of the
    narrowest feature adjacent to each endpoint, controlling the dyadic
    panel refinement there.

    Raises
    ------
    QuadratureError
        If the tolerance is still unmet after ``max_doublings`` doublings;
        the achieved error is reported on the exception.
    """
    panels = start_panels
    previous = None
    err = np.inf
    for _ in range(max_doublings + 1):
        edges = _dyadic_edges(a, b, panels, lo_fraction, hi_fraction)
        estimate = fixed_quad(f, edges)
        if previous is not None:
            err = _refinement_error(estimate, previous, abs_floor)
            if err <= rel_tol:
                return estimate
        previous = estimate
        panels *= 2
    raise QuadratureError("integral did not converge under panel doubling",
                          achieved=err)


def mix_against_prior(f: Callable[[np.ndarray], np.ndarray],
                      prior,
                      rel_tol: float = 1e-9,
                      abs_floor: float = 0.0,
                      inner_scale: float | None = None,
                      outer_scale: float | None = None) -> np.ndarray:
    """Integrate ``f(tau) * prior.density(tau)`` over the prior's support.

    ``prior`` is duck-typed: it must provide ``density(tau_array)``,
    ``quantile(p)`` and ``support_upper`` (``inf`` for half-line families).
    ``f`` maps a tau array to values whose last axis matches tau.

    ``inner_scale`` and ``outer_scale`` are the smallest and largest tau
    values (in tau units) at which ``f`` still has structure; they steer the
    dyadic endpoint refinement.  Omit them for integrands whose features sit
    at the prior's own scale.
    """
    upper = prior.support_upper
    if np.isfinite(upper):
        upper = float(upper)
        lo_frac = inner_scale / upper if inner_scale else 0.0

        def g(tau: np.ndarray) -> np.ndarray:
            return np.asarray(f(tau)) * prior.density(tau)

        return adaptive_quad(g, 0.0, upper, rel_tol=rel_tol, abs_floor=abs_floor,
                             lo_fraction=lo_frac)

    pivot = float(prior.quantile(0.5))
    lo_frac = inner_scale / (inner_scale + pivot) if inner_scale else 0.0
    hi_frac = pivot / (pivot + outer_scale) if outer_scale else 0.0

    def g(u: np.ndarray) -> np.ndarray:
        tau = pivot * u / (1.0 - u)
        jacobian = pivot / (1.0 - u) ** 2
        return np.asarray(f(tau)) * (prior.density(tau) * jacobian)

    return adaptive_quad(g, 0.0, 1.0, rel_tol=rel_tol, abs_floor=abs_floor,
                         lo_fraction=lo_frac, hi_fraction=hi_frac)
