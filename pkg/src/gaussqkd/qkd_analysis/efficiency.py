"""
Protocol efficiency: the probability per shared state of an accepted,
correctly correlated bit.

The integrand is ``(1 - eps(|xa|, |xb|)) * m(xa, xb)`` over every outcome pair
with ``|xb| - |xa|`` inside the acceptance interval.  Since ``eps`` and the
window see only absolute values, the four sign quadrants are folded onto
``xa, xb > 0``, where the folded density is ``2 (m(xa, xb) + m(xa, -xb))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import erfc

from ..sampling import map_blocks
from .closed_forms import (
    StdSymmetricState,
    accept_interval,
    check_attack,
    error_rate,
    xx_marginal,
)


class QuadratureError(RuntimeError):
    """The quadrature's error estimate exceeds the requested tolerance."""


@dataclass(frozen=True)
class QuadSpec:
    """Truncation and accuracy settings for the efficiency integral.

    ``radius_sd`` sets the truncation radius in standard deviations of the
    single-quadrature marginal (``sqrt(lam / 2)``).  ``nodes`` is the
    Gauss-Legendre order per panel for ``method="gauss"``.
    """

    radius_sd: float = 6.0
    rtol: float = 1e-6
    atol: float = 1e-12
    method: str = "adaptive"
    nodes: int = 48
    panels: int = 4

    def __post_init__(self):
        if self.method not in ("adaptive", "gauss"):
            raise ValueError("quadrature method must be 'adaptive' or 'gauss'")
        if self.radius_sd <= 0 or self.rtol <= 0 or self.nodes < 4 or self.panels < 1:
            raise ValueError("invalid quadrature settings")


@dataclass(frozen=True)
class EfficiencyEstimate:
    value: float
    method: str
    error_bound: float
    attack: str
    tail_mass: float = 0.0
    n_samples: int | None = None
    seed: int | None = None


def folded_integrand(s: StdSymmetricState, xa, xb):
    """``(1 - eps) * m`` summed over the four sign quadrants, for ``xa, xb >= 0``."""
    dens = xx_marginal(s, xa, xb) + xx_marginal(s, xa, -np.asarray(xb))
    return 2 * (1 - error_rate(s, xa, xb)) * dens


def _window(s: StdSymmetricState, attack: str) -> tuple[float, float]:
    return accept_interval(s, 1.0, attack).interval_unit


def _segments(lo_u, hi_u, radius, alice_window):
    """Split Alice's range where Bob's limits change form."""
    a0, a1 = 0.0, radius
    if alice_window is not None:
        a0, a1 = max(a0, alice_window[0]), min(a1, alice_window[1])
    cuts = {a0, a1}
    for slope in (1 + hi_u, 1 + lo_u):
        c = radius / slope if slope > 0 else math.inf
        if a0 < c < a1:
            cuts.add(c)
    pts = sorted(cuts)
    return [(u, v) for u, v in zip(pts[:-1], pts[1:]) if v > u]


def _tail_mass(radius_sd: float) -> float:
    # both quadratures beyond the truncation radius, either sign
    return 2 * float(erfc(radius_sd / math.sqrt(2)))


def _adaptive(s, lo_u, hi_u, radius, segs, spec: QuadSpec):
    # ask QUADPACK for headroom: its estimates across segments add up
    share = 4 * max(len(segs), 1)
    total, err = 0.0, 0.0
    for a0, a1 in segs:
        val, e = integrate.dblquad(
            lambda xb, xa: folded_integrand(s, xa, xb),
            a0,
            a1,
            lambda xa: xa * (1 + lo_u),
            lambda xa: max(xa * (1 + lo_u), min(xa * (1 + hi_u), radius)),
            epsabs=spec.atol / share,
            epsrel=spec.rtol / share,
        )
        total += val
        err += e
    return total, err


def _gauss_rule(a, b, nodes, panels):
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, panels + 1)
    half = (edges[1:] - edges[:-1]) / 2
    mid = (edges[1:] + edges[:-1]) / 2
    pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    return pts, wts


def _gauss(s, lo_u, hi_u, radius, segs, nodes, panels):
    total = 0.0
    u, wu = _gauss_rule(0.0, 1.0, nodes, panels)
    for a0, a1 in segs:
        xa, wa = _gauss_rule(a0, a1, nodes, panels)
        lo = xa * (1 + lo_u)
        hi = np.maximum(lo, np.minimum(xa * (1 + hi_u), radius))
        width = hi - lo
        xb = lo[:, None] + width[:, None] * u[None, :]
        vals = folded_integrand(s, xa[:, None], xb)
        total += float(np.sum(wa * width * (vals @ wu)))
    return total


def efficiency(
    s: StdSymmetricState,
    attack: str = "individual",
    quad: QuadSpec | None = None,
    alice_window: tuple[float, float] | None = None,
) -> EfficiencyEstimate:
    """Deterministic quadrature of the efficiency integral.

    ``alice_window`` optionally restricts ``|xa|`` to ``[lo, hi]``, which is
    what a simulator binning Alice's outcomes measures.

    Raises :class:`QuadratureError` when the error estimate exceeds
    ``max(rtol * value, atol)``.
    """
    check_attack(attack)
    quad = quad or QuadSpec()
    lo_u, hi_u = _window(s, attack)
    radius = quad.radius_sd * math.sqrt(s.lam / 2)
    segs = _segments(lo_u, hi_u, radius, alice_window)
    tail = _tail_mass(quad.radius_sd)
    if quad.method == "adaptive":
        value, err = _adaptive(s, lo_u, hi_u, radius, segs, quad)
    else:
        value = _gauss(s, lo_u, hi_u, radius, segs, quad.nodes, quad.panels)
        coarse = _gauss(s, lo_u, hi_u, radius, segs, quad.nodes // 2, quad.panels)
        err = abs(value - coarse)
    if err > max(quad.rtol * abs(value), quad.atol):
        raise QuadratureError(
            f"efficiency quadrature did not converge: estimate {value:.6g}, error {err:.3g}"
        )
    return EfficiencyEstimate(
        value=value, method=quad.method, error_bound=err + tail, attack=attack, tail_mass=tail
    )


def efficiency_mc(
    s: StdSymmetricState,
    attack: str = "individual",
    n_samples: int = 10**7,
    seed: int = 0,
    alice_window: tuple[float, float] | None = None,
    workers: int = 1,
) -> EfficiencyEstimate:
    """Monte Carlo estimate: sample outcome pairs, keep those in the window, average ``1 - eps``.

    ``error_bound`` is the standard error of the mean.
    """
    check_attack(attack)
    if n_samples < 2:
        raise ValueError("need at least two samples")
    lo_u, hi_u = _window(s, attack)

    def block(x: np.ndarray) -> tuple[float, float]:
        axa, axb = np.abs(x[:, 0]), np.abs(x[:, 1])
        diff = axb - axa
        keep = (diff >= lo_u * axa) & (diff <= hi_u * axa)
        if alice_window is not None:
            keep &= (axa >= alice_window[0]) & (axa <= alice_window[1])
        w = np.where(keep, 1 - error_rate(s, axa, axb), 0.0)
        return float(w.sum()), float(np.square(w).sum())

    sums = map_blocks(s.lam, s.cx, n_samples, seed, block, workers=workers)
    total = math.fsum(t for t, _ in sums)
    total_sq = math.fsum(q for _, q in sums)
    mean = total / n_samples
    var = max(total_sq / n_samples - mean**2, 0.0) * n_samples / (n_samples - 1)
    return EfficiencyEstimate(
        value=mean,
        method="monte-carlo",
        error_bound=math.sqrt(var / n_samples),
        attack=attack,
        n_samples=n_samples,
        seed=seed,
    )
