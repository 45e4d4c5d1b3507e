"""
Closed-form quantities for symmetric 1x1 Gaussian states in standard form.

All outcome-dependent functions accept scalars or numpy arrays for the
quadrature outcomes ``x0a``, ``x0b``; only their absolute values enter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ..gaussian_core import (
    PHYSICAL_TOL,
    GaussianState,
    NonPhysicalError,
    is_physical,
    log_negativity,
    purity,
)

ATTACKS = ("individual", "coherent")
PURE_TOL = 1e-12


class PPTStateError(ValueError):
    """The state has positive partial transpose, so no secure interval exists."""


class CoherentInsecureError(ValueError):
    """The state fails ``lam - (lam + cx)(lam - cx)(lam - cp) > 0``."""


def check_attack(attack: str) -> str:
    if attack not in ATTACKS:
        raise ValueError(f"attack must be one of {ATTACKS}, got {attack!r}")
    return attack


def positivity_violations(lam: float, cx: float, cp: float, tol: float = PHYSICAL_TOL) -> list[str]:
    """Names of the violated inequalities among the two that make the standard form physical."""
    out = []
    if (lam - cx) * (lam + cp) < 1 - tol:
        out.append(f"(lambda - cx)(lambda + cp) >= 1 [got {(lam - cx) * (lam + cp):.6g}]")
    if (lam - cp) * (lam + cx) < 1 - tol:
        out.append(f"(lambda - cp)(lambda + cx) >= 1 [got {(lam - cp) * (lam + cx):.6g}]")
    return out


def standard_form_cm(lam: float, cx: float, cp: float) -> np.ndarray:
    return np.array(
        [
            [lam, 0.0, cx, 0.0],
            [0.0, lam, 0.0, -cp],
            [cx, 0.0, lam, 0.0],
            [0.0, -cp, 0.0, lam],
        ]
    )


@dataclass(frozen=True)
class StdSymmetricState:
    """Symmetric two-mode state ``(lam, cx, cp)`` in standard form.

    Construction checks ``lam > 0``, ``cx >= cp >= 0`` and ``cm + iJ >= 0``;
    a :class:`NonPhysicalError` names the violated inequality.
    """

    lam: float
    cx: float
    cp: float
    tol: float = field(default=PHYSICAL_TOL, repr=False, compare=False)

    def __post_init__(self):
        for name in ("lam", "cx", "cp"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, val)
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if not self.cx >= self.cp >= 0:
            raise ValueError("standard form requires cx >= cp >= 0")
        if not is_physical(self.cm, self.tol):
            bad = positivity_violations(self.lam, self.cx, self.cp, self.tol)
            raise NonPhysicalError("non-physical state: violates " + " and ".join(bad or ["cm + iJ >= 0"]))

    @classmethod
    def two_mode_squeezed(cls, r: float) -> "StdSymmetricState":
        return cls(math.cosh(2 * r), math.sinh(2 * r), math.sinh(2 * r))

    @property
    def cm(self) -> np.ndarray:
        return standard_form_cm(self.lam, self.cx, self.cp)

    @property
    def ppt_product(self) -> float:
        """``(lam - cx)(lam - cp)``; the state is NPPT iff this is below one."""
        return (self.lam - self.cx) * (self.lam - self.cp)

    @property
    def nppt(self) -> bool:
        return self.ppt_product < 1.0

    @property
    def coherent_margin(self) -> float:
        """``lam - (lam + cx)(lam - cx)(lam - cp)``, positive when finite coherent attacks can be beaten."""
        lam, cx, cp = self.lam, self.cx, self.cp
        return lam - (lam + cx) * (lam - cx) * (lam - cp)

    @property
    def coherent_ok(self) -> bool:
        return self.nppt and self.coherent_margin > 0

    @property
    def purity(self) -> float:
        return purity(self.cm, self.tol)

    @property
    def log_negativity(self) -> float:
        return log_negativity(self.cm, (0,))

    @property
    def is_pure(self) -> bool:
        ing = eve_ingredients(self)
        return abs(ing.a) < PURE_TOL and abs(ing.b) < PURE_TOL


def _abs_pair(x0a, x0b):
    return np.abs(np.asarray(x0a, dtype=float)), np.abs(np.asarray(x0b, dtype=float))


def _out(val):
    return float(val) if np.ndim(val) == 0 else val


def _require_lam_gt_cx(s: StdSymmetricState) -> float:
    gap = s.lam**2 - s.cx**2
    if s.lam <= s.cx or gap <= 0:
        raise ValueError("requires lambda > cx")
    return gap


def _prefactor(s: StdSymmetricState, sigma: float) -> tuple[float, float]:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    lam_s = s.lam + sigma**2
    den = lam_s**2 - s.cx**2
    if den <= 0:
        raise ValueError("degenerate denominator (lambda + sigma^2)^2 = cx^2")
    k = 4 * sigma**2 / (math.sqrt(den) * math.sqrt((s.lam * sigma**2 + 1) ** 2 - s.cp**2 * sigma**4))
    return k, den


def coincidence_prob(s: StdSymmetricState, x0a, x0b, sigma: float):
    """p(0,0) = p(1,1): overlap with a product of width-``sigma`` states at ``(+|x0a|, +|x0b|)``."""
    k, den = _prefactor(s, sigma)
    a, b = _abs_pair(x0a, x0b)
    lam_s = s.lam + sigma**2
    return _out(k * np.exp((2 * a * b * s.cx - lam_s * (a**2 + b**2)) / den))


def anticoincidence_prob(s: StdSymmetricState, x0a, x0b, sigma: float):
    """p(0,1) = p(1,0): as :func:`coincidence_prob` with Bob's sign reversed."""
    k, den = _prefactor(s, sigma)
    a, b = _abs_pair(x0a, x0b)
    lam_s = s.lam + sigma**2
    return _out(k * np.exp((-2 * a * b * s.cx - lam_s * (a**2 + b**2)) / den))


def error_rate(s: StdSymmetricState, x0a, x0b):
    """Sign-mismatch probability for sharp quadrature outcomes (the ``sigma -> 0`` limit)."""
    gap = _require_lam_gt_cx(s)
    a, b = _abs_pair(x0a, x0b)
    return _out(expit(-4 * s.cx * a * b / gap))


def error_odds(s: StdSymmetricState, x0a, x0b):
    """``eps / (1 - eps)``, computed without cancellation."""
    gap = _require_lam_gt_cx(s)
    a, b = _abs_pair(x0a, x0b)
    return _out(np.exp(-4 * s.cx * a * b / gap))


@dataclass(frozen=True)
class EveIngredients:
    a: float
    b: float
    X: float
    Y: float
    A_coef: float
    B_coef: float


def eve_ingredients(s: StdSymmetricState) -> EveIngredients:
    lam, cx, cp = s.lam, s.cx, s.cp
    a = lam**2 - cx * cp - 1
    b = lam * (cx - cp)
    plus, minus = a + b, a - b
    if plus < -PURE_TOL or minus < -PURE_TOL:
        raise NonPhysicalError(f"a +- b must be non-negative, got {plus:.3e}, {minus:.3e}")
    rp, rm = math.sqrt(max(plus, 0.0)), math.sqrt(max(minus, 0.0))
    big_b = rm / (lam - cx) if lam > cx else 0.0
    return EveIngredients(
        a=a,
        b=b,
        X=(rp + rm) / 2,
        Y=(rp - rm) / 2,
        A_coef=rp / (lam + cx),
        B_coef=big_b,
    )


# Eve's two modes are stored as (x1, p1, x2, p2); the conditional covariance is
# block-diagonal only in the grouped order (x1, x2, p1, p2).
_GROUPED_TO_INTERLEAVED = np.array([0, 2, 1, 3])


@dataclass(frozen=True)
class EveConditionalState:
    """Eve's pure two-mode state after Alice and Bob find ``(+-|x0a|, +-|x0b|)``.

    ``cm`` is ``diag(gx, gx^-1)`` in the grouped order ``(x1, x2, p1, p2)``,
    with ``gx = [[lam, cx], [cx, lam]]``, stored mode by mode.  The momentum
    displacements are ``-(A dx - B Dx, A dx + B Dx) / 2`` for ``++`` and the
    negative of that for ``--``, where ``dx = |x0b| + |x0a|`` and
    ``Dx = |x0b| - |x0a|``.
    """

    cm: np.ndarray
    dv_plus: np.ndarray
    dv_minus: np.ndarray

    def states(self) -> tuple[GaussianState, GaussianState]:
        return GaussianState(self.cm, self.dv_plus), GaussianState(self.cm, self.dv_minus)


def eve_conditional(s: StdSymmetricState, x0a: float, x0b: float) -> EveConditionalState:
    _require_lam_gt_cx(s)
    ing = eve_ingredients(s)
    a, b = abs(float(x0a)), abs(float(x0b))
    small, big = b + a, b - a
    gx = np.array([[s.lam, s.cx], [s.cx, s.lam]])
    grouped = np.zeros((4, 4))
    grouped[:2, :2] = gx
    grouped[2:, 2:] = np.linalg.inv(gx)
    grouped[2:, 2:] = (grouped[2:, 2:] + grouped[2:, 2:].T) / 2
    p = _GROUPED_TO_INTERLEAVED
    cm = grouped[np.ix_(p, p)]
    shift = np.zeros(4)
    shift[2] = ing.A_coef * small - ing.B_coef * big
    shift[3] = ing.A_coef * small + ing.B_coef * big
    dv_plus = (-shift / 2)[p]
    return EveConditionalState(cm=cm, dv_plus=dv_plus, dv_minus=-dv_plus)


def _outcome_terms(s: StdSymmetricState, x0a, x0b):
    a, b = _abs_pair(x0a, x0b)
    lam, cx, cp = s.lam, s.cx, s.cp
    gap = lam**2 - cx**2
    mix = (a**2 + b**2) / 2 * (gap - 1) * lam
    return a * b, gap, mix


def eve_overlap(s: StdSymmetricState, x0a, x0b):
    """``|<e++|e-->|``, the overlap of Eve's states for coincident outcomes."""
    _require_lam_gt_cx(s)
    ab, gap, mix = _outcome_terms(s, x0a, x0b)
    bracket = mix + ab * (s.cx - s.cp * gap)
    return _out(np.exp(-2 * bracket / gap))


def security_lhs(s: StdSymmetricState, x0a, x0b, attack: str = "individual"):
    """Left side of the reduced security inequality; negative means secure.

    ``individual`` compares the error odds with the overlap, ``coherent`` with
    the squared overlap.
    """
    check_attack(attack)
    ab, gap, mix = _outcome_terms(s, x0a, x0b)
    if attack == "individual":
        return _out(mix + ab * (-s.cx - s.cp * gap))
    return _out(mix - ab * s.cp * gap)


def alpha(s: StdSymmetricState) -> float:
    """Interval parameter for individual attacks, ``>= 1`` and ``== 1`` for pure states."""
    lam, cx, cp = s.lam, s.cx, s.cp
    den = 1 - (lam - cx) * (lam - cp)
    if den <= 0:
        raise PPTStateError("state is PPT: (lambda - cx)(lambda - cp) >= 1")
    if s.is_pure:
        return 1.0
    val = ((cx - lam) / (cx + lam)) * ((1 - (lam + cx) * (lam + cp)) / den)
    if val < 1 - PHYSICAL_TOL:
        raise NonPhysicalError(f"alpha = {val} < 1 signals a non-physical state")
    return float(val)


def beta(s: StdSymmetricState) -> float:
    """Interval parameter for finite coherent attacks.

    Obtained from the roots of the squared-overlap security condition: with
    ``P = lam (lam^2 - cx^2 - 1) / 2`` and ``Q = cp (lam^2 - cx^2)`` the
    accepted ratios ``|x0b| / |x0a|`` are those between the roots of
    ``P t^2 - Q t + P``, giving ``beta = (Q + 2P) / (Q - 2P)``.  ``Q - 2P`` is
    the coherent margin.
    """
    lam, cx, cp = s.lam, s.cx, s.cp
    if not s.nppt:
        raise PPTStateError("state is PPT: (lambda - cx)(lambda - cp) >= 1")
    margin = s.coherent_margin
    if margin <= 0:
        raise CoherentInsecureError(
            f"not coherent-securable: lambda - (lambda + cx)(lambda - cx)(lambda - cp) = {margin:.6g} <= 0"
        )
    if s.is_pure:
        return 1.0
    two_p = lam * (lam**2 - cx**2 - 1)
    val = (cp * (lam**2 - cx**2) + two_p) / margin
    if val < 1 - PHYSICAL_TOL:
        raise NonPhysicalError(f"beta = {val} < 1 signals a non-physical state")
    return float(val)


def unit_interval(g: float) -> tuple[float, float]:
    """Bounds on ``(|x0b| - |x0a|) / |x0a|`` for interval parameter ``g >= 1``.

    At ``g == 1`` the lower bound is the floor ``-1`` set by ``|x0b| >= 0``.
    """
    if g < 1:
        raise ValueError("interval parameter must be >= 1")
    root = math.sqrt(g)
    lo = -2 / (root + 1)
    # 2 / (sqrt(g) - 1) without the cancellation near g = 1
    hi = 2 * (root + 1) / (g - 1) if g > 1 else math.inf
    return lo, hi


@dataclass(frozen=True)
class SecurityReport:
    attack: str
    x0a: float
    nppt: bool
    coherent_ok: bool
    alpha: float | None
    beta: float | None
    interval: tuple[float, float]
    interval_unit: tuple[float, float]
    D_length: float

    def as_dict(self) -> dict:
        return {
            "attack": self.attack,
            "x0a": self.x0a,
            "nppt": self.nppt,
            "coherent_ok": self.coherent_ok,
            "alpha": self.alpha,
            "beta": self.beta,
            "lo": self.interval[0],
            "hi": self.interval[1],
            "D_length": self.D_length,
        }


def accept_interval(s: StdSymmetricState, x0a: float, attack: str = "individual") -> SecurityReport:
    """Range of ``|x0b| - |x0a|`` Bob accepts once Alice announces ``|x0a|``."""
    check_attack(attack)
    if not x0a > 0:
        raise ValueError("x0a must be positive")
    a = alpha(s)
    if attack == "coherent":
        b = beta(s)
    else:
        b = beta(s) if s.coherent_ok else None
    g = a if attack == "individual" else b
    lo_u, hi_u = unit_interval(g)
    length = 4 * math.sqrt(g) / (g - 1) * x0a if g > 1 else math.inf
    return SecurityReport(
        attack=attack,
        x0a=float(x0a),
        nppt=s.nppt,
        coherent_ok=s.coherent_ok,
        alpha=a,
        beta=b,
        interval=(lo_u * x0a, hi_u * x0a),
        interval_unit=(lo_u, hi_u),
        D_length=length,
    )


def xx_marginal(s: StdSymmetricState, x0a, x0b):
    """Joint density of the two position outcomes, covariance ``[[lam, cx], [cx, lam]] / 2``."""
    gap = _require_lam_gt_cx(s)
    a = np.asarray(x0a, dtype=float)
    b = np.asarray(x0b, dtype=float)
    return _out(np.exp((2 * s.cx * a * b - s.lam * (a**2 + b**2)) / gap) / (math.pi * math.sqrt(gap)))
