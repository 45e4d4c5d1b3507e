"""
Gaussian states in the covariance-matrix picture.

Quadratures are ordered mode by mode, ``(q_1, p_1, ..., q_n, p_n)``, and the
covariance matrix is normalized so that the vacuum is the identity.  With this
convention the Wigner function of a state ``(cm, dv)`` reads

    W(z) = exp(-(z - d)^T cm^{-1} (z - d)) / (pi^n sqrt(det cm))

so ``cm / 2`` is the classical covariance of the quadratures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "NonPhysicalError",
    "GaussianState",
    "symplectic_form",
    "momentum_reflection",
    "symplectic_spectrum",
    "is_physical",
    "purity",
    "partial_transpose",
    "is_nppt",
    "log_negativity",
    "purify",
    "hs_fidelity",
    "wigner_density",
]

PHYSICAL_TOL = 1e-9
SYMMETRY_TOL = 1e-12
MAX_MODES = 4
_CLAMP = 1e-12


class NonPhysicalError(ValueError):
    """Raised when a covariance matrix violates ``cm + iJ >= 0``."""


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _mode_count(cm: np.ndarray) -> int:
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or cm.shape[0] % 2:
        raise ValueError(f"covariance matrix must be 2n x 2n, got shape {cm.shape}")
    return cm.shape[0] // 2


def _as_cm(cm) -> np.ndarray:
    cm = np.asarray(cm, dtype=float)
    _mode_count(cm)
    scale = max(1.0, float(np.abs(cm).max()))
    if np.abs(cm - cm.T).max() > SYMMETRY_TOL * scale:
        raise ValueError("covariance matrix is not symmetric")
    return cm


def symplectic_form(n: int) -> np.ndarray:
    """Block-diagonal symplectic form ``J_n`` built from ``[[0, 1], [-1, 0]]``."""
    if n < 1:
        raise ValueError("mode count must be >= 1")
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def momentum_reflection(n: int, modes: Sequence[int] | None = None) -> np.ndarray:
    """Diagonal matrix flipping the momentum sign on ``modes`` (all modes by default)."""
    if n < 1:
        raise ValueError("mode count must be >= 1")
    diag = np.ones(2 * n)
    for k in range(n) if modes is None else modes:
        diag[2 * k + 1] = -1.0
    return np.diag(diag)


def symplectic_spectrum(cm) -> np.ndarray:
    """Symplectic eigenvalues of ``cm`` in ascending order.

    The eigenvalues of ``iJ cm`` come in pairs ``+-nu``.  For positive
    definite ``cm`` they are taken from the Hermitian matrix
    ``cm^{1/2} iJ cm^{1/2}`` (same spectrum, better conditioned); otherwise
    from ``iJ cm`` directly.  Moduli are sorted and each adjacent pair is
    averaged, giving ``n`` values.
    """
    cm = _as_cm(cm)
    n = _mode_count(cm)
    w, v = np.linalg.eigh(cm)
    if w[0] > 0:
        half = (v * np.sqrt(w)) @ v.T
        ev = np.abs(np.linalg.eigvalsh(half @ (1j * symplectic_form(n)) @ half))
    else:
        ev = np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ cm))
    ev.sort()
    return ev.reshape(n, 2).mean(axis=1)


def is_physical(cm, tol: float = PHYSICAL_TOL) -> bool:
    """True iff ``cm`` is positive definite and every symplectic eigenvalue is at least ``1 - tol``.

    Positive definiteness is checked first: for an indefinite matrix the
    moduli of the eigenvalues of ``iJ cm`` can exceed one without meaning
    anything.
    """
    cm = _as_cm(cm)
    if np.linalg.eigvalsh(cm)[0] <= 0:
        return False
    return bool(symplectic_spectrum(cm)[0] >= 1.0 - tol)


def purity(cm, tol: float = PHYSICAL_TOL) -> float:
    """``tr(rho^2) = det(cm)^(-1/2)``."""
    cm = _as_cm(cm)
    if not is_physical(cm, tol):
        raise NonPhysicalError("purity is only defined for physical covariance matrices")
    return float(np.linalg.det(cm) ** -0.5)


def _check_partition(n: int, modes_a: Sequence[int]) -> tuple[int, ...]:
    modes = tuple(sorted(set(int(k) for k in modes_a)))
    if not modes or len(modes) >= n:
        raise ValueError("subsystem A must be a nonempty proper subset of the modes")
    if modes[0] < 0 or modes[-1] >= n:
        raise ValueError(f"mode index out of range for a {n}-mode state")
    return modes


def partial_transpose(cm, modes_a: Sequence[int] = (0,)) -> np.ndarray:
    """Partial transpose ``theta_A cm theta_A^T``, with momenta of ``modes_a`` reflected."""
    cm = _as_cm(cm)
    n = _mode_count(cm)
    theta = momentum_reflection(n, _check_partition(n, modes_a))
    return theta @ cm @ theta.T


def is_nppt(cm, modes_a: Sequence[int] = (0,), tol: float = PHYSICAL_TOL) -> bool:
    """Whether the partial transpose fails to be physical.

    Only ``1 x N`` splits are accepted, where NPPT is equivalent to
    entanglement for Gaussian states.
    """
    cm = _as_cm(cm)
    n = _mode_count(cm)
    modes = _check_partition(n, modes_a)
    if len(modes) != 1 and n - len(modes) != 1:
        raise ValueError("PPT is only decisive for 1 x N partitions")
    return not is_physical(partial_transpose(cm, modes), tol)


def log_negativity(cm, modes_a: Sequence[int] = (0,)) -> float:
    """Logarithmic negativity ``-sum log2 min(mu, 1)`` over the partial transpose spectrum."""
    mu = symplectic_spectrum(partial_transpose(cm, modes_a))
    return float(-np.sum(np.log2(np.minimum(mu, 1.0)))) + 0.0


def _purifier_root(cm: np.ndarray) -> np.ndarray:
    # sqrt(-(J cm)^2 - I) through the similarity J cm = cm^{-1/2} K cm^{1/2},
    # K = cm^{1/2} J cm^{1/2} antisymmetric, so -(J cm)^2 - I is similar to the
    # symmetric PSD matrix K^T K - I.
    n = _mode_count(cm)
    w, v = np.linalg.eigh(cm)
    if w.min() <= 0:
        raise NonPhysicalError("covariance matrix is not positive definite")
    half = (v * np.sqrt(w)) @ v.T
    half_inv = (v / np.sqrt(w)) @ v.T
    k = half @ symplectic_form(n) @ half
    arg = k.T @ k - np.eye(2 * n)
    arg = (arg + arg.T) / 2
    lam, u = np.linalg.eigh(arg)
    if lam.min() < -PHYSICAL_TOL * max(1.0, float(np.abs(lam).max())):
        raise NonPhysicalError(
            f"-(J cm)^2 - I has a negative eigenvalue {lam.min():.3e}; state is not physical"
        )
    lam = np.where(lam < _CLAMP, 0.0, lam)
    root = (u * np.sqrt(lam)) @ u.T
    return half_inv @ root @ half


def purify(cm) -> np.ndarray:
    """Pure ``2n``-mode covariance matrix whose first ``n`` modes reduce to ``cm``.

    The purifying block is ``C = J sqrt(-(J cm)^2 - I) theta`` and the ancilla
    block is ``theta cm theta^T``.
    """
    cm = _as_cm(cm)
    n = _mode_count(cm)
    if not is_physical(cm):
        raise NonPhysicalError("cannot purify a non-physical covariance matrix")
    theta = momentum_reflection(n)
    c = symplectic_form(n) @ _purifier_root(cm) @ theta
    return np.block([[cm, c], [c.T, theta @ cm @ theta.T]])


@dataclass(frozen=True)
class GaussianState:
    """Covariance matrix and displacement vector of an ``n``-mode Gaussian state.

    Physicality is checked at construction; pass ``check=False`` for
    intermediate objects that are known to be valid up to rounding.
    """

    cm: np.ndarray
    dv: np.ndarray
    check: bool = True

    def __post_init__(self):
        cm = _as_cm(self.cm)
        n = _mode_count(cm)
        if n > MAX_MODES:
            raise ValueError(f"at most {MAX_MODES} modes are supported")
        dv = np.asarray(self.dv, dtype=float).reshape(-1)
        if dv.shape != (2 * n,):
            raise ValueError(f"displacement must have length {2 * n}, got {dv.shape[0]}")
        if self.check and not is_physical(cm):
            raise NonPhysicalError("covariance matrix violates cm + iJ >= 0")
        object.__setattr__(self, "cm", _frozen(cm))
        object.__setattr__(self, "dv", _frozen(dv))

    @property
    def n(self) -> int:
        return self.cm.shape[0] // 2

    @classmethod
    def vacuum(cls, n: int = 1) -> "GaussianState":
        return cls(np.eye(2 * n), np.zeros(2 * n))

    def to_json(self) -> str:
        return json.dumps(
            {"n": self.n, "cm": self.cm.reshape(-1).tolist(), "dv": self.dv.tolist()}
        )

    @classmethod
    def from_json(cls, text: str) -> "GaussianState":
        data = json.loads(text)
        n = int(data["n"])
        cm = np.asarray(data["cm"], dtype=float)
        if cm.size != 4 * n * n:
            raise ValueError(f"expected {4 * n * n} covariance entries, got {cm.size}")
        return cls(cm.reshape(2 * n, 2 * n), data["dv"])


def hs_fidelity(s1: GaussianState, s2: GaussianState) -> float:
    """Hilbert-Schmidt overlap ``tr(rho_1 rho_2)`` of two Gaussian states.

    This is the Uhlmann fidelity only when at least one of the states is pure;
    for two mixed states it is just the trace overlap.
    """
    if s1.n != s2.n:
        raise ValueError("states have different mode counts")
    total = s1.cm + s2.cm
    if abs(np.linalg.det(total)) < 1e-300 or np.linalg.cond(total) > 1e14:
        raise ValueError("cm_1 + cm_2 is singular")
    delta = s2.dv - s1.dv
    expo = -delta @ np.linalg.solve(total, delta)
    return float(np.exp(expo) / np.sqrt(np.linalg.det(total / 2)))


def wigner_density(state: GaussianState, points) -> np.ndarray | float:
    """Wigner function of ``state`` at ``points`` (shape ``(2n,)`` or ``(..., 2n)``)."""
    pts = np.asarray(points, dtype=float)
    dim = 2 * state.n
    if pts.shape[-1] != dim:
        raise ValueError(f"points must have trailing dimension {dim}")
    det = np.linalg.det(state.cm)
    if det <= 0:
        raise ValueError("covariance matrix is singular")
    prec = np.linalg.inv(state.cm)
    z = pts - state.dv
    quad = np.einsum("...i,ij,...j->...", z, prec, z)
    val = np.exp(-quad) / (np.pi**state.n * np.sqrt(det))
    return float(val) if val.ndim == 0 else val
