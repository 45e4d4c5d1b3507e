"""Parameter sweeps over ``(lam, cx, cp)`` feeding the efficiency and alpha plots."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..gaussian_core import NonPhysicalError
from .closed_forms import StdSymmetricState, alpha, beta
from .efficiency import QuadratureError, QuadSpec, efficiency

CSV_HEADER = (
    "lambda",
    "cx",
    "cp",
    "ln",
    "purity",
    "alpha",
    "beta",
    "eff_individual",
    "eff_coherent",
    "skip_reason",
)

SWEEP_QUAD = QuadSpec(method="gauss")


def _axis(spec: tuple[float, float, int]) -> np.ndarray:
    lo, hi, steps = spec
    steps = int(steps)
    if steps < 1 or hi < lo:
        raise ValueError(f"bad range {spec}")
    return np.linspace(lo, hi, steps) if steps > 1 else np.array([float(lo)])


@dataclass(frozen=True)
class GridSpec:
    """Ranges ``(min, max, steps)`` for each parameter.

    With ``cp_equals_cx`` the ``cp`` range is ignored and ``cp = cx``
    (fully symmetric states).
    """

    lam: tuple[float, float, int]
    cx: tuple[float, float, int]
    cp: tuple[float, float, int] = (0.0, 0.0, 1)
    cp_equals_cx: bool = False
    coherent: bool = True

    def points(self):
        for lam in _axis(self.lam):
            for cx in _axis(self.cx):
                cps = [cx] if self.cp_equals_cx else _axis(self.cp)
                for cp in cps:
                    yield float(lam), float(cx), float(cp)


@dataclass(frozen=True)
class SweepRecord:
    lam: float
    cx: float
    cp: float
    ln: float
    purity: float
    alpha: float
    beta: float | None
    eff_individual: float | None
    eff_coherent: float | None
    skip_reason: str = ""

    def row(self) -> list[str]:
        vals = [
            self.lam,
            self.cx,
            self.cp,
            self.ln,
            self.purity,
            self.alpha,
            self.beta,
            self.eff_individual,
            self.eff_coherent,
        ]
        return [_fmt(v) for v in vals] + [self.skip_reason]


@dataclass
class SweepResult:
    records: list[SweepRecord] = field(default_factory=list)
    skipped: list[tuple[float, float, float, str]] = field(default_factory=list)


def _fmt(v) -> str:
    if v is None:
        return ""
    return f"{v:.12g}"


def classify(lam: float, cx: float, cp: float) -> str | StdSymmetricState:
    """The admissible state, or the reason the grid point is skipped."""
    if cp > cx:
        return "ordering"
    try:
        s = StdSymmetricState(lam, cx, cp)
    except NonPhysicalError:
        return "nonphysical"
    except ValueError:
        return "invalid"
    if not s.nppt:
        return "ppt"
    return s


def evaluate(s: StdSymmetricState, quad: QuadSpec = SWEEP_QUAD, coherent: bool = True) -> SweepRecord:
    notes = []
    try:
        e_ind = efficiency(s, "individual", quad).value
    except QuadratureError:
        e_ind = None
        notes.append("quadrature_individual")
    b = e_coh = None
    if s.coherent_ok:
        b = beta(s)
        if coherent:
            try:
                e_coh = efficiency(s, "coherent", quad).value
            except QuadratureError:
                notes.append("quadrature_coherent")
    else:
        notes.append("coherent_insecure")
    return SweepRecord(
        lam=s.lam,
        cx=s.cx,
        cp=s.cp,
        ln=s.log_negativity,
        purity=s.purity,
        alpha=alpha(s),
        beta=b,
        eff_individual=e_ind,
        eff_coherent=e_coh,
        skip_reason=";".join(notes),
    )


def _evaluate_args(args):
    return evaluate(*args)


def sweep(grid: GridSpec, quad: QuadSpec = SWEEP_QUAD, workers: int = 1, progress=None) -> SweepResult:
    """Evaluate every admissible grid point in grid order.

    Points with ``cp > cx``, non-physical or PPT parameters go to
    ``result.skipped`` with their reason.  ``progress(done, total)`` is called
    after each admissible point when given.
    """
    result = SweepResult()
    todo = []
    for lam, cx, cp in grid.points():
        got = classify(lam, cx, cp)
        if isinstance(got, str):
            result.skipped.append((lam, cx, cp, got))
        else:
            todo.append(got)
    args = [(s, quad, grid.coherent) for s in todo]
    if workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            it = pool.map(_evaluate_args, args, chunksize=max(1, len(args) // (8 * workers)))
            for k, rec in enumerate(it, 1):
                result.records.append(rec)
                if progress:
                    progress(k, len(args))
    else:
        for k, a in enumerate(args, 1):
            result.records.append(_evaluate_args(a))
            if progress:
                progress(k, len(args))
    return result


def write_csv(result: SweepResult, stream=None, include_skipped: bool = False) -> str:
    """Write the sweep as CSV to ``stream`` (if given) and return the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rec in result.records:
        w.writerow(rec.row())
    if include_skipped:
        for lam, cx, cp, why in result.skipped:
            w.writerow([_fmt(lam), _fmt(cx), _fmt(cp)] + [""] * 6 + [why])
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text
