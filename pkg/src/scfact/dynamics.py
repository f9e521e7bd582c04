"""Fixed points, stability, initial-value bifurcation sweeps, orbit loci.

The sweep machinery follows the sampling protocol of discarding a transient
and keeping the orbit tail: for every grid value of the swept initial
coordinate the orbit runs ``transient + keep`` steps, the final ``keep``
values are retained, and a period is detected on the tail when one exists.
Grid points are independent; a domain error invalidates only its own point.

The locus check targets second-order equations of the form
``x_{n+1} = r_{n+1} * x_n * exp(-x_n)`` whose induced ``r`` sequence
alternates between two values, so every consecutive state pair must fall on
one of the two curves ``xi_1(t) = (e^a/r_0) t e^{-t}`` and
``xi_2(t) = r_0 t e^{-t}``, hit in strict alternation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Mapping, Optional, Sequence

from .equations import (
    DifferenceEquation,
    General,
    Orbit,
    as_general,
    detect_period,
    iterate_orbit,
)
from .expressions import EvaluationError
from .polynomials import Polynomial, find_roots

__all__ = [
    "FixedPointScan",
    "StabilityReport",
    "render_stability_report",
    "BifurcationData",
    "LocusReport",
    "CurvePair",
    "find_fixed_points",
    "linearize_at",
    "bifurcation_sweep",
    "locus_check",
    "init_from_coordinates",
    "write_bifurcation_csv",
]


def _require_autonomous(eq: DifferenceEquation) -> None:
    kind = eq.kind
    source = kind.rhs if isinstance(kind, General) else kind.forcing
    if "n" in source.free_variables():
        raise ValueError("this analysis requires an autonomous equation")


def _algebraic(eq: DifferenceEquation) -> DifferenceEquation:
    # Fixed-point and derivative scans probe the map off the orbit carrier
    # (boundaries, perturbed states), so they evaluate the general form,
    # which does not enforce carrier membership.
    return as_general(eq)


def _diagonal_value(eq: DifferenceEquation, x: float) -> complex:
    return eq.step([complex(x)] * eq.order, 0)


@dataclass(frozen=True)
class FixedPointScan:
    """Isolated real fixed points; ``dense`` flags a degenerate equation
    (identity-like map) whose fixed points fill the interval."""

    points: tuple[float, ...]
    dense: bool


def find_fixed_points(
    eq: DifferenceEquation,
    interval: tuple[float, float],
    tol: float = 1e-10,
    samples: int = 2001,
) -> FixedPointScan:
    """Real solutions of ``f(x, ..., x) = x`` on ``interval``.

    Dense sampling locates sign changes (refined by bisection) and
    near-exact zeros; duplicates within ``tol`` merge.  An empty result is
    a value.  When nearly every sample solves the equation the interval is
    reported as dense instead of listing points.
    """
    _require_autonomous(eq)
    eq = _algebraic(eq)
    lo, hi = float(interval[0]), float(interval[1])
    if not hi > lo:
        raise ValueError("interval must be increasing")

    def g(x: float) -> Optional[float]:
        try:
            v = _diagonal_value(eq, x)
        except EvaluationError:
            return None
        if abs(v.imag) > 1e-9 * (1 + abs(v.real)):
            return None
        return v.real - x

    xs = [lo + (hi - lo) * i / (samples - 1) for i in range(samples)]
    gs = [g(x) for x in xs]
    scale = max((abs(v) for v in gs if v is not None), default=0.0)
    valid = [v for v in gs if v is not None]
    if valid and sum(1 for v in valid if abs(v) <= tol * (1 + abs(v))) >= 0.95 * len(valid):
        return FixedPointScan((), dense=True)

    roots: list[float] = []

    def push(x: float) -> None:
        for r in roots:
            if abs(x - r) <= max(tol, tol * abs(r)):
                return
        roots.append(x)

    for x, v in zip(xs, gs):
        if v is not None and abs(v) <= 1e-12 * (1 + scale):
            push(x)
    for (x0, v0), (x1, v1) in zip(zip(xs, gs), zip(xs[1:], gs[1:])):
        if v0 is None or v1 is None or v0 == 0 or v1 == 0:
            continue
        if (v0 > 0) == (v1 > 0):
            continue
        a, b, fa = x0, x1, v0
        for _ in range(200):
            mid = 0.5 * (a + b)
            fm = g(mid)
            if fm is None:
                break
            if fm == 0 or (b - a) < tol:
                a = b = mid
                break
            if (fm > 0) == (fa > 0):
                a, fa = mid, fm
            else:
                b = mid
        push(0.5 * (a + b))
    return FixedPointScan(tuple(sorted(roots)), dense=False)


@dataclass(frozen=True)
class StabilityReport:
    fixed_point: float
    eigenvalues: tuple[complex, ...]
    classifications: tuple[str, ...]


def render_stability_report(report: StabilityReport) -> str:
    from .expressions import format_complex

    lines = [f"fixed point: {report.fixed_point!r}"]
    for lam, label in zip(report.eigenvalues, report.classifications):
        lines.append(f"  eigenvalue {format_complex(lam)} (|.| = {abs(lam):.6g}): {label}")
    return "\n".join(lines)


def linearize_at(
    eq: DifferenceEquation, x_bar: float, classification_tol: float = 1e-9
) -> StabilityReport:
    """Eigenvalues of the linearization at a fixed point.

    Partial derivatives with respect to each lag are taken by central
    differences with step ``1e-6 * (1 + |x_bar|)``; the eigenvalues are the
    roots of ``z^{k+1} - sum_j (df/dx_j) z^{k-j}``.  Each eigenvalue is
    classified by its magnitude: below 1 stable, above 1 unstable, within
    ``classification_tol`` of 1 non-hyperbolic.
    """
    _require_autonomous(eq)
    eq = _algebraic(eq)
    x_bar = float(x_bar)
    k1 = eq.order
    h = 1e-6 * (1 + abs(x_bar))
    partials = []
    base = [complex(x_bar)] * k1
    for j in range(k1):
        up = list(base)
        down = list(base)
        up[j] += h
        down[j] -= h
        partials.append((eq.step(up, 0) - eq.step(down, 0)) / (2 * h))
    coeffs = tuple(-p for p in reversed(partials)) + (1 + 0j,)
    eigenvalues = find_roots(Polynomial(coeffs)).expanded()
    labels = []
    for lam in eigenvalues:
        mag = abs(lam)
        if abs(mag - 1) <= classification_tol:
            labels.append("non-hyperbolic")
        elif mag < 1:
            labels.append("stable")
        else:
            labels.append("unstable")
    return StabilityReport(x_bar, eigenvalues, tuple(labels))


# ----------------------------------------------------------------------
# Bifurcation sweeps over initial values
# ----------------------------------------------------------------------


def init_from_coordinates(order: int, coords: Mapping[str, complex]) -> tuple[complex, ...]:
    """Build oldest-first initial values from coordinates named ``x0``,
    ``x-1``, ..., ``x-k``."""
    wanted = {("x0" if j == 0 else f"x-{j}"): j for j in range(order)}
    values: dict[int, complex] = {}
    for name, value in coords.items():
        if name not in wanted:
            raise KeyError(f"unknown initial coordinate '{name}'")
        values[wanted[name]] = complex(value)
    missing = [name for name, j in wanted.items() if j not in values]
    if missing:
        raise KeyError(f"missing initial coordinate(s): {sorted(missing)}")
    return tuple(values[j] for j in range(order - 1, -1, -1))


@dataclass(frozen=True)
class BifurcationData:
    """Per-grid-point orbit tails from a sweep of one initial coordinate."""

    sweep_name: str
    grid: tuple[float, ...]
    samples: tuple[Optional[tuple[complex, ...]], ...]
    periods: tuple[Optional[int], ...]
    transient: int
    keep: int
    failures: tuple[Optional[str], ...]

    def period_census(self) -> dict[int, int]:
        census: dict[int, int] = {}
        for p in self.periods:
            if p is not None:
                census[p] = census.get(p, 0) + 1
        return census


def bifurcation_sweep(
    eq: DifferenceEquation,
    fixed: Mapping[str, complex],
    sweep_name: str,
    grid: Sequence[float],
    transient: int,
    keep: int,
    max_period: int = 64,
    period_tol: float = 1e-5,
) -> BifurcationData:
    """Sweep one initial coordinate over ``grid`` (strictly increasing).

    Each grid point iterates ``transient + keep`` steps, keeps the final
    ``keep`` values of the full sequence, and records the detected period
    (if any) of the orbit.  Domain errors mark the point invalid and the
    sweep continues.
    """
    grid = [float(v) for v in grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    steps = transient + keep
    samples: list[Optional[tuple[complex, ...]]] = []
    periods: list[Optional[int]] = []
    failures: list[Optional[str]] = []
    total_len = eq.order + steps
    effective_max = min(max_period, max(1, total_len // 3))
    for value in grid:
        coords = dict(fixed)
        coords[sweep_name] = value
        init = init_from_coordinates(eq.order, coords)
        orbit = iterate_orbit(eq, init, steps)
        if orbit.truncated_at is not None:
            samples.append(None)
            periods.append(None)
            failures.append(orbit.truncation_reason)
            continue
        tail = orbit.full_sequence[-keep:]
        detected = detect_period(orbit, period_tol, effective_max)
        samples.append(tuple(tail))
        periods.append(detected[0] if detected else None)
        failures.append(None)
    return BifurcationData(
        sweep_name,
        tuple(grid),
        tuple(samples),
        tuple(periods),
        transient,
        keep,
        tuple(failures),
    )


def write_bifurcation_csv(data: BifurcationData, stream: IO[str]) -> None:
    """Rows ``param,sample`` (real parts); an invalid point emits one
    ``param,NaN`` row."""
    stream.write("param,sample\n")
    for value, tail in zip(data.grid, data.samples):
        if tail is None:
            stream.write(f"{value!r},NaN\n")
            continue
        for v in tail:
            stream.write(f"{value!r},{v.real!r}\n")


# ----------------------------------------------------------------------
# Orbit locus on the two curves
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class CurvePair:
    """The curves ``xi_1(t) = (e^a/r_0) t e^{-t}`` and
    ``xi_2(t) = r_0 t e^{-t}``; positive for t > 0 when r_0 > 0."""

    a: float
    r0: float

    def xi1(self, t: float) -> float:
        return math.exp(self.a) / self.r0 * t * math.exp(-t)

    def xi2(self, t: float) -> float:
        return self.r0 * t * math.exp(-t)


@dataclass(frozen=True)
class LocusReport:
    passed: bool
    worst_residual: float
    alternation_ok: bool
    assignments: tuple[int, ...]  # 1 or 2 per pair; 0 when the curves coincide
    first_failure: Optional[int] = None


def locus_check(orbit: Orbit, a: float, r0: float, tol: float = 1e-6) -> LocusReport:
    """Check that every consecutive pair ``(x_n, x_{n+1})`` with n >= 0 lies
    on one of the two curves, alternating strictly between them.

    ``r0`` is the induced factor start ``x_0 / (x_{-1} e^{-x_{-1}})``.
    Pairs equidistant from both curves (the coincident case) count as
    matching either and do not constrain the alternation.
    """
    curves = CurvePair(float(a), float(r0))
    seq = orbit.full_sequence
    k = orbit.order - 1
    xs = [v.real for v in seq[k:]]
    worst = 0.0
    assignments: list[int] = []
    alternation_ok = True
    first_failure = None
    for idx in range(len(xs) - 1):
        u, v = xs[idx], xs[idx + 1]
        d1 = abs(v - curves.xi1(u))
        d2 = abs(v - curves.xi2(u))
        residual = min(d1, d2) / (1 + abs(v))
        if residual > worst:
            worst = residual
        if residual > tol and first_failure is None:
            first_failure = idx
        if abs(d1 - d2) <= tol * (1 + abs(v)):
            assignments.append(0)
        else:
            assignments.append(1 if d1 < d2 else 2)
    # x_1 = xi_1(x_0) by the definition of r0, so the phase is known: curve 1
    # at even pair indices, curve 2 at odd ones; coincident pairs match either.
    for idx, mark in enumerate(assignments):
        expected = 1 if idx % 2 == 0 else 2
        if mark not in (0, expected):
            alternation_ok = False
            break
    passed = worst <= tol and alternation_ok
    return LocusReport(passed, worst, alternation_ok, tuple(assignments), first_failure)
