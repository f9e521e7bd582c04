"""Form symmetries: HD1 detection and reduction-constant solving.

Two constructive families are covered.  An equation that is homogeneous of
degree 1 (HD1) relative to its group,

    f(u_0*t, ..., u_k*t) = f(u_0, ..., u_k) * t    for all carrier t,

carries the inversion symmetry ``H_j(u) = u_{j-1} * u_j^{-1}`` and reduces by
one order.  A separable equation reduces to a first-order factor whenever a
constant ``c`` satisfies, for all carrier points,

    additive:        c^{k+1} z = c^k phi_0(z) + ... + phi_k(z)
    multiplicative:  psi_0(t)^{c^k} psi_1(t)^{c^{k-1}} ... psi_k(t) = t^{c^{k+1}}

(the multiplicative identity is checked in log domain, which is equivalent
for ``t > 0`` and avoids overflow and branch ambiguity).  For linear
equations the constants are exactly the eigenvalues, obtained analytically
from the characteristic polynomial; for nonlinear separable components they
are found by a grid scan over the complex plane refined by Gauss-Newton
iteration on the mean-square residual.

HD1 is detected by randomized sampling with recorded witnesses, not proof:
there is no decision procedure for arbitrary expressions.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from random import Random
from typing import Mapping, Optional, Sequence, Union

from .equations import (
    DifferenceEquation,
    General,
    GroupTag,
    Linear,
    SeparableAdditive,
    SeparableMultiplicative,
)
from .expressions import (
    Const,
    EvaluationError,
    Expression,
    Var,
    evaluate,
)
from .polynomials import characteristic_polynomial, find_roots

__all__ = [
    "Inversion",
    "UnaryComponents",
    "GeneralMap",
    "FormSymmetry",
    "HD1Report",
    "ReductionConstant",
    "ReductionConstantSet",
    "GridSpec",
    "SymmetryError",
    "ConstantValidationError",
    "check_hd1",
    "solve_reduction_constant",
    "build_additive_form_symmetry",
    "build_multiplicative_form_symmetry",
    "evaluate_form_symmetry",
    "additive_reduction_residual",
    "multiplicative_reduction_residual",
]

_PROBE_SEED = 0x5EED
_PROBE_COUNT = 32


class SymmetryError(Exception):
    pass


class ConstantValidationError(SymmetryError):
    def __init__(self, value: complex, residual: float, tol: float):
        self.value = value
        self.residual = residual
        super().__init__(
            f"constant {value!r} fails the reduction identity: "
            f"residual {residual:.3e} exceeds {tol:.3e}"
        )


# ----------------------------------------------------------------------
# Form symmetry shapes
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class Inversion:
    """h(t) = t^{-1}; components ``H_j(u) = u_{j-1} * u_j^{-1}`` (type (k,1))."""


@dataclass(frozen=True)
class UnaryComponents:
    """h_1..h_k, each unary in ``x``; ``H(u) = u_0 * h_1(u_1) * ... * h_k(u_k)``
    (type (1,k))."""

    components: tuple[Expression, ...]


@dataclass(frozen=True)
class GeneralMap:
    """User-supplied ``h`` over ``x0..x{arity-1}``; components
    ``H_j(u) = u_{j-1} * h(u_j, ..., u_{j+arity-1})`` (type (m, k+1-m))."""

    h: Expression
    arity: int


Shape = Union[Inversion, UnaryComponents, GeneralMap]


@dataclass(frozen=True)
class FormSymmetry:
    """Order-reducing map H from (k+1)-tuples of states to m-tuples."""

    m: int
    group: GroupTag
    shape: Shape
    constant: Optional[complex] = None
    params: Mapping[str, complex] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "params", dict(self.params))
        if isinstance(self.shape, UnaryComponents) and self.m != 1:
            raise ValueError("unary-component symmetries have m = 1")
        if self.m < 1:
            raise ValueError("m must be at least 1")

    @property
    def input_arity(self) -> int:
        """Number of states H consumes (= k+1 of the source equation)."""
        if isinstance(self.shape, Inversion):
            return self.m + 1
        if isinstance(self.shape, UnaryComponents):
            return len(self.shape.components) + 1
        return self.m + self.shape.arity


def evaluate_form_symmetry(
    symmetry: FormSymmetry, point: Sequence[complex]
) -> tuple[complex, ...]:
    """Apply H to a state given NEWEST first: ``point[j] = u_j``.

    Returns the m outputs ``(H_1(u), ..., H_m(u))``.
    """
    point = [complex(v) for v in point]
    if len(point) != symmetry.input_arity:
        raise ValueError(
            f"expected {symmetry.input_arity} inputs, got {len(point)}"
        )
    group = symmetry.group
    shape = symmetry.shape
    if isinstance(shape, Inversion):
        return tuple(
            group.combine(point[j - 1], group.invert(point[j]))
            for j in range(1, symmetry.m + 1)
        )
    env = dict(symmetry.params)
    if isinstance(shape, UnaryComponents):
        acc = point[0]
        for j, comp in enumerate(shape.components, start=1):
            env["x"] = point[j]
            acc = group.combine(acc, evaluate(comp, env))
        return (acc,)
    out = []
    for j in range(1, symmetry.m + 1):
        for idx in range(shape.arity):
            env[f"x{idx}"] = point[j + idx]
        out.append(group.combine(point[j - 1], evaluate(shape.h, env)))
    return tuple(out)


# ----------------------------------------------------------------------
# HD1 detection
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class HD1Witness:
    point: tuple[complex, ...]
    scale: complex
    time_index: int
    residual: float


@dataclass(frozen=True)
class HD1Report:
    verdict: bool
    samples: int
    max_residual: float
    witness: Optional[HD1Witness] = None


def check_hd1(
    eq: DifferenceEquation,
    samples: int = 500,
    tol: float = 1e-9,
    seed: int = 0,
) -> HD1Report:
    """Randomized test of homogeneity of degree 1 relative to ``eq.group``.

    Draws ``samples`` random states and group elements (and a random time
    index, since the property must hold at every ``n``) and compares
    ``f(u_0*t, ..., u_k*t)`` against ``f(u)*t`` with relative tolerance
    ``tol``.  Sample points hitting domain errors are resampled, up to ten
    times the requested budget.
    """
    if isinstance(eq.kind, Linear):
        raise TypeError(
            "HD1 sampling applies to general/separable kinds; "
            "linear equations reduce through their eigenvalues"
        )
    group = eq.group
    rng = Random(seed)
    tested = 0
    attempts = 0
    budget = samples * 10
    max_residual = 0.0
    witness: Optional[HD1Witness] = None
    while tested < samples:
        if attempts >= budget:
            raise SymmetryError(
                f"domain errors exhausted the sampling budget ({budget} draws)"
            )
        attempts += 1
        state = [group.sample(rng) for _ in range(eq.order)]
        shift = group.sample(rng)
        n = rng.randrange(0, 11)
        try:
            base = eq.step(state, n)
            moved = eq.step([group.combine(u, shift) for u in state], n)
        except EvaluationError:
            continue
        expected = group.combine(base, shift)
        residual = abs(moved - expected) / (1 + abs(expected))
        tested += 1
        if residual > max_residual:
            max_residual = residual
            if residual > tol and witness is None:
                witness = HD1Witness(tuple(state), shift, n, residual)
    return HD1Report(max_residual <= tol, tested, max_residual, witness)


# ----------------------------------------------------------------------
# Reduction constants
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ReductionConstant:
    value: complex
    multiplicity: int
    residual: float


@dataclass(frozen=True)
class ReductionConstantSet:
    """Constants satisfying the reduction identity, ordered by (re, im).

    ``analytic`` is set when they came from the characteristic polynomial
    rather than numeric search."""

    constants: tuple[ReductionConstant, ...]
    analytic: bool

    def expanded(self) -> tuple[complex, ...]:
        out: list[complex] = []
        for c in self.constants:
            out.extend([c.value] * c.multiplicity)
        return tuple(out)

    def __len__(self) -> int:
        return len(self.constants)


@dataclass(frozen=True)
class GridSpec:
    """Search rectangle for the complex grid scan."""

    re_min: float = -4.0
    re_max: float = 4.0
    im_min: float = -4.0
    im_max: float = 4.0
    step: float = 0.25


def _horner(coeffs: Sequence[complex], z: complex) -> complex:
    acc = 0j
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def _derive(coeffs: Sequence[complex]) -> list[complex]:
    return [j * c for j, c in enumerate(coeffs) if j > 0]


def _component_values(eq: DifferenceEquation, z: complex) -> list[complex]:
    env = dict(eq.params)
    out = []
    for comp in eq.kind.components:
        env["x"] = z
        out.append(evaluate(comp, env))
    return out


def _additive_probe_polys(eq: DifferenceEquation, count: int = _PROBE_COUNT):
    """Per probe point z, the residual polynomial in c (ascending):
    ``[-phi_k(z), ..., -phi_0(z), z]``."""
    rng = Random(_PROBE_SEED)
    polys = []
    attempts = 0
    while len(polys) < count and attempts < count * 10:
        attempts += 1
        z = complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
        if abs(z) < 0.1:
            continue
        try:
            phis = _component_values(eq, z)
        except EvaluationError:
            continue
        coeffs = [-phi for phi in reversed(phis)] + [z]
        if not all(_isfinite(c) for c in coeffs):
            continue
        polys.append(coeffs)
    if len(polys) < count:
        raise SymmetryError("could not assemble probe points for the components")
    return polys


def _multiplicative_probe_polys(eq: DifferenceEquation, count: int = _PROBE_COUNT):
    """Log-domain residual polynomial per probe t > 0 (ascending):
    ``[ln psi_k(t), ..., ln psi_0(t), -ln t]``."""
    from math import exp

    rng = Random(_PROBE_SEED)
    polys = []
    attempts = 0
    while len(polys) < count and attempts < count * 10:
        attempts += 1
        t = complex(exp(rng.uniform(-3, 3)))
        try:
            psis = _component_values(eq, t)
        except EvaluationError:
            continue
        if any(v == 0 or not _isfinite(v) for v in psis):
            continue
        logs = [cmath.log(v) for v in psis]
        coeffs = list(reversed(logs)) + [-cmath.log(t)]
        if max(abs(c) for c in coeffs) < 1e-9:
            continue  # degenerate point (t too close to a common fixed value)
        polys.append(coeffs)
    if len(polys) < count:
        raise SymmetryError("could not assemble probe points for the components")
    return polys


def _isfinite(v: complex) -> bool:
    return cmath.isfinite(v)


def _probe_polys(eq: DifferenceEquation):
    if isinstance(eq.kind, SeparableAdditive):
        return _additive_probe_polys(eq)
    if isinstance(eq.kind, SeparableMultiplicative):
        return _multiplicative_probe_polys(eq)
    raise TypeError("reduction residuals require a separable equation")


def _max_residual(polys, c: complex) -> float:
    return max(abs(_horner(p, c)) for p in polys)


def additive_reduction_residual(eq: DifferenceEquation, c: complex) -> float:
    """Max over the probe points of ``|c^{k+1} z - sum c^{k-j} phi_j(z)|``."""
    return _max_residual(_additive_probe_polys(eq), complex(c))


def multiplicative_reduction_residual(eq: DifferenceEquation, c: complex) -> float:
    """Max over probe points t > 0 of the log-domain identity residual
    ``|sum c^{k-j} ln psi_j(t) - c^{k+1} ln t|``."""
    return _max_residual(_multiplicative_probe_polys(eq), complex(c))


def _gauss_newton(polys, derivs, c: complex, iterations: int = 80) -> complex:
    for _ in range(iterations):
        num = 0j
        den = 0.0
        for p, dp in zip(polys, derivs):
            r = _horner(p, c)
            g = _horner(dp, c)
            num += g.conjugate() * r
            den += abs(g) ** 2
        if den == 0:
            break
        delta = -num / den
        c = c + delta
        if abs(delta) <= 1e-15 * (1 + abs(c)):
            break
    return c


def _vanishing_order(coeffs: Sequence[complex], c: complex, cap: int) -> int:
    cur = list(coeffs)
    order = 0
    while order <= cap and cur:
        scale = sum(abs(a) * max(1.0, abs(c)) ** idx for idx, a in enumerate(cur))
        if scale < 1e-12:
            return cap + 1  # effectively the zero polynomial: uninformative
        if abs(_horner(cur, c)) > 1e-6 * scale:
            return order
        cur = _derive(cur)
        order += 1
    return order


def _common_multiplicity(polys, c: complex) -> int:
    cap = max(len(p) - 1 for p in polys)
    orders = [_vanishing_order(p, c, cap) for p in polys]
    informative = [o for o in orders if o <= cap]
    return max(1, min(informative)) if informative else 1


def solve_reduction_constant(
    eq: DifferenceEquation,
    grid: Optional[GridSpec] = None,
    tol: float = 1e-8,
) -> ReductionConstantSet:
    """All constants ``c`` satisfying the reduction identity for ``eq``.

    Linear equations: exactly the roots of the characteristic polynomial
    (``analytic`` result).  Separable kinds: the identity residual is
    evaluated on a fixed set of probe points over the complex grid, each
    local minimum is refined by Gauss-Newton iteration on the mean-square
    residual, and constants whose final max residual is at most ``tol`` are
    kept; duplicates within 1e-6 merge with multiplicity.  An empty result
    is a value, not an error.
    """
    if isinstance(eq.kind, Linear):
        roots = find_roots(characteristic_polynomial(eq))
        entries = sorted(
            roots.entries, key=lambda e: (e.value.real, e.value.imag)
        )
        return ReductionConstantSet(
            tuple(ReductionConstant(e.value, e.multiplicity, e.residual) for e in entries),
            analytic=True,
        )
    if isinstance(eq.kind, General):
        raise TypeError("reduction constants require a linear or separable equation")
    grid = grid or GridSpec()
    polys = _probe_polys(eq)
    derivs = [_derive(p) for p in polys]

    res = int(round((grid.re_max - grid.re_min) / grid.step)) + 1
    ims = int(round((grid.im_max - grid.im_min) / grid.step)) + 1
    values = [
        [
            sum(
                abs(_horner(p, complex(grid.re_min + a * grid.step, grid.im_min + b * grid.step))) ** 2
                for p in polys
            )
            for b in range(ims)
        ]
        for a in range(res)
    ]

    candidates = []
    for a in range(res):
        for b in range(ims):
            v = values[a][b]
            if not (v == v and v != float("inf")):
                continue  # non-finite residual: skip the cell
            is_min = True
            for da in (-1, 0, 1):
                for db in (-1, 0, 1):
                    if da == 0 and db == 0:
                        continue
                    na, nb = a + da, b + db
                    if 0 <= na < res and 0 <= nb < ims and values[na][nb] < v:
                        is_min = False
                        break
                if not is_min:
                    break
            if is_min:
                candidates.append(
                    complex(grid.re_min + a * grid.step, grid.im_min + b * grid.step)
                )

    found: list[tuple[complex, float]] = []
    for start in candidates:
        c = _gauss_newton(polys, derivs, start)
        if not _isfinite(c):
            continue
        residual = _max_residual(polys, c)
        if residual <= tol:
            found.append((c, residual))

    merged: list[tuple[complex, float]] = []
    for c, residual in sorted(found, key=lambda item: item[1]):
        for j, (existing, _) in enumerate(merged):
            if abs(c - existing) <= 1e-6 * (1 + abs(existing)):
                break
        else:
            merged.append((c, residual))

    constants = [
        ReductionConstant(c, _common_multiplicity(polys, c), residual)
        for c, residual in merged
    ]
    constants.sort(key=lambda rc: (rc.value.real, rc.value.imag))
    return ReductionConstantSet(tuple(constants), analytic=False)


# ----------------------------------------------------------------------
# Symmetry construction for the separable classes
# ----------------------------------------------------------------------


def _validated(eq: DifferenceEquation, c: complex, tol: float, residual_fn) -> complex:
    c = complex(c)
    residual = residual_fn(eq, c)
    if residual > tol:
        raise ConstantValidationError(c, residual, tol)
    return c


def build_additive_form_symmetry(
    eq: DifferenceEquation, c: complex, validate: bool = True, tol: float = 1e-8
) -> FormSymmetry:
    """Components ``h_j(z) = c^j z - c^{j-1} phi_0(z) - ... - phi_{j-1}(z)``
    for j = 1..k, assembled as expression trees."""
    if not isinstance(eq.kind, SeparableAdditive):
        raise TypeError("additive symmetry construction requires a separable-additive equation")
    if validate:
        c = _validated(eq, c, tol, additive_reduction_residual)
    else:
        c = complex(c)
    phis = eq.kind.components
    k = eq.order - 1
    components = []
    for j in range(1, k + 1):
        expr: Expression = Const(c**j) * Var("x")
        for idx in range(j):
            expr = expr - Const(c ** (j - 1 - idx)) * phis[idx]
        components.append(expr)
    return FormSymmetry(1, eq.group, UnaryComponents(tuple(components)), c, eq.params)


def build_multiplicative_form_symmetry(
    eq: DifferenceEquation, c: complex, validate: bool = True, tol: float = 1e-8
) -> FormSymmetry:
    """Components ``h_j(t) = t^{c^j} psi_0(t)^{-c^{j-1}} ... psi_{j-1}(t)^{-1}``
    for j = 1..k (every earlier-component factor carries an inverse power)."""
    if not isinstance(eq.kind, SeparableMultiplicative):
        raise TypeError(
            "multiplicative symmetry construction requires a separable-multiplicative equation"
        )
    if validate:
        c = _validated(eq, c, tol, multiplicative_reduction_residual)
    else:
        c = complex(c)
    psis = eq.kind.components
    k = eq.order - 1
    components = []
    for j in range(1, k + 1):
        expr: Expression = Var("x") ** Const(c**j)
        for idx in range(j):
            expr = expr * (psis[idx] ** Const(-(c ** (j - 1 - idx))))
        components.append(expr)
    return FormSymmetry(1, eq.group, UnaryComponents(tuple(components)), c, eq.params)
