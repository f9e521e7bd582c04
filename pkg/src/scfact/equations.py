"""Difference equations, orbit iteration, and the equation document format.

An equation of order ``k+1`` prescribes ``x_{n+1}`` from the ``k+1`` most
recent states.  Four kinds are supported:

* ``General`` -- an arbitrary right-hand side over ``x0..xk`` and ``n``,
* ``Linear`` -- ``x_{n+1} + b_0 x_n + ... + b_k x_{n-k} = alpha_n``,
* ``SeparableAdditive`` -- ``x_{n+1} = alpha_n + phi_0(x_n) + ... + phi_k(x_{n-k})``,
* ``SeparableMultiplicative`` -- ``x_{n+1} = beta_n * psi_0(x_n) * ... * psi_k(x_{n-k})``,

each over one of four scalar groups (complex/real under addition, positive/
nonzero numbers under multiplication).

Variable convention: in a general right-hand side, ``x0`` stands for ``x_n``,
``x1`` for ``x_{n-1}``, ..., ``xk`` for ``x_{n-k}``; ``n`` is the time index.
Initial values, everywhere in this package, are given OLDEST FIRST:
``(x_{-k}, ..., x_{-1}, x_0)``.

Equations are immutable; orbit iteration is single-threaded per call and
concurrent iteration of the same equation is safe.
"""

from __future__ import annotations

import re as _re
from dataclasses import dataclass, field
from enum import Enum
from math import exp as _math_exp
from pathlib import Path
from random import Random
from typing import IO, Mapping, Optional, Sequence, Union

from .expressions import (
    Const,
    DomainError,
    EvaluationError,
    Expression,
    Var,
    as_expression,
    evaluate,
    format_expression,
    parse_expression,
    substitute,
)

__all__ = [
    "GroupTag",
    "General",
    "Linear",
    "SeparableAdditive",
    "SeparableMultiplicative",
    "DifferenceEquation",
    "Orbit",
    "CarrierError",
    "DocumentError",
    "general_equation",
    "linear_equation",
    "separable_additive_equation",
    "separable_multiplicative_equation",
    "as_general",
    "as_separable_additive",
    "load_equation",
    "load_equation_file",
    "iterate_orbit",
    "detect_period",
    "write_orbit_csv",
    "render_equation",
]

_RESERVED_NAMES = {"n", "i", "x", "t"}
_LAG_NAME = _re.compile(r"^x\d+$")


class CarrierError(DomainError):
    """A value left the group's carrier during iteration."""


class GroupTag(Enum):
    """Abelian scalar group an equation lives on.

    The group operation, inverse, and identity are ``(+, negation, 0)`` for
    the additive tags and ``(*, reciprocal, 1)`` for the multiplicative ones.
    """

    ADDITIVE_COMPLEX = "additive"
    ADDITIVE_REAL = "additive_real"
    MULTIPLICATIVE_POSITIVE = "multiplicative"
    MULTIPLICATIVE_NONZERO = "multiplicative_nonzero"

    @property
    def is_additive(self) -> bool:
        return self in (GroupTag.ADDITIVE_COMPLEX, GroupTag.ADDITIVE_REAL)

    @property
    def identity(self) -> complex:
        return 0j if self.is_additive else 1 + 0j

    def combine(self, a: complex, b: complex) -> complex:
        return a + b if self.is_additive else a * b

    def invert(self, a: complex) -> complex:
        if self.is_additive:
            return -a
        if a == 0:
            raise CarrierError("cannot invert zero in a multiplicative group")
        return 1 / a

    def contains(self, v: complex) -> bool:
        v = complex(v)
        if self is GroupTag.ADDITIVE_COMPLEX:
            return True
        if self is GroupTag.ADDITIVE_REAL:
            return v.imag == 0
        if self is GroupTag.MULTIPLICATIVE_POSITIVE:
            return v.imag == 0 and v.real > 0
        return v != 0

    def sample(self, rng: Random) -> complex:
        """Random carrier element for verification draws: components uniform
        in [-5, 5] for additive groups, log-uniform in [e^-3, e^3] for
        multiplicative ones."""
        if self is GroupTag.ADDITIVE_COMPLEX:
            return complex(rng.uniform(-5, 5), rng.uniform(-5, 5))
        if self is GroupTag.ADDITIVE_REAL:
            return complex(rng.uniform(-5, 5))
        return complex(_math_exp(rng.uniform(-3, 3)))


# ----------------------------------------------------------------------
# Equation kinds
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class General:
    rhs: Expression


@dataclass(frozen=True)
class Linear:
    coefficients: tuple[complex, ...]
    forcing: Expression


@dataclass(frozen=True)
class SeparableAdditive:
    components: tuple[Expression, ...]
    forcing: Expression


@dataclass(frozen=True)
class SeparableMultiplicative:
    components: tuple[Expression, ...]
    forcing: Expression


Kind = Union[General, Linear, SeparableAdditive, SeparableMultiplicative]


@dataclass(frozen=True)
class DifferenceEquation:
    """Order-(k+1) scalar recurrence of one of the four kinds.

    ``order`` equals k+1, the number of initial values.  ``params`` maps
    parameter names to complex scalars and is substituted at evaluation
    time.  ``var`` is the display letter used when rendering.
    """

    order: int
    group: GroupTag
    kind: Kind
    params: Mapping[str, complex] = field(default_factory=dict)
    name: str = ""
    var: str = "x"

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be at least 1")
        object.__setattr__(
            self, "params", {k: complex(v) for k, v in dict(self.params).items()}
        )
        for pname in self.params:
            if pname in _RESERVED_NAMES or _LAG_NAME.match(pname):
                raise ValueError(f"parameter name '{pname}' is reserved")
        kind = self.kind
        allowed_extra = set(self.params)
        if isinstance(kind, General):
            lags = {f"x{j}" for j in range(self.order)}
            bad = kind.rhs.free_variables() - lags - {"n"} - allowed_extra
            if bad:
                raise ValueError(f"rhs uses unknown names {sorted(bad)}")
        elif isinstance(kind, Linear):
            coeffs = tuple(complex(c) for c in kind.coefficients)
            if len(coeffs) > self.order:
                raise ValueError("more coefficients than the order allows")
            coeffs = coeffs + (0j,) * (self.order - len(coeffs))
            object.__setattr__(self, "kind", Linear(coeffs, kind.forcing))
            self._check_forcing(kind.forcing)
        elif isinstance(kind, (SeparableAdditive, SeparableMultiplicative)):
            if len(kind.components) != self.order:
                raise ValueError(
                    f"expected {self.order} components, got {len(kind.components)}"
                )
            for j, comp in enumerate(kind.components):
                bad = comp.free_variables() - {"x"} - allowed_extra
                if bad:
                    raise ValueError(
                        f"component {j} uses unknown names {sorted(bad)}; "
                        "only 'x' and parameters are allowed"
                    )
            self._check_forcing(kind.forcing)
        else:
            raise TypeError(f"unknown kind {kind!r}")

    def _check_forcing(self, forcing: Expression):
        bad = forcing.free_variables() - {"n"} - set(self.params)
        if bad:
            raise ValueError(f"forcing uses unknown names {sorted(bad)}")

    # -- evaluation --------------------------------------------------

    def forcing_at(self, n: int) -> complex:
        kind = self.kind
        if isinstance(kind, General):
            raise TypeError("general equations have no separate forcing term")
        env = dict(self.params)
        env["n"] = complex(n)
        return evaluate(kind.forcing, env)

    def step(self, history: Sequence[complex], n: int) -> complex:
        """Next value from ``history`` given NEWEST first:
        ``history[j] = x_{n-j}``."""
        kind = self.kind
        if isinstance(kind, General):
            env = dict(self.params)
            env["n"] = complex(n)
            for j in range(self.order):
                env[f"x{j}"] = complex(history[j])
            return evaluate(kind.rhs, env)
        if isinstance(kind, Linear):
            total = self.forcing_at(n)
            for b, x in zip(kind.coefficients, history):
                total -= b * complex(x)
            return total
        if isinstance(kind, SeparableAdditive):
            total = self.forcing_at(n)
            env = dict(self.params)
            for comp, x in zip(kind.components, history):
                env["x"] = complex(x)
                total += evaluate(comp, env)
            return total
        # separable multiplicative
        total = self.forcing_at(n)
        env = dict(self.params)
        for j, (comp, x) in enumerate(zip(kind.components, history)):
            env["x"] = complex(x)
            value = evaluate(comp, env)
            if not self.group.contains(value):
                raise CarrierError(
                    f"component psi{j} produced {value!r}, outside the group carrier",
                    comp,
                )
            total *= value
        return total


# ----------------------------------------------------------------------
# Convenience constructors (accept expression source text)
# ----------------------------------------------------------------------


def _expr(source) -> Expression:
    return parse_expression(source) if isinstance(source, str) else as_expression(source)


def general_equation(rhs, order, group=GroupTag.ADDITIVE_COMPLEX, params=None, name="", var="x"):
    return DifferenceEquation(order, group, General(_expr(rhs)), params or {}, name, var)


def linear_equation(coefficients, forcing="0", params=None, order=None, group=GroupTag.ADDITIVE_COMPLEX, name="", var="x"):
    coeffs = tuple(complex(c) for c in coefficients)
    if order is None:
        order = max(len(coeffs), 1)
    return DifferenceEquation(order, group, Linear(coeffs, _expr(forcing)), params or {}, name, var)


def separable_additive_equation(components, forcing="0", params=None, group=GroupTag.ADDITIVE_COMPLEX, name="", var="x"):
    comps = tuple(_expr(c) for c in components)
    return DifferenceEquation(len(comps), group, SeparableAdditive(comps, _expr(forcing)), params or {}, name, var)


def separable_multiplicative_equation(components, forcing="1", params=None, group=GroupTag.MULTIPLICATIVE_POSITIVE, name="", var="x"):
    comps = tuple(_expr(c) for c in components)
    return DifferenceEquation(len(comps), group, SeparableMultiplicative(comps, _expr(forcing)), params or {}, name, var)


# ----------------------------------------------------------------------
# Kind conversions
# ----------------------------------------------------------------------


def as_general(eq: DifferenceEquation) -> DifferenceEquation:
    """Rewrite any kind as a general right-hand side over ``x0..xk``."""
    kind = eq.kind
    if isinstance(kind, General):
        return eq
    if isinstance(kind, Linear):
        rhs: Expression = kind.forcing
        for j, b in enumerate(kind.coefficients):
            rhs = rhs - Const(b) * Var(f"x{j}")
    elif isinstance(kind, SeparableAdditive):
        rhs = kind.forcing
        for j, comp in enumerate(kind.components):
            rhs = rhs + substitute(comp, {"x": Var(f"x{j}")})
    else:
        rhs = kind.forcing
        for j, comp in enumerate(kind.components):
            rhs = rhs * substitute(comp, {"x": Var(f"x{j}")})
    return DifferenceEquation(eq.order, eq.group, General(rhs), eq.params, eq.name, eq.var)


def as_separable_additive(eq: DifferenceEquation) -> DifferenceEquation:
    """View a linear equation as separable-additive with components
    ``phi_j(x) = -b_j * x``."""
    if not isinstance(eq.kind, Linear):
        raise TypeError("only linear equations convert to separable-additive form")
    comps = tuple(Const(-b) * Var("x") for b in eq.kind.coefficients)
    return DifferenceEquation(
        eq.order,
        eq.group,
        SeparableAdditive(comps, eq.kind.forcing),
        eq.params,
        eq.name,
        eq.var,
    )


# ----------------------------------------------------------------------
# Orbits
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class Orbit:
    """A simulated trajectory.

    ``initial_values`` are ``(x_{-k}, ..., x_0)`` oldest first; ``values``
    are ``x_1, x_2, ...``.  When a domain error cut the run short,
    ``truncated_at`` records the time index of the first value that could
    not be computed.
    """

    initial_values: tuple[complex, ...]
    values: tuple[complex, ...]
    truncated_at: Optional[int] = None
    truncation_reason: Optional[str] = None
    equation_name: str = ""
    params: Mapping[str, complex] = field(default_factory=dict)

    @property
    def full_sequence(self) -> tuple[complex, ...]:
        return self.initial_values + self.values

    @property
    def order(self) -> int:
        return len(self.initial_values)


def iterate_orbit(eq: DifferenceEquation, init: Sequence[complex], steps: int) -> Orbit:
    """Iterate ``eq`` for ``steps`` steps from oldest-first initial values.

    Domain errors (division by zero, log of zero, carrier violations)
    truncate the orbit; the truncation index and reason are recorded on the
    returned :class:`Orbit` rather than raised.
    """
    init = tuple(complex(v) for v in init)
    if len(init) != eq.order:
        raise ValueError(f"expected {eq.order} initial values, got {len(init)}")
    if not eq.group.is_additive:
        for v in init:
            if not eq.group.contains(v):
                raise ValueError(f"initial value {v!r} is outside the group carrier")
    history = list(reversed(init))  # newest first
    values: list[complex] = []
    truncated_at = None
    reason = None
    for n in range(steps):
        try:
            v = eq.step(history, n)
            if not eq.group.is_additive and not eq.group.contains(v):
                raise CarrierError(f"value {v!r} left the group carrier")
        except (DomainError, EvaluationError) as exc:
            truncated_at = n + 1
            reason = str(exc)
            break
        values.append(v)
        history.insert(0, v)
        history.pop()
    return Orbit(init, tuple(values), truncated_at, reason, eq.name, eq.params)


def detect_period(
    orbit: Union[Orbit, Sequence[complex]], tol: float = 1e-5, max_period: int = 64
) -> Optional[tuple[int, int]]:
    """Smallest period ``p <= max_period`` of the orbit tail, if any.

    Checks ``|x_{n+p} - x_n| <= tol*(1+|x_n|)`` over the final
    ``2*max_period`` values; the contract presumes the orbit holds at least
    ``3*max_period`` values (shorter inputs are handled best-effort over
    whatever tail exists).  Returns ``(period, onset)`` where ``onset`` is
    the first position in the full stored sequence from which the relation
    holds through the end, or ``None`` when no period qualifies.
    """
    seq = list(orbit.full_sequence) if isinstance(orbit, Orbit) else [complex(v) for v in orbit]
    if not seq:
        return None
    window = seq[-2 * max_period:] if len(seq) > 2 * max_period else seq

    def close(a: complex, b: complex) -> bool:
        return abs(b - a) <= tol * (1 + abs(a))

    for p in range(1, max_period + 1):
        if p >= len(window):
            break
        if all(close(window[i], window[i + p]) for i in range(len(window) - p)):
            onset = 0
            for j in range(len(seq) - p - 1, -1, -1):
                if not close(seq[j], seq[j + p]):
                    onset = j + 1
                    break
            return p, onset
    return None


def write_orbit_csv(orbit: Orbit, stream: IO[str]) -> None:
    """Rows ``n,re,im`` starting at ``n = -k``."""
    stream.write("n,re,im\n")
    k = orbit.order - 1
    for idx, v in enumerate(orbit.full_sequence):
        stream.write(f"{idx - k},{v.real!r},{v.imag!r}\n")


# ----------------------------------------------------------------------
# Equation documents.  Line-based: sections in brackets, `key = value`,
# strings double-quoted, lists bracketed, `#` comments.
# ----------------------------------------------------------------------


class DocumentError(Exception):
    """Malformed equation document."""


_GROUPS = {tag.value: tag for tag in GroupTag}
_KINDS = ("general", "linear", "separable")


def _strip_comment(line: str) -> str:
    out = []
    quoted = False
    for ch in line:
        if ch == '"':
            quoted = not quoted
        if ch == "#" and not quoted:
            break
        out.append(ch)
    return "".join(out)


def _raw_sections(text: str) -> dict[str, dict[str, str]]:
    sections: dict[str, dict[str, str]] = {}
    current: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            if current not in ("equation", "params"):
                raise DocumentError(f"line {lineno}: unknown section [{current}]")
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise DocumentError(f"line {lineno}: expected 'key = value'")
        if current is None:
            raise DocumentError(f"line {lineno}: key outside any section")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise DocumentError(f"line {lineno}: expected 'key = value'")
        if key in sections[current]:
            raise DocumentError(f"line {lineno}: duplicate key '{key}'")
        sections[current][key] = value
    return sections


def _string_value(raw: str, key: str) -> str:
    if len(raw) >= 2 and raw[0] == '"' and raw[-1] == '"':
        return raw[1:-1]
    raise DocumentError(f"key '{key}' must be a double-quoted string")


def _constant_value(raw: str, key: str) -> complex:
    if len(raw) >= 2 and raw[0] == '"' and raw[-1] == '"':
        raw = raw[1:-1]
    try:
        expr = parse_expression(raw)
    except Exception as exc:
        raise DocumentError(f"key '{key}': {exc}") from None
    if expr.free_variables():
        raise DocumentError(f"key '{key}' must be a constant")
    try:
        return evaluate(expr, {})
    except EvaluationError as exc:
        raise DocumentError(f"key '{key}': {exc}") from None


def _int_value(raw: str, key: str) -> int:
    v = _constant_value(raw, key)
    if v.imag != 0 or v.real != int(v.real):
        raise DocumentError(f"key '{key}' must be an integer")
    return int(v.real)


def _list_value(raw: str, key: str) -> list[complex]:
    if not (raw.startswith("[") and raw.endswith("]")):
        raise DocumentError(f"key '{key}' must be a bracketed list")
    inner = raw[1:-1].strip()
    if not inner:
        return []
    parts = []
    depth = 0
    quoted = False
    start = 0
    for idx, ch in enumerate(inner):
        if ch == '"':
            quoted = not quoted
        elif ch == "(" and not quoted:
            depth += 1
        elif ch == ")" and not quoted:
            depth -= 1
        elif ch == "," and depth == 0 and not quoted:
            parts.append(inner[start:idx])
            start = idx + 1
    parts.append(inner[start:])
    return [_constant_value(p.strip(), key) for p in parts]


def _expression_value(raw: str, key: str, allowed: set[str]) -> Expression:
    text = _string_value(raw, key)
    try:
        expr = parse_expression(text)
    except Exception as exc:
        raise DocumentError(f"key '{key}': {exc}") from None
    bad = expr.free_variables() - allowed
    if bad:
        raise DocumentError(
            f"key '{key}' uses free variable(s) {sorted(bad)}; allowed: {sorted(allowed)}"
        )
    return expr


def load_equation(text: str, *, name: str = "") -> DifferenceEquation:
    """Parse an equation document into a :class:`DifferenceEquation`."""
    sections = _raw_sections(text)
    if "equation" not in sections:
        raise DocumentError("missing [equation] section")
    eqsec = dict(sections["equation"])
    params = {
        key: _constant_value(raw, key) for key, raw in sections.get("params", {}).items()
    }
    for pname in params:
        if pname in _RESERVED_NAMES or _LAG_NAME.match(pname):
            raise DocumentError(f"parameter name '{pname}' is reserved")

    def take(key: str, required: bool = True) -> Optional[str]:
        if key in eqsec:
            return eqsec.pop(key)
        if required:
            raise DocumentError(f"missing key '{key}'")
        return None

    doc_name = take("name", required=False)
    if doc_name is not None:
        name = _string_value(doc_name, "name")
    order = _int_value(take("order"), "order")
    if order < 1:
        raise DocumentError("order must be at least 1")
    group_raw = _string_value(take("group"), "group")
    if group_raw not in _GROUPS:
        raise DocumentError(f"unknown group '{group_raw}'")
    group = _GROUPS[group_raw]
    kind_raw = _string_value(take("kind"), "kind")
    if kind_raw not in _KINDS:
        raise DocumentError(f"unknown kind '{kind_raw}'")

    pnames = set(params)
    kind: Kind
    if kind_raw == "general":
        lags = {f"x{j}" for j in range(order)}
        kind = General(_expression_value(take("rhs"), "rhs", lags | {"n"} | pnames))
    elif kind_raw == "linear":
        b = _list_value(take("b"), "b")
        if len(b) != order:
            raise DocumentError(f"expected {order} coefficients in 'b', got {len(b)}")
        forcing = _expression_value(take("forcing"), "forcing", {"n"} | pnames)
        kind = Linear(tuple(b), forcing)
    else:
        prefix = "phi" if group.is_additive else "psi"
        comps = []
        for j in range(order):
            key = f"{prefix}{j}"
            raw = take(key)
            comps.append(_expression_value(raw, key, {"x"} | pnames))
        forcing = _expression_value(take("forcing"), "forcing", {"n"} | pnames)
        if group.is_additive:
            kind = SeparableAdditive(tuple(comps), forcing)
        else:
            kind = SeparableMultiplicative(tuple(comps), forcing)

    if eqsec:
        raise DocumentError(f"unexpected key(s) in [equation]: {sorted(eqsec)}")
    try:
        return DifferenceEquation(order, group, kind, params, name)
    except ValueError as exc:
        raise DocumentError(str(exc)) from None


def load_equation_file(path) -> DifferenceEquation:
    path = Path(path)
    return load_equation(path.read_text(encoding="utf-8"), name=path.stem)


# ----------------------------------------------------------------------
# Rendering
# ----------------------------------------------------------------------


def _lag_display(var: str, j: int) -> str:
    return f"{var}(n)" if j == 0 else f"{var}(n-{j})"


def render_equation(eq: DifferenceEquation) -> str:
    """One-line display such as ``x(n+1) = x(n-1)*exp(a - x(n) - x(n-1))``."""
    v = eq.var
    rhs = as_general(eq).kind.rhs
    mapping = {f"x{j}": Var(_lag_display(v, j)) for j in range(eq.order)}
    return f"{v}(n+1) = {format_expression(substitute(rhs, mapping))}"
