import io
import math
from random import Random

import pytest

from scfact import (
    CarrierError,
    DocumentError,
    GroupTag,
    Linear,
    SeparableMultiplicative,
    as_general,
    as_separable_additive,
    detect_period,
    general_equation,
    iterate_orbit,
    linear_equation,
    load_equation,
    load_equation_file,
    render_equation,
    separable_multiplicative_equation,
    write_orbit_csv,
)

from helpers import EQUATIONS_DIR, hd0_cycle, make_exp, make_hd0, make_hs3, rel_err

EXAMPLE4_DOC = """
# Example document
[equation]
name = "exp"
order = 2
group = "multiplicative"
kind = "separable"
psi0 = "exp(-x)"
psi1 = "x*exp(-x)"
forcing = "exp(a)"

[params]
a = 4.6
"""


class TestLoader:
    def test_example4_document(self):
        eq = load_equation(EXAMPLE4_DOC)
        assert eq.order == 2
        assert eq.group is GroupTag.MULTIPLICATIVE_POSITIVE
        assert isinstance(eq.kind, SeparableMultiplicative)
        assert eq.params["a"] == 4.6
        assert eq.name == "exp"

    def test_linear_document(self):
        doc = """
        [equation]
        order = 2
        group = "additive"
        kind = "linear"
        b = [-3, 2]
        forcing = "0"
        """
        eq = load_equation(doc)
        assert isinstance(eq.kind, Linear)
        assert eq.kind.coefficients == (-3 + 0j, 2 + 0j)

    def test_component_with_foreign_variable(self):
        doc = EXAMPLE4_DOC.replace('psi0 = "exp(-x)"', 'psi0 = "exp(-y)"')
        with pytest.raises(DocumentError, match="psi0"):
            load_equation(doc)

    def test_missing_key(self):
        doc = EXAMPLE4_DOC.replace('forcing = "exp(a)"', "")
        with pytest.raises(DocumentError, match="missing key 'forcing'"):
            load_equation(doc)

    def test_wrong_component_count(self):
        doc = EXAMPLE4_DOC.replace("order = 2", "order = 3")
        with pytest.raises(DocumentError, match="psi2"):
            load_equation(doc)

    def test_unknown_group_and_kind(self):
        with pytest.raises(DocumentError, match="unknown group"):
            load_equation(EXAMPLE4_DOC.replace('"multiplicative"', '"ring"'))
        with pytest.raises(DocumentError, match="unknown kind"):
            load_equation(EXAMPLE4_DOC.replace('"separable"', '"weird"'))

    def test_wrong_coefficient_count(self):
        doc = """
        [equation]
        order = 3
        group = "additive"
        kind = "linear"
        b = [-3, 2]
        forcing = "0"
        """
        with pytest.raises(DocumentError, match="coefficients"):
            load_equation(doc)

    def test_unexpected_key(self):
        doc = EXAMPLE4_DOC.replace('psi1 = "x*exp(-x)"', 'psi1 = "x*exp(-x)"\npsi7 = "x"')
        with pytest.raises(DocumentError, match="psi7"):
            load_equation(doc)

    def test_duplicate_key(self):
        doc = EXAMPLE4_DOC + '\n[equation2]'
        with pytest.raises(DocumentError):
            load_equation(doc)

    def test_key_outside_section(self):
        with pytest.raises(DocumentError, match="outside"):
            load_equation('order = 2')

    def test_reserved_parameter_name(self):
        doc = EXAMPLE4_DOC.replace("a = 4.6", "n = 4.6").replace('"exp(a)"', '"exp(n)"')
        with pytest.raises(DocumentError, match="reserved"):
            load_equation(doc)

    def test_complex_param(self):
        doc = EXAMPLE4_DOC.replace("a = 4.6", 'a = "1 + 2*i"')
        eq = load_equation(doc)
        assert eq.params["a"] == 1 + 2j

    def test_additive_separable_document_uses_phi_keys(self):
        doc = """
        [equation]
        order = 2
        group = "additive"
        kind = "separable"
        phi0 = "3*x"
        phi1 = "-2*x"
        forcing = "0"
        """
        eq = load_equation(doc)
        orbit = iterate_orbit(eq, (0, 1), 5)
        assert [v.real for v in orbit.values] == [3, 7, 15, 31, 63]
        with pytest.raises(DocumentError, match="phi0"):
            load_equation(doc.replace("phi0", "psi0"))

    def test_shipped_documents_load(self):
        for path in sorted(EQUATIONS_DIR.glob("*.eq")):
            eq = load_equation_file(path)
            assert eq.order >= 1


class TestIteration:
    def test_hd0_orbit_values(self):
        orbit = iterate_orbit(make_hd0(1.0), (1, 2), 12)
        expected = [2, 1, 0.5, 0.5, 1, 2, 2, 1, 0.5, 0.5, 1, 2]
        assert [v.real for v in orbit.values] == expected

    def test_example4_fixed_point(self):
        orbit = iterate_orbit(make_exp(4.6), (2.3, 2.3), 10)
        assert all(rel_err(v, 2.3) < 1e-12 for v in orbit.values)

    def test_hs3_hand_iteration(self):
        orbit = iterate_orbit(make_hs3(1.0), (0, 1, 3), 3)
        assert [v.real for v in orbit.values] == [5.0, 6.0, 6.5]

    def test_wrong_init_length(self):
        with pytest.raises(ValueError, match="expected 2 initial values"):
            iterate_orbit(make_hd0(), (1,), 5)

    def test_init_outside_carrier(self):
        with pytest.raises(ValueError, match="carrier"):
            iterate_orbit(make_hd0(), (1, -2), 5)

    def test_domain_error_truncates(self):
        eq = general_equation("1/x0", 1, GroupTag.ADDITIVE_REAL)
        orbit = iterate_orbit(eq, (0,), 5)
        assert orbit.values == ()
        assert orbit.truncated_at == 1
        assert "division by zero" in orbit.truncation_reason

    def test_carrier_violation_truncates_with_index(self):
        eq = separable_multiplicative_equation(["x - 2"], "1")
        orbit = iterate_orbit(eq, (3,), 10)
        # 3 -> 1 -> -1 violates positivity when computing x_2
        assert orbit.truncated_at == 2
        assert isinstance(orbit.truncation_reason, str)
        assert orbit.values == (1 + 0j,)

    def test_linear_kind_iteration(self):
        eq = linear_equation([-3, 2])
        orbit = iterate_orbit(eq, (0, 1), 5)
        assert [v.real for v in orbit.values] == [3, 7, 15, 31, 63]

    def test_time_dependent_forcing(self):
        eq = linear_equation([0], forcing="n")
        orbit = iterate_orbit(eq, (0,), 4)
        assert [v.real for v in orbit.values] == [0, 1, 2, 3]

    def test_kind_consistency_linear_vs_general(self):
        rng = Random(7)
        eq = linear_equation([-0.4, 0.25, 0.1], forcing="0.5*(0.9^n)")
        geq = as_general(eq)
        init = [rng.uniform(-1, 1) for _ in range(3)]
        a = iterate_orbit(eq, init, 100)
        b = iterate_orbit(geq, init, 100)
        assert max(rel_err(x, y) for x, y in zip(a.values, b.values)) < 1e-12

    def test_kind_consistency_separable_vs_general(self):
        eq = make_exp(4.6)
        geq = as_general(eq)
        a = iterate_orbit(eq, (2.0, 3.1), 50)
        b = iterate_orbit(geq, (2.0, 3.1), 50)
        assert max(rel_err(x, y) for x, y in zip(a.values, b.values)) < 1e-12

    def test_positive_components_stay_positive(self):
        orbit = iterate_orbit(make_exp(4.6), (0.7, 5.2), 300)
        assert orbit.truncated_at is None
        assert all(v.imag == 0 and v.real > 0 for v in orbit.values)

    def test_as_separable_additive_matches_linear(self):
        eq = linear_equation([-3, 2], forcing="1")
        sep = as_separable_additive(eq)
        a = iterate_orbit(eq, (0.3, 0.7), 40)
        b = iterate_orbit(sep, (0.3, 0.7), 40)
        assert max(rel_err(x, y) for x, y in zip(a.values, b.values)) < 1e-12


class TestPeriodDetection:
    def test_hd0_period_six_from_start(self):
        orbit = iterate_orbit(make_hd0(1.0), (1, 2), 22)
        assert detect_period(orbit, 1e-9, 8) == (6, 0)

    def test_constant_orbit(self):
        orbit = iterate_orbit(general_equation("x0", 1), (4,), 30)
        assert detect_period(orbit, 1e-9, 8) == (1, 0)

    def test_reciprocal_factor_period_two(self):
        eq = general_equation(
            "exp(a)/x0", 1, GroupTag.MULTIPLICATIVE_POSITIVE, params={"a": 4.6}
        )
        orbit = iterate_orbit(eq, (1,), 30)
        assert detect_period(orbit, 1e-9, 8)[0] == 2

    def test_multiples_certified_minimal_returned(self):
        orbit = iterate_orbit(make_hd0(1.3), (0.7, 1.9), 40)
        period, _ = detect_period(orbit, 1e-9, 13)
        assert period == 6
        seq = orbit.full_sequence
        for p in (6, 12):
            window = seq[-26:]
            assert all(
                abs(window[i + p] - window[i]) <= 1e-9 * (1 + abs(window[i]))
                for i in range(len(window) - p)
            )

    def test_onset_after_transient(self):
        tail = hd0_cycle(1, 2, 1.0) * 4
        seq = [9.9, -3.3] + tail
        assert detect_period(seq, 1e-9, 6) == (6, 2)

    def test_absence_is_none(self):
        rng = Random(3)
        seq = [complex(rng.uniform(0, 1)) for _ in range(60)]
        assert detect_period(seq, 1e-9, 10) is None


class TestCsv:
    def test_orbit_csv_layout(self):
        orbit = iterate_orbit(make_hd0(1.0), (1, 2), 2)
        buf = io.StringIO()
        write_orbit_csv(orbit, buf)
        assert buf.getvalue().splitlines() == [
            "n,re,im",
            "-1,1.0,0.0",
            "0,2.0,0.0",
            "1,2.0,0.0",
            "2,1.0,0.0",
        ]


def test_render_equation():
    assert render_equation(make_hd0(1.0)) == "x(n+1) = a*x(n)/x(n-1)"
    text = render_equation(linear_equation([-3, 2]))
    assert "x(n-1)" in text and text.startswith("x(n+1) = ")


def test_group_operations():
    add, mul = GroupTag.ADDITIVE_COMPLEX, GroupTag.MULTIPLICATIVE_POSITIVE
    assert add.combine(2, 3) == 5 and add.invert(2) == -2 and add.identity == 0
    assert mul.combine(2, 3) == 6 and mul.invert(2) == 0.5 and mul.identity == 1
    assert mul.contains(2.5) and not mul.contains(-1) and not mul.contains(1 + 1j)
    assert GroupTag.MULTIPLICATIVE_NONZERO.contains(-3) and not GroupTag.MULTIPLICATIVE_NONZERO.contains(0)
    assert GroupTag.ADDITIVE_REAL.contains(-3) and not GroupTag.ADDITIVE_REAL.contains(1j)
    with pytest.raises(CarrierError):
        mul.invert(0)


def test_group_sampling_ranges():
    rng = Random(0)
    for _ in range(200):
        v = GroupTag.MULTIPLICATIVE_POSITIVE.sample(rng)
        assert math.exp(-3) <= v.real <= math.exp(3) and v.imag == 0
        w = GroupTag.ADDITIVE_REAL.sample(rng)
        assert -5 <= w.real <= 5 and w.imag == 0
        z = GroupTag.ADDITIVE_COMPLEX.sample(rng)
        assert -5 <= z.real <= 5 and -5 <= z.imag <= 5


from hypothesis import given
from hypothesis import strategies as st

_nonzero = st.complex_numbers(
    min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False
)


@given(a=_nonzero, b=_nonzero)
def test_group_axioms_additive(a, b):
    g = GroupTag.ADDITIVE_COMPLEX
    assert g.combine(a, g.identity) == a
    assert g.combine(a, g.invert(a)) == g.identity
    assert g.combine(a, b) == g.combine(b, a)


@given(a=_nonzero)
def test_group_axioms_multiplicative(a):
    g = GroupTag.MULTIPLICATIVE_NONZERO
    assert g.combine(a, g.identity) == a
    assert abs(g.combine(a, g.invert(a)) - g.identity) < 1e-12
