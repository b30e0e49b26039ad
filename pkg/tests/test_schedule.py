import math

import pytest
from hypothesis import given, settings, strategies as st

from osrtemp.schedule import Kind, ScheduleSpec, temperature_at, temperature_curve

from oracles import gcos_direct


def test_const_schedule():
    spec = ScheduleSpec.const(0.2)
    assert temperature_at(spec, 1) == 0.2
    assert temperature_at(spec, 599) == 0.2
    assert spec.tau_minus == spec.tau_plus


def test_negcos_extrema():
    spec = ScheduleSpec.negcos(0.3, 0.1, period=200, total_epochs=600)
    assert temperature_at(spec, 100) == pytest.approx(0.3, abs=1e-15)
    assert temperature_at(spec, 200) == pytest.approx(0.1, abs=1e-15)
    assert temperature_at(spec, 1) == pytest.approx(0.1, abs=1e-4)


def test_negcos_terminal_hold():
    spec = ScheduleSpec.negcos(2.0, 0.5, period=200, total_epochs=600)
    assert all(temperature_at(spec, e) == 2.0 for e in range(500, 601))
    # just before the hold the wave is still running
    assert temperature_at(spec, 499) < 2.0


def test_cos_starts_high():
    spec = ScheduleSpec.cos(0.4, 0.1, period=200, total_epochs=600)
    assert temperature_at(spec, 1) == pytest.approx(0.4, abs=1e-4)
    assert temperature_at(spec, 100) == pytest.approx(0.1, abs=1e-15)


def test_gcos_quarter_phase_value():
    spec = ScheduleSpec.gcos(0.4, 0.1, period=200, shift=0.5, total_epochs=600)
    assert temperature_at(spec, 25) == pytest.approx(0.35606601717798214, abs=1e-12)


def test_gcos_matches_direct_formula_grid():
    for k in (0.0, 0.25, 0.5, 0.75, 1.0):
        for period, total in ((200, 600), (100, 600), (7, 50), (30, 31)):
            spec = ScheduleSpec.gcos(0.5, 0.05, period=period, shift=k, total_epochs=total)
            for e in range(1, total + 1):
                ref = gcos_direct(0.5, 0.05, period, k, total, e)
                assert abs(temperature_at(spec, e) - ref) < 1e-12


def test_aliases_pin_shift():
    assert ScheduleSpec(Kind.COS, 0.4, 0.1, shift=0.7).shift == 0.0
    assert ScheduleSpec(Kind.NEGCOS, 0.4, 0.1, shift=0.2).shift == 1.0
    cos = ScheduleSpec.cos(0.4, 0.1, 50, 300)
    negcos = ScheduleSpec.negcos(0.4, 0.1, 50, 300)
    g0 = ScheduleSpec.gcos(0.4, 0.1, 50, 0.0, 300)
    g1 = ScheduleSpec.gcos(0.4, 0.1, 50, 1.0, 300)
    for e in range(1, 301):
        assert temperature_at(cos, e) == temperature_at(g0, e)
        assert temperature_at(negcos, e) == temperature_at(g1, e)


def test_half_negcos_ramps_and_resets():
    spec = ScheduleSpec(Kind.HALF_NEGCOS, 0.4, 0.1, period=100, total_epochs=300)
    assert temperature_at(spec, 100) == pytest.approx(0.4)
    assert temperature_at(spec, 50) == pytest.approx(0.25)
    assert temperature_at(spec, 101) < 0.1001
    curve = temperature_curve(spec)
    assert all(curve[i] < curve[i + 1] for i in range(99))
    # no terminal hold: the last epoch closes a ramp rather than a plateau
    assert temperature_at(spec, 300) == pytest.approx(0.4)
    assert temperature_at(spec, 299) < 0.4


def test_step_up_staircase():
    spec = ScheduleSpec(Kind.STEP_UP, 0.4, 0.1, total_epochs=600, steps=4)
    assert temperature_at(spec, 1) == pytest.approx(0.1)
    assert temperature_at(spec, 150) == pytest.approx(0.1)
    assert temperature_at(spec, 151) == pytest.approx(0.2)
    assert temperature_at(spec, 600) == pytest.approx(0.4)
    assert len(set(temperature_curve(spec).round(12))) == 4


def test_random_is_deterministic_and_in_range():
    spec = ScheduleSpec(Kind.RANDOM, 0.4, 0.1, total_epochs=100, seed=3)
    values = [temperature_at(spec, e) for e in range(1, 101)]
    assert values == [temperature_at(spec, e) for e in range(1, 101)]
    assert all(0.1 <= v <= 0.4 for v in values)
    assert len(set(values)) > 90
    other = ScheduleSpec(Kind.RANDOM, 0.4, 0.1, total_epochs=100, seed=4)
    assert values != [temperature_at(other, e) for e in range(1, 101)]


@pytest.mark.parametrize("bad", [0, 601, -3])
def test_epoch_out_of_range(bad):
    with pytest.raises(ValueError):
        temperature_at(ScheduleSpec.negcos(0.3, 0.1), bad)


def test_construction_errors():
    with pytest.raises(ValueError):
        ScheduleSpec.negcos(0.1, 0.3)
    with pytest.raises(ValueError):
        ScheduleSpec.gcos(0.3, 0.1, shift=1.5)
    with pytest.raises(ValueError):
        ScheduleSpec.const(0.0)
    with pytest.raises(ValueError):
        ScheduleSpec(Kind.CONST, 0.3, 0.1)
    with pytest.raises(ValueError):
        ScheduleSpec.negcos(0.3, 0.1, period=0)


def test_dict_round_trip():
    spec = ScheduleSpec.gcos(0.4, 0.1, period=150, shift=0.25, total_epochs=450)
    assert ScheduleSpec.from_dict(spec.to_dict()) == spec
    assert ScheduleSpec.from_dict({"kind": "Const", "tau": 0.5}) == ScheduleSpec.const(0.5)


kinds = st.sampled_from(list(Kind))


@st.composite
def specs(draw):
    lo = draw(st.floats(0.01, 3.0))
    hi = lo + draw(st.floats(0.0, 3.0))
    kind = draw(kinds)
    if kind is Kind.CONST:
        lo = hi
    return ScheduleSpec(kind, hi, lo, period=draw(st.integers(1, 300)),
                        shift=draw(st.floats(0.0, 1.0)),
                        total_epochs=draw(st.integers(1, 700)),
                        steps=draw(st.integers(1, 20)), seed=draw(st.integers(0, 2**31)))


@settings(max_examples=200, deadline=None)
@given(specs(), st.data())
def test_range_property(spec, data):
    e = data.draw(st.integers(1, spec.total_epochs))
    t = temperature_at(spec, e)
    assert spec.tau_minus - 1e-12 <= t <= spec.tau_plus + 1e-12


@settings(max_examples=100, deadline=None)
@given(specs())
def test_terminal_hold_property(spec):
    if spec.kind not in (Kind.GCOS, Kind.NEGCOS) or spec.shift == 0:
        return
    first = math.ceil(spec.hold_start)
    for e in range(max(first, 1), spec.total_epochs + 1):
        assert temperature_at(spec, e) == spec.tau_plus


@settings(max_examples=100, deadline=None)
@given(specs(), st.data())
def test_degenerate_flatness(spec, data):
    flat = ScheduleSpec(spec.kind, spec.tau_plus, spec.tau_plus, period=spec.period,
                        shift=spec.shift, total_epochs=spec.total_epochs, steps=spec.steps,
                        seed=spec.seed)
    e = data.draw(st.integers(1, spec.total_epochs))
    assert temperature_at(flat, e) == spec.tau_plus


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 30), st.integers(1, 400))
def test_step_up_monotone(steps, total):
    spec = ScheduleSpec(Kind.STEP_UP, 1.0, 0.2, total_epochs=total, steps=steps)
    curve = temperature_curve(spec)
    assert all(curve[i] <= curve[i + 1] for i in range(len(curve) - 1))
