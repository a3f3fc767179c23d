import pytest

from conftest import STATICS, LAMBDA_DIP, inputs_of
from pttrade.entry import solve_entry
from pttrade.errors import InvalidParameterError
from pttrade.sweeps import (
    SweepRecord,
    check_monotonicity,
    find_transitions,
    local_extrema,
    run_sweep,
    sweep_record,
)

BASE = inputs_of(STATICS)


def _rec(v, p1):
    return SweepRecord("psi", v, "interval", p1, None, None, None, None)


class TestRecords:
    def test_fields_follow_regime(self):
        one = sweep_record(BASE, "gamma", 1.0)
        assert one.regime == "one_sided" and one.p2_star is None and one.C is None
        mid = sweep_record(BASE, "gamma", 0.95)
        assert mid.regime == "interval" and mid.p1_star < mid.p2_star and mid.C > 0
        none = sweep_record(BASE, "psi", 9.5)
        assert none.regime == "no_trade" and none.p1_star is None and none.C is not None

    def test_ill_posed_record(self):
        rec = sweep_record(BASE.replace(beta=0.3), "psi", 1.0)
        assert rec.regime == "ill_posed" and rec.c is None and rec.critical_xi is None

    def test_unknown_parameter(self):
        with pytest.raises(InvalidParameterError):
            sweep_record(BASE, "alpha", 0.4)


class TestSweep:
    def test_order_and_size(self):
        recs = run_sweep(BASE, "psi", 0.0, 10.0, 11)
        assert [r.value for r in recs] == pytest.approx(list(range(11)))

    def test_workers_do_not_change_output(self):
        assert run_sweep(BASE, "lambda", 1.0, 1.1, 12, workers=3) == run_sweep(BASE, "lambda", 1.0, 1.1, 12)

    @pytest.mark.parametrize("param, lo, hi", [("gamma", 0.5, 1.2), ("lambda", 0.9, 1.1), ("psi", -1.0, 2.0), ("R", 0.0, 1.0)])
    def test_invalid_range_rejected(self, param, lo, hi):
        with pytest.raises(InvalidParameterError):
            run_sweep(BASE, param, lo, hi, 5)

    def test_degenerate_grid_rejected(self):
        with pytest.raises(InvalidParameterError):
            run_sweep(BASE, "psi", 1.0, 1.0, 5)
        with pytest.raises(InvalidParameterError):
            run_sweep(BASE, "psi", 0.0, 1.0, 1)


class TestTransitions:
    def test_psi_transition_is_c_times_r(self):
        recs = run_sweep(BASE, "psi", 0.0, 10.0, 21)
        (t,) = find_transitions(BASE, recs)
        C = solve_entry(BASE).regime.C
        assert t.lower <= C <= t.upper and t.upper - t.lower <= 1e-6
        assert (t.regime_below, t.regime_above) == ("interval", "no_trade")

    def test_transitions_consistent_with_classification(self):
        recs = run_sweep(BASE, "gamma", 0.85, 1.0, 31)
        ts = find_transitions(BASE, recs)
        assert len(ts) == 2
        for t in ts:
            assert sweep_record(BASE, "gamma", t.lower).regime == t.regime_below
            assert sweep_record(BASE, "gamma", t.upper).regime == t.regime_above


class TestComparativeStatics:
    @pytest.mark.parametrize(
        "param, lo, hi, boundary, direction",
        [
            ("gamma", 0.85, 1.0, "p1_star", "nonincreasing"),
            ("gamma", 0.85, 1.0, "p2_star", "nondecreasing"),
            ("psi", 0.0, 10.0, "p1_star", "nondecreasing"),
            ("psi", 0.0, 10.0, "p2_star", "nondecreasing"),
            ("lambda", 1.0, 1.15, "p2_star", "nonincreasing"),
        ],
    )
    def test_statics_directions(self, param, lo, hi, boundary, direction):
        v = check_monotonicity(run_sweep(BASE, param, lo, hi, 60), boundary, direction)
        assert v.holds, v

    def test_verdict_measures_violation(self):
        v = check_monotonicity([_rec(0, 1.0), _rec(1, 2.0), _rec(2, 1.5)], "p1_star", "nondecreasing")
        assert not v.holds and v.max_violation == pytest.approx(0.25)
        ok = check_monotonicity([_rec(0, 1.0), _rec(1, None), _rec(2, 0.5)], "p1_star", "nondecreasing")
        assert ok.holds  # pairs with a missing value are skipped

    def test_lower_boundary_not_monotone_in_lambda(self):
        recs = run_sweep(inputs_of(LAMBDA_DIP), "lambda", 1.0, 1.3, 100)
        assert local_extrema(recs, "p1_star")

    def test_local_extrema(self):
        recs = [_rec(i, v) for i, v in enumerate([3.0, 2.0, 2.5, None, 1.0, 1.0, 2.0])]
        assert local_extrema(recs, "p1_star") == [1]
