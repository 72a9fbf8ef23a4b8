"""Stability checks, eps Nash certification, dynamics, revenue dilemmas."""

from fractions import Fraction as F

import pytest

from broadmatch.equilibrium import (best_response_dynamics, dilemma_report,
                                    initial_profile, marginal_payoffs,
                                    natural_base_split, verify_bme,
                                    verify_eps_ne)
from broadmatch.model import Allocation, Profile, load_instance, load_split
from broadmatch.partition import INFINITE
from broadmatch.simulate import simulate_day
from conftest import FIXTURES, build_instance


def inst(name):
    return load_instance((FIXTURES / name).read_text())


def split(name):
    return load_split((FIXTURES / name).read_text())


FAMILY = "three-keyword-family.json"
SHIFTED = "three-keyword-family-shifted.split.json"
STAYHOME = "three-keyword-family-stayhome.split.json"


# -- marginal payoffs ---------------------------------------------------------

def test_marginal_rates_under_the_shifted_split():
    fam, sh = inst(FAMILY), split(SHIFTED)
    mp2 = marginal_payoffs(fam, "2", sh)
    assert mp2["k3"]["queries"] == 14 and mp2["k3"]["mp_minus"] == F(14, 3)
    assert mp2["k3"]["mp_plus"] is None            # stream exhausted
    assert mp2["k1"]["queries"] == 0 and mp2["k1"]["mp_minus"] is None
    assert mp2["k1"]["mp_plus"] == F(1, 2)
    mp5 = marginal_payoffs(fam, "5", sh)
    assert mp5["k2"]["mp_minus"] == F(5, 3)
    assert mp5["k3"]["mp_plus"] == F(1, 2)


def test_free_queries_count_as_already_bought():
    ext = inst("two-keyword-entry-ext.json")
    nat = split("two-keyword-entry-natural.split.json")
    mp = marginal_payoffs(ext, "3", nat)
    # 3 pays nothing on k1 under this profile, so with zero committed she
    # still "buys" the whole stream; there is no next query to move into
    assert mp["k1"]["queries"] == 100
    assert mp["k1"]["cost"] == 0 and mp["k1"]["payoff"] == F(759, 5)
    assert mp["k1"]["mp_minus"] == INFINITE and mp["k1"]["mp_plus"] is None


# -- local stability ----------------------------------------------------------

def test_both_family_splits_are_locally_stable():
    fam = inst(FAMILY)
    for name in (SHIFTED, STAYHOME):
        rep = verify_bme(fam, split(name))
        assert rep["ok"], name
        assert rep["e1_violations"] == [] and rep["e2_violations"] == []
        assert set(rep["marginals"]) == {"1", "2", "3", "4", "5", "6"}


def test_condition_one_violation_is_reported_with_rates():
    rep = verify_bme(inst("agreeing-methods.json"),
                     split("agreeing-methods-allk2.split.json"))
    assert not rep["ok"]
    assert {"advertiser": "1", "into": "k1", "outof": "k2",
            "mp_plus": F(21, 5), "mp_minus": F(4)} in rep["e1_violations"]


def test_condition_one_violation_on_the_shift_pair():
    rep = verify_bme(inst("edge-shift-ext.json"),
                     split("edge-shift-noshift.split.json"))
    assert rep["e1_violations"] == [{
        "advertiser": "3", "into": "k1", "outof": "k2",
        "mp_plus": F(107, 18), "mp_minus": F(17, 3)}]


def test_condition_two_catches_unparked_wallet_money():
    tw = inst("two-keyword-entry-base.json")
    p = Profile((Allocation("1", "k1", 19, F(20)),
                 Allocation("2", "k1", 100, F(37)),
                 Allocation("3", "k2", 100, F(40)),
                 Allocation("4", "k2", 100, F(20))))
    rep = verify_bme(tw, p)
    assert not rep["ok"] and rep["e1_violations"] == []
    assert rep["e2_violations"] == [{
        "advertiser": "1", "keyword": "k1", "available": F(126, 5),
        "next_cost": F(9, 10), "committed_total": F(20), "budget": F(45)}]


def test_saturated_streams_excuse_leftover_money():
    # the natural split parks everything; saturated or free streams leave
    # nothing to flag even on the broadened graph
    ext = inst("two-keyword-entry-ext.json")
    nat = split("two-keyword-entry-natural.split.json")
    assert verify_bme(ext, nat)["ok"]
    assert verify_bme(ext, nat, graph="base")["ok"]


# -- eps Nash certification ---------------------------------------------------

def test_exact_verdicts_on_the_family_splits():
    fam = inst(FAMILY)
    sh, st = split(SHIFTED), split(STAYHOME)
    assert verify_eps_ne(fam, sh, F(3, 10))["ok"] is True
    rep = verify_eps_ne(fam, sh, F(3, 20))
    assert rep["ok"] is False
    five = rep["per_advertiser"]["5"]
    assert five["status"] == "violated"
    assert five["payoff"] == F(14) and five["optimum"] == F(189, 10)
    assert five["deviation"] == {"k2": 0, "k3": 10}
    # the quieter split is an exact equilibrium: eps 0 certifies
    assert verify_eps_ne(fam, st, F(0))["ok"] is True


def test_bracketing_method_can_be_inconclusive():
    fam, sh = inst(FAMILY), split(SHIFTED)
    rep = verify_eps_ne(fam, sh, F(3, 10), method="fptas")
    assert rep["ok"] is None
    assert rep["per_advertiser"]["5"]["status"] == "inconclusive"
    assert all(d["status"] == "certified"
               for i, d in rep["per_advertiser"].items() if i != "5")
    assert "upper" in rep["per_advertiser"]["5"]


def test_eps_ne_argument_validation():
    fam, sh = inst(FAMILY), split(SHIFTED)
    with pytest.raises(ValueError):
        verify_eps_ne(fam, sh, F(-1, 10))
    with pytest.raises(ValueError):
        verify_eps_ne(fam, sh, F(1, 10), method="annealing")
    with pytest.raises(ValueError):
        verify_eps_ne(fam, sh, F(0), method="fptas")


# -- dynamics -----------------------------------------------------------------

def test_dynamics_reach_a_fixed_point_on_disjoint_keywords():
    base = inst("two-keyword-entry-base.json")
    for method in ("greedy", "dp"):
        res = best_response_dynamics(base, method=method)
        assert res["status"] == "fixed-point" and res["rounds"] == 2
        assert simulate_day(base, res["profile"]).revenue == F(75)


def test_dynamics_can_cycle():
    res = best_response_dynamics(inst("agreeing-methods.json"), method="dp")
    assert res["status"] == "cycle"
    assert res["rounds"] == 3 and res["cycle_length"] == 2


def test_dynamics_round_cap():
    res = best_response_dynamics(inst("agreeing-methods.json"), method="dp",
                                 max_rounds=1)
    assert res["status"] == "max-rounds" and res["rounds"] == 1


def test_seeded_shuffle_is_deterministic():
    am = inst("agreeing-methods.json")
    a = best_response_dynamics(am, method="greedy", shuffle_seed=7)
    b = best_response_dynamics(am, method="greedy", shuffle_seed=7)
    assert a["profile"] == b["profile"]
    assert a["status"] == "fixed-point" and a["rounds"] == 3


def test_dynamics_rejects_unknown_knobs():
    am = inst("agreeing-methods.json")
    with pytest.raises(ValueError):
        best_response_dynamics(am, method="magic")
    with pytest.raises(ValueError):
        best_response_dynamics(am, init="sideways")


def test_initial_profiles():
    fam = inst(FAMILY)
    top = initial_profile(fam, "top")
    assert top.row("2", "k3").budget == F(42, 5)     # 17/5 beats 3 on k1
    assert top.row("4", "k1").budget == F(1)
    assert top.row("5", "k2").budget == F(42, 5)
    uni = initial_profile(fam, "uniform")
    assert uni.committed("2", "k1") == uni.committed("2", "k3") == F(21, 5)


# -- natural split and dilemmas ----------------------------------------------

def test_natural_base_split_matches_the_stored_profile():
    ext = inst("two-keyword-entry-ext.json")
    assert natural_base_split(ext) == split("two-keyword-entry-natural.split.json")


def test_natural_base_split_requires_unique_base_keywords():
    two_base = build_instance(
        ("1", "7/10"), (("k1", 10), ("k2", 10)), (("a", "5"), ("b", "5")),
        (("a", "k1", "2", "base"), ("a", "k2", "1", "base"),
         ("b", "k1", "1", "base")))
    with pytest.raises(ValueError, match="ambiguous"):
        natural_base_split(two_base)


def test_family_dilemma_report_small_scale():
    fam = inst(FAMILY)
    rep = dilemma_report(fam.base_instance(), fam,
                         [split(SHIFTED), split(STAYHOME)])
    assert rep["ok"] is True
    assert rep["base_revenue"] == F(273, 10)
    assert [(p["stable"], p["revenue"], p["delta"]) for p in rep["profiles"]] \
        == [(True, F(459, 10), F(93, 5)), (True, F(417, 10), F(72, 5))]
    # at this volume both stable outcomes gain: no dilemma yet
    assert rep["dilemma"] is False


def test_shift_pair_dilemma_report():
    rep = dilemma_report(inst("edge-shift-base.json"),
                         inst("edge-shift-ext.json"),
                         [split("edge-shift-shift.split.json"),
                          split("edge-shift-noshift.split.json")])
    assert rep["ok"] is False                        # second profile unstable
    assert rep["base_revenue"] == F(18)
    shift, noshift = rep["profiles"]
    assert shift["stable"] and shift["delta"] == F(12, 5)
    assert not noshift["stable"]
    assert rep["dilemma"] is False
