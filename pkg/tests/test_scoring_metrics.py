import logging

import numpy as np
import pytest
from pydantic import ValidationError

from app.domain.audio.entity import Label
from app.domain.scoring.entity import TdcfCostModel, TrialScore
from app.domain.scoring.metrics import (
    best_of_both_eer,
    compute_eer,
    det_curve,
    det_points,
    eer_from_scores,
    join_trials,
    min_tdcf,
    min_tdcf_from_scores,
    rates_at,
    split_scores,
    tdcf_coefficients,
)
from app.shared.errors import DegenerateProtocolError, InvalidCostModelError


def _trials(bona, spoof):
    trials = [TrialScore(utt_id=f"b{i}", score=s, label=Label.BONAFIDE) for i, s in enumerate(bona)]
    trials += [TrialScore(utt_id=f"s{i}", score=s, label=Label.SPOOF) for i, s in enumerate(spoof)]
    return trials


def _random_sets(seed, n_bona, n_spoof, shift=1.0, rounding=None):
    rng = np.random.default_rng(seed)
    bona = rng.normal(shift, 1.0, n_bona)
    spoof = rng.normal(0.0, 1.0, n_spoof)
    if rounding is not None:
        bona, spoof = np.round(bona, rounding), np.round(spoof, rounding)
    return bona, spoof


def _brute_force_rates(bona, spoof, threshold):
    miss = sum(1 for s in bona if s < threshold) / len(bona)
    fa = sum(1 for s in spoof if s >= threshold) / len(spoof)
    return miss, fa


class TestTrialScore:
    def test_finite_score(self):
        with pytest.raises(ValidationError):
            TrialScore(utt_id="a", score=float("nan"))

    def test_split_requires_labels(self):
        with pytest.raises(DegenerateProtocolError):
            split_scores([TrialScore(utt_id="a", score=1.0)])


class TestDetPoints:
    """DET staircase"""

    def test_single_pair(self):
        assert rates_at(np.array([0.9]), np.array([0.1]), 0.5) == (0.0, 0.0)

    def test_identical_scores(self):
        """Only the two end points exist"""
        points = det_points(_trials([0.3, 0.3], [0.3, 0.3, 0.3]))
        assert points == [(0.3, 0.0, 1.0), (float("inf"), 1.0, 0.0)]

    def test_tie_counts_as_accepted(self):
        assert rates_at(np.array([1.0]), np.array([1.0]), 1.0) == (0.0, 1.0)

    def test_brute_force_oracle(self):
        bona, spoof = _random_sets(0, 20, 30, rounding=1)
        det = det_curve(bona, spoof)
        expected_thresholds = sorted(set(bona.tolist()) | set(spoof.tolist())) + [np.inf]
        assert det.thresholds.tolist() == expected_thresholds
        for t, pm, pf in zip(det.thresholds, det.p_miss, det.p_fa):
            assert (pm, pf) == _brute_force_rates(bona, spoof, t)

    def test_monotone(self):
        det = det_curve(*_random_sets(1, 40, 60))
        assert np.all(np.diff(det.p_miss) >= 0)
        assert np.all(np.diff(det.p_fa) <= 0)

    @pytest.mark.parametrize("bona,spoof", [([], [0.1]), ([0.1], [])])
    def test_single_class(self, bona, spoof):
        with pytest.raises(DegenerateProtocolError, match="degenerate protocol"):
            det_curve(np.array(bona), np.array(spoof))


class TestEer:
    """Equal error rate"""

    def test_hand_example(self):
        """One of three bonafide below and one of three spoof above"""
        result = compute_eer(_trials([3.0, 2.0, 1.0], [2.5, 0.5, 0.2]))
        assert result.eer == pytest.approx(1.0 / 3.0)
        assert result.threshold == 2.0

    def test_perfect_separation(self):
        assert eer_from_scores(np.array([2.0, 3.0]), np.array([0.0, 1.0])).eer == 0.0

    def test_identical_scores(self):
        result = eer_from_scores(np.array([0.3, 0.3]), np.array([0.3]))
        assert result.eer == 0.5
        assert result.threshold == 0.3

    def test_interpolates_between_points(self):
        """P_fa drops from 1 to 0 while P_miss stays at 1/2"""
        result = eer_from_scores(np.array([1.0, 3.0]), np.array([2.0]))
        assert result.eer == pytest.approx(0.5)
        assert result.threshold == pytest.approx(2.5)

    def test_chance(self):
        bona, spoof = _random_sets(2, 5000, 5000, shift=0.0)
        assert abs(eer_from_scores(bona, spoof).eer - 0.5) < 0.03

    @pytest.mark.parametrize("transform", [np.exp, lambda s: 3.0 * s + 1.0, np.arctan])
    def test_monotone_invariance(self, transform):
        bona, spoof = _random_sets(3, 50, 70)
        base = eer_from_scores(bona, spoof).eer
        assert eer_from_scores(transform(bona), transform(spoof)).eer == pytest.approx(base, abs=1e-12)

    def test_extreme_correct_trial_never_hurts(self):
        for seed in range(20):
            bona, spoof = _random_sets(seed, 15, 15, shift=0.5)
            base = eer_from_scores(bona, spoof).eer
            more_bona = np.append(bona, bona.max() + 10.0)
            more_spoof = np.append(spoof, spoof.min() - 10.0)
            assert eer_from_scores(more_bona, spoof).eer <= base + 1e-12
            assert eer_from_scores(bona, more_spoof).eer <= base + 1e-12

    def test_range(self):
        for seed in range(10):
            result = eer_from_scores(*_random_sets(seed, 30, 30, shift=0.3))
            assert 0.0 <= result.eer <= 1.0

    def test_best_of_both(self):
        """Inverted scores are recovered by the negated check"""
        bona, spoof = np.array([0.1, 0.2]), np.array([0.8, 0.9])
        assert eer_from_scores(bona, spoof).eer == 1.0
        assert best_of_both_eer(bona, spoof) == 0.0


class TestTdcf:
    """Normalized minimum tandem detection cost"""

    def test_default_coefficients(self):
        c = tdcf_coefficients(TdcfCostModel())
        expected_c0 = 0.9405 * 0.025 + 0.0095 * 10 * 0.025
        assert c.c0 == pytest.approx(expected_c0)
        assert c.c1 == pytest.approx(0.9405 - expected_c0)
        assert c.c2 == pytest.approx(0.05 * 10 * 0.35)
        assert c.default_cost == pytest.approx(c.c0 + min(c.c1, c.c2))

    def test_perfect_cm(self):
        model = TdcfCostModel()
        c = tdcf_coefficients(model)
        result = min_tdcf(_trials([2.0, 3.0], [0.0, 1.0]), model)
        assert result.min_tdcf == pytest.approx(c.c0 / min(c.c0 + c.c1, c.c0 + c.c2))
        assert result.threshold == 2.0

    def test_all_same_score(self):
        result = min_tdcf_from_scores(np.array([0.5, 0.5]), np.array([0.5]), TdcfCostModel())
        assert result.min_tdcf == pytest.approx(1.0, abs=1e-12)

    def test_brute_force_oracle(self):
        model = TdcfCostModel()
        c = tdcf_coefficients(model)
        bona, spoof = _random_sets(4, 60, 40)
        candidates = sorted(set(bona.tolist()) | set(spoof.tolist())) + [np.inf]
        expected = min(
            (c.c0 + c.c1 * pm + c.c2 * pf) / min(c.c0 + c.c1, c.c0 + c.c2)
            for pm, pf in (_brute_force_rates(bona, spoof, t) for t in candidates)
        )
        result = min_tdcf_from_scores(bona, spoof, model)
        assert result.min_tdcf == pytest.approx(expected, abs=1e-12)

    def test_bounds_and_invariance(self):
        model = TdcfCostModel()
        for seed in range(10):
            bona, spoof = _random_sets(seed, 30, 30, shift=0.8)
            value = min_tdcf_from_scores(bona, spoof, model).min_tdcf
            assert 0.0 <= value <= 1.0 + 1e-12
            moved = min_tdcf_from_scores(np.exp(bona), np.exp(spoof), model).min_tdcf
            assert moved == pytest.approx(value, abs=1e-12)

    def test_invalid_cost_model(self):
        """An ASV miss rate of 1 leaves no cost for a CM miss"""
        with pytest.raises(InvalidCostModelError, match="C1"):
            tdcf_coefficients(TdcfCostModel(asv_p_miss=1.0, asv_p_fa=1.0))

    def test_zero_spoof_prior(self):
        model = TdcfCostModel(p_tar=0.95, p_non=0.05, p_spoof=0.0)
        with pytest.raises(InvalidCostModelError):
            min_tdcf_from_scores(np.array([1.0]), np.array([0.0]), model)

    def test_priors_must_sum_to_one(self):
        with pytest.raises(ValidationError, match="sum to 1"):
            TdcfCostModel(p_tar=0.5)

    def test_degenerate(self):
        with pytest.raises(DegenerateProtocolError):
            min_tdcf(_trials([1.0], []), TdcfCostModel())


class TestJoinTrials:
    def test_joins_in_score_order(self):
        report = join_trials(
            [("b", 0.2), ("a", 1.5), ("c", -1.0)],
            {"a": Label.BONAFIDE, "b": Label.SPOOF, "c": Label.SPOOF},
        )
        assert [t.utt_id for t in report.trials] == ["b", "a", "c"]
        assert report.trials[1].label is Label.BONAFIDE
        assert report.unmatched == []

    def test_unmatched_excluded(self, caplog):
        with caplog.at_level(logging.WARNING):
            report = join_trials([("a", 1.0), ("x", 0.0)], {"a": Label.BONAFIDE})
        assert [t.utt_id for t in report.trials] == ["a"]
        assert report.unmatched == ["x"]
        assert "no protocol entry" in caplog.text
