"""
Detection metrics over bonafide/spoof score sets.

A trial is accepted as bonafide when its score is >= the threshold, so
    P_miss(t) = fraction of bonafide scores < t
    P_fa(t)   = fraction of spoof scores >= t
"""

from typing import Dict, List, Sequence, Tuple

import numpy as np

from app.domain.audio.entity import Label
from app.domain.scoring.entity import (
    DetCurve,
    EerResult,
    JoinReport,
    TdcfCoefficients,
    TdcfCostModel,
    TdcfResult,
    TrialScore,
)
from app.shared.errors import DegenerateProtocolError, InvalidCostModelError
from app.shared.monitoring.logging import get_logger
from app.shared.utils.validators import ensure_finite

logger = get_logger(__name__)


def split_scores(trials: Sequence[TrialScore]) -> Tuple[np.ndarray, np.ndarray]:
    """(bonafide scores, spoof scores); unlabeled trials are an error"""
    bona, spoof = [], []
    for trial in trials:
        if trial.label is None:
            raise DegenerateProtocolError(f"trial {trial.utt_id!r} has no label")
        (bona if trial.label is Label.BONAFIDE else spoof).append(trial.score)
    return np.asarray(bona, dtype=np.float64), np.asarray(spoof, dtype=np.float64)


def _check_classes(bona: np.ndarray, spoof: np.ndarray) -> None:
    if bona.size == 0 or spoof.size == 0:
        raise DegenerateProtocolError()
    ensure_finite(bona, "bonafide scores")
    ensure_finite(spoof, "spoof scores")


def rates_at(bona: np.ndarray, spoof: np.ndarray, threshold: float) -> Tuple[float, float]:
    """(P_miss, P_fa) at one threshold"""
    _check_classes(bona, spoof)
    return (
        float(np.mean(bona < threshold)),
        float(np.mean(spoof >= threshold)),
    )


def det_curve(bona: np.ndarray, spoof: np.ndarray) -> DetCurve:
    """
    DET points at every distinct score plus +inf.

    Both rate sequences are exact fractions of the class sizes; P_miss is
    non-decreasing and P_fa non-increasing along the thresholds.
    """
    bona = np.asarray(bona, dtype=np.float64)
    spoof = np.asarray(spoof, dtype=np.float64)
    _check_classes(bona, spoof)

    thresholds = np.append(np.unique(np.concatenate([bona, spoof])), np.inf)
    n_below_bona = np.searchsorted(np.sort(bona), thresholds, side="left")
    n_below_spoof = np.searchsorted(np.sort(spoof), thresholds, side="left")
    return DetCurve(
        thresholds=thresholds,
        p_miss=n_below_bona / bona.size,
        p_fa=(spoof.size - n_below_spoof) / spoof.size,
    )


def det_points(trials: Sequence[TrialScore]) -> List[Tuple[float, float, float]]:
    """Ordered (threshold, P_miss, P_fa) triples"""
    det = det_curve(*split_scores(trials))
    return list(
        zip(det.thresholds.tolist(), det.p_miss.tolist(), det.p_fa.tolist())
    )


def eer_from_scores(bona: np.ndarray, spoof: np.ndarray) -> EerResult:
    """
    EER by linear interpolation between the two DET points that bracket the
    P_miss = P_fa crossing. The threshold is interpolated the same way,
    except next to +inf where the last finite threshold is used.
    """
    det = det_curve(bona, spoof)
    diff = det.p_miss - det.p_fa
    i = int(np.argmax(diff >= 0.0))
    if diff[i] == 0.0 or i == 0:
        return EerResult(eer=float(det.p_miss[i]), threshold=float(det.thresholds[i]), det=det)

    alpha = -diff[i - 1] / (diff[i] - diff[i - 1])
    eer = det.p_miss[i - 1] + alpha * (det.p_miss[i] - det.p_miss[i - 1])
    low, high = det.thresholds[i - 1], det.thresholds[i]
    threshold = low if np.isinf(high) else low + alpha * (high - low)
    return EerResult(eer=float(eer), threshold=float(threshold), det=det)


def compute_eer(trials: Sequence[TrialScore]) -> EerResult:
    return eer_from_scores(*split_scores(trials))


def best_of_both_eer(bona: np.ndarray, spoof: np.ndarray) -> float:
    """min(EER(scores), EER(-scores)), the label-reversal check of the evaluation kits"""
    bona = np.asarray(bona, dtype=np.float64)
    spoof = np.asarray(spoof, dtype=np.float64)
    return min(eer_from_scores(bona, spoof).eer, eer_from_scores(-bona, -spoof).eer)


def tdcf_coefficients(cost_model: TdcfCostModel) -> TdcfCoefficients:
    """
    t-DCF(t) = C0 + C1 * P_miss_cm(t) + C2 * P_fa_cm(t)

    Raises:
        InvalidCostModelError: C1 <= 0 or C2 <= 0
    """
    m = cost_model
    c0 = m.p_tar * m.c_miss * m.asv_p_miss + m.p_non * m.c_fa * m.asv_p_fa
    c1 = m.p_tar * m.c_miss - c0
    c2 = m.p_spoof * m.c_fa_spoof * m.asv_p_fa_spoof
    if c1 <= 0 or c2 <= 0:
        raise InvalidCostModelError(
            f"invalid cost model: C1={c1:g}, C2={c2:g} must both be positive"
        )
    return TdcfCoefficients(c0=c0, c1=c1, c2=c2)


def tdcf_curve(det: DetCurve, coefficients: TdcfCoefficients) -> np.ndarray:
    """Normalized t-DCF at each DET threshold"""
    c = coefficients
    return (c.c0 + c.c1 * det.p_miss + c.c2 * det.p_fa) / c.default_cost


def min_tdcf_from_scores(
    bona: np.ndarray, spoof: np.ndarray, cost_model: TdcfCostModel
) -> TdcfResult:
    coefficients = tdcf_coefficients(cost_model)
    det = det_curve(bona, spoof)
    curve = tdcf_curve(det, coefficients)
    i = int(np.argmin(curve))
    return TdcfResult(min_tdcf=float(curve[i]), threshold=float(det.thresholds[i]))


def min_tdcf(trials: Sequence[TrialScore], cost_model: TdcfCostModel) -> TdcfResult:
    return min_tdcf_from_scores(*split_scores(trials), cost_model)


def join_trials(
    scores: Sequence[Tuple[str, float]], protocol: Dict[str, Label]
) -> JoinReport:
    """Attach protocol labels to scores by utt_id, keeping score order"""
    trials, unmatched = [], []
    for utt_id, score in scores:
        label = protocol.get(utt_id)
        if label is None:
            unmatched.append(utt_id)
            continue
        trials.append(TrialScore(utt_id=utt_id, score=score, label=label))
    if unmatched:
        logger.warning(
            f"{len(unmatched)} scored utterances have no protocol entry, e.g. {unmatched[0]!r}"
        )
    return JoinReport(trials=trials, unmatched=unmatched)
