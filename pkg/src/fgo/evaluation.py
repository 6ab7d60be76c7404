"""Scoring machinery: ground truth, figure decisions, FGCA, tuning.

Ground truth comes from signed maps: +1 cells mark the figure side of a
boundary, -1 cells the boundary pixels to score. A decision at a scored
pixel is the direction of the strongest final ownership response
nearby; it counts as correct when it points into the annotated figure
half-plane, and an undecidable pixel counts half.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from .ownership import N_SIDES, ModelWeights, bo_direction

_NEIGHBOR_OFFSETS = tuple(
    (dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0)
)


@dataclass(frozen=True)
class FGGroundTruth:
    """Boundary pixels (x = col, y = row) with unit normals toward figure."""

    x: np.ndarray
    y: np.ndarray
    nx: np.ndarray
    ny: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.int64)
        y = np.asarray(self.y, dtype=np.int64)
        nx = np.asarray(self.nx, dtype=np.float64)
        ny = np.asarray(self.ny, dtype=np.float64)
        if not (x.shape == y.shape == nx.shape == ny.shape) or x.ndim != 1:
            raise ValueError("ground truth fields must be equal-length 1D arrays")
        if x.size and np.abs(np.hypot(nx, ny) - 1.0).max() > 1e-6:
            raise ValueError("ground truth normals must have unit length")
        for name, arr in (("x", x), ("y", y), ("nx", nx), ("ny", ny)):
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.x.size


def load_ground_truth(signed) -> FGGroundTruth:
    """Boundary records from a signed {-1, 0, +1} map.

    Every -1 cell with at least one +1 among its 8 neighbors becomes a
    record; its normal is the normalized mean offset toward those +1
    neighbors. Cells whose +1 neighbors cancel out exactly are dropped,
    and a map with no -1/+1 interface yields an empty (warned) truth.
    """
    signed = np.asarray(signed)
    if signed.ndim != 2:
        raise ValueError(f"signed map must be 2D, got shape {signed.shape}")
    if not np.isin(signed, (-1, 0, 1)).all():
        raise ValueError("signed map may only hold -1, 0, +1")

    figure = np.pad(signed == 1, 1)
    count = np.zeros(signed.shape)
    mean_dr = np.zeros(signed.shape)
    mean_dc = np.zeros(signed.shape)
    rows, cols = signed.shape
    for dr, dc in _NEIGHBOR_OFFSETS:
        hit = figure[1 + dr : 1 + dr + rows, 1 + dc : 1 + dc + cols]
        count += hit
        mean_dr += dr * hit
        mean_dc += dc * hit

    boundary = (signed == -1) & (count > 0)
    norm = np.hypot(mean_dr, mean_dc)
    usable = boundary & (norm > 0)
    if not usable.any():
        warnings.warn("signed map has no figure-ground interface", stacklevel=2)
        empty = np.empty(0)
        return FGGroundTruth(x=empty, y=empty, nx=empty, ny=empty)
    yy, xx = np.nonzero(usable)
    return FGGroundTruth(
        x=xx,
        y=yy,
        nx=mean_dc[usable] / norm[usable],
        ny=mean_dr[usable] / norm[usable],
    )


def decide_figure(final: np.ndarray, x: int, y: int, radius: int = 1):
    """Figure direction at one boundary pixel from the 16 final maps.

    The strongest response within the window wins and its ownership
    direction is the decision. No positive response at all, or an exact
    tie between the two sides of one orientation, is a tie.
    Returns ``(direction (dx, dy), tie_flag)``.
    """
    rows, cols = final.shape[-2:]
    r0, r1 = max(0, y - radius), min(rows, y + radius + 1)
    c0, c1 = max(0, x - radius), min(cols, x + radius + 1)
    strongest = final[:, :, r0:r1, c0:c1].max(axis=(2, 3))
    best = strongest.max()
    if best <= 0:
        return np.zeros(2), True
    winners = strongest == best
    if (winners.sum(axis=1) == N_SIDES).any():
        return np.zeros(2), True
    ti, si = np.argwhere(winners)[0]
    angle = bo_direction(int(ti), int(si))
    return np.array([math.cos(angle), math.sin(angle)]), False


def decisions_for(final: np.ndarray, gt: FGGroundTruth, radius: int = 1):
    """Per-record decision directions and tie flags."""
    dirs = np.zeros((len(gt), 2))
    ties = np.zeros(len(gt), dtype=bool)
    for i in range(len(gt)):
        dirs[i], ties[i] = decide_figure(final, int(gt.x[i]), int(gt.y[i]), radius)
    return dirs, ties


def score_directions(gt: FGGroundTruth, dirs, ties) -> np.ndarray:
    """Per-record correctness: 1 into the figure, 0 away, 0.5 on a tie."""
    dirs = np.asarray(dirs, dtype=np.float64)
    ties = np.asarray(ties, dtype=bool)
    if dirs.shape != (len(gt), 2) or ties.shape != (len(gt),):
        raise ValueError("decisions do not match the ground truth records")
    dots = dirs[:, 0] * gt.nx + dirs[:, 1] * gt.ny
    return np.where(ties, 0.5, (dots > 0).astype(np.float64))


@dataclass(frozen=True)
class FGCAResult:
    accuracy: float  # mean of the per-truth accuracies
    correct: float  # summed correctness over all records of all truths
    pixels: int
    ties: int


def compute_fgca(final: np.ndarray, gts, radius: int = 1) -> FGCAResult:
    """Figure-ground classification accuracy of one image.

    ``gts`` is one ground truth or a sequence of them (two annotators);
    the reported accuracy is the mean of the per-truth accuracies while
    the correctness/pixel sums pool every record for pixel-weighted
    aggregation.
    """
    if isinstance(gts, FGGroundTruth):
        gts = (gts,)
    gts = tuple(gts)
    if not gts or any(len(gt) == 0 for gt in gts):
        raise ValueError("cannot score an empty ground truth")
    accuracies, correct, pixels, ties = [], 0.0, 0, 0
    for gt in gts:
        dirs, tie_flags = decisions_for(final, gt, radius)
        scores = score_directions(gt, dirs, tie_flags)
        accuracies.append(float(scores.mean()))
        correct += float(scores.sum())
        pixels += len(gt)
        ties += int(tie_flags.sum())
    return FGCAResult(
        accuracy=float(np.mean(accuracies)), correct=correct, pixels=pixels, ties=ties
    )


@dataclass(frozen=True)
class ImageScore:
    image_id: str
    accuracy: float
    pixels: int
    ties: int


@dataclass(frozen=True)
class EvalReport:
    """Per-image scores plus the two dataset-level averages.

    ``aggregate`` weights every boundary pixel equally across the whole
    dataset; ``per_image_mean``/``std_dev`` treat images equally.
    """

    per_image: tuple
    aggregate: float
    per_image_mean: float
    std_dev: float
    p_value: float | None = None


def build_report(scores, correct_total: float, p_value: float | None = None) -> EvalReport:
    scores = tuple(scores)
    if not scores:
        raise ValueError("cannot build a report from zero scored images")
    pixels = sum(s.pixels for s in scores)
    accuracies = [s.accuracy for s in scores]
    std = float(np.std(accuracies, ddof=1)) if len(accuracies) > 1 else 0.0
    return EvalReport(
        per_image=scores,
        aggregate=correct_total / pixels,
        per_image_mean=float(np.mean(accuracies)),
        std_dev=std,
        p_value=p_value,
    )


def format_report_text(report: EvalReport) -> str:
    lines = ["image accuracy pixels ties"]
    for s in report.per_image:
        lines.append(f"{s.image_id} {s.accuracy:.6f} {s.pixels} {s.ties}")
    lines.append(f"aggregate {report.aggregate:.6f}")
    lines.append(f"perImageMean {report.per_image_mean:.6f}")
    lines.append(f"stdDev {report.std_dev:.6f}")
    if report.p_value is not None:
        lines.append(f"pValue {report.p_value:.6g}")
    return "\n".join(lines) + "\n"


def format_report_keyvalues(report: EvalReport) -> str:
    pairs = [
        ("images", len(report.per_image)),
        ("pixels", sum(s.pixels for s in report.per_image)),
        ("aggregateFGCA", f"{report.aggregate:.6f}"),
        ("perImageMeanFGCA", f"{report.per_image_mean:.6f}"),
        ("stdDev", f"{report.std_dev:.6f}"),
    ]
    if report.p_value is not None:
        pairs.append(("pValue", f"{report.p_value:.6g}"))
    return "".join(f"{k}={v}\n" for k, v in pairs)


# ----------------------------------------------------------------------
# weight tuning
# ----------------------------------------------------------------------

ALPHA_NAMES = ("alpha_ref", "alpha_sa", "alpha_tj")


def _simplex_points(n_free: int, step: float, anchor=None):
    """Grid points with the given step on the (n_free)-simplex.

    Coordinates are multiples of ``step`` offsets around ``anchor`` (the
    origin-cornered full grid when anchor is None), kept when they are
    non-negative and sum to at most 1; the last weight is the implied
    remainder. Scan order is lexicographic, so deterministic.
    """
    offsets = range(-2, 3) if anchor is not None else range(int(round(1 / step)) + 1)
    base = anchor if anchor is not None else [0.0] * n_free
    points = []
    def rec(prefix):
        i = len(prefix)
        if i == n_free:
            total = sum(prefix)
            if total <= 1 + 1e-9:
                points.append(tuple(prefix) + (max(0.0, 1.0 - total),))
            return
        for k in offsets:
            value = round(base[i] + k * step, 12)
            if -1e-9 <= value <= 1 + 1e-9:
                rec(prefix + [min(1.0, max(0.0, value))])
    rec([])
    return points


def grid_search_weights(
    objective,
    names=("alpha_ref", "alpha_sa"),
    coarse_step: float = 0.1,
    stop_threshold: float = 0.005,
    max_rounds: int = 12,
):
    """Multi-resolution search over cue weights on the simplex.

    ``objective`` maps a :class:`ModelWeights` to a score to maximize.
    The named weights (any subset of alpha_ref/alpha_sa/alpha_tj, the
    rest pinned to zero) are scanned on a coarse grid, then re-scanned
    around the incumbent with the step halved each round until a round
    improves the best score by less than ``stop_threshold``.
    Returns ``(weights, best_objective, trace)`` where trace rows are
    ``(round, weights_tuple_in_name_order, objective)``.
    """
    names = tuple(names)
    if not names or any(n not in ALPHA_NAMES for n in names) or len(set(names)) != len(names):
        raise ValueError(f"names must be a distinct subset of {ALPHA_NAMES}, got {names}")

    def as_weights(point) -> ModelWeights:
        values = dict.fromkeys(ALPHA_NAMES, 0.0)
        values.update(zip(names, point))
        return ModelWeights(**values)

    seen = {}
    trace = []

    def evaluate(round_index, point) -> float:
        key = tuple(round(v, 9) for v in point)
        if key not in seen:
            seen[key] = float(objective(as_weights(point)))
            trace.append((round_index, point, seen[key]))
        return seen[key]

    n_free = len(names) - 1
    if n_free == 0:
        best_point = (1.0,)
        best = evaluate(0, best_point)
        return as_weights(best_point), best, trace

    best_point, best = None, -np.inf
    for point in _simplex_points(n_free, coarse_step):
        value = evaluate(0, point)
        if value > best:
            best_point, best = point, value

    step = coarse_step
    for round_index in range(1, max_rounds + 1):
        step /= 2.0
        round_best_point, round_best = best_point, best
        for point in _simplex_points(n_free, step, anchor=best_point[:n_free]):
            value = evaluate(round_index, point)
            if value > round_best:
                round_best_point, round_best = point, value
        improvement = round_best - best
        best_point, best = round_best_point, round_best
        if improvement < stop_threshold:
            break
    return as_weights(best_point), best, trace


# ----------------------------------------------------------------------
# statistics and splits
# ----------------------------------------------------------------------

def right_tailed_t_test(sample_a, sample_b) -> float:
    """P(mean A <= mean B) under the pooled-variance two-sample t model.

    Small values support "A scores higher than B". Both samples need at
    least two observations; two internally constant samples with equal
    means have no testable variation and raise, while constant samples
    with different means give the degenerate 0 or 1.
    """
    a = np.asarray(sample_a, dtype=np.float64).ravel()
    b = np.asarray(sample_b, dtype=np.float64).ravel()
    if a.size < 2 or b.size < 2:
        raise ValueError("both samples need at least two observations")
    dof = a.size + b.size - 2
    pooled = ((a.size - 1) * a.var(ddof=1) + (b.size - 1) * b.var(ddof=1)) / dof
    diff = a.mean() - b.mean()
    if pooled == 0:
        if diff == 0:
            raise ValueError("both samples are constant with equal means")
        return 0.0 if diff > 0 else 1.0
    t = diff / math.sqrt(pooled * (1 / a.size + 1 / b.size))
    half = 0.5 * special.betainc(dof / 2.0, 0.5, dof / (dof + t * t))
    return float(half if t > 0 else 1.0 - half)


@dataclass(frozen=True)
class SplitSpec:
    train_ids: tuple
    test_ids: tuple
    seed: int

    def __post_init__(self):
        if set(self.train_ids) & set(self.test_ids):
            raise ValueError("train and test ids overlap")


def make_split(image_ids, seed: int) -> SplitSpec:
    """Seeded shuffle; the first half trains, the rest tests."""
    ids = list(image_ids)
    if len(ids) < 2:
        raise ValueError(f"need at least 2 ids to split, got {len(ids)}")
    order = np.random.default_rng(seed).permutation(len(ids))
    half = len(ids) // 2
    return SplitSpec(
        train_ids=tuple(ids[i] for i in order[:half]),
        test_ids=tuple(ids[i] for i in order[half:]),
        seed=seed,
    )
