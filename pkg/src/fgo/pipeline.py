"""End-to-end run: image -> channels -> pyramids -> ownership maps.

The three feature channels share one set of oriented-energy carriers.
Color and intensity contribute through the contrast route alone; the
orientation channel additionally takes the two local cues, weighted by
the model's alpha triple.

The run splits into a heavy, weight-independent preparation step and a
cheap combination step, so weight sweeps (tuning, preset comparison)
pay the filter bank once per image.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .channels import (
    N_ORIENTATIONS,
    ORIENTATIONS,
    RGBImage,
    build_channel_pyramids,
    compute_channels,
)
from .cues import SAParams, TJParams, build_tj_maps, compute_sa_maps, detect_t_junctions
from .filters import DoGParams, GaborParams
from .grid import SQRT2
from .ownership import (
    ContextParams,
    ModelWeights,
    OrientedCSParams,
    combine_bo,
    compute_bo_light_dark,
    compute_bo_local_cue,
    cs_pyramids_oriented,
    cs_pyramids_symmetric,
    final_bo_maps,
    sum_bo_sets,
    winning_bo,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineParams:
    """Every filter and pooling parameter of one model configuration."""

    n_scales: int = 10
    pyramid_factor: float = SQRT2
    gabor: GaborParams = GaborParams(theta=0.0)
    dog: DoGParams = DoGParams()
    oriented_cs: OrientedCSParams = OrientedCSParams()
    context: ContextParams = ContextParams()
    sa: SAParams = SAParams()
    tj: TJParams = TJParams()

    def __post_init__(self):
        if self.n_scales < 1:
            raise ValueError(f"n_scales must be >= 1, got {self.n_scales}")


@dataclass(frozen=True)
class RunResult:
    """Everything a single model run produces.

    ``final`` is the (8, 2, rows, cols) ownership stack at native
    resolution; ``weights`` are the weights actually applied (they can
    differ from the requested ones when the T-junction cue had to be
    dropped); ``junctions`` is the detected junction list when label
    maps were supplied.
    """

    final: np.ndarray
    weights: ModelWeights
    junctions: tuple = ()


def effective_weights(weights: ModelWeights, have_labels: bool) -> ModelWeights:
    """Fold the T-junction weight into the contrast route if unusable."""
    if weights.alpha_tj > 0 and not have_labels:
        log.warning(
            "T-junction cue weight %.3g requested without contour/segment maps; "
            "reassigning it to the contrast route",
            weights.alpha_tj,
        )
        return replace(
            weights,
            alpha_ref=weights.alpha_ref + weights.alpha_tj,
            alpha_tj=0.0,
        )
    return weights


def _zero_levels(dims) -> list:
    return [np.zeros((N_ORIENTATIONS, 2) + d) for d in dims]


def _contrast_winning(carriers, cs_pairs, weights, context) -> list:
    light, dark = compute_bo_light_dark(carriers, cs_pairs, weights, context)
    return winning_bo(combine_bo(light, dark, weights))


@dataclass(frozen=True)
class PreparedImage:
    """Weight-independent building blocks of one image's run.

    ``base`` records the weights the preparation assumed for everything
    outside the alpha triple (antagonism strength, feature mix, layer
    restriction); :func:`finalize_components` only accepts weights that
    agree with it there. ``bo_sa``/``bo_tj`` are None when the cue was
    not prepared.
    """

    base: ModelWeights
    level_dims: tuple
    winning_color: list
    winning_intensity: list
    bo_light: list | None
    bo_dark: list | None
    bo_sa: list | None
    bo_tj: list | None
    junctions: tuple = ()


def prepare_components(
    image,
    base: ModelWeights = ModelWeights(),
    params: PipelineParams = PipelineParams(),
    contours=None,
    segments=None,
    need_sa: bool | None = None,
    need_tj: bool | None = None,
) -> PreparedImage:
    """Run every weight-independent stage of the model once.

    ``need_sa``/``need_tj`` force the local-cue stacks to be built even
    if ``base`` currently gives them zero weight (a weight sweep may
    need them later); by default each follows its base alpha. The
    T-junction stack additionally requires both label maps.
    """
    if not isinstance(image, RGBImage):
        image = RGBImage.from_gray(image)
    have_labels = contours is not None and segments is not None
    if need_sa is None:
        need_sa = base.alpha_sa > 0
    if need_tj is None:
        need_tj = base.alpha_tj > 0

    channels = compute_channels(image, params.gabor)
    pyramids = build_channel_pyramids(channels, params.n_scales, params.pyramid_factor)
    carriers = pyramids.orientation
    level_dims = tuple(carriers[0].dims)
    contrast = base.contrast_only()

    # color: each opponency sub-channel gets its own contrast pair and
    # winner-take-all pass; the four winners add up into one feature set
    color_weight, intensity_weight, orientation_weight = base.feature_weights
    if color_weight > 0 and any(m.any() for m in channels.opponency):
        winning_color = sum_bo_sets(
            [
                _contrast_winning(
                    carriers,
                    cs_pyramids_symmetric(pyr, params.dog),
                    contrast,
                    params.context,
                )
                for pyr, native in zip(pyramids.opponency, channels.opponency)
                if native.any()
            ]
        )
    else:
        winning_color = _zero_levels(level_dims)

    if intensity_weight > 0:
        winning_intensity = _contrast_winning(
            carriers,
            cs_pyramids_symmetric(pyramids.intensity, params.dog),
            contrast,
            params.context,
        )
    else:
        winning_intensity = _zero_levels(level_dims)

    junctions: tuple = ()
    if have_labels:
        junctions = tuple(detect_t_junctions(contours, segments, params.tj))

    bo_light = bo_dark = bo_sa = bo_tj = None
    if orientation_weight > 0:
        oriented_pairs = [
            cs_pyramids_oriented(carriers[ti], ORIENTATIONS[ti], params.oriented_cs)
            for ti in range(N_ORIENTATIONS)
        ]
        bo_light, bo_dark = compute_bo_light_dark(
            carriers, oriented_pairs, base, params.context
        )
        if need_sa:
            sa_maps = compute_sa_maps(channels.intensity, params.sa)
            bo_sa = compute_bo_local_cue(carriers, sa_maps, base, params.context)
        if need_tj and have_labels:
            tj_maps = build_tj_maps(contours, segments, junctions, params.tj)
            bo_tj = compute_bo_local_cue(carriers, tj_maps, base, params.context)

    return PreparedImage(
        base=base,
        level_dims=level_dims,
        winning_color=winning_color,
        winning_intensity=winning_intensity,
        bo_light=bo_light,
        bo_dark=bo_dark,
        bo_sa=bo_sa,
        bo_tj=bo_tj,
        junctions=junctions,
    )


def finalize_components(prepared: PreparedImage, weights: ModelWeights) -> RunResult:
    """Apply one alpha triple to prepared building blocks."""
    base = prepared.base
    if (
        weights.w_opp != base.w_opp
        or weights.feature_weights != base.feature_weights
        or weights.top_layers_only != base.top_layers_only
    ):
        raise ValueError(
            "only the alpha triple may differ from the prepared base weights"
        )
    if prepared.bo_light is not None:
        combined = combine_bo(
            prepared.bo_light,
            prepared.bo_dark,
            weights,
            bo_sa=prepared.bo_sa if weights.alpha_sa > 0 else None,
            bo_tj=prepared.bo_tj if weights.alpha_tj > 0 else None,
        )
        winning_orientation = winning_bo(combined)
    else:
        if weights.alpha_sa > 0 or weights.alpha_tj > 0:
            raise ValueError("local-cue weights need the orientation feature")
        winning_orientation = _zero_levels(prepared.level_dims)
    final = final_bo_maps(
        [prepared.winning_color, prepared.winning_intensity, winning_orientation],
        weights,
    )
    return RunResult(final=final, weights=weights, junctions=prepared.junctions)


def run_model(
    image,
    weights: ModelWeights = ModelWeights(),
    params: PipelineParams = PipelineParams(),
    contours=None,
    segments=None,
) -> RunResult:
    """Compute the final border-ownership maps for one image.

    ``image`` is an :class:`RGBImage` or a single [0, 1] grayscale map.
    ``contours``/``segments`` are integer label maps enabling the
    T-junction cue; without both of them any T-junction weight falls
    back to the contrast route with a warning.
    """
    have_labels = contours is not None and segments is not None
    weights = effective_weights(weights, have_labels)
    prepared = prepare_components(
        image, weights, params, contours=contours, segments=segments
    )
    return finalize_components(prepared, weights)
