"""Flat key=value run configuration and the pinned weight presets.

A config file is lines of ``key = value`` (``#`` comments allowed).
Keys may be written in camelCase (``alphaRef``, ``topLayersOnly``) or
snake_case; ``sa_``/``tj_`` prefixes address the nested cue parameter
blocks. The ``FGO_SEED`` environment variable overrides the seed.
"""

from __future__ import annotations

import dataclasses
import os
import re
from dataclasses import dataclass, fields, replace

from .cues import SAParams, TJParams
from .filters import DoGParams, GaborParams
from .grid import SQRT2
from .ownership import ContextParams, ModelWeights, OrientedCSParams
from .pipeline import PipelineParams

PRESETS = {
    "reference": (1.0, 0.0, 0.0),
    "with-sa": (0.35, 0.65, 0.0),
    "with-tj": (0.03, 0.0, 0.97),
    "with-both": (0.05, 0.15, 0.80),
}


@dataclass(frozen=True)
class RunConfig:
    """One model configuration, flat where the file format is flat."""

    # complex-cell (carrier) filter bank
    gamma: float = 0.5
    sigma: float = 2.24
    omega: float = 1.57
    # center-surround pair for symmetric features
    sigma_in: float = 0.90
    sigma_out: float = 2.70
    # center-surround surrogate for the oriented feature
    sigma1: float = 3.2
    gamma1: float = 0.8
    omega1: float = 0.7854
    # context pooling ring
    r0: float = 2.0
    ring_form: str = "cosine"
    # cue and feature mixing
    alpha_ref: float = 1.0
    alpha_sa: float = 0.0
    alpha_tj: float = 0.0
    w_opp: float = 1.0
    feature_color: float = 1.0
    feature_intensity: float = 1.0
    feature_orientation: float = 1.0
    # pyramid
    n_scales: int = 10
    pyramid_factor: float = SQRT2
    top_layers_only: int | None = None
    seed: int = 0
    sa: SAParams = SAParams()
    tj: TJParams = TJParams()

    def weights(self) -> ModelWeights:
        return ModelWeights(
            alpha_ref=self.alpha_ref,
            alpha_sa=self.alpha_sa,
            alpha_tj=self.alpha_tj,
            w_opp=self.w_opp,
            feature_weights=(
                self.feature_color,
                self.feature_intensity,
                self.feature_orientation,
            ),
            top_layers_only=self.top_layers_only,
        )

    def pipeline_params(self) -> PipelineParams:
        return PipelineParams(
            n_scales=self.n_scales,
            pyramid_factor=self.pyramid_factor,
            gabor=GaborParams(
                theta=0.0, sigma=self.sigma, gamma=self.gamma, omega=self.omega
            ),
            dog=DoGParams(sigma_in=self.sigma_in, sigma_out=self.sigma_out),
            oriented_cs=OrientedCSParams(
                sigma1=self.sigma1, gamma1=self.gamma1, omega1=self.omega1
            ),
            context=ContextParams(ring_radius=self.r0, ring_form=self.ring_form),
            sa=self.sa,
            tj=self.tj,
        )

    def resolved_seed(self) -> int:
        env = os.environ.get("FGO_SEED")
        return int(env) if env else self.seed


def apply_preset(config: RunConfig, name: str) -> RunConfig:
    try:
        ref, sa, tj = PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown preset {name!r}; choose from {sorted(PRESETS)}"
        ) from None
    return replace(config, alpha_ref=ref, alpha_sa=sa, alpha_tj=tj)


def _snake(key: str) -> str:
    return re.sub(r"(?<=[a-z0-9])([A-Z])", r"_\1", key.strip()).lower()


def _coerce(field: dataclasses.Field, raw: str):
    raw = raw.strip()
    if "None" in str(field.type):
        return None if raw.lower() in ("", "none") else int(raw)
    kind = type(field.default)
    if kind is bool:
        if raw.lower() in ("1", "true", "yes"):
            return True
        if raw.lower() in ("0", "false", "no"):
            return False
        raise ValueError(f"{field.name} expects a boolean, got {raw!r}")
    return kind(raw)


def _fields_of(cls):
    return {f.name: f for f in fields(cls)}


def apply_assignment(config: RunConfig, key: str, value: str) -> RunConfig:
    """Set one configuration key from its text form."""
    name = _snake(key)
    if name == "preset":
        return apply_preset(config, value.strip())
    for prefix, attr, cls in (("sa_", "sa", SAParams), ("tj_", "tj", TJParams)):
        if name.startswith(prefix):
            inner = name[len(prefix):]
            block_fields = _fields_of(cls)
            if inner not in block_fields:
                raise ValueError(f"unknown {attr.upper()} key {key!r}")
            nested = replace(
                getattr(config, attr), **{inner: _coerce(block_fields[inner], value)}
            )
            return replace(config, **{attr: nested})
    top = _fields_of(RunConfig)
    if name not in top or name in ("sa", "tj"):
        raise ValueError(f"unknown config key {key!r}")
    return replace(config, **{name: _coerce(top[name], value)})


def parse_config_text(text: str, base: RunConfig | None = None) -> RunConfig:
    config = base if base is not None else RunConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = stripped.split("=", 1)
        try:
            config = apply_assignment(config, key, value)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return config


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), base)
