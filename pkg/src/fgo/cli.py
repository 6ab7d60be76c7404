"""Command-line interface: run, eval, tune, synth.

Outputs are plain text (FM1/LM1 maps, key=value reports) and binary
PGM/PPM images; identical configuration, inputs and seed give
bit-identical files.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io, stimuli
from .channels import RGBImage
from .config import PRESETS, RunConfig, apply_assignment, apply_preset, load_config
from .cues import format_junction
from .evaluation import (
    ImageScore,
    build_report,
    compute_fgca,
    decisions_for,
    format_report_keyvalues,
    format_report_text,
    grid_search_weights,
    load_ground_truth,
    make_split,
    right_tailed_t_test,
    score_directions,
)
from .ownership import N_SIDES, ModelWeights
from .pipeline import finalize_components, prepare_components, run_model

log = logging.getLogger("fgo")

DIRECTION_GRAY_STEP = 15  # winning map index i shown as (i + 1) * 15
CORRECT_GRAY = 255
WRONG_GRAY = 0
TIE_GRAY = 192
BACKGROUND_GRAY = 128


# ----------------------------------------------------------------------
# shared plumbing
# ----------------------------------------------------------------------

def _read_image(path: Path) -> RGBImage:
    suffix = path.suffix.lower()
    if suffix == ".ppm":
        return RGBImage(*io.read_ppm(path))
    if suffix == ".pgm":
        return RGBImage.from_gray(io.read_pgm(path))
    raise ValueError(f"unsupported image format {path.suffix!r} (want .ppm or .pgm)")


def _load_labels(contours_path, segments_path):
    contours = io.read_lm1(contours_path) if contours_path else None
    segments = io.read_lm1(segments_path) if segments_path else None
    if (contours is None) != (segments is None):
        raise ValueError("contour and segment maps must be supplied together")
    return contours, segments


def _config_from_args(args) -> RunConfig:
    config = RunConfig()
    if getattr(args, "config", None):
        config = load_config(args.config, config)
    if getattr(args, "preset", None):
        config = apply_preset(config, args.preset)
    for assignment in getattr(args, "set", None) or []:
        if "=" not in assignment:
            raise ValueError(f"--set expects key=value, got {assignment!r}")
        key, value = assignment.split("=", 1)
        config = apply_assignment(config, key, value)
    if getattr(args, "weights", None):
        parts = [p.strip() for p in args.weights.split(",")]
        if len(parts) != 3:
            raise ValueError(
                f"--weights expects alphaRef,alphaSA,alphaTJ, got {args.weights!r}"
            )
        for key, value in zip(("alpha_ref", "alpha_sa", "alpha_tj"), parts):
            config = apply_assignment(config, key, value)
    return config


def _fold_tj(weights: ModelWeights) -> ModelWeights:
    """The run-command label fallback, without the per-call warning."""
    if weights.alpha_tj == 0:
        return weights
    return replace(
        weights, alpha_ref=weights.alpha_ref + weights.alpha_tj, alpha_tj=0.0
    )


def _direction_image(final: np.ndarray) -> np.ndarray:
    """Gray-encode the winning map index; 0 where nothing responds."""
    n_maps = final.shape[0] * final.shape[1]
    flat = final.reshape(n_maps, *final.shape[2:])
    winner = flat.argmax(axis=0)
    gray = (winner + 1) * DIRECTION_GRAY_STEP
    return np.where(flat.max(axis=0) > 0, gray, 0).astype(np.uint8)


def _correctness_image(final: np.ndarray, gts) -> np.ndarray:
    canvas = np.full(final.shape[2:], BACKGROUND_GRAY, dtype=np.uint8)
    for gt in gts:
        dirs, ties = decisions_for(final, gt)
        scores = score_directions(gt, dirs, ties)
        for i in range(len(gt)):
            if ties[i]:
                value = TIE_GRAY
            else:
                value = CORRECT_GRAY if scores[i] == 1.0 else WRONG_GRAY
            canvas[int(gt.y[i]), int(gt.x[i])] = value
    return canvas


# ----------------------------------------------------------------------
# run
# ----------------------------------------------------------------------

def cmd_run(args) -> int:
    config = _config_from_args(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    image = _read_image(Path(args.image))
    contours, segments = _load_labels(args.contours, args.segments)
    result = run_model(
        image,
        config.weights(),
        config.pipeline_params(),
        contours=contours,
        segments=segments,
    )

    written = []
    for ti in range(result.final.shape[0]):
        for si in range(N_SIDES):
            path = out_dir / f"final_t{ti}_s{si}.fm1"
            io.write_fm1(path, result.final[ti, si])
            written.append(path)
    io.write_pgm(out_dir / "direction.pgm", _direction_image(result.final))
    written.append(out_dir / "direction.pgm")

    if contours is not None:
        lines = [format_junction(j) for j in result.junctions]
        (out_dir / "junctions.txt").write_text("".join(f"{l}\n" for l in lines))
        written.append(out_dir / "junctions.txt")

    if args.gt:
        gt = load_ground_truth(io.read_signed_map(args.gt))
        io.write_pgm(out_dir / "correctness.pgm", _correctness_image(result.final, [gt]))
        written.append(out_dir / "correctness.pgm")
        fgca = compute_fgca(result.final, gt)
        print(f"fgca={fgca.accuracy:.6f} pixels={fgca.pixels} ties={fgca.ties}")

    missing = [p for p in written if not p.exists()]
    print(f"wrote {len(written)} files to {out_dir}")
    return 1 if missing else 0


# ----------------------------------------------------------------------
# eval / tune dataset plumbing
# ----------------------------------------------------------------------

class ManifestEntry:
    """One dataset row: id, image and ground truths, optional labels."""

    __slots__ = ("image_id", "image", "gts", "contours", "segments")

    def __init__(self, image_id, image, gts, contours, segments):
        self.image_id = image_id
        self.image = image
        self.gts = gts
        self.contours = contours
        self.segments = segments


def parse_manifest(path) -> list:
    """Rows of ``id image gt1 gt2 [contours segments]``, '-' = absent."""
    base = Path(path).parent
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            parts = stripped.split()
            if len(parts) not in (4, 6):
                raise ValueError(
                    f"{path}:{lineno}: expected 'id image gt1 gt2 [contours "
                    f"segments]', got {len(parts)} fields"
                )
            resolve = lambda token: None if token == "-" else str(base / token)
            gts = [p for p in (resolve(parts[2]), resolve(parts[3])) if p]
            if not gts:
                raise ValueError(f"{path}:{lineno}: no ground truth given")
            contours = resolve(parts[4]) if len(parts) == 6 else None
            segments = resolve(parts[5]) if len(parts) == 6 else None
            entries.append(
                ManifestEntry(parts[0], resolve(parts[1]), gts, contours, segments)
            )
    ids = [e.image_id for e in entries]
    if len(set(ids)) != len(ids):
        raise ValueError(f"{path}: duplicate image ids")
    return entries


def _score_entry(entry: ManifestEntry, config: RunConfig, weight_sets):
    """Per-preset (accuracy, correct, pixels, ties) for one image."""
    image = _read_image(Path(entry.image))
    contours, segments = _load_labels(entry.contours, entry.segments)
    gts = [load_ground_truth(io.read_signed_map(p)) for p in entry.gts]
    gts = [gt for gt in gts if len(gt)]
    if not gts:
        raise ValueError("no usable ground truth records")
    have_labels = contours is not None
    base = config.weights()
    need_sa = any(w.alpha_sa > 0 for w in weight_sets)
    need_tj = any(w.alpha_tj > 0 for w in weight_sets)
    if need_tj and not have_labels:
        log.warning(
            "%s: T-junction weight requested without label maps; "
            "its mass moves to the contrast route",
            entry.image_id,
        )
    prepared = prepare_components(
        image,
        base,
        config.pipeline_params(),
        contours=contours,
        segments=segments,
        need_sa=need_sa,
        need_tj=need_tj and have_labels,
    )
    results = []
    for weights in weight_sets:
        if not have_labels:
            weights = _fold_tj(weights)
        final = finalize_components(prepared, weights).final
        fgca = compute_fgca(final, gts)
        results.append((fgca.accuracy, fgca.correct, fgca.pixels, fgca.ties))
    return results


def _eval_worker(task):
    entry, config, weight_sets = task
    return entry.image_id, _score_entry(entry, config, weight_sets)


def _score_dataset(entries, config: RunConfig, weight_sets, jobs: int):
    """Scores per preset, skipping failed images with a message."""
    tasks = [(entry, config, weight_sets) for entry in entries]
    outcomes = {}
    failures = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for entry, result in zip(entries, pool.map(_eval_worker_safe, tasks)):
                if isinstance(result, str):
                    failures.append((entry.image_id, result))
                else:
                    outcomes[entry.image_id] = result[1]
    else:
        for task in tasks:
            entry = task[0]
            try:
                outcomes[entry.image_id] = _score_entry(*task)
            except Exception as exc:
                failures.append((entry.image_id, str(exc)))
    for image_id, message in failures:
        print(f"skipped {image_id}: {message}", file=sys.stderr)
    scored = [e for e in entries if e.image_id in outcomes]
    per_preset = []
    for w_index in range(len(weight_sets)):
        scores = [
            ImageScore(
                image_id=e.image_id,
                accuracy=outcomes[e.image_id][w_index][0],
                pixels=outcomes[e.image_id][w_index][2],
                ties=outcomes[e.image_id][w_index][3],
            )
            for e in scored
        ]
        correct = sum(outcomes[e.image_id][w_index][1] for e in scored)
        per_preset.append((scores, correct))
    return per_preset, failures


def _eval_worker_safe(task):
    try:
        return _eval_worker(task)
    except Exception as exc:
        return str(exc)


def cmd_eval(args) -> int:
    config = _config_from_args(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = parse_manifest(args.manifest)

    if args.compare:
        names = [n.strip() for n in args.compare.split(",")]
        if len(names) != 2:
            raise ValueError(f"--compare expects two presets, got {args.compare!r}")
        configs = [apply_preset(config, name) for name in names]
        weight_sets = [c.weights() for c in configs]
        labels = names
    else:
        weight_sets = [config.weights()]
        labels = [args.preset or "model"]

    per_preset, failures = _score_dataset(entries, config, weight_sets, args.jobs)
    if not per_preset[0][0]:
        print("all images failed", file=sys.stderr)
        return 1

    written = []
    reports = []
    for label, (scores, correct) in zip(labels, per_preset):
        report = build_report(scores, correct)
        reports.append(report)
        stem = f"report_{label}" if len(labels) > 1 else "report"
        (out_dir / f"{stem}.txt").write_text(format_report_text(report))
        (out_dir / f"{stem}.kv").write_text(format_report_keyvalues(report))
        written += [out_dir / f"{stem}.txt", out_dir / f"{stem}.kv"]
        print(
            f"{label}: aggregate={report.aggregate:.6f} "
            f"perImageMean={report.per_image_mean:.6f} images={len(scores)}"
        )

    if args.compare:
        sample_a = [s.accuracy for s in per_preset[0][0]]
        sample_b = [s.accuracy for s in per_preset[1][0]]
        p_value = right_tailed_t_test(sample_a, sample_b)
        lines = (
            f"presetA={labels[0]}\n"
            f"presetB={labels[1]}\n"
            f"aggregateA={reports[0].aggregate:.6f}\n"
            f"aggregateB={reports[1].aggregate:.6f}\n"
            f"pValue={p_value:.6g}\n"
        )
        (out_dir / "compare.kv").write_text(lines)
        written.append(out_dir / "compare.kv")
        print(f"pValue={p_value:.6g}")

    missing = [p for p in written if not p.exists()]
    return 1 if missing or not per_preset[0][0] else 0


# ----------------------------------------------------------------------
# tune
# ----------------------------------------------------------------------

WEIGHT_KEYS = {"alpharef": "alpha_ref", "alphasa": "alpha_sa", "alphatj": "alpha_tj"}


def cmd_tune(args) -> int:
    config = _config_from_args(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for token in args.weight_names.split(","):
        key = token.strip().lower().replace("_", "")
        if key not in WEIGHT_KEYS:
            raise ValueError(f"unknown weight name {token.strip()!r}")
        names.append(WEIGHT_KEYS[key])

    entries = parse_manifest(args.manifest)
    split = make_split([e.image_id for e in entries], config.resolved_seed())
    by_id = {e.image_id: e for e in entries}
    train = [by_id[i] for i in split.train_ids]

    need_sa = "alpha_sa" in names
    need_tj = "alpha_tj" in names
    base = config.weights()
    prepared_list = []
    gts_list = []
    for entry in train:
        image = _read_image(Path(entry.image))
        contours, segments = _load_labels(entry.contours, entry.segments)
        gts = [load_ground_truth(io.read_signed_map(p)) for p in entry.gts]
        gts = [gt for gt in gts if len(gt)]
        if not gts:
            print(f"skipped {entry.image_id}: no ground truth records", file=sys.stderr)
            continue
        if need_tj and contours is None:
            log.warning(
                "%s: tuning alphaTJ without label maps; the cue is inert here",
                entry.image_id,
            )
        prepared_list.append(
            prepare_components(
                image,
                base,
                config.pipeline_params(),
                contours=contours,
                segments=segments,
                need_sa=need_sa,
                need_tj=need_tj and contours is not None,
            )
        )
        gts_list.append(gts)
    if not prepared_list:
        print("no usable training images", file=sys.stderr)
        return 1

    def objective(weights: ModelWeights) -> float:
        correct, pixels = 0.0, 0
        for prepared, gts in zip(prepared_list, gts_list):
            applied = weights if prepared.bo_tj is not None else _fold_tj(weights)
            fgca = compute_fgca(finalize_components(prepared, applied).final, gts)
            correct += fgca.correct
            pixels += fgca.pixels
        return correct / pixels

    tuned, best, trace = grid_search_weights(
        objective, names=tuple(names), coarse_step=args.coarse_step
    )

    weights_text = (
        f"alphaRef={tuned.alpha_ref:.6f}\n"
        f"alphaSA={tuned.alpha_sa:.6f}\n"
        f"alphaTJ={tuned.alpha_tj:.6f}\n"
        f"objective={best:.6f}\n"
        f"seed={config.resolved_seed()}\n"
        f"trainIds={','.join(split.train_ids)}\n"
        f"testIds={','.join(split.test_ids)}\n"
    )
    (out_dir / "weights.kv").write_text(weights_text)
    trace_lines = ["round " + " ".join(names) + " objective"]
    for round_index, point, value in trace:
        coords = " ".join(f"{v:.6f}" for v in point)
        trace_lines.append(f"{round_index} {coords} {value:.6f}")
    (out_dir / "trace.txt").write_text("".join(f"{l}\n" for l in trace_lines))
    print(
        f"tuned: alphaRef={tuned.alpha_ref:.4f} alphaSA={tuned.alpha_sa:.4f} "
        f"alphaTJ={tuned.alpha_tj:.4f} objective={best:.6f} "
        f"({len(trace)} evaluations)"
    )
    ok = (out_dir / "weights.kv").exists() and (out_dir / "trace.txt").exists()
    return 0 if ok else 1


# ----------------------------------------------------------------------
# synth
# ----------------------------------------------------------------------

def cmd_synth(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = {}
    if args.size is not None:
        params["size"] = args.size
    if args.gradient is not None:
        params["gradient"] = args.gradient
    if args.radius is not None:
        params["r_outer"] = args.radius
    stim = stimuli.generate(args.kind, **params)

    written = []
    gray = stim.image
    io.write_ppm(out_dir / "image.ppm", gray, gray, gray)
    written.append(out_dir / "image.ppm")
    io.write_lm1(out_dir / "gt.lm1", stim.signed.astype(np.int64))
    written.append(out_dir / "gt.lm1")
    if stim.contours is not None:
        io.write_lm1(out_dir / "contours.lm1", stim.contours)
        written.append(out_dir / "contours.lm1")
    if stim.segments is not None:
        io.write_lm1(out_dir / "segments.lm1", stim.segments)
        written.append(out_dir / "segments.lm1")
    print(f"wrote {len(written)} files to {out_dir}")
    return 0 if all(p.exists() for p in written) else 1


# ----------------------------------------------------------------------
# argument wiring
# ----------------------------------------------------------------------

def _add_config_flags(parser, with_weights=True):
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument(
        "--preset", choices=sorted(PRESETS), help="named alpha triple"
    )
    parser.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="override one config key (repeatable)",
    )
    if with_weights:
        parser.add_argument(
            "--weights", metavar="REF,SA,TJ", help="explicit alpha triple"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fgo",
        description="Border-ownership / figure-ground model runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the model on one image")
    p_run.add_argument("--image", required=True)
    p_run.add_argument("--contours", help="contour-id LM1 map")
    p_run.add_argument("--segments", help="segment-id LM1 map")
    p_run.add_argument("--gt", help="signed ground-truth LM1 map")
    p_run.add_argument("--out", required=True)
    _add_config_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_eval = sub.add_parser("eval", help="score a dataset manifest")
    p_eval.add_argument("--manifest", required=True)
    p_eval.add_argument("--out", required=True)
    p_eval.add_argument("--compare", metavar="PRESET_A,PRESET_B")
    p_eval.add_argument("--jobs", type=int, default=1)
    _add_config_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_tune = sub.add_parser("tune", help="grid-search cue weights")
    p_tune.add_argument("--manifest", required=True)
    p_tune.add_argument(
        "--weights",
        dest="weight_names",
        default="alphaRef,alphaSA",
        help="comma list of weights to search (others pinned to 0)",
    )
    p_tune.add_argument("--coarse-step", type=float, default=0.1)
    p_tune.add_argument("--out", required=True)
    _add_config_flags(p_tune, with_weights=False)
    p_tune.set_defaults(func=cmd_tune)

    p_synth = sub.add_parser("synth", help="generate a synthetic fixture")
    p_synth.add_argument("kind", choices=sorted(stimuli.GENERATORS))
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--size", type=int)
    p_synth.add_argument("--gradient", type=float)
    p_synth.add_argument("--radius", type=float)
    p_synth.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
