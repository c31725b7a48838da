"""``aurank`` command line: each pipeline stage reads and writes files.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .data import Dataset, load_dataset, save_dataset
from .errors import ConfigError, DataError, NumericError
from .mapping import load_map_net, predict_video, save_map_net
from .metrics import evaluate
from .nets import load_net, save_net
from .pairs import build_pair_dataset, load_pairs, save_pairs
from .pipeline import fit_map_stage, occurrence
from .synth import generate, run_experiment, save_truth
from .trainer import train_rank

log = logging.getLogger("aurank")

EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4


def _write_lines(path: Path, lines) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")


def _dataset(cfg: RunConfig, override=None) -> Dataset:
    path = Path(override) if override else cfg.path("dataset")
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    return load_dataset(path, cfg.label_spec)


def _au_names(cfg: RunConfig, args) -> list[str]:
    names = list(cfg.label_spec.au_names)
    if getattr(args, "au", None):
        if args.au not in names:
            raise ConfigError(f"--au {args.au!r} is not among {names}")
        return [args.au]
    return names


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise DataError(f"{what} not found: {path}")
    return path


def cmd_gen_synth(cfg: RunConfig, args):
    spec = cfg.label_spec
    if spec.au_names != (cfg.synth.au_name,) or spec.level_count != cfg.synth.level_count:
        raise ConfigError("labels section must match synth.au_name and synth.level_count")
    dataset, truth = generate(cfg.synth)
    save_dataset(dataset, cfg.path("dataset"))
    save_truth(truth, cfg.path("truth"))
    print(f"wrote {len(dataset.videos)} videos, {dataset.n} frames to {cfg.path('dataset')}")


def cmd_make_pairs(cfg: RunConfig, args):
    aus = _au_names(cfg, args)
    dataset = _dataset(cfg, args.dataset)
    built = [build_pair_dataset(dataset, au, cfg.pipeline.pair_count, cfg.pipeline.pair_seed) for au in aus]
    for pairs in built:
        save_pairs(pairs, cfg.path("pairs", pairs.au_name))
        print(f"{pairs.au_name}: {pairs.m} pairs -> {cfg.path('pairs', pairs.au_name)}")


def cmd_train_rank(cfg: RunConfig, args):
    aus = _au_names(cfg, args)
    dataset = _dataset(cfg, args.dataset)
    for au in aus:
        pairs = load_pairs(_require(cfg.path("pairs", au), "pair file"))
        if pairs.au_name != au:
            raise DataError(f"pair file {cfg.path('pairs', au)} holds AU {pairs.au_name!r}, expected {au!r}")
        net_cfg = replace(cfg.pipeline.rank_net, input_dim=dataset.d)
        net, history = train_rank(pairs, dataset, cfg.pipeline.rank_train, net_cfg)
        save_net(net, cfg.path("rank_model", au))
        _write_lines(cfg.path("rank_log", au), history.log_lines())
        print(f"{au}: final mean loss {history.mean_loss[-1]:.6f} -> {cfg.path('rank_model', au)}")


def cmd_train_map(cfg: RunConfig, args):
    aus = _au_names(cfg, args)
    dataset = _dataset(cfg, args.dataset)
    for au in aus:
        rank_net = load_net(_require(cfg.path("rank_model", au), "rank model"))
        map_net, history = fit_map_stage(dataset, au, rank_net, cfg.pipeline)
        save_map_net(map_net, cfg.path("map_model", au))
        _write_lines(cfg.path("map_log", au), history.log_lines())
        print(f"{au}: final mean loss {history.mean_loss[-1]:.6f} -> {cfg.path('map_model', au)}")


def cmd_predict(cfg: RunConfig, args):
    aus = _au_names(cfg, args)
    dataset = _dataset(cfg, args.dataset)
    models = {}
    for au in aus:
        models[au] = (
            load_net(_require(cfg.path("rank_model", au), "rank model")),
            load_map_net(_require(cfg.path("map_model", au), "map model")),
        )
    per_au = {au: {v.video_id: predict_video(r, m, v) for v in dataset.videos} for au, (r, m) in models.items()}
    lines = []
    for v in dataset.videos:
        for k, f in enumerate(v.frames):
            for au in aus:
                levels, proba = per_au[au][v.video_id]
                lines.append(json.dumps({
                    "video": v.video_id, "frame": f.frame_index, "au": au,
                    "predicted_level": int(levels[k]),
                    "probabilities": [float(p) for p in proba[k]],
                }))
    out = Path(args.out) if args.out else cfg.path("predictions")
    _write_lines(out, lines)
    print(f"wrote {len(lines)} predictions to {out}")


def read_predictions(path) -> dict[tuple[str, int, str], int]:
    preds = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                key = (str(rec["video"]), int(rec["frame"]), str(rec["au"]))
                level = int(rec["predicted_level"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"malformed prediction at line {lineno}: {exc}") from None
            if key in preds:
                raise DataError(f"duplicate prediction key {key} at line {lineno}")
            preds[key] = level
    return preds


def align_predictions(preds, dataset: Dataset, aus):
    """Prediction and truth matrices (frames x AUs); raises on the first key missing from either side."""
    rows_p, rows_t, seen = [], [], set()
    for f in dataset.frames():
        row_p, row_t = [], []
        for au in aus:
            key = (f.video_id, f.frame_index, au)
            if key not in preds:
                raise DataError(f"misaligned predictions: no prediction for key video={key[0]} frame={key[1]} au={key[2]}")
            seen.add(key)
            row_p.append(preds[key])
            row_t.append(f.labels[au])
        rows_p.append(row_p)
        rows_t.append(row_t)
    for key in preds:
        if key not in seen:
            raise DataError(f"misaligned predictions: key video={key[0]} frame={key[1]} au={key[2]} not in dataset")
    return np.array(rows_p), np.array(rows_t)


def cmd_evaluate(cfg: RunConfig, args):
    aus = _au_names(cfg, args)
    dataset = _dataset(cfg, args.dataset)
    pred_path = _require(Path(args.predictions) if args.predictions else cfg.path("predictions"), "predictions file")
    pred, truth = align_predictions(read_predictions(pred_path), dataset, aus)
    report = evaluate(occurrence(pred), occurrence(truth), aus)
    prefix = Path(args.out) if args.out else cfg.path("report")
    prefix.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{prefix}.json").write_text(report.to_json() + "\n", encoding="utf-8")
    Path(f"{prefix}.txt").write_text(report.summary(), encoding="utf-8")
    sys.stdout.write(report.summary())


def cmd_run_experiment(cfg: RunConfig, args):
    result = run_experiment(cfg.experiment)
    out = Path(args.out) if args.out else cfg.path("experiment_dir")
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(result.report, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    save_net(result.pipeline_model.rank_net, out / "rank_model.json")
    save_map_net(result.pipeline_model.map_net, out / "map_model.json")
    save_net(result.baseline_model, out / "baseline_model.json")
    r = result.report
    print(f"pipeline competition_metric={r['pipeline']['competition_metric']!r}")
    print(f"baseline competition_metric={r['baseline']['competition_metric']!r}")
    if "kendall_tau" in r:
        print(f"mean within-video kendall_tau={r['kendall_tau']['mean']!r}")
    print(f"report -> {out / 'report.json'}")


COMMANDS = {
    "gen-synth": (cmd_gen_synth, "generate a synthetic dataset and its latent truth"),
    "make-pairs": (cmd_make_pairs, "sample within-video ranking pairs per AU"),
    "train-rank": (cmd_train_rank, "train the pseudo-intensity scorer per AU"),
    "train-map": (cmd_train_map, "fit bin edges and train the mapping classifier per AU"),
    "predict": (cmd_predict, "predict per-frame levels for a dataset"),
    "evaluate": (cmd_evaluate, "score predictions against dataset labels"),
    "run-experiment": (cmd_run_experiment, "synthetic pipeline-vs-baseline comparison"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aurank", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--seed-override", type=int, default=None, help="replace every seed in the config")
        p.add_argument("-v", "--verbose", action="store_true")
        if name not in ("gen-synth", "run-experiment"):
            p.add_argument("--dataset", help="frame-record file (defaults to paths.dataset)")
            p.add_argument("--au", help="restrict to one AU")
        if name in ("predict", "evaluate", "run-experiment"):
            p.add_argument("--out", help="output path (file, report prefix or directory)")
        if name == "evaluate":
            p.add_argument("--predictions", help="prediction file (defaults to paths.predictions)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    fn, _ = COMMANDS[args.command]
    try:
        cfg = load_config(args.config, args.seed_override)
        fn(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
