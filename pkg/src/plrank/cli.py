"""Command-line pipeline: depth scenes to rankings to scorers to metrics.

Subcommands cover each stage (generate, sample, train, recover, eval), a
figure-rendering report step, and rerun, which replays any stage from its
manifest. Every run that writes files also writes `<out>.manifest.json`
holding the subcommand, its fully resolved parameters, the seed, the paths
touched, and the tool version; replaying a manifest reproduces the output
bytes exactly.

Exit codes: 0 success, 2 argument or validation error, 3 I/O or file
format error. The seed defaults to the PLRANK_SEED environment variable
when no --seed flag is given, and to 0 when neither is set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .depth import SCENE_KINDS, DepthMap, SceneSpec, generate_scene
from .errors import FormatError
from .figures import save_depth_heatmap, save_nll_trace, save_report_chart, save_rmse_curve
from .metrics import evaluate, format_report_table, read_report_csv, write_report_csv
from .pfm import MASK_SUFFIX, read_pfm, read_pfm_values, write_pfm
from .recovery import fit_affine, read_experiment_results, recover_depth
from .sampling import SamplerConfig, read_samples, sample_rankings, write_samples
from .training import (
    LinearFeatureScorer,
    TabularScorer,
    TrainConfig,
    load_scorer,
    read_nll_trace,
    save_scorer,
    train,
    train_resampled,
    write_nll_trace,
)

MANIFEST_SUFFIX = ".manifest.json"


def _parse_size(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    try:
        height, width = (int(p) for p in parts)
    except ValueError:
        raise ValueError(f"size must look like 64x64, got {text!r}") from None
    return height, width


def _parse_range(text: str) -> tuple[float, float]:
    parts = text.split(":")
    try:
        lo, hi = (float(p) for p in parts)
    except ValueError:
        raise ValueError(f"range must look like MIN:MAX, got {text!r}") from None
    return lo, hi


def _resolve_seed(flag_value: int | None) -> int:
    if flag_value is not None:
        return flag_value
    env = os.environ.get("PLRANK_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ValueError(f"PLRANK_SEED must be an integer, got {env!r}") from None


def write_manifest(subcommand, parameters, seed, inputs, outputs, path) -> None:
    manifest = {
        "subcommand": subcommand,
        "parameters": parameters,
        "seed": seed,
        "inputs": list(inputs),
        "outputs": list(outputs),
        "version": __version__,
    }
    with open(os.fspath(path), "w", encoding="utf-8") as f:
        f.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def read_manifest(path) -> dict:
    path = os.fspath(path)
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not valid JSON ({exc})") from None
    required = {"subcommand", "parameters", "seed", "inputs", "outputs", "version"}
    if not isinstance(data, dict) or not required.issubset(data):
        raise FormatError(f"{path}: manifest must carry fields {sorted(required)}")
    return data


# Core runners are pure functions of (parameters, seed) so a manifest replay
# goes through exactly the code the original invocation used. Each returns
# (inputs, outputs, manifest_path, summary).


def _run_generate(params: dict, seed: int):
    spec = SceneSpec(
        params["kind"],
        params["height"],
        params["width"],
        (params["range_min"], params["range_max"]),
        seed,
    )
    out = params["out"]
    write_pfm(generate_scene(spec), out)
    outputs = [out, out + MASK_SUFFIX]
    summary = f"wrote {out} ({spec.height}x{spec.width} {spec.kind}, seed {seed})"
    return [], outputs, out + MANIFEST_SUFFIX, summary


def _run_sample(params: dict, seed: int):
    if params["threads"] < 1:
        raise ValueError(f"--threads must be >= 1, got {params['threads']}")
    depth_map = read_pfm(params["scene"])
    config = SamplerConfig(
        ranking_size=params["n"],
        rankings_per_image=params["r"],
        oversample_factor=params["oversample"],
        tau=params["tau"],
        penalty=params["penalty"],
    )
    samples = sample_rankings(
        depth_map, config, np.random.default_rng(seed), threads=params["threads"]
    )
    out = params["out"]
    write_samples(samples, out)
    summary = f"wrote {out} ({len(samples)} rankings of size {config.ranking_size})"
    return [params["scene"]], [out], out + MANIFEST_SUFFIX, summary


def _run_train(params: dict, seed: int):
    if params["threads"] < 1:
        raise ValueError(f"--threads must be >= 1, got {params['threads']}")
    if (params["rankings"] is None) == (not params["resample"]):
        raise ValueError("pass exactly one of --rankings or --resample-each-epoch")
    scene = read_pfm(params["scene"])
    if params["scorer"] == "tabular":
        scorer = TabularScorer.zeros(*scene.shape)
    elif params["scorer"] == "linear":
        scorer = LinearFeatureScorer.zeros(*scene.shape)
    else:
        raise ValueError(f"scorer must be 'tabular' or 'linear', got {params['scorer']!r}")
    config = TrainConfig(
        epochs=params["epochs"],
        learning_rate=params["lr"],
        batch_size=params["batch_size"],
        optimizer=params["optimizer"],
        seed=seed,
    )
    inputs = [params["scene"]]
    if params["resample"]:
        sampler = SamplerConfig(
            ranking_size=params["n"],
            rankings_per_image=params["r"],
            oversample_factor=params["oversample"],
            tau=params["tau"],
            penalty=params["penalty"],
        )
        result = train_resampled(scorer, scene, sampler, config, threads=params["threads"])
    else:
        inputs.append(params["rankings"])
        result = train(scorer, read_samples(params["rankings"]), config)
    out, trace_path = params["out"], params["trace"]
    save_scorer(result.scorer, out)
    write_nll_trace(result.nll_trace, trace_path)
    trace = result.nll_trace
    progress = f"NLL {trace[0]:.4f} -> {trace[-1]:.4f}" if trace.size else "no epochs run"
    summary = f"wrote {out} ({params['scorer']} scorer, {progress})"
    return inputs, [out, trace_path], out + MANIFEST_SUFFIX, summary


def _run_recover(params: dict, seed: int):
    truth = read_pfm(params["truth"])
    scorer = load_scorer(params["scorer"], height=truth.height, width=truth.width)
    if scorer.shape != truth.shape:
        raise ValueError(f"scorer grid {scorer.shape} does not match map {truth.shape}")
    fit = fit_affine(scorer.score_grid(), truth)
    recovered = recover_depth(scorer, fit)
    out = params["out"]
    write_pfm(DepthMap(recovered.astype(np.float32), truth.mask), out)
    summary = f"wrote {out} (fit scale {fit.scale!r} shift {fit.shift!r})"
    inputs = [params["scorer"], params["truth"]]
    return inputs, [out, out + MASK_SUFFIX], out + MANIFEST_SUFFIX, summary


def _run_eval(params: dict, seed: int):
    if params["orientation"] not in ("depth", "score"):
        raise ValueError(f"orientation must be 'depth' or 'score', got {params['orientation']!r}")
    truth = read_pfm(params["truth"])
    # predictions load raw: score grids are legitimately negative
    pred_values, _ = read_pfm_values(params["pred"])
    report = evaluate(
        pred_values,
        truth,
        max_capacity=params["max_capacity"],
        pred_higher_is_closer=params["orientation"] == "score",
        num_pairs=params["pairs"],
        num_ranking_sets=params["ranking_sets"],
        ranking_size=params["ranking_size"],
        ndcg_normalized=params["ndcg_normalized"],
        rng=np.random.default_rng(seed),
    )
    out = params["out"]
    write_report_csv([(params["label"], report)], out)
    summary = format_report_table([(params["label"], report)]).rstrip()
    inputs = [params["pred"], params["truth"]]
    return inputs, [out], out + MANIFEST_SUFFIX, summary


def _run_report(params: dict, seed: int):
    sources = [params[k] for k in ("scene", "pred", "trace", "experiment", "eval")]
    if all(s is None for s in sources):
        raise ValueError("nothing to render: pass at least one input file")
    out_dir = params["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    inputs, outputs = [], []

    def target(name):
        path = os.path.join(out_dir, name)
        outputs.append(path)
        return path

    if params["scene"] is not None:
        inputs.append(params["scene"])
        save_depth_heatmap(
            read_pfm(params["scene"]), target("scene.png"), title=os.path.basename(params["scene"])
        )
    if params["pred"] is not None:
        inputs.append(params["pred"])
        save_depth_heatmap(
            read_pfm(params["pred"]), target("pred.png"), title=os.path.basename(params["pred"])
        )
    if params["trace"] is not None:
        inputs.append(params["trace"])
        save_nll_trace(read_nll_trace(params["trace"]), target("nll_trace.png"))
    if params["experiment"] is not None:
        inputs.append(params["experiment"])
        save_rmse_curve(read_experiment_results(params["experiment"]), target("rmse_curve.png"))
    if params["eval"] is not None:
        inputs.append(params["eval"])
        save_report_chart(read_report_csv(params["eval"]), target("eval_report.png"))
    manifest_path = os.path.join(out_dir, "report" + MANIFEST_SUFFIX)
    summary = f"wrote {len(outputs)} figures to {out_dir}"
    return inputs, outputs, manifest_path, summary


_RUNNERS = {
    "generate": _run_generate,
    "sample": _run_sample,
    "train": _run_train,
    "recover": _run_recover,
    "eval": _run_eval,
    "report": _run_report,
}


def _execute(subcommand: str, params: dict, seed: int) -> int:
    inputs, outputs, manifest_path, summary = _RUNNERS[subcommand](params, seed)
    write_manifest(subcommand, params, seed, inputs, outputs, manifest_path)
    print(summary)
    return 0


def cmd_generate(args) -> int:
    height, width = _parse_size(args.size)
    lo, hi = _parse_range(args.range)
    params = {
        "kind": args.kind,
        "height": height,
        "width": width,
        "range_min": lo,
        "range_max": hi,
        "out": args.out,
    }
    return _execute("generate", params, _resolve_seed(args.seed))


def cmd_sample(args) -> int:
    params = {
        "scene": args.scene,
        "n": args.n,
        "r": args.r,
        "oversample": args.oversample,
        "tau": args.tau,
        "penalty": args.penalty,
        "threads": args.threads,
        "out": args.out,
    }
    return _execute("sample", params, _resolve_seed(args.seed))


def cmd_train(args) -> int:
    params = {
        "scene": args.scene,
        "rankings": args.rankings,
        "resample": args.resample_each_epoch,
        "n": args.n,
        "r": args.r,
        "oversample": args.oversample,
        "tau": args.tau,
        "penalty": args.penalty,
        "scorer": args.scorer,
        "epochs": args.epochs,
        "lr": args.lr,
        "batch_size": args.batch_size,
        "optimizer": args.optimizer,
        "threads": args.threads,
        "out": args.out,
        "trace": args.trace if args.trace is not None else args.out + ".trace.csv",
    }
    return _execute("train", params, _resolve_seed(args.seed))


def cmd_recover(args) -> int:
    params = {"scorer": args.scorer, "truth": args.truth, "out": args.out}
    return _execute("recover", params, 0)


def cmd_eval(args) -> int:
    params = {
        "pred": args.pred,
        "truth": args.truth,
        "pairs": args.pairs,
        "ranking_sets": args.ranking_sets,
        "ranking_size": args.ranking_size,
        "max_capacity": args.max_capacity,
        "orientation": args.pred_orientation,
        "ndcg_normalized": args.ndcg_normalized,
        "label": args.label if args.label is not None else os.path.basename(args.pred),
        "out": args.out if args.out is not None else args.pred + ".eval.csv",
    }
    return _execute("eval", params, _resolve_seed(args.seed))


def cmd_report(args) -> int:
    params = {
        "out_dir": args.out_dir,
        "scene": args.scene,
        "pred": args.pred,
        "trace": args.trace,
        "experiment": args.experiment,
        "eval": args.eval,
    }
    return _execute("report", params, 0)


def cmd_rerun(args) -> int:
    manifest = read_manifest(args.manifest)
    subcommand = manifest["subcommand"]
    if subcommand not in _RUNNERS:
        raise FormatError(f"{args.manifest}: unknown subcommand {subcommand!r}")
    if manifest["version"] != __version__:
        print(
            f"note: manifest written by version {manifest['version']}, running {__version__}",
            file=sys.stderr,
        )
    if not isinstance(manifest["parameters"], dict) or not isinstance(manifest["seed"], int):
        raise FormatError(f"{args.manifest}: malformed parameters or seed")
    try:
        return _execute(subcommand, manifest["parameters"], manifest["seed"])
    except KeyError as exc:
        raise FormatError(f"{args.manifest}: manifest parameters missing {exc}") from None


def _add_seed(parser) -> None:
    parser.add_argument(
        "--seed", type=int, default=None, help="RNG seed (default: $PLRANK_SEED, else 0)"
    )


def _add_sampler_flags(parser) -> None:
    parser.add_argument("--n", type=int, default=5, help="ranking size (default 5)")
    parser.add_argument("--r", type=int, default=400, help="rankings kept per image (default 400)")
    parser.add_argument(
        "--oversample", type=int, default=5, help="candidate oversampling factor (default 5)"
    )
    parser.add_argument(
        "--tau", type=float, default=0.03, help="near-tie ratio threshold (default 0.03)"
    )
    parser.add_argument(
        "--penalty", type=float, default=-10.0, help="near-tie penalty (default -10)"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plrank",
        description="Listwise ranking pipeline for depth: scenes, rankings, scorers, metrics.",
    )
    parser.add_argument("--version", action="version", version=f"plrank {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("generate", help="write a synthetic depth scene as PFM + mask")
    p.add_argument("--kind", required=True, choices=SCENE_KINDS)
    p.add_argument("--size", required=True, help="HxW, e.g. 64x64")
    p.add_argument("--range", default="0:10", help="MIN:MAX depth range (default 0:10)")
    p.add_argument("--out", required=True, help="output PFM path")
    _add_seed(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("sample", help="draw informative pixel rankings from a depth map")
    p.add_argument("scene", help="input PFM depth map")
    _add_sampler_flags(p)
    p.add_argument("--threads", type=int, default=1, help="scoring worker cap (default 1)")
    p.add_argument("--out", required=True, help="output rankings text file")
    _add_seed(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("train", help="fit a pixel scorer to rankings by NLL")
    p.add_argument("scene", help="input PFM depth map")
    p.add_argument("--rankings", default=None, help="rankings file from `sample`")
    p.add_argument(
        "--resample-each-epoch",
        action="store_true",
        help="draw fresh rankings from the scene every epoch instead",
    )
    _add_sampler_flags(p)
    p.add_argument("--scorer", default="tabular", choices=("tabular", "linear"))
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--batch-size", type=int, default=None, help="default: full batch")
    p.add_argument("--optimizer", default="adam", choices=("sgd", "adam"))
    p.add_argument("--threads", type=int, default=1, help="sampling worker cap (default 1)")
    p.add_argument("--out", required=True, help="output scorer path")
    p.add_argument("--trace", default=None, help="NLL trace CSV (default <out>.trace.csv)")
    _add_seed(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("recover", help="affine-align a scorer to metric depth")
    p.add_argument("scorer", help="scorer file from `train`")
    p.add_argument("truth", help="ground-truth PFM depth map")
    p.add_argument("--out", required=True, help="output recovered PFM path")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("eval", help="score a prediction against ground truth")
    p.add_argument("pred", help="predicted PFM (depth or raw scores)")
    p.add_argument("truth", help="ground-truth PFM depth map")
    p.add_argument("--pairs", type=int, default=50000, help="pairs to sample (default 50000)")
    p.add_argument(
        "--ranking-sets", type=int, default=100, help="ranking sets to sample (default 100)"
    )
    p.add_argument("--ranking-size", type=int, default=500, help="set size (default 500)")
    p.add_argument(
        "--max-capacity",
        type=float,
        default=None,
        help="depth capacity for RMSE (default: deepest valid pixel)",
    )
    p.add_argument(
        "--pred-orientation",
        default="depth",
        choices=("depth", "score"),
        help="'depth': higher is farther; 'score': higher is closer",
    )
    p.add_argument(
        "--ndcg-normalized",
        action="store_true",
        help="compute nDCG relevance on capacity-normalized depths",
    )
    p.add_argument("--label", default=None, help="row label (default: pred filename)")
    p.add_argument("--out", default=None, help="report CSV (default <pred>.eval.csv)")
    _add_seed(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="render PNG figures from pipeline outputs")
    p.add_argument("--out-dir", required=True, help="directory for the figures")
    p.add_argument("--scene", default=None, help="PFM depth map to render")
    p.add_argument("--pred", default=None, help="predicted PFM to render")
    p.add_argument("--trace", default=None, help="NLL trace CSV to plot")
    p.add_argument("--experiment", default=None, help="recovery experiment CSV to plot")
    p.add_argument("--eval", default=None, help="evaluation report CSV to chart")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("rerun", help="replay a run from its manifest")
    p.add_argument("manifest", help="manifest JSON written by a previous run")
    p.set_defaults(func=cmd_rerun)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
