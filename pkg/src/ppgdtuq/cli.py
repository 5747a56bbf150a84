"""``ppgdtuq`` command line.

Every stage reads upstream files, writes its artifact, and writes
``<artifact>.manifest.json`` next to it. A manifest records the stage's
input hashes, seed, configuration, and a ``lineage`` hash naming the clean
dataset it derives from. ``report`` refuses inputs of mixed lineage.

Exit codes: 0 ok, 2 configuration, 3 schema/integrity/missing input,
4 numeric or training failure, 5 infeasible operating point.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .calibration import uce_from_items
from .classifier import ClassifierConfig, classifier_from_bytes, classifier_to_bytes, train_classifier
from .config import PipelineConfig, config_to_dict, derive_seed, load_config
from .dataio import read_dataset, write_dataset
from .dtuq import ScoredGeneration, filter_by_uncertainty
from .errors import ConfigError, IntegrityError, ParseError, PPGError
from .gan import gan_from_bytes, gan_to_bytes, train_gan
from .metrics import condition_report
from .pipeline import (augment_split, build_splits, denoise_dataset, entropy_correlation, reliability_set,
                       score_dataset)
from .signals import augment_dataset

MANIFEST_SUFFIX = ".manifest.json"


# -- manifests ---------------------------------------------------------------

def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _manifest_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + MANIFEST_SUFFIX)


def lineage_of(path) -> str:
    mp = _manifest_path(path)
    if mp.exists():
        return json.loads(mp.read_text())["lineage"]
    return file_hash(path)


def _rel(path, anchor) -> str:
    # relative to the manifest's directory so relocated runs compare byte for byte
    return Path(os.path.relpath(Path(path).resolve(), Path(anchor).resolve().parent)).as_posix()


def write_manifest(args, command: str, inputs: dict, outputs: list, lineage: str | None, extra=None):
    stamp = "1970-01-01T00:00:00Z" if args.deterministic else \
        _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    body = {
        "command": command,
        "created_at": stamp,
        "seed": args.seed,
        "versions": {"ppgdtuq": __version__, "numpy": np.__version__, "kernels": kernels.BACKEND},
        "inputs": {k: {"path": _rel(v, outputs[0]), "sha256": file_hash(v)}
                   for k, v in inputs.items() if v is not None},
        "outputs": {_rel(p, outputs[0]): file_hash(p) for p in outputs},
        "lineage": lineage,
    }
    if extra:
        body.update(extra)
    mp = _manifest_path(outputs[0])
    mp.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")


def _require(path, what):
    if path is None or not Path(path).exists():
        raise FileNotFoundError(f"missing {what}: {path}")
    return Path(path)


# -- scored-generation files -------------------------------------------------

def write_scored(items, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for it in items:
            obj = {"id": it.id, "uncertainty": it.uncertainty, "probs": [float(p) for p in it.probs]}
            if it.label is not None:
                obj["label"] = int(it.label)
            fh.write(json.dumps(obj, separators=(",", ":")) + "\n")


def read_scored(path) -> list[ScoredGeneration]:
    out, seen = [], set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                item = ScoredGeneration(str(obj["id"]), float(obj["uncertainty"]),
                                        np.asarray(obj["probs"], dtype=np.float64),
                                        None if obj.get("label") is None else int(obj["label"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: bad scored record ({exc})") from None
            if item.id in seen:
                raise IntegrityError(f"{path}:{lineno}: duplicate id {item.id!r}")
            seen.add(item.id)
            out.append(item)
    return out


# -- commands ----------------------------------------------------------------

def _cfg(args) -> PipelineConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    args.seed = cfg.seed
    return cfg


def cmd_generate(args):
    cfg = _cfg(args)
    sizes = {k: v for k, v in (("train", args.n_train), ("validation", args.n_val), ("test", args.n_test))
             if v is not None}
    if sizes:
        cfg = dataclasses.replace(cfg, sizes=dataclasses.replace(cfg.sizes, **sizes))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    splits = build_splits(cfg)
    paths = []
    for name, ds in splits.items():
        p = out / f"{name}.jsonl"
        write_dataset(ds, p)
        paths.append(p)
    for p in paths:
        write_manifest(args, "generate", {}, [p], file_hash(p),
                       {"config": {"synth": config_to_dict(cfg)["synth"], "sizes": config_to_dict(cfg)["sizes"]}})
    return 0


def cmd_augment(args):
    cfg = _cfg(args)
    src = _require(args.input, "input dataset")
    ds = read_dataset(src)
    n = cfg.noise
    sigma = n.sigma if args.sigma is None else args.sigma
    lo = n.clamp_lo if args.clamp_lo is None else args.clamp_lo
    hi = n.clamp_hi if args.clamp_hi is None else args.clamp_hi
    if sigma < 0 or not lo < hi:
        raise ConfigError("need sigma >= 0 and clamp_lo < clamp_hi")
    noisy = augment_dataset(ds, sigma, lo, hi, seed=derive_seed(cfg.seed, "noise", ds.split))
    write_dataset(noisy, args.out)
    write_manifest(args, "augment", {"input": src}, [Path(args.out)], lineage_of(src),
                   {"noise": {"sigma": sigma, "clamp_lo": lo, "clamp_hi": hi}})
    return 0


def cmd_train_gan(args):
    cfg = _cfg(args)
    tr = _require(args.train, "paired training dataset")
    va = _require(args.val, "paired validation dataset")
    overrides = {k: v for k, v in {
        "window_length": args.window, "stride": args.stride, "lr_discriminator": args.lr_d,
        "lr_generator": args.lr_g, "lambda_l1": args.lambda_l1, "patience": args.patience,
        "max_epochs": args.max_epochs}.items() if v is not None}
    try:
        gcfg = dataclasses.replace(cfg.gan, seed=cfg.seed, **overrides)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    model = train_gan(read_dataset(tr), read_dataset(va), gcfg)
    Path(args.out).write_bytes(gan_to_bytes(model))
    write_manifest(args, "train-gan", {"train": tr, "validation": va}, [Path(args.out)], lineage_of(tr),
                   {"gan": config_to_dict(dataclasses.replace(cfg, gan=gcfg))["gan"],
                    "history": [{k: float(v) for k, v in h.items()} for h in model.history]})
    return 0


def cmd_denoise(args):
    cfg = _cfg(args)
    src = _require(args.input, "input dataset")
    ds = read_dataset(src)
    baseline = dataclasses.replace(cfg.baseline, **{k: v for k, v in {
        "cutoff_hz": args.cutoff, "num_taps": args.taps, "movavg_window": args.window}.items() if v is not None})
    cfg = dataclasses.replace(cfg, baseline=baseline)
    model = None
    inputs = {"input": src}
    if args.method == "gan":
        inputs["model"] = _require(args.model, "GAN model (--model)")
        model = gan_from_bytes(Path(args.model).read_bytes())
    try:
        out = denoise_dataset(ds, args.method, cfg, model)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    write_dataset(out, args.out)
    write_manifest(args, "denoise", inputs, [Path(args.out)], lineage_of(src), {"method": args.method})
    return 0


def cmd_train_classifier(args):
    cfg = _cfg(args)
    tr = _require(args.train, "training dataset")
    ds = read_dataset(tr)
    if ds.paired:
        ds = ds.clean_dataset()
    ccfg = dataclasses.replace(cfg.classifier, seed=cfg.seed, **{k: v for k, v in {
        "epochs": args.epochs, "learning_rate": args.lr}.items() if v is not None})
    val = read_dataset(_require(args.val, "validation dataset")) if args.val else None
    model = train_classifier(ds, val, ccfg)
    Path(args.out).write_bytes(classifier_to_bytes(model))
    inputs = {"train": tr, "validation": args.val}
    write_manifest(args, "train-classifier", inputs, [Path(args.out)], lineage_of(tr),
                   {"classifier": dataclasses.asdict(ccfg)})
    return 0


def cmd_evaluate(args):
    cfg = _cfg(args)
    src = _require(args.input, "dataset to score")
    mp = _require(args.model, "classifier model")
    model = classifier_from_bytes(mp.read_bytes())
    ds = read_dataset(src)
    items = score_dataset(model, ds)
    out = Path(args.out)
    write_scored(items, out)
    outputs = [out]
    bins = cfg.evaluation.bins if args.bins is None else args.bins
    extra = {"bins": bins, "uce": {}}
    if all(it.label is not None for it in items) and items:
        for name, rep in reliability_set(items, bins).items():
            csv_path = out.with_name(f"{out.stem}.reliability-{name}.csv")
            svg_path = out.with_name(f"{out.stem}.reliability-{name}.svg")
            csv_path.write_text(rep.to_csv())
            svg_path.write_text(rep.to_svg())
            outputs += [csv_path, svg_path]
            extra["uce"][name] = rep.uce
    inputs = {"input": src, "model": mp}
    if args.reference:
        ref = _require(args.reference, "reference scored file")
        inputs["reference"] = ref
        corr = entropy_correlation(read_scored(ref), items)
        corr_path = out.with_name(f"{out.stem}.correlation.json")
        corr_path.write_text(json.dumps(corr, indent=2, sort_keys=True) + "\n")
        outputs.append(corr_path)
        extra["correlation"] = corr
    write_manifest(args, "evaluate", inputs, outputs, lineage_of(src), extra)
    return 0


def cmd_filter(args):
    cfg = _cfg(args)
    src = _require(args.input, "scored file")
    keep = cfg.evaluation.keep_fraction if args.keep is None else args.keep
    if not 0 < keep <= 1:
        raise ConfigError(f"--keep must be in (0, 1], got {keep}")
    kept = filter_by_uncertainty(read_scored(src), keep)
    write_scored(kept, args.out)
    write_manifest(args, "filter", {"input": src}, [Path(args.out)], lineage_of(src),
                   {"keep_fraction": keep, "kept": len(kept)})
    return 0


def cmd_report(args):
    cfg = _cfg(args)
    paths = {"clean": args.clean, "noisy": args.noisy, "denoised": args.denoised, "filtered": args.filtered}
    paths = {k: _require(v, f"{k} scored file") for k, v in paths.items()}
    lineages = {k: lineage_of(p) for k, p in paths.items()}
    if len(set(lineages.values())) != 1:
        raise IntegrityError(f"inputs derive from different datasets: {lineages}")
    sets = {k: read_scored(p) for k, p in paths.items()}
    keep = cfg.evaluation.keep_fraction
    fm = _manifest_path(paths["filtered"])
    if fm.exists():
        keep = json.loads(fm.read_text()).get("keep_fraction", keep)
    rep = condition_report(sets["clean"], sets["noisy"], sets["denoised"], [it.id for it in sets["filtered"]],
                           keep, cfg.evaluation.level)
    out = Path(args.out)
    out.write_text(rep.to_csv())
    txt = out.with_suffix(".txt")
    txt.write_text(rep.to_text())
    sys.stdout.write(rep.to_text())
    write_manifest(args, "report", paths, [out, txt], lineages["clean"])
    return 0


def cmd_pipeline(args):
    """All stages in sequence into one directory."""
    cfg = _cfg(args)
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    base = ["--seed", str(cfg.seed)] + (["--config", str(args.config)] if args.config else []) + \
        (["--deterministic"] if args.deterministic else [])
    method = args.method or cfg.denoiser

    def run(*argv):
        code = main([argv[0], *base, *argv[1:]])
        if code:
            raise SystemExit(code)

    run("generate", "--out-dir", str(d))
    for split in ("train", "validation", "test"):
        run("augment", "--in", str(d / f"{split}.jsonl"), "--out", str(d / f"{split}.noisy.jsonl"))
    run("train-classifier", "--train", str(d / "train.jsonl"), "--val", str(d / "validation.jsonl"),
        "--out", str(d / "classifier.clf"))
    den = ["denoise", "--in", str(d / "test.noisy.jsonl"), "--method", method, "--out", str(d / "test.denoised.jsonl")]
    if method == "gan":
        run("train-gan", "--train", str(d / "train.noisy.jsonl"), "--val", str(d / "validation.noisy.jsonl"),
            "--out", str(d / "denoiser.gan"))
        den += ["--model", str(d / "denoiser.gan")]
    run(*den)
    clf = str(d / "classifier.clf")
    run("evaluate", "--in", str(d / "test.jsonl"), "--model", clf, "--out", str(d / "scored.clean.jsonl"))
    run("evaluate", "--in", str(d / "test.noisy.jsonl"), "--model", clf, "--out", str(d / "scored.noisy.jsonl"))
    run("evaluate", "--in", str(d / "test.denoised.jsonl"), "--model", clf, "--out", str(d / "scored.denoised.jsonl"),
        "--reference", str(d / "scored.noisy.jsonl"))
    run("filter", "--in", str(d / "scored.denoised.jsonl"), "--out", str(d / "scored.filtered.jsonl"))
    run("report", "--clean", str(d / "scored.clean.jsonl"), "--noisy", str(d / "scored.noisy.jsonl"),
        "--denoised", str(d / "scored.denoised.jsonl"), "--filtered", str(d / "scored.filtered.jsonl"),
        "--out", str(d / "report.csv"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML configuration file")
    common.add_argument("--seed", type=int, help="global seed (overrides config)")
    common.add_argument("--deterministic", action="store_true", help="zero manifest timestamps")

    p = argparse.ArgumentParser(prog="ppgdtuq", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("generate", parents=[common], help="synthesize train/validation/test splits")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--n-train", type=int, help="records per class")
    s.add_argument("--n-val", type=int)
    s.add_argument("--n-test", type=int)
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("augment", parents=[common], help="add clamped Gaussian noise, keep clean pairing")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--sigma", type=float)
    s.add_argument("--clamp-lo", type=float)
    s.add_argument("--clamp-hi", type=float)
    s.set_defaults(func=cmd_augment)

    s = sub.add_parser("denoise", parents=[common], help="denoise a dataset")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--method", choices=("fir", "movavg", "gan"), required=True)
    s.add_argument("--model", help="GAN model for --method gan")
    s.add_argument("--cutoff", type=float, help="FIR cutoff in Hz")
    s.add_argument("--taps", type=int, help="FIR tap count (odd)")
    s.add_argument("--window", type=int, help="moving-average window (odd)")
    s.set_defaults(func=cmd_denoise)

    s = sub.add_parser("train-gan", parents=[common], help="train the adversarial denoiser")
    s.add_argument("--train", required=True)
    s.add_argument("--val", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--window", type=int)
    s.add_argument("--stride", type=int)
    s.add_argument("--lr-d", type=float, help="discriminator learning rate (default 1e-5)")
    s.add_argument("--lr-g", type=float, help="generator learning rate (default 2e-4)")
    s.add_argument("--lambda-l1", type=float, help="L1 weight (default 100)")
    s.add_argument("--patience", type=int, help="early-stopping patience in epochs (default 3)")
    s.add_argument("--max-epochs", type=int)
    s.set_defaults(func=cmd_train_gan)

    s = sub.add_parser("train-classifier", parents=[common], help="fit the AF classifier on clean signals")
    s.add_argument("--train", required=True)
    s.add_argument("--val")
    s.add_argument("--out", required=True)
    s.add_argument("--epochs", type=int)
    s.add_argument("--lr", type=float)
    s.set_defaults(func=cmd_train_classifier)

    s = sub.add_parser("evaluate", parents=[common], help="score signals; reliability CSV/SVG")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--model", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--bins", type=int)
    s.add_argument("--reference", help="scored file (e.g. noisy) to correlate uncertainties with")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("filter", parents=[common], help="keep the least uncertain fraction")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--keep", type=float, help="fraction kept (default 0.75)")
    s.set_defaults(func=cmd_filter)

    s = sub.add_parser("report", parents=[common], help="four-condition metrics table")
    s.add_argument("--clean", required=True)
    s.add_argument("--noisy", required=True)
    s.add_argument("--denoised", required=True)
    s.add_argument("--filtered", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("pipeline", parents=[common], help="run every stage into one directory")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--method", choices=("fir", "movavg", "gan"))
    s.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PPGError as exc:
        print(f"ppgdtuq {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"ppgdtuq {args.command}: {exc}", file=sys.stderr)
        return IntegrityError.exit_code
    except ValueError as exc:
        print(f"ppgdtuq {args.command}: {exc}", file=sys.stderr)
        return ConfigError.exit_code


if __name__ == "__main__":
    sys.exit(main())
