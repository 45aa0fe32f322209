"""Command-line front end: ``infosdl {learn,encode,eval,features,selftest}``.

Exit codes: 0 success, 2 usage error, 3 input/output error, 4 numerical
failure (including a failed self-test). Logging verbosity comes from the
``SDL_LOG`` environment variable (``error``, ``info`` or ``debug``).
"""

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import features, io, metrics
from .config import SdlConfig
from .errors import (DataFormatError, DegenerateInputError, DimensionError, InvariantError,
                     NumericalError, ParameterError)
from .sdl_density import learn_density, objective_density, sparse_code_density
from .sdl_spd import learn_spd, mean_airm_error, objective_spd, sparse_code_spd

log = logging.getLogger("infosdl")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(Exception):
    pass


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _seed(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _shared_flags():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--mode", choices=("density", "spd"))
    p.add_argument("--data", type=Path)
    p.add_argument("--model", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--atoms", type=_positive_int)
    p.add_argument("--eta", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iters", type=_positive_int)
    p.add_argument("--divergence", choices=("kl", "hellinger"))
    p.add_argument("--sparsity-threshold", type=float)
    p.add_argument("--seed", type=_seed)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--report", choices=("json", "text"), default="json")
    return p


def build_parser():
    shared = _shared_flags()
    parser = argparse.ArgumentParser(prog="infosdl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", parents=[shared], help="learn a dictionary and codes")
    p.add_argument("--codes", type=Path, help="also write the learned codes here")

    sub.add_parser("encode", parents=[shared], help="code data over a fixed dictionary")

    p = sub.add_parser("eval", parents=[shared], help="reconstruction metrics")
    p.add_argument("--codes", type=Path, help="codes to evaluate (re-encoded when omitted)")
    p.add_argument("--table", type=Path, help="write a per-sample label/error/code table")

    p = sub.add_parser("features", parents=[shared], help="extract datasets from PGM images")
    p.add_argument("--filter-bank", choices=features.BANKS, default="gradient5")
    p.add_argument("--block-size", type=_positive_int, default=32)
    p.add_argument("--sigma", type=float)

    p = sub.add_parser("selftest", parents=[shared], help="run the built-in checks")
    p.add_argument("--inject-bug", choices=("gradient",), help=argparse.SUPPRESS)
    return parser


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise UsageError(f"{args.command} needs --{name.replace('_', '-')}")


def _config(args, base=None):
    cfg = dict(base or {})
    for flag, key in (("atoms", "num_atoms"), ("eta", "eta"), ("tol", "tol"),
                      ("max_iters", "max_iters"), ("divergence", "divergence"),
                      ("sparsity_threshold", "sparsity_threshold"), ("seed", "seed")):
        v = getattr(args, flag, None)
        if v is not None:
            cfg[key] = v
    return SdlConfig(**cfg)


def _load_data(mode, path):
    if mode == "density":
        F, labels = io.read_densities(path)
        return F, labels, io.read_scales(path)
    X, labels = io.read_spd(path)
    return X, labels, None


def _emit(record, args, path=None):
    if args.report == "json":
        text = json.dumps(record, sort_keys=True) + "\n"
    else:
        text = "".join(f"{k}: {record[k]}\n" for k in sorted(record))
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _write_timing(path, seconds):
    # wall time lives apart from the metrics so that metrics stay byte-identical
    if path is not None:
        Path(str(path) + ".timing.json").write_text(
            json.dumps({"wall_time_s": round(seconds, 6)}) + "\n")


def _record(mode, objective, W, recon, iterations, seed, converged, threshold):
    return {
        "mode": mode,
        "objective": float(objective),
        "sparsity": metrics.sparsity_measure(W, threshold),
        "recon_error": float(recon),
        "iterations": int(iterations),
        "seed": int(seed),
        "num_samples": int(W.shape[0]),
        "num_atoms": int(W.shape[1]),
        "converged": bool(converged),
    }


def _recon_error(mode, data, atoms, W, scales):
    if mode == "density":
        return float(np.mean(metrics.density_mse(data, atoms, W, scales)))
    return mean_airm_error(data, atoms, W)


def _features_meta(path):
    meta = Path(str(path) + ".meta.json")
    return json.loads(meta.read_text()) if meta.exists() else None


def cmd_learn(args):
    _require(args, "mode", "data", "model")
    t0 = time.perf_counter()
    data, labels, scales = _load_data(args.mode, args.data)
    cfg = _config(args)
    if args.mode == "density":
        atoms, W, rep = learn_density(data, cfg)
    else:
        atoms, W, rep = learn_spd(data, cfg)
    cfg = cfg.resolved(args.mode)
    recon = _recon_error(args.mode, data, atoms, W, scales)
    record = _record(args.mode, rep.objective, W, recon, rep.iterations, cfg.seed,
                     rep.converged, cfg.sparsity_threshold)
    meta = {"objective": rep.objective, "objective_trace": [float(v) for v in rep.objective_trace],
            "iterations": rep.iterations, "converged": rep.converged,
            "sparsity": rep.sparsity, "num_samples": int(W.shape[0]), "threads": args.threads}
    feat = _features_meta(args.data)
    if feat is not None:
        meta["features"] = feat
    io.save_model(args.model, args.mode, atoms, cfg.to_dict(), meta)
    if args.codes is not None:
        io.write_codes(args.codes, W, labels)
    _emit(record, args, args.out)
    _write_timing(args.out, time.perf_counter() - t0)
    return EXIT_OK


def _load_model_for(args):
    mode, atoms, doc = io.load_model(args.model)
    if args.mode is not None and args.mode != mode:
        raise DimensionError(f"{args.model} is a {mode} model but --mode is {args.mode}")
    return mode, atoms, doc


def _encode(mode, data, atoms, cfg):
    if mode == "density":
        if data.shape[1] != atoms.shape[1]:
            raise DimensionError(f"data have {data.shape[1]} bins but the model has {atoms.shape[1]}")
        W, res = sparse_code_density(data, atoms, cfg, return_result=True)
        return W, res, objective_density(data, atoms, W)
    if data.shape[-1] != atoms.shape[-1]:
        raise DimensionError(f"data are {data.shape[-1]}x{data.shape[-1]} but the model "
                             f"is {atoms.shape[-1]}x{atoms.shape[-1]}")
    W, res = sparse_code_spd(data, atoms, cfg, return_result=True)
    return W, res, objective_spd(data, atoms, W)


def cmd_encode(args):
    _require(args, "data", "model", "out")
    t0 = time.perf_counter()
    mode, atoms, doc = _load_model_for(args)
    data, labels, scales = _load_data(mode, args.data)
    cfg = _config(args, doc["config"])
    W, res, E = _encode(mode, data, atoms, cfg)
    io.write_codes(args.out, W, labels)
    record = _record(mode, E, W, _recon_error(mode, data, atoms, W, scales), res.iterations,
                     cfg.seed, res.converged, cfg.sparsity_threshold)
    _emit(record, args)
    _write_timing(args.out, time.perf_counter() - t0)
    return EXIT_OK


def cmd_eval(args):
    _require(args, "data", "model")
    t0 = time.perf_counter()
    mode, atoms, doc = _load_model_for(args)
    data, labels, scales = _load_data(mode, args.data)
    cfg = _config(args, doc["config"])
    if args.codes is not None:
        W, _ = io.read_codes(args.codes)
        if W.shape != (data.shape[0], atoms.shape[0]):
            raise DimensionError(f"{args.codes} holds {W.shape[0]}x{W.shape[1]} codes, expected "
                                 f"{data.shape[0]}x{atoms.shape[0]}")
        iterations, converged = 0, True
        E = objective_density(data, atoms, W) if mode == "density" else objective_spd(data, atoms, W)
    else:
        W, res, E = _encode(mode, data, atoms, cfg)
        iterations, converged = res.iterations, res.converged
    if mode == "density":
        per_sample = metrics.density_mse(data, atoms, W, scales)
    else:
        from .sdl_spd import reconstruct_spd
        from .spd import airm_distance
        per_sample = np.atleast_1d(airm_distance(data, reconstruct_spd(atoms, W)))
    record = _record(mode, E, W, float(np.mean(per_sample)), iterations, cfg.seed, converged,
                     cfg.sparsity_threshold)
    if args.table is not None:
        lab = labels if labels is not None else np.full(W.shape[0], -1)
        with open(args.table, "w") as fh:
            fh.write("label,recon_error," + ",".join(f"w{j}" for j in range(W.shape[1])) + "\n")
            for i in range(W.shape[0]):
                fh.write(f"{int(lab[i])},{per_sample[i]:.17g},"
                         + ",".join(f"{v:.17g}" for v in W[i]) + "\n")
    _emit(record, args, args.out)
    _write_timing(args.out, time.perf_counter() - t0)
    return EXIT_OK


def _mask_for(path):
    cand = path.with_name(path.stem + "_mask.pgm")
    return cand if cand.exists() else None


def cmd_features(args):
    _require(args, "data", "out")
    mode = args.mode or "density"
    cfg = features.FeatureConfig(block_size=args.block_size, sigma=args.sigma,
                                 filter_bank=args.filter_bank)
    entries = [(p, c) for p, c in io.scan_image_dir(args.data) if not p.stem.endswith("_mask")]
    classes = sorted({c for _, c in entries})
    class_index = {c: i for i, c in enumerate(classes)}
    rows, labels, scales, skipped = [], [], [], []
    for path, cls in entries:
        try:
            img = io.read_pgm(path)
            if mode == "density":
                rows.append(features.image_to_pmf(img))
                scales.append(float(img.sum()))
                labels.append(class_index[cls])
            elif cfg.filter_bank == "gradient5":
                desc = features.gradient_covariance_descriptor(img, cfg)
                rows.extend(desc)
                labels.extend([class_index[cls]] * len(desc))
            else:
                mpath = _mask_for(path)
                mask = io.read_pgm(mpath) if mpath is not None else None
                rows.append(features.texture_covariance_descriptor(img, mask, cfg))
                labels.append(class_index[cls])
        except (OSError, ValueError) as exc:
            log.warning("skipping %s: %s", path, exc)
            skipped.append(f"{path}\t{exc}")
    if not rows:
        raise DataFormatError(f"no usable images under {args.data}")
    if mode == "density":
        if len({len(r) for r in rows}) != 1:
            raise DimensionError("images differ in size, so their pmfs have different bin counts")
        io.write_densities(args.out, np.array(rows), labels)
        io.write_scales(args.out, scales)
    else:
        io.write_spd(args.out, np.array(rows), labels)
    meta = {"kind": "pmf" if mode == "density" else cfg.filter_bank, "classes": classes,
            "block_size": cfg.block_size if mode == "spd" else None,
            "sigma": cfg.sigma, "records": len(rows)}
    if mode == "spd" and cfg.filter_bank == "texture_eth80":
        meta["channels"] = ["H1H1t", "H2H2t", "H3H3t", "|Ix|", "|Iy|", "|LoG|"]
    Path(str(args.out) + ".meta.json").write_text(json.dumps(meta, sort_keys=True) + "\n")
    Path(str(args.out) + ".skipped").write_text("".join(s + "\n" for s in skipped))
    _emit({"records": len(rows), "skipped": len(skipped), "classes": len(classes)}, args)
    return EXIT_OK


def cmd_selftest(args):
    from .selftest import run_selftest

    results = run_selftest(seed=args.seed or 0, inject_bug=args.inject_bug,
                           out=lambda s: print(s, flush=True))
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_OK if not failed else EXIT_NUMERIC


COMMANDS = {"learn": cmd_learn, "encode": cmd_encode, "eval": cmd_eval,
            "features": cmd_features, "selftest": cmd_selftest}


def _setup_logging():
    level = os.environ.get("SDL_LOG", "error").lower()
    if level not in LOG_LEVELS:
        raise UsageError(f"SDL_LOG must be one of {sorted(LOG_LEVELS)}, got {level!r}")
    logging.basicConfig(level=LOG_LEVELS[level], format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr, force=True)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        _setup_logging()
        return COMMANDS[args.command](args)
    except (UsageError, ParameterError) as exc:
        print(f"infosdl {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"infosdl {args.command}: file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"infosdl {args.command}: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DataFormatError, DimensionError, InvariantError, DegenerateInputError) as exc:
        print(f"infosdl {args.command}: bad input: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"infosdl {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
