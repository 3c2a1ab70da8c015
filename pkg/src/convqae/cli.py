"""Command-line interface: ``convqae <command> [options]``.

Every command writes its outputs plus ``manifest.txt`` into ``--out-dir``.
The manifest lists every parameter in the flat ``key = value`` format that
``--config`` reads, so ``convqae <command> --config manifest.txt`` repeats a
run. Flags given explicitly on the command line override config values.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, autoencoder, bench, convfilter, dimred, io
from .adiabatic import Schedule
from .autoencoder import TrainConfig

log = logging.getLogger("convqae")

# manifest keys that describe the run rather than set a parameter
_META_KEYS = {"command", "version"}


# -- image helpers ----------------------------------------------------------------


def _is_pgm(path) -> bool:
    return Path(path).suffix.lower() == ".pgm"


def load_binary(path, threshold: float = 0.5) -> np.ndarray:
    """Grid files load as-is; PGM files are binarized at ``threshold``."""
    if _is_pgm(path):
        return dimred.binarize(io.read_pgm(path), threshold)
    return io.read_grid(path)


def save_binary(path, image) -> None:
    if _is_pgm(path):
        io.write_pgm(path, io.binary_to_gray(image))
    else:
        io.write_grid(path, image)


def _mnist_image(args) -> np.ndarray:
    images, labels = io.find_mnist(args.split, args.data_dir)
    records = io.read_mnist_idx(images, labels)
    picked = io.first_per_class(records, [args.mnist_digit], args.mnist_index + 1)
    return dimred.binarize(picked[-1][0], args.threshold)


def _input_image(args) -> tuple[np.ndarray, str]:
    """The input image and the file suffix outputs should use."""
    if getattr(args, "mnist_digit", None) is not None:
        return _mnist_image(args), ".pgm"
    if not args.input:
        raise ValueError("an --input file is required")
    return load_binary(args.input, args.threshold), (".pgm" if _is_pgm(args.input) else ".grid")


# -- parameter plumbing ------------------------------------------------------------


def _schedule(args) -> Schedule:
    return Schedule(args.steps, args.total_time)


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.learning_rate,
        init_range=args.init_range,
        max_epochs=args.max_epochs,
        train_noise_rate=args.train_noise_rate,
        schedule=_schedule(args),
        shots=args.shots,
        field_x=args.field_x,
        seed=args.seed,
    )


def _n_jobs(args):
    return args.threads if args.threads and args.threads > 1 else None


def _params(args) -> dict:
    skip = {"func", "config", "verbose"}
    out = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    out["version"] = __version__
    return out


def _finish(args, out_dir: Path, written: list[Path]) -> None:
    io.write_manifest(out_dir / "manifest.txt", _params(args))
    for p in written + [out_dir / "manifest.txt"]:
        print(p)


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- commands ------------------------------------------------------------------------


def cmd_train(args) -> None:
    img, _ = _input_image(args)
    out = _out_dir(args)
    weights = autoencoder.train_weights(img, _train_config(args))
    if not weights.converged:
        log.warning("training did not converge in %d epochs", args.max_epochs)
    io.write_weights(out / "weights.txt", weights)
    _finish(args, out, [out / "weights.txt"])


def _restoration_outputs(args, out, img, suffix, denoise_fn, stats) -> list[Path]:
    noise_seed, solve_seed = autoencoder._trial_seeds(args.seed, 0)
    noisy = autoencoder.inject_noise(img, args.noise_rate, noise_seed)
    restored = denoise_fn(noisy, solve_seed)
    paths = [out / f"noisy{suffix}", out / f"output{suffix}", out / "stats.csv"]
    save_binary(paths[0], noisy)
    save_binary(paths[1], restored)
    io.write_csv(paths[2], io.STATS_HEADER, stats.rows())
    print(
        f"complete restoration {stats.complete_fraction:.3f}, "
        f"within {args.tolerance} pixel(s) {stats.within_tolerance_fraction:.3f} "
        f"over {stats.trials} trial(s)"
    )
    return paths


def cmd_denoise(args) -> None:
    img, suffix = _input_image(args)
    out = _out_dir(args)
    written = []
    if args.weights:
        weights = io.read_weights(args.weights)
    else:
        weights = autoencoder.train_weights(img, _train_config(args))
        io.write_weights(out / "weights.txt", weights)
        written.append(out / "weights.txt")
    schedule = _schedule(args)
    stats = autoencoder.evaluate_restoration(
        img, weights, args.noise_rate, args.trials, args.tolerance,
        schedule, args.shots, args.seed,
    )

    def run(noisy, seed):
        return autoencoder.denoise(noisy, weights, schedule, args.shots, seed, args.field_x)

    written += _restoration_outputs(args, out, img, suffix, run, stats)
    _finish(args, out, written)


def cmd_conv_train(args) -> None:
    img, _ = _input_image(args)
    out = _out_dir(args)
    store = convfilter.train_patch_weights(img, _train_config(args), n_jobs=_n_jobs(args))
    conv = store.converged()
    if not conv.all():
        log.warning("%d of %d patches did not converge", int((~conv).sum()), conv.size)
    io.write_store(out / "store.txt", store)
    _finish(args, out, [out / "store.txt"])


def cmd_conv_denoise(args) -> None:
    img, suffix = _input_image(args)
    out = _out_dir(args)
    written = []
    n_jobs = _n_jobs(args)
    if args.store:
        store = io.read_store(args.store)
    else:
        store = convfilter.train_patch_weights(img, _train_config(args), n_jobs=n_jobs)
        io.write_store(out / "store.txt", store)
        written.append(out / "store.txt")
    schedule = _schedule(args)
    stats = convfilter.evaluate_conv_restoration(
        img, store, args.noise_rate, args.trials, args.tolerance,
        schedule, args.shots, args.seed, n_jobs,
    )

    def run(noisy, seed):
        return convfilter.conv_denoise(
            noisy, store, schedule, args.shots, seed, args.field_x, n_jobs
        )

    written += _restoration_outputs(args, out, img, suffix, run, stats)
    _finish(args, out, written)


def cmd_noise(args) -> None:
    img, suffix = _input_image(args)
    out = _out_dir(args)
    path = out / f"noisy{suffix}"
    save_binary(path, autoencoder.inject_noise(img, args.rate, args.seed))
    _finish(args, out, [path])


def cmd_dimred(args) -> None:
    out = _out_dir(args)
    digits = [int(d) for d in args.digits.split(",")]
    images, labels = io.find_mnist(args.split, args.data_dir)
    records = io.first_per_class(io.read_mnist_idx(images, labels), digits, args.per_class)
    gray = [img for img, _ in records]
    y = np.array([lab for _, lab in records])

    points = [dimred.reduce_to_2d(dimred.binarize(img, args.threshold), lab) for img, lab in records]
    q_acc = dimred.centroid_classify(np.array([p.as_array() for p in points]), y)
    pca = dimred.pca_project(gray, k=2)
    p_acc = dimred.centroid_classify(pca.points, y)

    features = out / "features.csv"
    io.write_csv(features, io.FEATURES_HEADER, ((p.label, p.f_right, p.f_down) for p in points))
    pca_csv = out / "pca.csv"
    io.write_csv(pca_csv, ("label", "pc1", "pc2"), ((lab, a, b) for lab, (a, b) in zip(y, pca.points)))
    report = out / "report.txt"
    io.write_manifest(
        report,
        {"images": len(records), "quantum_accuracy": q_acc, "pca_accuracy": p_acc},
    )
    print(f"nearest-centroid accuracy: coupling features {q_acc:.3f}, PCA {p_acc:.3f}")
    _finish(args, out, [features, pca_csv, report])


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def cmd_bench(args) -> None:
    out = _out_dir(args)

    def progress(rec):
        print(f"{rec.mode:6s} n={rec.n:4d} {rec.seconds:.4f}s", flush=True)

    records, summary = bench.run_bench(
        _int_list(args.normal_sizes), _int_list(args.conv_sides), args.repeats,
        _schedule(args), args.shots, args.seed, _n_jobs(args), progress,
    )
    csv_path = out / "bench.csv"
    io.write_csv(csv_path, io.BENCH_HEADER, ((r.mode, r.n, r.seconds) for r in records))
    summary_path = out / "summary.txt"
    io.write_manifest(summary_path, summary.as_dict())
    _finish(args, out, [csv_path, summary_path])


# -- parser --------------------------------------------------------------------------


def _add_common(p, train=False, image=True):
    p.add_argument("--config", help="flat 'key = value' file; explicit flags win")
    p.add_argument("--out-dir", default=".", help="directory for outputs (default: .)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for patch solves")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=200, help="Trotter steps M")
    p.add_argument("--total-time", type=float, default=100.0, help="anneal time t_f")
    p.add_argument("--field-x", type=float, default=1.0, help="transverse field h_x")
    p.add_argument("--shots", type=int, default=1024)
    p.add_argument("--threshold", type=float, default=0.5, help="binarization threshold")
    p.add_argument("-v", "--verbose", action="store_true")
    if image:
        p.add_argument("--input", help="grid (.grid/.txt) or plain PGM (.pgm) image")
        p.add_argument("--mnist-digit", type=int, help="use an MNIST image of this digit instead")
        p.add_argument("--mnist-index", type=int, default=0, help="which image of that digit")
        _add_data(p)
    if train:
        p.add_argument("--learning-rate", type=float, default=autoencoder.DEFAULT_LEARNING_RATE)
        p.add_argument("--init-range", type=float, default=1.0)
        p.add_argument("--max-epochs", type=int, default=100)
        p.add_argument("--train-noise-rate", type=float, default=0.0)


def _add_data(p):
    p.add_argument("--data-dir", help=f"MNIST IDX directory (default: ${io.DATA_DIR_ENV})")
    p.add_argument("--split", choices=("test", "train"), default="test")


def _add_eval(p):
    p.add_argument("--noise-rate", type=float, default=0.0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--tolerance", type=int, default=0, help="residual pixels still counted as restored")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="convqae", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="learn whole-image couplings")
    _add_common(p, train=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("denoise", help="noise + denoise trials with whole-image couplings")
    _add_common(p, train=True)
    _add_eval(p)
    p.add_argument("--weights", help="weights file from 'train' (trained on the input if omitted)")
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("conv-train", help="learn per-pixel 3x3 filter couplings")
    _add_common(p, train=True)
    p.set_defaults(func=cmd_conv_train)

    p = sub.add_parser("conv-denoise", help="noise + denoise trials with the 3x3 filter")
    _add_common(p, train=True)
    _add_eval(p)
    p.add_argument("--store", help="store file from 'conv-train' (trained on the input if omitted)")
    p.set_defaults(func=cmd_conv_denoise)

    p = sub.add_parser("noise", help="flip a fixed fraction of pixels")
    _add_common(p)
    p.add_argument("--rate", type=float, default=0.1)
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("dimred", help="2-D coupling features and PCA baseline on MNIST")
    _add_common(p, image=False)
    _add_data(p)
    p.add_argument("--digits", default="0,1")
    p.add_argument("--per-class", type=int, default=30)
    p.set_defaults(func=cmd_dimred)

    p = sub.add_parser("bench", help="time whole-image vs filter denoising")
    _add_common(p, image=False)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--normal-sizes", default=",".join(map(str, bench.NORMAL_SIZES)))
    p.add_argument("--conv-sides", default=",".join(map(str, bench.CONV_SIDES)))
    p.set_defaults(func=cmd_bench)
    return parser


def _subparser(parser, command):
    for action in parser._subparsers._group_actions:
        if command in action.choices:
            return action.choices[command]
    raise KeyError(command)


def apply_config(parser, argv) -> argparse.Namespace:
    """Parse ``argv``; values from ``--config`` become defaults so flags still win."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    sub = _subparser(parser, args.command)
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in io.read_manifest(args.config).items():
        dest = key.replace("-", "_")
        if dest in _META_KEYS:
            continue
        if dest not in actions or dest in ("help", "config"):
            parser.error(f"{args.config}: unknown key {key!r} for '{args.command}'")
        action = actions[dest]
        if isinstance(action, argparse._StoreTrueAction):
            value = raw.lower() in ("1", "true", "yes")
        else:
            try:
                value = action.type(raw) if action.type else raw
            except ValueError:
                parser.error(f"{args.config}: bad value {raw!r} for {key!r}")
        defaults[dest] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    args = apply_config(parser, argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"convqae {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
