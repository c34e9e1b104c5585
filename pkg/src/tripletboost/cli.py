"""Command line interface: train metrics, run experiments, project datasets.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable or
inconsistent input), 3 numerical failure during training. Results tables go
to stdout and are byte-stable for a fixed command line and seed; timing and
progress notes go to stderr so they never perturb the tables.
"""

import argparse
import sys

import numpy as np

from .boost import TrainConfig, TrainingError, train
from .constraints import Dataset, factors_from_dataset, generate_triplets
from .datasets import make_circles, make_gaussian_classes
from .evaluate import ExperimentSpec, classification_error, retrieval_precision, v_sweep
from .linalg import EigenSolverError
from .metric import MetricConsistencyError, ModelFormatError, load, save, transform_matrix

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

_SYNTHETIC = {
    "circles": lambda n, seed: make_circles(n_points=n, seed=seed),
    "gaussians": lambda n, seed: make_gaussian_classes(n_points=n, seed=seed),
}


class CliError(Exception):
    """Error with a CLI exit code; the message goes to stderr."""

    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage problems as exit code 1."""

    def error(self, message):
        raise CliError(EXIT_USAGE, f"{self.prog}: {message}")


def _fmt(x):
    """Shortest exact decimal form of a float; byte-stable across runs."""
    return repr(float(x))


def _add_dataset_flags(p):
    p.add_argument("--input", metavar="PATH", help="dataset file to read")
    p.add_argument(
        "--delimiter",
        default=",",
        help="column separator; the word 'ws' means any whitespace",
    )
    p.add_argument(
        "--label-col",
        type=int,
        default=-1,
        help="column holding the class label (negative counts from the end)",
    )
    p.add_argument(
        "--header",
        action="store_true",
        help="skip the first line of the dataset file",
    )


def _add_synthetic_flags(p):
    p.add_argument(
        "--synthetic",
        choices=sorted(_SYNTHETIC),
        help="generate a bundled synthetic dataset instead of reading a file",
    )
    p.add_argument(
        "--n-points",
        type=int,
        default=1000,
        help="number of points for --synthetic",
    )


def _add_train_cfg_flags(p):
    p.add_argument("--v", default="1e-7", help="regularization strength")
    p.add_argument("--max-iters", type=int, default=500, help="iteration cap")
    p.add_argument(
        "--bisect-tol", type=float, default=1e-9, help="line-search bracket width"
    )
    p.add_argument(
        "--eig-tol", type=float, default=1e-8, help="eigenpair residual tolerance"
    )
    p.add_argument(
        "--w-cap", type=float, default=2.0 ** 60, help="cap on one coordinate step"
    )
    p.add_argument(
        "--triplet-k", type=int, default=3, help="neighbors per side when building triplets"
    )
    p.add_argument("--seed", type=int, default=0, help="base random seed")


def build_parser():
    parser = _Parser(
        prog="tripletboost",
        description="Learn and evaluate Mahalanobis metrics from triplet constraints.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    p_train = sub.add_parser(
        "train",
        help="learn a metric and write a model file plus a training log",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    _add_dataset_flags(p_train)
    _add_synthetic_flags(p_train)
    _add_train_cfg_flags(p_train)
    p_train.add_argument(
        "--model-out", metavar="PATH", required=True, help="where to write the model"
    )
    p_train.add_argument(
        "--log-out",
        metavar="PATH",
        help="per-iteration log destination (default: MODEL_OUT.log)",
    )
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser(
        "eval",
        help="run a repeated-split experiment and print a results table",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    _add_dataset_flags(p_eval)
    _add_synthetic_flags(p_eval)
    _add_train_cfg_flags(p_eval)
    p_eval.add_argument(
        "--mode", choices=["knn", "retrieval", "vsweep"], default="knn",
        help="experiment type",
    )
    p_eval.add_argument(
        "--metric",
        default="boosted",
        help="'boosted', 'euclidean', or 'model:PATH' for a fixed saved model",
    )
    p_eval.add_argument("--n-train", type=int, help="training points per run")
    p_eval.add_argument("--n-test", type=int, help="test points per run")
    p_eval.add_argument(
        "--train-frac",
        type=float,
        help="train fraction when sizes are not given (default 0.7)",
    )
    p_eval.add_argument("--runs", type=int, default=10, help="number of repeated splits")
    p_eval.add_argument("--knn-k", type=int, default=3, help="neighbors for kNN voting")
    p_eval.add_argument(
        "--pca-dim", type=int, help="reduce to this many PCA dimensions first"
    )
    p_eval.add_argument(
        "--target-class", type=int, help="query class for --mode retrieval"
    )
    p_eval.add_argument(
        "--cutoffs", default="5,10,15,20", help="comma-separated retrieval cutoffs"
    )
    p_eval.add_argument("--out", metavar="PATH", help="also write the table to a file")
    p_eval.set_defaults(func=cmd_eval)

    p_tr = sub.add_parser(
        "transform",
        help="project a dataset through a trained model's linear map",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    _add_dataset_flags(p_tr)
    p_tr.add_argument("--model", metavar="PATH", required=True, help="model file")
    p_tr.add_argument(
        "--dim", type=int, required=True, help="output dimensionality (<= model dim)"
    )
    p_tr.add_argument("--out", metavar="PATH", required=True, help="output dataset file")
    p_tr.set_defaults(func=cmd_transform)

    return parser


def read_dataset(path, delimiter=",", label_col=-1, header=False):
    """Parse a delimiter-separated dataset file into features and labels.

    Labels may be integers or arbitrary tokens; non-integer tokens are
    mapped to 0..C-1 in sorted order. Returns (Dataset, mapping) where
    mapping is None when labels were already integers.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise CliError(EXIT_DATA, f"cannot read {path}: {exc}") from exc
    rows = []
    raw_labels = []
    width = None
    for ln, line in enumerate(lines, start=1):
        if header and ln == 1:
            continue
        if not line.strip():
            continue
        parts = line.split() if delimiter == "ws" else line.split(delimiter)
        parts = [p.strip() for p in parts]
        if len(parts) < 2:
            raise CliError(
                EXIT_DATA, f"{path}:{ln}: need at least 2 columns, got {len(parts)}"
            )
        if width is None:
            width = len(parts)
        elif len(parts) != width:
            raise CliError(
                EXIT_DATA,
                f"{path}:{ln}: expected {width} columns, got {len(parts)}",
            )
        col = label_col if label_col >= 0 else len(parts) + label_col
        if not 0 <= col < len(parts):
            raise CliError(
                EXIT_DATA, f"{path}:{ln}: label column {label_col} out of range"
            )
        raw_labels.append(parts[col])
        feats = parts[:col] + parts[col + 1 :]
        try:
            rows.append([float(tok) for tok in feats])
        except ValueError as exc:
            raise CliError(
                EXIT_DATA, f"{path}:{ln}: cannot parse feature value ({exc})"
            ) from exc
    if not rows:
        raise CliError(EXIT_DATA, f"{path}: no data rows found")
    mapping = None
    try:
        labels = [int(tok) for tok in raw_labels]
    except ValueError:
        mapping = {tok: idx for idx, tok in enumerate(sorted(set(raw_labels)))}
        labels = [mapping[tok] for tok in raw_labels]
    try:
        data = Dataset(features=np.array(rows), labels=np.array(labels))
    except ValueError as exc:
        raise CliError(EXIT_DATA, f"{path}: {exc}") from exc
    return data, mapping


def write_dataset(path, features, labels, delimiter=","):
    """Write rows of features plus a trailing integer label column."""
    sep = "\t" if delimiter == "ws" else delimiter
    with open(path, "w", encoding="utf-8") as fh:
        for row, lbl in zip(features, labels):
            fh.write(sep.join(_fmt(x) for x in row) + sep + str(int(lbl)) + "\n")


def _resolve_dataset(args):
    if args.synthetic is not None and args.input is not None:
        raise CliError(EXIT_USAGE, "give either --input or --synthetic, not both")
    if args.synthetic is not None:
        data = _SYNTHETIC[args.synthetic](args.n_points, args.seed)
        return data, None
    if args.input is None:
        raise CliError(EXIT_USAGE, "one of --input or --synthetic is required")
    return read_dataset(args.input, args.delimiter, args.label_col, args.header)


def _parse_v_list(text):
    try:
        values = [float(tok) for tok in str(text).split(",") if tok.strip()]
    except ValueError as exc:
        raise CliError(EXIT_USAGE, f"cannot parse --v value ({exc})") from exc
    if not values or any(v <= 0 for v in values):
        raise CliError(EXIT_USAGE, "--v needs one or more positive numbers")
    return values


def _train_config(args, v):
    try:
        return TrainConfig(
            v=v,
            max_iters=args.max_iters,
            bisect_tol=args.bisect_tol,
            eig_tol=args.eig_tol,
            w_cap=args.w_cap,
        )
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc


def cmd_train(args):
    """Train on one dataset and write the model plus a per-iteration log."""
    v_values = _parse_v_list(args.v)
    if len(v_values) != 1:
        raise CliError(EXIT_USAGE, "train takes exactly one --v value")
    cfg = _train_config(args, v_values[0])
    data, mapping = _resolve_dataset(args)
    if mapping:
        print(f"# label mapping: {mapping}", file=sys.stderr)
    try:
        triplets = generate_triplets(data, args.triplet_k, seed=args.seed)
        factors = factors_from_dataset(data, triplets)
    except ValueError as exc:
        raise CliError(EXIT_DATA, str(exc)) from exc
    try:
        model, state = train(factors, cfg)
    except TrainingError as exc:
        raise CliError(EXIT_NUMERIC, str(exc)) from exc
    model.meta["source"] = args.input if args.input else f"synthetic:{args.synthetic}"
    model.meta["triplet_k"] = args.triplet_k
    model.meta["seed"] = args.seed
    save(model, args.model_out)
    log_path = args.log_out if args.log_out else args.model_out + ".log"
    with open(log_path, "w", encoding="utf-8") as fh:
        for rec in state.history:
            fh.write(
                f"iter={rec.iteration} lambda_max={_fmt(rec.lambda_max)} "
                f"w={_fmt(rec.w)} objective={_fmt(rec.objective)} "
                f"elapsed_s={rec.elapsed:.6f} capped={int(rec.step_capped)}\n"
            )
        fh.write(
            f"final iterations={len(state.history)} "
            f"converged={int(state.converged)} "
            f"lambda_max={_fmt(state.final_lambda_max)} "
            f"trace={_fmt(np.trace(model.X))}\n"
        )
    print(
        f"# trained {len(state.history)} iteration(s), "
        f"converged={int(state.converged)}, "
        f"model -> {args.model_out}, log -> {log_path}",
        file=sys.stderr,
    )
    return EXIT_OK


def _experiment_spec(args, data, cfg):
    common = dict(
        n_runs=args.runs,
        knn_k=args.knn_k,
        triplet_k=args.triplet_k,
        pca_dim=args.pca_dim,
        train_cfg=cfg,
        seed=args.seed,
    )
    try:
        if args.n_train is not None or args.n_test is not None:
            if args.n_train is None or args.n_test is None:
                raise CliError(
                    EXIT_USAGE, "--n-train and --n-test must be given together"
                )
            if args.train_frac is not None:
                raise CliError(
                    EXIT_USAGE, "--train-frac conflicts with explicit split sizes"
                )
            return ExperimentSpec(
                data.features, data.labels, args.n_train, args.n_test, **common
            )
        frac = 0.7 if args.train_frac is None else args.train_frac
        return ExperimentSpec.from_fraction(data.features, data.labels, frac, **common)
    except ValueError as exc:
        raise CliError(EXIT_DATA, str(exc)) from exc


def _resolve_method(args):
    text = args.metric
    if text in ("boosted", "euclidean"):
        return text
    if text.startswith("model:"):
        path = text[len("model:") :]
        try:
            return load(path)
        except ModelFormatError as exc:
            raise CliError(EXIT_DATA, str(exc)) from exc
        except OSError as exc:
            raise CliError(EXIT_DATA, f"cannot read {path}: {exc}") from exc
    raise CliError(
        EXIT_USAGE, f"--metric must be 'boosted', 'euclidean', or 'model:PATH', got {text!r}"
    )


def _emit(table_text, out_path):
    sys.stdout.write(table_text)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(table_text)


def _timing_note(tag, seconds):
    total = float(np.sum(seconds))
    per_run = " ".join(f"{s:.3f}" for s in seconds)
    print(f"# {tag}: per-run seconds [{per_run}], total {total:.3f}", file=sys.stderr)


def cmd_eval(args):
    """Run the requested experiment and print its results table."""
    v_values = _parse_v_list(args.v)
    data, mapping = _resolve_dataset(args)
    if mapping:
        print(f"# label mapping: {mapping}", file=sys.stderr)
    if args.mode != "vsweep" and len(v_values) != 1:
        raise CliError(EXIT_USAGE, f"--mode {args.mode} takes exactly one --v value")
    cfg = _train_config(args, v_values[0])
    spec = _experiment_spec(args, data, cfg)
    method = _resolve_method(args)
    try:
        if args.mode == "knn":
            result = classification_error(spec, method)
            lines = ["run\terror_percent"]
            for r, err in enumerate(result.errors):
                lines.append(f"{r}\t{_fmt(err)}")
            lines.append(f"mean\t{_fmt(result.mean)}")
            lines.append(f"std\t{_fmt(result.std)}")
            _emit("\n".join(lines) + "\n", args.out)
            _timing_note("knn", result.seconds)
        elif args.mode == "retrieval":
            if args.target_class is None:
                raise CliError(EXIT_USAGE, "--mode retrieval requires --target-class")
            try:
                cutoffs = [int(tok) for tok in args.cutoffs.split(",") if tok.strip()]
            except ValueError as exc:
                raise CliError(EXIT_USAGE, f"cannot parse --cutoffs ({exc})") from exc
            result = retrieval_precision(spec, args.target_class, cutoffs, method)
            head = "\t".join(f"precision_at_{c}" for c in result.cutoffs)
            lines = ["run\t" + head]
            for r in range(result.per_run.shape[0]):
                vals = "\t".join(_fmt(x) for x in result.per_run[r])
                lines.append(f"{r}\t{vals}")
            lines.append("mean\t" + "\t".join(_fmt(x) for x in result.mean))
            lines.append("std\t" + "\t".join(_fmt(x) for x in result.std))
            _emit("\n".join(lines) + "\n", args.out)
            _timing_note("retrieval", result.seconds)
        else:
            if not isinstance(method, str) or method != "boosted":
                raise CliError(EXIT_USAGE, "--mode vsweep always trains; use --metric boosted")
            sweep = v_sweep(spec, v_values)
            lines = ["v\t" + "\t".join(_fmt(v) for v in sweep.v_values)]
            lines.append(
                "mean\t" + "\t".join(_fmt(res.mean) for res in sweep.boosted)
            )
            lines.append("std\t" + "\t".join(_fmt(res.std) for res in sweep.boosted))
            lines.append("")
            lines.append("baseline\tmean\tstd")
            lines.append(
                f"euclidean\t{_fmt(sweep.euclidean.mean)}\t{_fmt(sweep.euclidean.std)}"
            )
            _emit("\n".join(lines) + "\n", args.out)
            for v, res in zip(sweep.v_values, sweep.boosted):
                _timing_note(f"vsweep v={_fmt(v)}", res.seconds)
    except CliError:
        raise
    except (TrainingError, EigenSolverError, MetricConsistencyError) as exc:
        raise CliError(EXIT_NUMERIC, str(exc)) from exc
    except (ValueError, RuntimeError) as exc:
        # run failures wrap the original exception; look through the chain so
        # numerical breakdowns inside a run still exit with the numeric code
        cause = exc.__cause__
        while cause is not None:
            if isinstance(cause, (TrainingError, EigenSolverError, MetricConsistencyError)):
                raise CliError(EXIT_NUMERIC, str(exc)) from exc
            cause = cause.__cause__
        raise CliError(EXIT_DATA, str(exc)) from exc
    return EXIT_OK


def cmd_transform(args):
    """Project a dataset through the model's rank-d map and write it out."""
    if args.input is None:
        raise CliError(EXIT_USAGE, "transform requires --input")
    try:
        model = load(args.model)
    except ModelFormatError as exc:
        raise CliError(EXIT_DATA, str(exc)) from exc
    except OSError as exc:
        raise CliError(EXIT_DATA, f"cannot read {args.model}: {exc}") from exc
    data, _ = read_dataset(args.input, args.delimiter, args.label_col, args.header)
    if data.dim != model.dim:
        raise CliError(
            EXIT_DATA,
            f"dataset dimension {data.dim} does not match model dimension {model.dim}",
        )
    try:
        lmap = transform_matrix(model, args.dim)
    except ValueError as exc:
        raise CliError(EXIT_DATA, str(exc)) from exc
    projected = data.features @ lmap
    write_dataset(args.out, projected, data.labels, args.delimiter)
    print(
        f"# wrote {projected.shape[0]} x {projected.shape[1]} projection -> {args.out}",
        file=sys.stderr,
    )
    return EXIT_OK


def main(argv=None):
    """Parse arguments and dispatch; returns the process exit code."""
    parser = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help exits 0 inside argparse
            return int(exc.code or 0)
        if getattr(args, "subcommand", None) is None:
            parser.print_usage(sys.stderr)
            print("tripletboost: a subcommand is required", file=sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except CliError as exc:
        print(f"tripletboost: error: {exc}", file=sys.stderr)
        return exc.code


def entry():
    """Console-script entry point."""
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
