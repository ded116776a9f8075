"""Command-line entry point: ``igmdsr {fit,transform,evaluate,compare,gradcheck}``.

Exit codes: 0 success, 1 input error, 2 parameter error, 3 numeric error.
"""

import argparse
import logging
import sys

import numpy as np

from . import __version__
from .baseline import nmf_multiplicative
from .errors import IgmdsrError, InputError, NumericError, ParameterError
from .linalg import matmul
from .metrics import knn_accuracy, relative_reconstruction_error, trustworthiness
from .model import ArchitectureSpec, ModelParams, Variant, default_layer_schedule, forward, xavier_init
from .preprocess import apply_zscore, fold, reduced_dim, zscore_normalize
from .storage import SavedModel, atomic_write_text, format_matrix_csv, load_model, read_csv, save_model
from .training import TrainConfig, fit, gradient_check

logger = logging.getLogger("igmdsr")

GRADCHECK_TOL = 1e-5
# every KNN_TEST_STRIDE-th row (1-based) is held out for the kNN check
KNN_TEST_STRIDE = 5


def _data_args(p):
    p.add_argument("--input", required=True, help="numeric CSV, one sample per row")
    p.add_argument("--header", action="store_true", help="skip the first CSV row")
    p.add_argument("--labels-col", type=int, default=None, help="0-based column holding class labels")


def _arch_args(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--f", type=float, help="reduced dimension as a fraction of the raw width")
    g.add_argument("--r", type=int, help="reduced dimension")
    p.add_argument("--widths", type=str, default=None,
                   help="explicit comma-separated layer widths r0,...,rs (r0 = 2 x raw width)")
    p.add_argument("--s", type=int, default=3, help="hidden layer count for the default schedule")


def _train_args(p):
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--threshold", type=float, default=1e-6, help="stop when |cost delta| falls below this")
    p.add_argument("--max-epochs", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=None, help="minibatch size (default: full batch)")


def build_parser():
    parser = argparse.ArgumentParser(prog="igmdsr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="train a model and write embedding, model and cost log")
    _data_args(p)
    _arch_args(p)
    _train_args(p)
    p.add_argument("--variant", choices=["nmf", "rnmf"], default="nmf")
    p.add_argument("--model", required=True)
    p.add_argument("--out-embedding", required=True)
    p.add_argument("--out-log", required=True)

    p = sub.add_parser("transform", help="embed new data with a saved model")
    _data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out-embedding", required=True)

    p = sub.add_parser("evaluate", help="report trustworthiness, reconstruction error and kNN accuracy")
    _data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--k", type=int, default=5, help="trustworthiness neighbourhood size")
    p.add_argument("--knn-k", type=int, default=5, help="neighbours for the kNN accuracy check")

    p = sub.add_parser("compare", help="run both IG-MDSR variants and multiplicative NMF")
    _data_args(p)
    _arch_args(p)
    _train_args(p)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--iters", type=int, default=500, help="baseline NMF iterations")

    p = sub.add_parser("gradcheck", help="compare analytic and finite-difference gradients")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _resolve_spec(args, n_prime, variant):
    n = 2 * n_prime
    if args.widths:
        try:
            widths = [int(w) for w in args.widths.split(",")]
        except ValueError:
            raise ParameterError(f"--widths must be comma-separated integers, got {args.widths!r}") from None
        if widths[0] != n:
            raise ParameterError(f"--widths must start with the folded width {n}, got {widths[0]}")
        if args.r is not None and widths[-1] != args.r:
            raise ParameterError(f"--widths ends in {widths[-1]} but --r is {args.r}")
        return ArchitectureSpec(tuple(widths), variant)
    r = args.r if args.r is not None else reduced_dim(n_prime, args.f)
    return ArchitectureSpec(tuple(default_layer_schedule(n, r, args.s)), variant)


def _train_config(args):
    return TrainConfig(
        learning_rate=args.lr,
        stop_threshold=args.threshold,
        max_epochs=args.max_epochs,
        seed=args.seed,
        batch_mode="full" if args.batch_size is None else args.batch_size,
    )


def _embed(saved, U):
    if U.shape[1] != saved.raw_cols:
        raise InputError(f"data has {U.shape[1]} feature columns, model expects {saved.raw_cols}")
    X = fold(apply_zscore(U, saved.means, saved.stds)).X
    return X, forward(saved.params, X)


def cmd_fit(args):
    U, _ = read_csv(args.input, args.header, args.labels_col)
    Un, means, stds = zscore_normalize(U)
    data = fold(Un)
    spec = _resolve_spec(args, U.shape[1], Variant.parse(args.variant))
    params, log = fit(data, spec, _train_config(args))

    saved = SavedModel(params, spec.variant, args.seed, means, stds)
    save_model(args.model, saved)
    _, trace = _embed(saved, U)
    atomic_write_text(args.out_embedding, format_matrix_csv(trace.B))
    atomic_write_text(
        args.out_log,
        "epoch,cost\n" + "".join(f"{t},{c!r}\n" for t, c in enumerate(log.cost_per_epoch, start=1)),
    )
    print(f"widths={','.join(map(str, spec.widths))}")
    print(f"epochs={log.epochs_run}")
    print(f"stop_reason={log.stop_reason}")
    print(f"final_cost={log.final_cost!r}")
    return 0


def cmd_transform(args):
    saved = load_model(args.model)
    U, _ = read_csv(args.input, args.header, args.labels_col)
    _, trace = _embed(saved, U)
    atomic_write_text(args.out_embedding, format_matrix_csv(trace.B))
    return 0


def evaluation_report(saved, U, labels, k, knn_k):
    """Key/value metrics for ``U`` under a saved model, in print order."""
    X, trace = _embed(saved, U)
    reference = apply_zscore(U, saved.means, saved.stds)
    report = {
        "trustworthiness": trustworthiness(reference, trace.B, k),
        "reconstruction_error": relative_reconstruction_error(X, trace.Xhat),
    }
    if labels is not None:
        test = np.arange(U.shape[0]) % KNN_TEST_STRIDE == KNN_TEST_STRIDE - 1
        if not test.any():
            raise ParameterError(f"kNN check needs at least {KNN_TEST_STRIDE} samples")
        labels = np.asarray(labels, dtype=object)
        report["knn_accuracy"] = knn_accuracy(trace.B[~test], list(labels[~test]), trace.B[test], list(labels[test]), knn_k)
    return report


def cmd_evaluate(args):
    saved = load_model(args.model)
    U, labels = read_csv(args.input, args.header, args.labels_col)
    for key, value in evaluation_report(saved, U, labels, args.k, args.knn_k).items():
        print(f"{key}={value!r}")
    return 0


def comparison_table(U, args):
    """Rows ``(method, trustworthiness, reconstruction_error)`` in fixed order."""
    Un, _, _ = zscore_normalize(U)
    X = fold(Un).X
    cfg = _train_config(args)
    rows = []
    for variant in (Variant.NMF, Variant.RNMF):
        spec = _resolve_spec(args, U.shape[1], variant)
        params, _ = fit(X, spec, cfg)
        trace = forward(params, X)
        rows.append((f"ig-mdsr-{variant.value}", trustworthiness(Un, trace.B, args.k),
                     relative_reconstruction_error(X, trace.Xhat)))
    r = spec.r
    base = nmf_multiplicative(X, r, args.iters, args.seed)
    rows.append(("nmf-baseline", trustworthiness(Un, base.B, args.k),
                 relative_reconstruction_error(X, matmul(base.B, base.W))))
    return rows


def cmd_compare(args):
    U, _ = read_csv(args.input, args.header, args.labels_col)
    print(f"{'method':<14} {'trustworthiness':>22} {'reconstruction_error':>22}")
    for method, tw, err in comparison_table(U, args):
        print(f"{method:<14} {tw!r:>22} {err!r:>22}")
    return 0


def gradcheck_problem(seed, variant):
    """Random folded 8x6 input and a widths [6, 5, 4, 3] network.

    For RNMF, a seeded half of ``W`` is negated so the ReLU mask is exercised.
    """
    rng = np.random.default_rng(seed)
    X = fold(rng.normal(size=(8, 3))).X
    params = xavier_init(ArchitectureSpec((6, 5, 4, 3), variant), seed)
    if variant is Variant.RNMF:
        signs = np.where(rng.random(params.W.shape) < 0.5, -1.0, 1.0)
        params = ModelParams(params.V, params.Vtilde, params.W * signs)
    return X, params


def cmd_gradcheck(args):
    worst = 0.0
    for variant in Variant:
        X, params = gradcheck_problem(args.seed, variant)
        worst = max(worst, gradient_check(params, X))
    print(f"max_rel_err={worst!r}")
    return 0 if worst <= GRADCHECK_TOL else NumericError.exit_code


COMMANDS = {
    "fit": cmd_fit,
    "transform": cmd_transform,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "gradcheck": cmd_gradcheck,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except IgmdsrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
