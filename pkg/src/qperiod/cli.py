"""Command-line harness: training runs, analysis reports, corpus, classifier.

Exit codes: 0 success, 1 I/O or data error, 2 non-convergence,
3 period-estimation failure, 64 usage error.
"""

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, circuit, classifier, io, linalg, training

EXIT_OK = 0
EXIT_DATA = 1
EXIT_NONCONVERGENCE = 2
EXIT_ESTIMATION = 3
EXIT_USAGE = 64

OUT_DIR_ENV = "QPERIOD_OUT_DIR"

# shuffle stream offset for classifier minibatches, fixed for reproducibility
SHUFFLE_SEED_OFFSET = 10_000
DEFAULT_SPLIT_SEED = 7


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here reserves 2 for
    non-convergence, so usage problems remap to 64."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _qubits(value: str) -> int:
    n = int(value)
    if not 1 <= n <= 10:
        raise argparse.ArgumentTypeError(f"qubits must be in [1, 10], got {n}")
    return n


def _default_out_dir() -> str:
    return os.environ.get(OUT_DIR_ENV, ".")


def _add_out_dir(sub):
    sub.add_argument("--out-dir", default=_default_out_dir(),
                     help=f"output directory (default ${OUT_DIR_ENV} or '.')")


def build_parser() -> _Parser:
    parser = _Parser(prog="qperiod",
                     description="Learn and analyze post-processing unitaries "
                                 "for quantum period finding.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("train", help="train a post-processing matrix")
    p.add_argument("--qubits", type=_qubits, required=True)
    p.add_argument("--dataset-size", type=int, default=6)
    p.add_argument("--epochs", type=int, default=5000)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--target", choices=["qft", "single-peak", "step", "gaussian"],
                   default="qft")
    p.add_argument("--gaussian-sigma", type=float, default=1.0)
    p.add_argument("--ancilla", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--loss-threshold", type=float, default=1e-6)
    _add_out_dir(p)

    p = subs.add_parser("eval", help="per-period loss/distance of a saved matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--qubits", type=_qubits)
    p.add_argument("--periods", required=True,
                   help="comma-separated list, e.g. 1,2,5")
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV path (default stdout)")

    p = subs.add_parser("echo", help="Loschmidt echoes against a reference")
    p.add_argument("--matrix", required=True)
    p.add_argument("--reference", default="qft", help="'qft' or a matrix path")
    p.add_argument("--out", help="CSV path (default stdout)")

    p = subs.add_parser("spectrum", help="20-bin eigenphase histogram")
    p.add_argument("--matrix", help="matrix file to analyze")
    p.add_argument("--haar-samples", type=int,
                   help="aggregate this many Haar unitaries instead")
    p.add_argument("--qubits", type=_qubits, help="required with --haar-samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV path (default stdout)")

    p = subs.add_parser("period", help="estimate a period through a saved matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--r", type=int, required=True, help="true period of the test function")
    p.add_argument("--seed", type=int, default=0)

    p = subs.add_parser("corpus", help="build a labeled corpus of unitaries")
    p.add_argument("--qubits", type=_qubits, required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dataset-size", type=int, default=8)
    p.add_argument("--epochs", type=int, default=4000)
    p.add_argument("--period-policy", choices=["random", "cycle"], default="random")
    _add_out_dir(p)

    p = subs.add_parser("classify-train", help="train the learned-vs-random classifier")
    p.add_argument("--corpus", required=True, help="corpus manifest path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split-seed", type=int, default=DEFAULT_SPLIT_SEED)
    p.add_argument("--max-epochs", type=int, default=400)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--alpha", type=float, default=0.001)
    _add_out_dir(p)

    p = subs.add_parser("classify-eval", help="evaluate a trained classifier")
    p.add_argument("--net", required=True, help="MLPC file path")
    p.add_argument("--corpus", required=True, help="corpus manifest path")
    p.add_argument("--split-seed", type=int, default=DEFAULT_SPLIT_SEED)
    p.add_argument("--split", choices=["train", "validation", "test"], default="test")
    p.add_argument("--score-qft", action="store_true",
                   help="also score the inverse QFT matrix")
    p.add_argument("--out", help="CSV path for per-example scores (default stdout)")
    return parser


def _csv_out(args, header, rows):
    if getattr(args, "out", None):
        io.write_csv(args.out, header, rows)
    else:
        io.write_csv(sys.stdout, header, rows)


def cmd_train(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    kind = "qft-reference" if args.target == "qft" else args.target
    loss_cfg = training.LossConfig(k=args.k, target_kind=kind,
                                   gaussian_sigma=args.gaussian_sigma)
    adam_cfg = training.AdamConfig(alpha=args.lr)
    dataset = training.build_training_dataset(args.qubits, args.qubits,
                                              args.dataset_size, args.seed, loss_cfg)
    diverged = False
    try:
        m3, history = training.train(dataset, loss_cfg, adam_cfg, args.epochs,
                                     seed=args.seed, ancilla=args.ancilla)
    except training.DivergenceError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        dim = 2 ** (args.qubits + args.ancilla)
        m3 = exc.w.view(np.complex128).reshape(dim, dim).copy()
        history = exc.history if exc.history else [float("inf")]
        diverged = True

    io.write_unitary(out_dir / "m3.umat", m3, args.qubits + args.ancilla)
    io.write_csv(out_dir / "loss_history.csv", ["epoch", "mean_loss"],
                 list(enumerate(history)))
    manifest = {
        "n": args.qubits, "m": args.qubits, "ancilla": args.ancilla,
        "k": args.k, "alpha": args.lr,
        "beta1": adam_cfg.beta1, "beta2": adam_cfg.beta2, "epsilon": adam_cfg.epsilon,
        "epochs": args.epochs, "seed": args.seed,
        "dataset": [f.to_dict() for f in dataset.functions],
        "loss_history": history,
    }
    io.write_run_manifest(out_dir / "run_manifest.json", manifest)
    final = history[-1]
    print(f"final_loss={final:.6e} unitarity_defect={linalg.unitarity_defect(m3):.6e} "
          f"epochs={len(history)} out={out_dir / 'm3.umat'}")
    if diverged or final > args.loss_threshold:
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def cmd_eval(args) -> int:
    m3, n = io.read_unitary(args.matrix)
    if args.qubits is not None and args.qubits > n:
        print(f"matrix is on {n} qubits, cannot evaluate at n={args.qubits}",
              file=sys.stderr)
        return EXIT_DATA
    n_x = args.qubits if args.qubits is not None else n
    try:
        periods = [int(tok) for tok in args.periods.split(",") if tok]
    except ValueError:
        print(f"bad --periods list: {args.periods!r}", file=sys.stderr)
        return EXIT_USAGE
    if not periods:
        print("empty --periods list", file=sys.stderr)
        return EXIT_USAGE
    seeds = np.random.SeedSequence(args.seed).spawn(len(periods))
    rows = []
    for r, s in zip(periods, seeds):
        f = circuit.generate_periodic_function(n_x, n_x, r, s)
        p_d = circuit.reference_distribution(f)
        value = training.loss(m3, f, p_d, args.k)
        p_a = training.achieved_distribution(m3, f)
        dist = analysis.distribution_distance(p_a, p_d)
        rows.append((r, f"{value:.12e}", f"{dist:.12e}"))
    _csv_out(args, ["period", "loss", "distance"], rows)
    return EXIT_OK


def cmd_echo(args) -> int:
    subject, n = io.read_unitary(args.matrix)
    if args.reference == "qft":
        reference = circuit.inverse_qft_matrix(n)
        ref_id = "qft"
    else:
        reference, ref_n = io.read_unitary(args.reference)
        if ref_n != n:
            print(f"reference is on {ref_n} qubits, subject on {n}", file=sys.stderr)
            return EXIT_DATA
        ref_id = str(args.reference)
    report = analysis.echo_report(subject, reference, n,
                                  subject_id=str(args.matrix), reference_id=ref_id)
    _csv_out(args, ["subject_path", "reference", "echo_zero", "echo_uniform"],
             [(report.subject_id, report.reference_id,
               f"{report.echo_on_zero:.12e}", f"{report.echo_on_uniform:.12e}")])
    return EXIT_OK


def cmd_spectrum(args) -> int:
    if (args.matrix is None) == (args.haar_samples is None):
        print("provide exactly one of --matrix or --haar-samples", file=sys.stderr)
        return EXIT_USAGE
    if args.matrix is not None:
        m3, _ = io.read_unitary(args.matrix)
        matrices = [m3]
    else:
        if args.qubits is None:
            print("--haar-samples requires --qubits", file=sys.stderr)
            return EXIT_USAGE
        if args.haar_samples < 1:
            print("--haar-samples must be >= 1", file=sys.stderr)
            return EXIT_USAGE
        seeds = np.random.SeedSequence(args.seed).spawn(args.haar_samples)
        matrices = [linalg.haar_random_unitary(args.qubits, s) for s in seeds]
    total = np.zeros(analysis.N_PHASE_BINS, dtype=np.int64)
    edges = None
    for m3 in matrices:
        hist = analysis.eigenphase_histogram(m3)
        total += hist.counts
        edges = hist.bin_edges
    rows = [(f"{lo:.12f}", f"{hi:.12f}", int(c))
            for lo, hi, c in zip(edges[:-1], edges[1:], total)]
    _csv_out(args, ["bin_lo", "bin_hi", "count"], rows)
    return EXIT_OK


def cmd_period(args) -> int:
    m3, n = io.read_unitary(args.matrix)
    f = circuit.generate_periodic_function(n, n, args.r, args.seed)
    state = circuit.prepare_superposition(n, n)
    state = circuit.apply_oracle(state, f)
    state = circuit.apply_post_unitary(state, m3)
    p = circuit.marginal_distribution(state)
    estimate = circuit.estimate_period(p, n)
    print(estimate)
    return EXIT_OK


def cmd_corpus(args) -> int:
    if args.per_class < 1:
        print("--per-class must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    cfg = classifier.CorpusConfig(dataset_size=args.dataset_size, epochs=args.epochs,
                                  period_policy=args.period_policy)
    corpus = classifier.build_corpus(args.qubits, args.per_class, cfg, seed=args.seed)
    manifest_path = io.write_corpus(args.out_dir, corpus, args.qubits)
    print(f"corpus_manifest={manifest_path} entries={len(corpus)}")
    return EXIT_OK


def cmd_classify_train(args) -> int:
    corpus, n = io.read_corpus(args.corpus)
    splits = classifier.split_corpus(corpus, args.split_seed)
    config = classifier.MLPConfig(input_dim=2 ** (2 * n + 1), seed=args.seed)
    net = classifier.initialize_mlp(config)
    adam_cfg = training.AdamConfig(alpha=args.alpha)
    net, history = classifier.train_classifier(
        net, splits, adam_cfg, max_epochs=args.max_epochs, batch_size=args.batch,
        patience=args.patience, shuffle_seed=args.seed + SHUFFLE_SEED_OFFSET)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    io.write_mlp(out_dir / "classifier.mlpc", net)
    io.write_csv(out_dir / "classifier_metrics.csv",
                 ["epoch", "train_loss", "train_accuracy", "val_loss", "val_accuracy"],
                 [(row["epoch"], f"{row['train_loss']:.8e}", f"{row['train_accuracy']:.4f}",
                   f"{row['val_loss']:.8e}", f"{row['val_accuracy']:.4f}")
                  for row in history])
    best = min(row["val_loss"] for row in history)
    print(f"net={out_dir / 'classifier.mlpc'} epochs={len(history)} best_val_loss={best:.6e}")
    return EXIT_OK


def cmd_classify_eval(args) -> int:
    net = io.read_mlp(args.net)
    corpus, n = io.read_corpus(args.corpus)
    if net.input_dim != 2 ** (2 * n + 1):
        print(f"net input dim {net.input_dim} does not match corpus n={n}",
              file=sys.stderr)
        return EXIT_DATA
    splits = classifier.split_corpus(corpus, args.split_seed)
    examples = getattr(splits, args.split)
    accuracy, scores = classifier.evaluate(net, examples)
    rows = [(i, label, f"{score:.6f}")
            for i, ((_, label), score) in enumerate(zip(examples, scores))]
    _csv_out(args, ["index", "label", "score"], rows)
    print(f"accuracy={accuracy:.4f} split={args.split} examples={len(examples)}")
    if args.score_qft:
        qft_score = classifier.forward(
            net, classifier.unitary_features(circuit.inverse_qft_matrix(n)))
        print(f"qft_score={qft_score:.6f}")
    return EXIT_OK


_COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "echo": cmd_echo,
    "spectrum": cmd_spectrum,
    "period": cmd_period,
    "corpus": cmd_corpus,
    "classify-train": cmd_classify_train,
    "classify-eval": cmd_classify_eval,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = _COMMANDS[args.command]
    try:
        return handler(args)
    except circuit.EstimationError as exc:
        print(f"period estimation failed: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except training.DivergenceError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (io.DataFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
