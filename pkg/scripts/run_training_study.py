#!/usr/bin/env python3
"""Training study at desk scale: convergence, echoes, generalization, targets.

Trains post-processing matrices at n=3 across several seeds, reports
per-seed convergence and Loschmidt echoes against the inverse QFT, sweeps
every period for distribution distances, and reruns training against the
alternative target shapes (which plateau instead of converging).

Writes CSVs under --out-dir (default results/training_study).
"""

import argparse
import time
from pathlib import Path

import numpy as np

from qperiod import analysis, circuit, io, linalg, training


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--qubits", type=int, default=3)
    ap.add_argument("--dataset-size", type=int, default=6)
    ap.add_argument("--epochs", type=int, default=5000)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--out-dir", default="results/training_study")
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n = args.qubits
    loss_cfg = training.LossConfig()
    adam_cfg = training.AdamConfig()
    dataset = training.build_training_dataset(n, n, args.dataset_size, 0, loss_cfg)
    iqft = circuit.inverse_qft_matrix(n)

    conv_rows, echo_rows, dist_rows = [], [], []
    for seed in range(args.seeds):
        t0 = time.time()
        m3, hist = training.train(dataset, loss_cfg, adam_cfg, args.epochs, seed=seed)
        defect = linalg.unitarity_defect(m3)
        conv_rows.append((seed, f"{hist[-1]:.6e}", f"{defect:.6e}",
                          len(hist), f"{time.time() - t0:.1f}"))
        io.write_unitary(out / f"m3_seed{seed}.umat", m3, n)

        rep = analysis.echo_report(m3, iqft, n, subject_id=f"seed{seed}",
                                   reference_id="qft")
        echo_rows.append((rep.subject_id, rep.reference_id,
                          f"{rep.echo_on_zero:.8f}", f"{rep.echo_on_uniform:.8f}"))

        for r in range(1, 2 ** n + 1):
            f = circuit.generate_periodic_function(n, n, r, 1000 + r)
            p_d = circuit.reference_distribution(f)
            d = analysis.distribution_distance(
                training.achieved_distribution(m3, f), p_d)
            dist_rows.append((seed, r, f"{training.loss(m3, f, p_d, loss_cfg.k):.6e}",
                              f"{d:.6e}"))
        print(f"seed {seed}: final loss {hist[-1]:.3e}, defect {defect:.3e}")

    io.write_csv(out / "convergence.csv",
                 ["seed", "final_loss", "unitarity_defect", "epochs", "seconds"],
                 conv_rows)
    io.write_csv(out / "echoes.csv",
                 ["subject_path", "reference", "echo_zero", "echo_uniform"], echo_rows)
    io.write_csv(out / "period_sweep.csv",
                 ["seed", "period", "loss", "distance"], dist_rows)

    # alternative target shapes: these plateau well above the convergence level
    alt_rows = []
    for kind in ("single-peak", "step", "gaussian"):
        cfg = training.LossConfig(target_kind=kind)
        ds = training.build_training_dataset(n, n, args.dataset_size, 0, cfg)
        _, hist = training.train(ds, cfg, adam_cfg, args.epochs, seed=0)
        alt_rows.append((kind, f"{hist[-1]:.6e}", len(hist)))
        print(f"target {kind}: final loss {hist[-1]:.3e}")
    io.write_csv(out / "alternative_targets.csv",
                 ["target_kind", "final_loss", "epochs"], alt_rows)
    print(f"reports written under {out}")


if __name__ == "__main__":
    main()
