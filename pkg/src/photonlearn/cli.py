"""Command-line entry point.

Subcommands cover the full workflow: gen-unitary, gen-dataset, train,
estimate, batch-estimate, schmidt-stats, sample, perm-check, inspect.  Every
subcommand is deterministic given its flags.  Exit codes: 0 success, 2
configuration error, 3 numeric failure, 4 I/O error.
"""

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import io as plio
from .autodiff import NonFiniteError
from .circuit import coincidence, evolve, haar_unitary, sample_counts
from .datasets import make_dataset
from .entanglement import rank_statistics
from .estimation import ExactCircuitModel, PhaseEstimator, batch_estimate
from .losses import sampled_kl_floor
from .permanent import two_photon_crosscheck
from .states import initial_state
from .surrogates import ARCHITECTURES, TrainingDivergence

CONFIG_KEYS = {
    "epochs": ("qcnn", "qctn", "vanilla"),
    "batch_size": ("qcnn", "qctn", "vanilla"),
    "learning_rate": ("qcnn", "qctn", "vanilla"),
    "seed": ("qcnn", "qctn", "vanilla"),
    "kl_floor": ("qcnn", "qctn", "vanilla"),
    "split": ("qcnn", "qctn", "vanilla"),
    "hidden_dim": ("qcnn",),
    "bond_dim": ("qctn",),
    "beta": ("qcnn", "qctn"),
}


class ConfigError(ValueError):
    """Bad configuration key or value."""


def _parse_theta(text):
    try:
        return np.array([float(x) for x in text.split(",")], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"cannot parse phase list {text!r}") from exc


def _parse_dims(text):
    try:
        return [int(x) for x in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"cannot parse dimension list {text!r}") from exc


def _load_config(path, arch):
    if path is None:
        return {}
    with open(path) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    for key in cfg:
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key: {key}")
        if arch not in CONFIG_KEYS[key]:
            raise ConfigError(f"config key not applicable to {arch}: {key}")
    return cfg


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def cmd_gen_unitary(args):
    u = haar_unitary(args.d, args.seed)
    plio.save_unitary(args.out, u, seed=args.seed)
    print(f"wrote {args.out}: d={args.d} seed={args.seed}")
    return 0


def cmd_gen_dataset(args):
    ds = make_dataset(
        n_modes=args.d, n_phases=args.n_phases, n_records=args.n_label,
        state=args.state, label_mode=args.label_mode, n_shots=args.p,
        unitary_seed=args.unitary_seed, theta_seed=args.seed,
    )
    plio.save_dataset(args.out, ds)
    unitary_path = Path(args.out).with_suffix(".qcu")
    plio.save_unitary(unitary_path, ds.unitary(), seed=ds.unitary_seed)
    print(f"wrote {args.out}: {len(ds)} records, d={ds.n_modes}, state={ds.state}")
    print(f"wrote {unitary_path}")
    return 0


def cmd_train(args):
    ds = plio.load_dataset(args.dataset)
    cfg = _load_config(args.config, args.arch)
    split = float(cfg.get("split", args.split))
    seed = int(cfg.get("seed", args.seed))
    kl_floor = cfg.get("kl_floor")
    if kl_floor is None and ds.label_mode == "sampled":
        kl_floor = sampled_kl_floor(ds.n_shots)

    kwargs = dict(
        n_modes=ds.n_modes, n_phases=ds.n_phases, random_state=seed,
        n_epochs=int(cfg.get("epochs", args.epochs)),
        batch_size=int(cfg.get("batch_size", 32)),
        learning_rate=float(cfg.get("learning_rate", 0.1)),
    )
    if kl_floor is not None:
        kwargs["kl_floor"] = float(kl_floor)
    if args.arch == "qcnn":
        kwargs["hidden_dim"] = int(cfg.get("hidden_dim", 100))
        kwargs["beta"] = float(cfg.get("beta", 1000.0))
    elif args.arch == "qctn":
        if "bond_dim" in cfg:
            kwargs["bond_dim"] = int(cfg["bond_dim"])
        kwargs["beta"] = float(cfg.get("beta", 1000.0))
    model = ARCHITECTURES[args.arch](**kwargs)

    train, val = ds.split(split)
    model.fit(train[0], train[1], validation=val)
    plio.save_checkpoint(args.out, model)

    prefix = args.metrics_prefix or str(Path(args.out).with_suffix(""))
    loss_rows = [
        (epoch, tl, vl)
        for epoch, (tl, vl) in enumerate(zip(model.train_loss_curve_, model.val_loss_curve_))
    ]
    _write_csv(f"{prefix}_loss.csv", ["epoch", "train_loss", "val_loss"], loss_rows)
    maes = model.per_record_mae(val[0], val[1])
    _write_csv(f"{prefix}_mae.csv", ["record", "mae"], list(enumerate(maes)))
    print(f"wrote {args.out}: arch={args.arch}, params={model.parameter_count()}")
    print(f"final train loss {model.train_loss_curve_[-1]:.6g}, "
          f"val loss {model.val_loss_curve_[-1]:.6g}, val MAE {model.val_mae_:.6g}")
    return 0


def _build_model(args):
    if args.model == "exact":
        if not args.unitary or not args.state:
            raise ConfigError("exact model needs --unitary and --state")
        u, _ = plio.load_unitary(args.unitary)
        psi0 = initial_state(args.state, u.shape[0])
        return ExactCircuitModel(u, psi0, n_phases=args.n_phases)
    if not args.checkpoint:
        raise ConfigError(f"model {args.model} needs --checkpoint")
    model = plio.load_checkpoint(args.checkpoint)
    if model._arch_tag != args.model:
        raise ConfigError(f"checkpoint is {model._arch_tag}, requested {args.model}")
    return model


def cmd_estimate(args):
    model = _build_model(args)
    counts, _ = plio.load_counts(args.obs)
    est = PhaseEstimator(
        model, learning_rate=args.lr, n_iterations=args.iterations,
        n_restarts=args.restarts, random_state=args.seed,
        init=_parse_theta(args.init) if args.init else None,
    )
    est.fit(counts)
    n = model.n_phases
    rows = [
        (k, est.trace_loss_[k], *est.trace_thetas_[k])
        for k in range(len(est.trace_loss_))
    ]
    _write_csv(args.out, ["iteration", "loss"] + [f"theta_{i+1}" for i in range(n)], rows)
    theta_txt = ", ".join(f"{t:.6f}" for t in est.theta_)
    print(f"wrote {args.out}: final loss {est.loss_:.6g}, theta = [{theta_txt}]")
    return 0


def cmd_batch_estimate(args):
    model = _build_model(args)
    if args.theta:
        theta_true = _parse_theta(args.theta)
    else:
        rng = np.random.default_rng(args.theta_seed)
        theta_true = rng.uniform(0.0, 2.0 * np.pi, args.n_phases)
        print("theta_true:", ", ".join(f"{t:.6f}" for t in theta_true))
    u, _ = plio.load_unitary(args.unitary)
    psi0 = initial_state(args.state, u.shape[0])
    truth = ExactCircuitModel(u, psi0, n_phases=args.n_phases)
    summary = batch_estimate(
        model, theta_true, n_shots=args.p, n_trials=args.trials,
        observed_from=truth.predict_single(theta_true), seed=args.seed,
        threads=args.threads, learning_rate=args.lr,
        n_iterations=args.iterations, n_restarts=args.restarts,
    )
    rows = list(zip(range(len(summary.mean_abs_curve)), summary.mean_abs_curve, summary.sd_curve))
    _write_csv(args.out, ["iteration", "mean_abs_residual", "sd_mean_abs_residual"], rows)
    print(f"wrote {args.out}: trials={args.trials}, "
          f"final mean |residual| {summary.mean_abs_curve[-1]:.6g}, "
          f"final residual sd {summary.final_residual_sd():.6g}")
    return 0


def cmd_schmidt_stats(args):
    rows = rank_statistics(
        args.state, _parse_dims(args.dims), args.draws, quantile=args.q,
        seed=args.seed, threads=args.threads,
    )
    _write_csv(
        args.out, ["d", "mean_top2", "sd_top2", "mean_rank_q", "sd_rank_q"],
        [(r["n_modes"], r["mean_top2"], r["sd_top2"], r["mean_rank_q"], r["sd_rank_q"]) for r in rows],
    )
    for r in rows:
        print(f"d={r['n_modes']}: top-2 weight {r['mean_top2']:.4f}, "
              f"rank_{args.q:g} {r['mean_rank_q']:.2f}")
    print(f"wrote {args.out}")
    return 0


def cmd_sample(args):
    u, _ = plio.load_unitary(args.unitary)
    psi0 = initial_state(args.state, u.shape[0])
    probs = coincidence(evolve(psi0, u, _parse_theta(args.theta)))
    counts = sample_counts(probs, args.p, args.seed)
    plio.save_counts(args.out, counts)
    print(f"wrote {args.out}: {args.p} events over d={u.shape[0]} modes")
    return 0


def cmd_perm_check(args):
    deviation = two_photon_crosscheck(args.d, args.seed, args.trials)
    ok = deviation < 1e-10
    print(f"{'PASS' if ok else 'FAIL'}: max deviation {deviation:.3e} "
          f"over {args.trials} trials at d={args.d}")
    return 0 if ok else 3


def cmd_inspect(args):
    info = plio.inspect_file(args.path)
    for key, value in info.items():
        print(f"{key}: {value}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="photonlearn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=fn)
        p.add_argument("--seed", type=int, default=0, help="base RNG seed")
        p.add_argument("--threads", type=int, default=os.cpu_count(),
                       help="worker threads for embarrassingly parallel loops")
        return p

    p = add("gen-unitary", cmd_gen_unitary, help="draw and store a Haar unitary")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--out", required=True)

    p = add("gen-dataset", cmd_gen_dataset, help="generate a training dataset")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n-phases", type=int, default=6)
    p.add_argument("--n-label", type=int, default=10000)
    p.add_argument("--state", choices=("weak", "noon"), default="weak")
    p.add_argument("--label-mode", choices=("exact", "sampled"), default="exact")
    p.add_argument("--p", type=int, default=1000, help="events per record in sampled mode")
    p.add_argument("--unitary-seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = add("train", cmd_train, help="train a surrogate on a dataset")
    p.add_argument("--arch", choices=tuple(ARCHITECTURES), required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", help="JSON config file (documented keys only)")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--split", type=float, default=0.7)
    p.add_argument("--out", required=True)
    p.add_argument("--metrics-prefix", help="prefix for loss/MAE CSVs (default: out stem)")

    def estimation_flags(p, batch):
        p.add_argument("--model", choices=("exact",) + tuple(ARCHITECTURES), required=True)
        p.add_argument("--unitary", required=batch)
        p.add_argument("--state", choices=("weak", "noon"), default="weak")
        p.add_argument("--checkpoint")
        p.add_argument("--n-phases", type=int, default=6)
        p.add_argument("--lr", type=float, default=0.1)
        p.add_argument("--iterations", type=int, default=2000)
        p.add_argument("--restarts", type=int, default=4)
        p.add_argument("--out", required=True)

    p = add("estimate", cmd_estimate, help="recover phases from observed counts")
    estimation_flags(p, batch=False)
    p.add_argument("--obs", required=True, help="QCOB1 counts file")
    p.add_argument("--init", help="comma-separated initial phases")

    p = add("batch-estimate", cmd_batch_estimate,
            help="repeat estimation over sampled observations at fixed truth")
    estimation_flags(p, batch=True)
    p.add_argument("--theta", help="true phases, comma-separated")
    p.add_argument("--theta-seed", type=int, default=0)
    p.add_argument("--p", type=int, default=1000)
    p.add_argument("--trials", type=int, default=100)

    p = add("schmidt-stats", cmd_schmidt_stats, help="rank statistics under Haar evolution")
    p.add_argument("--state", choices=("weak", "noon"), default="weak")
    p.add_argument("--dims", default="8,16,32,64")
    p.add_argument("--draws", type=int, default=200)
    p.add_argument("--q", type=float, default=0.9)
    p.add_argument("--out", required=True)

    p = add("sample", cmd_sample, help="sample coincidence counts from a circuit")
    p.add_argument("--unitary", required=True)
    p.add_argument("--state", choices=("weak", "noon"), default="weak")
    p.add_argument("--theta", required=True)
    p.add_argument("--p", type=int, default=1000)
    p.add_argument("--out", required=True)

    p = add("perm-check", cmd_perm_check,
            help="cross-check coincidences against permanent probabilities")
    p.add_argument("--d", type=int, default=6)
    p.add_argument("--trials", type=int, default=50)

    p = add("inspect", cmd_inspect, help="print any binary file's header")
    p.add_argument("path")

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (TrainingDivergence, NonFiniteError, FloatingPointError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
