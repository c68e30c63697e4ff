"""``udddm`` command line: train, sample, verify, eval (plus ``config`` to print defaults).

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure
(I/O, corrupt files, non-finite numbers), 3 at least one verification FAIL.

Precedence for settings is flag > ``--set key=value`` > config file > default.

Output layout of ``train`` under ``output_dir``::

    config.yaml                  resolved configuration
    metrics.csv                  one row per epoch
    checkpoint.json/.bin         final weights, optimiser, EMA, RNG state
    estimates.json/.bin          final estimate buffer
    checkpoint_epochNNNNN.*      every ``checkpoint_every`` epochs
    snapshots/epochNNNNN*.*      checkpoint + estimates per snapshot epoch
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from udddm import tensorio
from udddm.config import (
    ConfigError,
    RunConfig,
    apply_overrides,
    dump_config,
    load_config,
)
from udddm.evalkit import (
    density_for,
    generate_dataset,
    resample_baseline,
    sliced_wasserstein,
    split_heldout,
)
from udddm.network import Network
from udddm.oracle import (
    AnalyticDensity,
    Report,
    verify_bilipschitz,
    verify_convergence,
    verify_gaussian_bilipschitz,
    verify_ode,
    verify_uniqueness,
)
from udddm.sampler import sample, write_samples
from udddm.schedules import forward_noise
from udddm.trainer import load_checkpoint, load_snapshots, train

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_VERIFY = 0, 1, 2, 3
ANALYTIC_CHECKS = ("ode", "uniqueness", "bilipschitz")
MODEL_CHECKS = ("model_bilipschitz", "model_convergence")

log = logging.getLogger("udddm")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _resolve_config(path, overrides, require_seed=True) -> RunConfig:
    try:
        config = load_config(path, require_seed=require_seed) if path else RunConfig()
    except FileNotFoundError as exc:
        raise ConfigError(str(exc)) from exc
    return apply_overrides(config, overrides) if overrides else config


def _flag_overrides(args, mapping) -> list[str]:
    out = list(getattr(args, "set", None) or [])
    for attr, key in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            out.append(f"{key}={value}")
    return out


def _checkpoint(path):
    path = tensorio.manifest_path(path)
    if not path.is_file():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    return load_checkpoint(path)


# -- commands -------------------------------------------------------------------

def cmd_train(args) -> int:
    overrides = _flag_overrides(args, {"epochs": "train.epochs", "seed": "train.seed",
                                       "output_dir": "output_dir"})
    config = _resolve_config(args.config, overrides)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(dump_config(config))
    result = train(config.train, out_dir=out, checkpoint_every=config.checkpoint_every,
                   buffer_backing=config.buffer_backing)
    last = result.history[-1] if result.history else None
    if last is not None:
        print(f"trained {last.epoch + 1} epochs: L_iter={last.L_iter:.6g} L_guide={last.L_guide:.6g}")
    else:
        print("epochs=0: wrote initial checkpoint")
    print(f"checkpoint: {out / 'checkpoint.json'}")
    return EXIT_OK


def cmd_sample(args) -> int:
    state, config = _checkpoint(args.checkpoint)
    params = state.params if args.raw_weights else state.ema_params
    network = Network(config.network)
    schedule = config.schedule.build()
    run = sample(network, params, schedule, args.steps, args.count, args.seed)
    out = Path(args.out) if args.out else Path(args.checkpoint).parent / "samples"
    mpath = write_samples(out, run, tensorio.content_id(args.checkpoint),
                          "raw" if args.raw_weights else "ema", args.csv)
    print(f"wrote {args.count} samples ({args.steps} step(s)) to {mpath}")
    return EXIT_OK


def _verify_density(cfg):
    v = cfg.verify
    if v.density == "gaussian":
        return AnalyticDensity.gaussian(np.full(v.dim, v.mean, dtype=np.float64), v.std)
    if v.density == "dataset":
        density = density_for(cfg.train.dataset)
        if density is None:
            raise ConfigError(f"dataset kind {cfg.train.dataset.kind!r} has no analytic density")
        return density
    raise ConfigError(f"verify.density must be 'gaussian' or 'dataset', got {v.density!r}")


def cmd_verify(args) -> int:
    overrides = _flag_overrides(args, {"score_scale": "verify.score_scale"})
    config = _resolve_config(args.config, overrides)
    checks = list(args.checks.split(",")) if args.checks else list(config.verify.checks)
    unknown = sorted(set(checks) - set(ANALYTIC_CHECKS) - set(MODEL_CHECKS))
    if unknown:
        raise ConfigError(f"unknown check(s): {', '.join(unknown)}")
    wants_model = [c for c in checks if c in MODEL_CHECKS]
    if wants_model and not args.checkpoint:
        raise UsageError(f"checks {', '.join(wants_model)} need a trained model: pass --checkpoint")

    v = config.verify
    schedule = config.train.schedule.build()
    density = _verify_density(config)
    report = Report()
    if "ode" in checks:
        report.extend(verify_ode(density, schedule, seed=v.seed))
    if "uniqueness" in checks:
        report.extend(verify_uniqueness(density, schedule, v.trials, v.eps, v.seed, v.t_start,
                                        v.t_end, score_scale=v.score_scale))
    if "bilipschitz" in checks:
        report.extend(verify_gaussian_bilipschitz(density, schedule, schedule.T, v.pairs, v.seed,
                                                  v.t_end))
    if wants_model:
        state, tconf = _checkpoint(args.checkpoint)
        network = Network(tconf.network)
        tsched = tconf.schedule.build()
        rng = np.random.default_rng([v.seed, 7])
        if "model_bilipschitz" in checks:
            report.extend(model_injectivity(network, state.ema_params, tsched, v.pairs, rng))
        if "model_convergence" in checks:
            snaps = load_snapshots(Path(args.checkpoint).parent / "snapshots")
            if not snaps:
                raise FileNotFoundError("no snapshots next to the checkpoint; set train.snapshot_epochs")
            data = generate_dataset(tconf.dataset)
            probes = convergence_probes(data, tsched, min(v.pairs, data.shape[0]), rng)
            report.extend(verify_convergence(
                snaps, lambda s: (lambda e, x, t: network.f_theta(s["ema_params"], e, x, t, tsched)),
                density_for(tconf.dataset), tsched, probes))
    sys.stdout.write(report.text())
    return EXIT_OK if report.passed else EXIT_VERIFY


def model_injectivity(network, params, schedule, pairs, rng) -> Report:
    """``min r > 0`` for ``x_T -> f_theta(x0_est, x_T, T)`` with one shared ``x0_est`` per pair."""
    D = network.config.data_dim
    scale = schedule.sigma_max if schedule.kind == "ve" else 1.0
    x = scale * rng.standard_normal((pairs, D))
    y = scale * rng.standard_normal((pairs, D))
    est = rng.standard_normal((pairs, D))
    t = np.full(pairs, schedule.T)
    return verify_bilipschitz(lambda z: network.f_theta(params, est, z, t, schedule), x, y,
                              name="model_bilipschitz")


def convergence_probes(data, schedule, count, rng):
    """Training indices with fresh ``(t, eps)``: ``(indices, x0, t, x_t)``."""
    idx = rng.choice(data.shape[0], size=count, replace=False)
    x0 = data[idx]
    t = rng.integers(1, schedule.T + 1, size=count)
    x_t = forward_noise(schedule, t, x0, rng.standard_normal(x0.shape))
    return idx, x0, t, x_t


def eval_table(eval_config, spec, state=None, tconf=None) -> list[dict]:
    """SW of generated samples against held-out data, one row per configured step count.

    ``spec`` is the dataset to compare against; ``state``/``tconf`` come from
    a checkpoint and are unused when ``eval_config.bypass_model`` is set.
    """
    e = eval_config
    held = split_heldout(spec, e.count)
    baseline = resample_baseline(generate_dataset(spec), e.projections, e.seed)
    rows = []
    for s in e.steps:
        if e.bypass_model:
            samples = generate_dataset(spec, n=e.count, seed=[spec.seed, 0xB1, s])
        else:
            samples = sample(Network(tconf.network), state.ema_params, tconf.schedule.build(),
                             s, e.count, e.seed).outputs
        sw = sliced_wasserstein(samples, held, e.projections, e.seed)
        rows.append({"steps": s, "sw": sw, "baseline": baseline, "ratio": sw / baseline})
    return rows


EVAL_HEADER = "steps,sw,baseline,ratio"


def cmd_eval(args) -> int:
    overrides = _flag_overrides(args, {"count": "eval.count"})
    if args.steps:
        overrides.append(f"eval.steps=[{args.steps}]")
    if args.bypass_model:
        overrides.append("eval.bypass_model=true")
    config = _resolve_config(args.config, overrides, require_seed=False)
    state = tconf = None
    if not config.eval.bypass_model:
        if not args.checkpoint:
            raise UsageError("eval needs --checkpoint unless --bypass-model is set")
        state, tconf = _checkpoint(args.checkpoint)
    # the dataset comes from --config when given, else from the checkpoint
    spec = config.train.dataset if args.config or tconf is None else tconf.dataset
    rows = eval_table(config.eval, spec, state, tconf)
    lines = [EVAL_HEADER] + [f"{r['steps']},{r['sw']:.10g},{r['baseline']:.10g},{r['ratio']:.6g}"
                             for r in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_config(args) -> int:
    config = _resolve_config(args.config, list(args.set or []), require_seed=False)
    sys.stdout.write(dump_config(config))
    return EXIT_OK


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="udddm", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_set(sp):
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a dotted config key (repeatable)")

    t = sub.add_parser("train", help="train a model from a config file")
    t.add_argument("config")
    t.add_argument("--output-dir")
    t.add_argument("--epochs", type=int)
    t.add_argument("--seed", type=int)
    with_set(t)
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("sample", help="draw samples from a checkpoint")
    s.add_argument("checkpoint")
    s.add_argument("--steps", type=int, default=1, help="fixed-point iterations")
    s.add_argument("--count", type=int, default=10000)
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--out", help="output stem (default: samples next to the checkpoint)")
    s.add_argument("--csv", help="also write a CSV scatter export")
    s.add_argument("--raw-weights", action="store_true", help="use raw instead of EMA weights")
    s.set_defaults(func=cmd_sample)

    v = sub.add_parser("verify", help="run oracle checks; exit 3 on any FAIL")
    v.add_argument("--config", required=True)
    v.add_argument("--checkpoint")
    v.add_argument("--checks", help="comma-separated subset of "
                   + ",".join(ANALYTIC_CHECKS + MODEL_CHECKS))
    v.add_argument("--score-scale", type=float, help="fault injection: multiply the score")
    with_set(v)
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("eval", help="sliced-Wasserstein table against held-out data")
    e.add_argument("--checkpoint")
    e.add_argument("--config")
    e.add_argument("--out", help="write the CSV table here")
    e.add_argument("--steps", help="comma-separated step counts, e.g. 1,2,10")
    e.add_argument("--count", type=int)
    e.add_argument("--bypass-model", action="store_true",
                   help="score a fresh dataset draw instead of model samples")
    with_set(e)
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("config", help="print the resolved configuration (all keys)")
    c.add_argument("--config")
    with_set(c)
    c.set_defaults(func=cmd_config)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"udddm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, FloatingPointError, KeyError) as exc:
        print(f"udddm: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
