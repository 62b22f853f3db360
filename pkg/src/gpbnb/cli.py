"""
Command-line entry point.

    gpbnb run <config.json>            run the configured optimizer
    gpbnb compare <config.json>        optimizer plus baselines on paired seeds
    gpbnb verify-variance-bound        sup sigma on uniform covers against Q delta^2 / 4
    gpbnb coverage                     envelope violation rate over GP draws
    gpbnb fit-rate <trace.csv>         fit ln r_t against t / (ln t)^(d/4)

Exit status is 0 on success, 1 for invalid configuration or arguments and 2
for a runtime failure (partial artifacts are left in place).
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, GpBnbError
from .kernels import KernelSpec
from .lattice import BoxDomain, DyadicLattice

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _kernel_args(p, lengthscale):
    p.add_argument("--family", default="se", help="se or matern (default se)")
    p.add_argument("--nu", default=None, help="Matern order, 5/2 or 7/2")
    p.add_argument("--lengthscale", type=float, default=lengthscale)
    p.add_argument("--signal-variance", type=float, default=1.0)
    p.add_argument("--dim", type=int, default=1)


def _kernel(args):
    return KernelSpec(args.family, [args.lengthscale] * args.dim, args.signal_variance, args.nu)


def _print_runs(result):
    for s in result.summaries:
        flag = "" if s.envelope_violated is None else f" envelope_violated={str(s.envelope_violated).lower()}"
        print(f"rep={s.replication} optimizer={s.optimizer} n={s.n_samples} reason={s.terminal_reason} "
              f"final_regret={s.final_regret:.6g} cum_regret={s.cumulative_regret:.6g}{flag}")
        if s.error:
            print(f"  error: {s.error}", file=sys.stderr)
    print(f"wrote {result.out_dir}")


def cmd_run(args):
    from .harness.config import load_config
    from .harness.runner import run_experiment

    cfg = load_config(args.config)
    result = run_experiment(cfg, out_dir=args.out, workers=args.workers)
    _print_runs(result)
    return EXIT_RUNTIME if result.failed else EXIT_OK


def cmd_compare(args):
    from .harness.config import load_config
    from .harness.runner import compare

    cfg = load_config(args.config)
    result = compare(cfg, out_dir=args.out, workers=args.workers)
    _print_runs(result)
    return EXIT_RUNTIME if result.failed else EXIT_OK


def cmd_verify(args):
    from .harness.metrics import verify_variance_bound

    domain = BoxDomain.unit(args.dim)
    rows = verify_variance_bound(_kernel(args), domain, args.deltas, probe_factor=args.probe_factor)
    print("delta,n_samples,n_probes,measured,bound,ratio,decay")
    ok = True
    for r in rows:
        print(f"{r.delta:.6g},{r.n_samples},{r.n_probes},{r.measured:.6e},{r.bound:.6e},{r.ratio:.6f},{r.decay:.4f}")
        ok &= r.ratio <= 1 + 1e-4
    print("bound holds" if ok else "BOUND VIOLATED")
    return EXIT_OK if ok else EXIT_RUNTIME


def cmd_coverage(args):
    from .harness.metrics import envelope_coverage

    lat = DyadicLattice(BoxDomain.unit(args.dim), args.depth)
    seeds = range(args.seed, args.seed + args.replications)
    res = envelope_coverage(_kernel(args), lat, args.alpha, args.replications, seeds, workers=args.workers)
    lo, hi = res.ci
    print(f"replications={res.replications} violations={res.violations} rate={res.rate:.4f} "
          f"ci95=[{lo:.4f}, {hi:.4f}]")
    print(f"maximizer_exits={res.exits} exit_rate={res.exit_rate:.4f} "
          f"ucb_regret_bound_failures={res.regret_bound_failures}")
    return EXIT_OK


def cmd_fit_rate(args):
    from .harness.io import read_trace_csv
    from .harness.metrics import fit_rate

    fit = fit_rate(read_trace_csv(args.trace), args.dim)
    if not fit.defined:
        print(f"fit undefined: all {fit.n_used} post-burn-in regrets are zero")
        return EXIT_OK
    print(f"A_hat={fit.A_hat:.10g} tau_hat={fit.tau_hat:.10g} r2={fit.goodness:.10g} "
          f"n_used={fit.n_used} n_floored={fit.n_floored}")
    return EXIT_OK


def build_parser():
    p = _Parser(prog="gpbnb", description="GP branch and bound experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, fn, help_ in (("run", cmd_run, "run an experiment config"),
                            ("compare", cmd_compare, "compare against baselines on paired seeds")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("config")
        s.add_argument("--out", default=None, help="output directory (default: config output)")
        s.add_argument("--workers", type=int, default=1)
        s.set_defaults(func=fn)

    s = sub.add_parser("verify-variance-bound", help="check sup sigma against Q delta^2 / 4")
    _kernel_args(s, 0.5)
    s.add_argument("--deltas", type=float, nargs="+", default=[0.2, 0.1, 0.05])
    s.add_argument("--probe-factor", type=int, default=10)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("coverage", help="envelope violation rate over GP draws")
    _kernel_args(s, 0.2)
    s.add_argument("--depth", type=int, default=7)
    s.add_argument("--alpha", type=float, default=0.1)
    s.add_argument("--replications", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_coverage)

    s = sub.add_parser("fit-rate", help="fit the regret rate of a trace CSV")
    s.add_argument("trace")
    s.add_argument("--dim", type=int, default=1)
    s.set_defaults(func=cmd_fit_rate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except (GpBnbError, ValueError) as exc:
        # bad command-line values surface here before any work is done
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if args.command in ("verify-variance-bound", "coverage", "fit-rate") else EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
