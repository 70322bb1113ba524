"""Command line interface: seeded benchmark runs, star instance
generation, and the acceptance suite.

Exit codes: 0 on success, 2 on configuration errors (including argparse
usage errors), 3 when run-suite finds a failing criterion.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bandit import (
    build_star_instance_hard,
    build_star_instance_soft,
    star_instance_to_json,
    star_metadata,
)
from .harness import (
    TrialConfig,
    TrialReport,
    acceptance_passed,
    bundled_best_k,
    run_acceptance,
    run_trials,
)


def _parse_constants(text: str) -> dict[str, float]:
    """``key=value,key=value`` flag payload; every value must be numeric."""
    out: dict[str, float] = {}
    if not text:
        return out
    for part in text.split(","):
        key, sep, val = part.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ValueError(f"invalid constant: {part!r}")
        try:
            out[key] = float(val)
        except ValueError:
            raise ValueError(f"invalid constant: {part!r}") from None
    return out


_INT_CONSTANTS = {"m", "noisy_blocks", "pool", "block_pool", "n", "grid"}

# constants accepted by each trial subcommand, mapped straight into the
# bundled instance parameters / algorithm constants
_TRIAL_CONSTANTS = {
    "intervals-da": {"unlabeled", "agnostic", "label", "grid", "flips"},
    "compose-da": {"m", "lam", "mu", "noisy_blocks", "pool"},
    "union-da": {"block_pool", "pool"},
    "knn-soft": {"n", "flip"},
    "knn-hard": {"n"},
    "best-k": {"n", "flip"},
    "aga": {"n", "gamma", "good_frac"},
}


def _trial_config(args: argparse.Namespace) -> TrialConfig:
    consts = _parse_constants(args.constants)
    allowed = _TRIAL_CONSTANTS[args.command]
    for key in consts:
        if key not in allowed:
            raise ValueError(f"unknown constant: {key}")
    params: dict = {}
    for key, val in consts.items():
        if key in _INT_CONSTANTS:
            params[key] = int(val)
        elif key == "flips":
            params[key] = bool(val)
        else:
            params[key] = val
    if args.command == "intervals-da":
        params["d"] = args.d
    elif args.command == "knn-soft":
        params["k"] = args.k
        params["p"] = args.p
    elif args.command == "knn-hard":
        params["k"] = args.k
    elif args.command == "best-k":
        params["p"] = args.p
    return TrialConfig(
        args.command,
        eps=args.eps,
        trials=args.trials,
        seed=args.seed,
        params=params,
    )


def _print_report(rep: TrialReport) -> None:
    agg = rep.aggregate()
    cfg = rep.config
    print(
        f"{cfg.algorithm} eps={cfg.eps} trials={agg['trials']} seed={cfg.seed} "
        f"tolerance={rep.tolerance}"
    )
    print(
        f"success_rate={agg['success_rate']:.3f} ({agg['successes']}/{agg['trials']}, "
        f"wilson95 [{agg['ci_low']:.3f}, {agg['ci_high']:.3f}]) "
        f"mean_abs_error={agg['mean_abs_error']:.4f}"
    )
    print(f"queries={agg['total_queries']} unlabeled={agg['total_unlabeled']}")


def _run_trial_command(args: argparse.Namespace) -> int:
    config = _trial_config(args)
    rep = run_trials(config)
    if args.command == "best-k":
        k_star, table, loss = bundled_best_k(
            args.eps, args.p, seed=args.seed, n=int(config.params.get("n", 200))
        )
        print(f"k_star={k_star} exact_loss_at_choice={loss:.4f} exact_best={rep.rows[0].truth:.4f}")
        print("grid table (k, estimate):")
        for k, est in table:
            print(f"  {k:4d} {est:.4f}")
    _print_report(rep)
    if args.out is not None:
        rep.write(args.out)
        print(f"wrote {args.out}")
    return 0


def _run_gen_star(args: argparse.Namespace) -> int:
    consts = _parse_constants(args.constants)
    if args.out is None:
        raise ValueError("missing --out")
    out = Path(args.out)
    if out.suffix != ".json":
        raise ValueError("unknown output format")
    if args.command == "gen-star-soft":
        allowed = {"c1", "c2", "c3", "coin"}
        for key in consts:
            if key not in allowed:
                raise ValueError(f"unknown constant: {key}")
        constants = (
            consts.get("c1", 1.0),
            consts.get("c2", 1.0),
            consts.get("c3", 0.05),
        )
        si = build_star_instance_soft(
            args.p, args.eps, consts.get("coin", 0.5), constants=constants, seed=args.seed
        )
    else:
        allowed = {"c1", "c2", "gamma", "good_frac"}
        for key in consts:
            if key not in allowed:
                raise ValueError(f"unknown constant: {key}")
        gamma = consts.get("gamma", 0.3)
        n = args.d
        good = int(round(consts.get("good_frac", 0.5) * n))
        means = np.where(np.arange(n) < good, 0.5 + gamma, 0.5 - gamma)
        constants = (consts.get("c1", 1.0), consts.get("c2", 0.01))
        si = build_star_instance_hard(
            n, means, args.k, args.eps, constants=constants, seed=args.seed
        )
    out.write_text(star_instance_to_json(si))
    sidecar = out.with_suffix(".meta.json")
    sidecar.write_text(json.dumps(star_metadata(si), indent=2, sort_keys=True) + "\n")
    print(
        f"wrote {out} and {sidecar} "
        f"({si.n} star(s), {si.instance.space.n} points, pool {si.N})"
    )
    return 0


def _run_suite(args: argparse.Namespace) -> int:
    numbers = None
    if args.criteria:
        try:
            numbers = {int(x) for x in args.criteria.split(",")}
        except ValueError:
            raise ValueError(f"invalid criteria list: {args.criteria!r}") from None
    results = run_acceptance(numbers, stream=sys.stdout)
    if args.out is not None:
        payload = [
            {
                "number": r.number,
                "name": r.name,
                "passed": r.passed,
                "detail": r.detail,
                "seconds": r.seconds,
            }
            for r in results
        ]
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    passed = sum(1 for r in results if r.passed)
    print(f"{passed}/{len(results)} criteria passed")
    return 0 if results and acceptance_passed(results) else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="activetest",
        description=(
            "Seeded Monte Carlo benchmarks for label-frugal distance "
            "approximation, k-NN loss estimation, and arm counting."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, eps: float, trials: bool = True):
        sp.add_argument("--eps", type=float, default=eps, help="target accuracy")
        if trials:
            sp.add_argument("--trials", type=int, default=1)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", type=Path, default=None, help="report path (.csv or .json)")
        sp.add_argument(
            "--constants",
            type=str,
            default="",
            help="key=value[,key=value] instance and constant overrides",
        )

    sp = sub.add_parser("intervals-da", help="interval-union distance approximation")
    sp.add_argument("--d", type=int, default=100, help="interval budget")
    common(sp, eps=0.1)

    sp = sub.add_parser("compose-da", help="blockwise composition distance approximation")
    common(sp, eps=0.15)

    sp = sub.add_parser("union-da", help="disjoint-union distance approximation")
    common(sp, eps=0.1)

    sp = sub.add_parser("knn-soft", help="soft k-NN p-th power loss estimation")
    sp.add_argument("--k", type=int, default=25)
    sp.add_argument("--p", type=int, default=2)
    common(sp, eps=0.1)

    sp = sub.add_parser("knn-hard", help="hard k-NN error estimation")
    sp.add_argument("--k", type=int, default=25)
    common(sp, eps=0.1)

    sp = sub.add_parser("best-k", help="search for a near-best neighbor count")
    sp.add_argument("--p", type=int, default=2)
    common(sp, eps=0.2)

    sp = sub.add_parser("aga", help="good-arm fraction estimation")
    common(sp, eps=0.05)

    sp = sub.add_parser("gen-star-soft", help="generate a soft star instance (JSON)")
    sp.add_argument("--p", type=int, default=1)
    common(sp, eps=0.3, trials=False)

    sp = sub.add_parser("gen-star-hard", help="generate a hard star instance (JSON)")
    sp.add_argument("--d", type=int, default=8, help="number of arms/stars")
    sp.add_argument("--k", type=int, default=5)
    common(sp, eps=0.25, trials=False)

    sp = sub.add_parser("run-suite", help="run the acceptance criteria")
    sp.add_argument("--criteria", type=str, default="", help="comma-separated subset, e.g. 3,4,13")
    sp.add_argument("--out", type=Path, default=None, help="JSON summary path")

    return parser


_HANDLERS = {
    "intervals-da": _run_trial_command,
    "compose-da": _run_trial_command,
    "union-da": _run_trial_command,
    "knn-soft": _run_trial_command,
    "knn-hard": _run_trial_command,
    "best-k": _run_trial_command,
    "aga": _run_trial_command,
    "gen-star-soft": _run_gen_star,
    "gen-star-hard": _run_gen_star,
    "run-suite": _run_suite,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
