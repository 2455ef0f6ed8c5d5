"""``toric-homotopy`` command-line interface.

Exit codes: 0 success, 1 usage or input-format error, 2 mathematical failure
(stall, divergence, failed certificate, degenerate supports).  Errors are
written to stderr as a JSON object.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from typing import Sequence

import numpy as np

from . import io
from .errors import ToricError, UsageError
from .expsum import ExpSumSystem, SupportTuple
from .newton import ALPHA_STAR, certify
from .oracle import mc_exclusion, mc_moment_frobenius, mc_moment_mu, oracle_roots
from .polytope import invariant_report
from .solver import SolveConfig, sample_gaussian, solve
from .tracker import LinearPath, NewtonCounter, TrackerConfig, track

PRESETS = {
    # n = 1, four consecutive exponents, unit weights
    "em2-n1": [[(0,), (1,), (2,), (3,)]],
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2), which collides with the math-failure code
        raise UsageError(message)


# ---------------------------------------------------------------- helpers

def resolve_seed(seed: int | None) -> int:
    """Explicit seed, else ``TORIC_SEED``, else fresh entropy (reported in the output)."""
    if seed is not None:
        return seed
    env = os.environ.get("TORIC_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"TORIC_SEED must be an integer, got {env!r}") from None
    return int(np.random.SeedSequence().entropy % (2**63))


def _emit(obj: dict, out) -> None:
    out.write(io.dumps(obj) + "\n")


def _nums(values: Sequence[float]) -> list:
    return [v if math.isfinite(v) else None for v in values]


def _same_supports(a: SupportTuple, b: SupportTuple) -> bool:
    return [list(map(tuple, s)) for s in a.A] == [list(map(tuple, s)) for s in b.A] and all(
        np.array_equal(x, y) for x, y in zip(a.rho, b.rho)
    )


def _load_target(path: str) -> ExpSumSystem:
    return io.load_system(path).require_system()


# ---------------------------------------------------------------- subcommands

def cmd_invariants(args, out) -> int:
    sf = io.load_system(args.system)
    _emit(invariant_report(sf.supports).to_json(), out)
    return 0


def cmd_solve(args, out) -> int:
    f = _load_target(args.target)
    seed = resolve_seed(args.seed)
    start = None
    if args.start:
        g, roots = io.parse_start(io.read_json(args.start))
        if not _same_supports(g.supports, f.supports):
            raise UsageError("start system and target have different supports")
        start = (ExpSumSystem(f.supports, g.true_coeffs()), roots)
    try:
        config = SolveConfig(
            rng_seed=seed, N0=args.n0, alpha_star=args.alpha, max_wall=args.max_wall,
            H=args.H, compute_length=not args.no_length, max_attempts=args.max_attempts,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    res = solve(f, config, start)
    doc = io.roots_to_json(f, res.roots)
    st = res.stats
    doc["seed"] = seed
    doc["expected_count"] = res.expected_count
    doc["stats"] = {
        "newton_steps": st["newton_steps"],
        "attempts": st["attempts"],
        "resamples": st["resamples"],
        "failures": st["failures"],
        "L_hat": _nums(st.get("L_hat", [])),
        "max_residual": st.get("max_residual"),
        "wall_time": st.get("wall_time"),
    }
    _emit(doc, out)
    return 0


def cmd_track(args, out) -> int:
    g, roots = io.parse_start(io.read_json(args.start))
    f = _load_target(args.target)
    if not _same_supports(g.supports, f.supports):
        raise UsageError("start system and target have different supports")
    g = ExpSumSystem(f.supports, g.true_coeffs()).normalized()
    f = f.normalized()
    try:
        config = TrackerConfig(alpha_star=args.alpha, H=args.H, max_steps=args.max_steps)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    path = LinearPath(g, f)
    counter = NewtonCounter(budget=args.budget)
    traces = [track(path, z, config, counter) for z in roots]
    _emit({"version": io.VERSION, "system_hash": io.system_hash(f), "traces": [t.to_json(args.summary) for t in traces]}, out)
    return 0 if all(t.success for t in traces) else 2


def cmd_certify(args, out) -> int:
    f = _load_target(args.system)
    want, roots = io.load_roots(args.roots, f.n)
    if not 0 < args.alpha:
        raise UsageError("--alpha must be positive")
    certs = [(z, certify(f, z, args.alpha)) for z, _ in roots]
    doc = io.roots_to_json(f, certs)
    doc["hash_matches"] = None if want is None else want == doc["system_hash"]
    doc["all_passed"] = all(c.passed for _, c in certs)
    _emit(doc, out)
    return 0 if doc["all_passed"] else 2


def cmd_oracle(args, out) -> int:
    f = _load_target(args.system)
    res = oracle_roots(f)
    doc = res.to_json()
    doc["system_hash"] = io.system_hash(f)
    _emit(doc, out)
    return 0


def _mc_supports(args) -> SupportTuple:
    if (args.preset is None) == (args.supports is None):
        raise UsageError("give exactly one of --preset or --supports")
    if args.preset is not None:
        return SupportTuple(PRESETS[args.preset])
    return io.load_system(args.supports).supports


def cmd_montecarlo(args, out) -> int:
    sup = _mc_supports(args)
    seed = resolve_seed(args.seed)
    if args.threads < 1:
        raise UsageError("--threads must be at least 1")
    try:
        if args.estimator == "frobenius":
            reports = [mc_moment_frobenius(sup, H=args.H, N=args.samples, seed=seed, threads=args.threads)]
        elif args.estimator == "mu":
            reports = [mc_moment_mu(sup, H=args.H, N=args.samples, seed=seed, threads=args.threads)]
        else:
            if args.target:
                f = _load_target(args.target)
            else:
                f = sample_gaussian(sup, np.random.default_rng([seed, 1]))
            reports = list(mc_exclusion(sup, f, N=args.samples, seed=seed))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sample"] + [r.name for r in reports])
            for k in range(reports[0].samples):
                w.writerow([k] + [repr(float(r.values[k])) for r in reports])
    docs = [r.to_json() for r in reports]
    doc = {"version": io.VERSION, "seed": seed, "reports": docs, "passed": all(r.passed for r in reports)}
    _emit(doc, out)
    return 0


def cmd_sample(args, out) -> int:
    sf = io.load_system(args.supports)
    seed = resolve_seed(args.seed)
    g = sample_gaussian(sf.supports, np.random.default_rng(seed))
    doc = io.system_to_json(sf.supports, g, sf.labels)
    doc["seed"] = seed
    _emit(doc, out)
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="toric-homotopy", description="Certified homotopy continuation for exponential sums.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("invariants", help="combinatorial invariants of a support tuple")
    s.add_argument("system", help="system or supports-only JSON file")
    s.set_defaults(func=cmd_invariants)

    s = sub.add_parser("solve", help="all certified roots of a target system")
    s.add_argument("--target", required=True)
    s.add_argument("--start", help="JSON with 'system' and 'roots' (needed when n >= 3 is not plantable)")
    s.add_argument("--seed", type=int)
    s.add_argument("--n0", type=float, default=SolveConfig.N0, help="initial Newton-step budget")
    s.add_argument("--alpha", type=float, default=ALPHA_STAR)
    s.add_argument("--max-wall", type=float, default=math.inf, help="seconds")
    s.add_argument("--max-attempts", type=int, default=SolveConfig.max_attempts)
    s.add_argument("--H", type=float, help="override the divergence threshold")
    s.add_argument("--threads", type=int, default=1, help="accepted for interface stability; paths run sequentially")
    s.add_argument("--no-length", action="store_true", help="skip the condition-length estimate")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("track", help="follow start roots along g + t f to t = infinity")
    s.add_argument("--start", required=True, help="JSON with 'system' and 'roots'")
    s.add_argument("--target", required=True)
    s.add_argument("--summary", action="store_true", help="omit the mesh")
    s.add_argument("--alpha", type=float, default=ALPHA_STAR)
    s.add_argument("--H", type=float, default=math.inf)
    s.add_argument("--max-steps", type=int, default=TrackerConfig.max_steps)
    s.add_argument("--budget", type=float, default=math.inf, help="total Newton steps over all paths")
    s.set_defaults(func=cmd_track)

    s = sub.add_parser("certify", help="alpha-certificates for candidate roots")
    s.add_argument("--system", required=True)
    s.add_argument("--roots", required=True)
    s.add_argument("--alpha", type=float, default=ALPHA_STAR)
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("oracle", help="brute-force roots (n <= 2)")
    s.add_argument("--system", required=True)
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("montecarlo", help="Monte Carlo checks of expectation and probability bounds")
    s.add_argument("--preset", choices=sorted(PRESETS))
    s.add_argument("--supports", help="system or supports-only JSON file")
    s.add_argument("--estimator", choices=["frobenius", "mu", "exclusion"], default="frobenius")
    s.add_argument("--samples", type=int, default=10_000)
    s.add_argument("--H", type=float, default=2.0)
    s.add_argument("--seed", type=int)
    s.add_argument("--target", help="fixed system f for the exclusion estimator (default: Gaussian from the seed)")
    s.add_argument("--csv", help="write per-sample values here")
    s.add_argument("--threads", type=int, default=1)
    s.set_defaults(func=cmd_montecarlo)

    s = sub.add_parser("sample", help="emit a Gaussian system on the given supports")
    s.add_argument("--supports", required=True)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_sample)
    return p


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except ToricError as exc:
        err.write(json.dumps(exc.to_dict()) + "\n")
        return 2 if exc.mathematical else 1


if __name__ == "__main__":
    sys.exit(main())
