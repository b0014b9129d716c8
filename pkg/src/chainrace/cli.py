"""Plan, simulate and validate longest-chain attacks on per-block difficulty adjustment.

Exit status: 0 success, 2 usage error, 3 infeasible attack, 4 solver
failure, 5 invalid input or regime violation, 6 simulation disagrees with
the closed forms.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from chainrace.chain import Chain, Unverifiable, Verifiable, validate_chain
from chainrace.errors import DomainError, InfeasibleError, SolverError, ValidationError
from chainrace import table1
from chainrace.sim import CONTINUOUS, FAITHFUL, IDEALIZED, INTEGER, AttackScenario, simulate, verify_against_analytic
from chainrace.unverifiable import TERMINAL_CLAIM, UnverifiablePlan, plan_unverifiable
from chainrace.verifiable import Infeasible, NaivePlan, VerifiablePlan, min_blocks_for_deficit, plan_verifiable

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_SOLVER = 4
EXIT_INVALID = 5
EXIT_MISMATCH = 6


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def cmd_plan_verifiable(args) -> int:
    blocks = args.blocks
    if args.deficit is not None:
        result = min_blocks_for_deficit(args.ma, args.deficit)
        if isinstance(result, Infeasible):
            _emit(_dump({
                "kind": "verifiable",
                "feasible": False,
                "capacity": result.capacity,
                "deficit": result.deficit,
                "max_overcomable_deficit": result.bound,
            }), args.out)
            return EXIT_INFEASIBLE
        blocks = result
    _emit(_dump(plan_verifiable(args.ma, blocks).to_dict()), args.out)
    return EXIT_OK


def cmd_plan_unverifiable(args) -> int:
    plan = plan_unverifiable(args.ma, args.blocks, seed=args.seed)
    _emit(_dump(plan.to_dict()), args.out)
    return EXIT_OK


def load_plan(path: str):
    """Read a plan written by one of the plan commands."""
    try:
        doc = json.loads(Path(path).read_text())
        kind = doc["kind"]
        cls = {"verifiable": VerifiablePlan, "unverifiable": UnverifiablePlan, "naive": NaivePlan}[kind]
        return cls.from_dict(doc)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ValidationError([f"malformed plan file {path}: {exc!r}"]) from exc


def _plan_from_flags(args):
    if args.ma is None or args.blocks is None:
        raise argparse.ArgumentTypeError("--ma and --blocks are required without --plan")
    if args.strategy == "naive":
        return NaivePlan(args.ma, args.blocks)
    if args.regime == "unverifiable":
        return plan_unverifiable(args.ma, args.blocks, seed=args.seed)
    return plan_verifiable(args.ma, args.blocks)


def _default_deficit(plan) -> float:
    if isinstance(plan, VerifiablePlan):
        return plan.deficit_overcome
    if isinstance(plan, UnverifiablePlan):
        return plan.max_deficit
    return 2.0


def cmd_simulate(args) -> int:
    plan = load_plan(args.plan) if args.plan else _plan_from_flags(args)
    deficit = args.deficit if args.deficit is not None else _default_deficit(plan)
    mode = args.mode or (FAITHFUL if isinstance(plan, NaivePlan) else IDEALIZED)
    scenario = AttackScenario(
        deficit=deficit,
        plan=plan,
        mode=mode,
        height_model=args.height,
        terminal_claim=args.terminal_claim,
        honest_cap=args.honest_cap,
    )
    outcome = simulate(scenario)
    status = EXIT_OK
    if args.format == "csv":
        text = outcome.to_csv()
    else:
        doc = outcome.to_dict()
        if args.check:
            comparison = verify_against_analytic(outcome)
            doc["check"] = comparison.to_dict()
            if not comparison.ok:
                status = EXIT_MISMATCH
        text = _dump(doc)
    if args.check and args.format == "csv":
        comparison = verify_against_analytic(outcome)
        if not comparison.ok:
            status = EXIT_MISMATCH
            print(json.dumps(comparison.to_dict()), file=sys.stderr)
    _emit(text, args.out)
    return status


def cmd_validate(args) -> int:
    try:
        text = Path(args.chain).read_text()
        chain = Chain.from_json(text) if text.lstrip().startswith("{") else Chain.from_records(text)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ValidationError([f"malformed chain file {args.chain}: {exc!r}"]) from exc
    if args.regime == "unverifiable":
        if args.reveal_time is None:
            raise argparse.ArgumentTypeError("--reveal-time is required for the unverifiable regime")
        regime = Unverifiable(args.reveal_time, args.earliest_first)
    else:
        regime = Verifiable(args.tolerance)
    verdict = validate_chain(chain, regime)
    _emit(_dump({"ok": verdict.ok, "violations": [
        {"kind": v.kind, "height": v.height, "detail": v.detail} for v in verdict.violations
    ]}), args.out)
    return EXIT_OK if verdict.ok else EXIT_INVALID


def cmd_table1(args) -> int:
    cells = table1.compute_cells(seed=args.seed)
    full = table1.to_csv(cells)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "table1.csv").write_text(full)
        (out / "table1_display.csv").write_text(table1.to_csv(cells, display=True))
    else:
        sys.stdout.write(table1.to_csv(cells, display=args.display))
    return EXIT_OK


def _positive_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not math.isfinite(x) or x <= 0:
        raise argparse.ArgumentTypeError(f"must be finite and > 0: {text!r}")
    return x


def _positive_int(text: str) -> int:
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if k < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return k


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chainrace", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan-verifiable", help="optimal power ramp under verifiable timestamps")
    p.add_argument("--ma", type=_positive_float, required=True, help="attacker capacity (honest = 1)")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--blocks", type=_positive_int, help="number of blocks to mine")
    g.add_argument("--deficit", type=_positive_float, help="honest lead to overcome; picks the fewest blocks")
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_plan_verifiable)

    p = sub.add_parser("plan-unverifiable", help="optimal fake-timestamp schedule")
    p.add_argument("--ma", type=_positive_float, required=True)
    p.add_argument("--blocks", type=_positive_int, required=True, help="blocks to mine (N >= 2)")
    p.add_argument("--seed", type=int, default=None, help="random solver start (default: uniform claims)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plan_unverifiable)

    p = sub.add_parser("simulate", help="race a plan against the honest chain")
    p.add_argument("--plan", help="plan JSON from a plan command")
    p.add_argument("--strategy", choices=("optimal", "naive"), default="optimal")
    p.add_argument("--regime", choices=("verifiable", "unverifiable"), default="verifiable")
    p.add_argument("--ma", type=_positive_float)
    p.add_argument("--blocks", type=_positive_int)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--deficit", type=_positive_float, help="honest head start; defaults to the plan's maximum")
    p.add_argument("--mode", choices=(IDEALIZED, FAITHFUL), default=None,
                   help="difficulty mode (default: faithful for naive, idealized otherwise)")
    p.add_argument("--height", choices=(CONTINUOUS, INTEGER), default=CONTINUOUS, help="honest height model")
    p.add_argument("--terminal-claim", type=_positive_float, default=TERMINAL_CLAIM)
    p.add_argument("--honest-cap", type=_positive_float, default=None,
                   help="largest capacity honest nodes believe; bounds the terminal claim")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--check", action="store_true", help="compare against the closed forms")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="check a chain file against a timestamp regime")
    p.add_argument("--chain", required=True, help="chain as JSON or line records")
    p.add_argument("--regime", choices=("verifiable", "unverifiable"), required=True)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--reveal-time", type=float)
    p.add_argument("--earliest-first", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("table1", help="attack durations for M_a in {3, 99} and N in {3, 5, 10, 20, 100}")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="directory for table1.csv and table1_display.csv")
    p.add_argument("--display", action="store_true", help="print 2-decimal values to stdout")
    p.set_defaults(func=cmd_table1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (SolverError, table1.CellError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValidationError, DomainError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
