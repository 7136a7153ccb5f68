"""Command-line surface: `python -m locsim <command> ...`.

Every command writes one report (JSON or YAML) to --out or stdout. Exit codes:
0 affirmative verdict, 1 negative verdict, 2 input or usage error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from locsim import io
from locsim.batch import SUITES, run_batch
from locsim.config import REPORT_FORMATS, Config, load_config
from locsim.errors import ConfigError, InputError, NotSimulable, NumericalError
from locsim.frame import build_frame, construct_simulating_measurement, verify_frame, verify_measure_sim
from locsim.generators import (
    gen_block_unitary,
    gen_degenerate_state,
    gen_measurement_set,
    gen_random_state,
    gen_random_unitary,
    gen_schmidt_decomposable,
)
from locsim.logs import setup_logging
from locsim.parsing import parse_cut, parse_float_list, parse_int_list, parse_party
from locsim.protocol_sim import compare_branches, measurement_set, mirror_measurement, mirror_unitary
from locsim.report import Report, emit
from locsim.schmidt import check_schmidt_decomposable, reconstruct, schmidt_decompose
from locsim.states import NAMED_STATES, named_state
from locsim.tensor import Bipartition, StateVector, phase_invariant_distance
from locsim.tolerances import Tolerances
from locsim.unitary_sim import (
    check_unitary_simulable,
    construct_partner_unitary,
    oracle_partner,
    verify_unitary_simulation,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


@dataclass
class Context:
    config: Config
    tols: Tolerances
    seed: int
    digests: dict[str, str] = field(default_factory=dict)


@dataclass
class Outcome:
    verdict: str
    exit_code: int = EXIT_OK
    residuals: dict[str, float] = field(default_factory=dict)
    payload: dict[str, Any] = field(default_factory=dict)


def _load_state(path: str, ctx: Context) -> StateVector:
    ctx.digests["state"] = io.digest(Path(path))
    return io.load_state(Path(path), ctx.tols.norm)


def _load_operator(path: str, ctx: Context) -> np.ndarray:
    ctx.digests["op"] = io.digest(Path(path))
    return io.load_operator(Path(path))


def _load_measurement(path: str, party: int, ctx: Context):
    ctx.digests["measurement"] = io.digest(Path(path))
    return io.load_measurement(Path(path), party)


def cmd_schmidt(args: argparse.Namespace, ctx: Context) -> Outcome:
    state = _load_state(args.state, ctx)
    left, right = parse_cut(args.cut)
    cut = Bipartition.of(left, state.n_parties, right or None)
    sd = schmidt_decompose(state, cut, ctx.tols.rank)
    distance = phase_invariant_distance(reconstruct(sd), state)
    return Outcome(
        "ok",
        residuals={"reconstruction_distance": distance},
        payload={
            "cut": cut.label,
            "rank": sd.rank,
            "coefficients": sd.coeffs,
            "spectrum": sd.spectrum,
            "left_basis": io.to_pairs(sd.left_basis),
            "right_basis": io.to_pairs(sd.right_basis),
        },
    )


def cmd_decomposable(args: argparse.Namespace, ctx: Context) -> Outcome:
    state = _load_state(args.state, ctx)
    tols = ctx.tols
    result = check_schmidt_decomposable(state, tols.decision, tols.rank, tols.group)
    if not result.feasible:
        return Outcome(
            "not_decomposable",
            EXIT_NEGATIVE,
            residuals={"witness": result.witness},
            payload={"index": result.index, "reason": result.reason},
        )
    return Outcome(
        "decomposable",
        payload={
            "rank": result.rank,
            "coefficients": result.coeffs,
            "bases": [io.to_pairs(b) for b in result.per_party_bases],
        },
    )


def cmd_unitary_sim(args: argparse.Namespace, ctx: Context) -> Outcome:
    state = _load_state(args.state, ctx)
    op = _load_operator(args.op, ctx)
    acting = parse_party(args.acting, 2)

    if args.action == "construct":
        try:
            partner = construct_partner_unitary(state, op, ctx.tols, acting)
        except NotSimulable as exc:
            return Outcome("not_simulable", EXIT_NEGATIVE, payload={"reason": str(exc), "acting_party": acting})
        distance = verify_unitary_simulation(state, op, partner, acting, ctx.tols)
        if args.save_partner:
            io.save_operator(partner.matrix, Path(args.save_partner))
        return Outcome(
            "simulable",
            residuals={"verification_distance": distance},
            payload={"acting_party": acting, "partner_party": partner.party, "partner": io.to_pairs(partner.matrix)},
        )

    verdict = check_unitary_simulable(state, op, ctx.tols, acting)
    oracle = oracle_partner(state, op, ctx.tols, acting)
    residuals = {"offblock_residual": verdict.offblock_residual, "oracle_unitarity_residual": oracle.unitarity_residual}
    payload: dict[str, Any] = {
        "acting_party": acting,
        "block_sizes": verdict.blocks.block_sizes,
        "block_values": verdict.blocks.block_values,
    }
    if not verdict.simulable:
        return Outcome("not_simulable", EXIT_NEGATIVE, residuals, payload)
    residuals["verification_distance"] = verdict.verification_distance
    payload["partner"] = io.to_pairs(verdict.partner.matrix)
    return Outcome("simulable", EXIT_OK, residuals, payload)


def cmd_frame(args: argparse.Namespace, ctx: Context) -> Outcome:
    frame = build_frame(_load_state(args.state, ctx), ctx.tols)
    check = verify_frame(frame)
    residuals = {"residual_A": check.residual_A, "residual_B": check.residual_B, "residual_C": check.residual_C}
    if args.action == "verify":
        ok = check.max < ctx.tols.verify
        return Outcome("ok" if ok else "violated", EXIT_OK if ok else EXIT_NEGATIVE, residuals)
    return Outcome(
        "ok",
        residuals=residuals,
        payload={
            "ranks": frame.ranks,
            "spectra": frame.spectra,
            "coeff_tensor": io.to_pairs(frame.coeff_tensor),
            "bases": [io.to_pairs(b) for b in frame.bases],
        },
    )


def cmd_measure_sim(args: argparse.Namespace, ctx: Context) -> Outcome:
    state = _load_state(args.state, ctx)
    source = parse_party(args.source, state.n_parties)
    target = parse_party(args.target, state.n_parties)
    ops = _load_measurement(args.measurement, source, ctx)
    frame = build_frame(state, ctx.tols)
    result = construct_simulating_measurement(frame, ops, ctx.tols, source, target)
    checks = verify_measure_sim(frame, ops, result, ctx.tols)
    outcomes = [
        {
            "index": j,
            "feasibility_residual": result.feasibility_residuals[j],
            "f": result.f_constants[j],
            "h": result.h_constants[j],
            "skipped": check.skipped,
            "aligned_distance": check.aligned_distance,
            "raw_distance": check.raw_distance,
        }
        for j, check in enumerate(checks)
    ]
    feasible = result.feasible(ctx.tols.decision)
    return Outcome(
        "feasible" if feasible else "infeasible",
        EXIT_OK if feasible else EXIT_NEGATIVE,
        residuals={
            "max_feasibility_residual": max(result.feasibility_residuals),
            "completeness_residual": result.completeness_residual,
        },
        payload={
            "source": source,
            "target": target,
            "outcomes": outcomes,
            "target_ops": [io.to_pairs(op.matrix) for op in result.target_ops.operators],
        },
    )


def cmd_protocol(args: argparse.Namespace, ctx: Context) -> Outcome:
    state = _load_state(args.state, ctx)
    source = parse_party(args.source, state.n_parties)
    target = parse_party(args.target, state.n_parties)
    tols = ctx.tols
    msd = check_schmidt_decomposable(state, tols.decision, tols.rank, tols.group)
    if not msd.feasible:
        return Outcome(
            "not_decomposable",
            EXIT_NEGATIVE,
            residuals={"witness": msd.witness},
            payload={"index": msd.index, "reason": msd.reason},
        )

    if args.op:
        matrix = _load_operator(args.op, ctx)
        ops = measurement_set([matrix], source)
        mirrored = mirror_unitary(msd, matrix, source, target, tols)
    else:
        ops = _load_measurement(args.measurement, source, ctx)
        mirrored = mirror_measurement(msd, ops, source, target, tols)
    report = compare_branches(msd, ops, source, target, tols)
    return Outcome(
        "mirrored",
        residuals={
            "max_probability_match": report.max_probability_match,
            "max_spectator_distance": report.max_spectator_distance,
            "max_swap_relation_distance": report.max_swap_relation_distance,
            "max_spectra_deviation": report.max_spectra_deviation,
            "completeness_residual": report.completeness_residual,
        },
        payload={
            "source": source,
            "target": target,
            "records": [dataclasses.asdict(r) for r in report.records],
            "findings": report.findings,
            "mirrored_ops": [io.to_pairs(op.matrix) for op in mirrored.operators],
        },
    )


def cmd_gen(args: argparse.Namespace, ctx: Context) -> Outcome:
    seed = ctx.seed
    kind = args.kind
    if kind in ("state", "degenerate", "schmidt-state", "named"):
        dims = parse_int_list(args.dims)
        if kind == "named":
            state = named_state(args.name, args.parties)
        elif kind == "state":
            state = gen_random_state(dims, seed)
        elif kind == "degenerate":
            state = gen_degenerate_state(dims, parse_int_list(args.blocks), seed)
        else:
            coeffs = parse_float_list(args.coeffs) or None
            state = gen_schmidt_decomposable(dims, args.rank, seed, coeffs)
        data = {"dims": list(state.party_dims), "amps": io.to_pairs(state.amps)}
        save: Callable[[Path], None] = lambda path: io.save_state(state, path)
    elif kind in ("unitary", "block-unitary"):
        if kind == "unitary":
            op = gen_random_unitary(args.dim, seed)
        else:
            op = gen_block_unitary(parse_int_list(args.blocks), seed)
        data = {"dim": op.dim, "matrix": io.to_pairs(op.matrix)}
        save = lambda path: io.save_operator(op.matrix, path)
    else:
        ops = gen_measurement_set(args.dim, args.outcomes, seed, projective=args.projective)
        data = {"dim": ops.dim, "operators": [io.to_pairs(m.matrix) for m in ops.operators]}
        save = lambda path: io.save_measurement(ops, path)

    payload: dict[str, Any] = {"kind": kind, "seed": seed}
    if args.save:
        path = Path(args.save)
        save(path)
        ctx.digests["generated"] = io.digest(path)
        payload["file"] = str(path)
    else:
        payload["object"] = data
    return Outcome("ok", payload=payload)


def cmd_batch(args: argparse.Namespace, ctx: Context) -> Outcome:
    summary = run_batch(args.suite, args.count, ctx.seed, ctx.tols, ctx.config.workers)
    ok = summary.passed == len(summary.results)
    return Outcome(
        "pass" if ok else "fail",
        EXIT_OK if ok else EXIT_NEGATIVE,
        residuals=summary.maxima(),
        payload={
            "suite": summary.suite,
            "seeds": [ctx.seed, ctx.seed + args.count - 1],
            "passed": summary.passed,
            "failed": len(summary.results) - summary.passed,
            "failed_seeds": summary.failed_seeds,
            "instances": [dataclasses.asdict(r) for r in summary.results],
        },
    )


def _global_flags(parser: argparse.ArgumentParser, default: Any) -> None:
    parser.add_argument("--tol", type=float, default=default, help="decision tolerance override")
    parser.add_argument("--seed", type=int, default=default, help="64-bit seed (default LOCSIM_SEED)")
    parser.add_argument("--out", default=default, help="report path (default stdout)")
    parser.add_argument("--format", choices=REPORT_FORMATS, default=default, help="json or text (YAML)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="locsim", description="Local-operation simulation on pure states.")
    _global_flags(parser, None)
    # the same flags after the subcommand only override when given
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schmidt", parents=[common], help="Schmidt decomposition across a cut")
    p.add_argument("--state", required=True)
    p.add_argument("--cut", required=True, help="e.g. 0|1,2")
    p.set_defaults(handler=cmd_schmidt)

    p = sub.add_parser("decomposable", parents=[common], help="multipartite Schmidt decomposability")
    p.add_argument("--state", required=True)
    p.set_defaults(handler=cmd_decomposable)

    p = sub.add_parser("unitary-sim", parents=[common], help="partner unitaries on bipartite states")
    p.add_argument("action", choices=("check", "construct"))
    p.add_argument("--state", required=True)
    p.add_argument("--op", required=True)
    p.add_argument("--acting", default="1", help="party applying --op (A/B or 0/1)")
    p.add_argument("--save-partner", help="write the constructed partner to this operator file")
    p.set_defaults(handler=cmd_unitary_sim)

    p = sub.add_parser("frame", parents=[common], help="tripartite Schmidt frame")
    p.add_argument("action", choices=("build", "verify"))
    p.add_argument("--state", required=True)
    p.set_defaults(handler=cmd_frame)

    p = sub.add_parser("measure-sim", parents=[common], help="simulate a measurement from another party")
    p.add_argument("--state", required=True)
    p.add_argument("--measurement", required=True)
    p.add_argument("--source", default="B")
    p.add_argument("--target", default="A")
    p.set_defaults(handler=cmd_measure_sim)

    p = sub.add_parser("protocol", parents=[common], help="mirror an operation across a decomposable state")
    p.add_argument("action", choices=("run",))
    p.add_argument("--state", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--measurement")
    group.add_argument("--op", help="mirror a unitary instead of a measurement")
    p.add_argument("--source", default="B")
    p.add_argument("--target", default="A")
    p.set_defaults(handler=cmd_protocol)

    p = sub.add_parser("gen", parents=[common], help="seeded instances")
    p.add_argument(
        "kind", choices=("state", "unitary", "block-unitary", "degenerate", "schmidt-state", "measurement", "named")
    )
    p.add_argument("--dims", default="2,2")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--blocks", default="1")
    p.add_argument("--rank", type=int, default=1)
    p.add_argument("--coeffs")
    p.add_argument("--outcomes", type=int, default=2)
    p.add_argument("--projective", action="store_true")
    p.add_argument("--name", choices=NAMED_STATES, default="ghz", help="for `gen named`")
    p.add_argument("--parties", type=int, default=3)
    p.add_argument("--save", help="write the generated object here instead of into the report")
    p.set_defaults(handler=cmd_gen)

    p = sub.add_parser("batch", parents=[common], help="seeded property suites")
    p.add_argument("suite", choices=tuple(SUITES))
    p.add_argument("--count", type=int, default=10)
    p.set_defaults(handler=cmd_batch)
    return parser


def _fail(message: str, code: int) -> int:
    print(f"locsim: {message}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg = load_config()
    except ConfigError as exc:
        return _fail(str(exc), EXIT_INPUT)
    setup_logging(cfg.log_level)

    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    started = time.perf_counter()
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise InputError(f"--seed must fit in 64 unsigned bits, got {args.seed}")
        ctx = Context(
            config=cfg,
            tols=cfg.tolerances.with_decision(args.tol),
            seed=cfg.seed if args.seed is None else args.seed,
        )
        outcome = args.handler(args, ctx)
        report = Report(
            command=["locsim", *argv],
            input_digests=ctx.digests,
            verdict=outcome.verdict,
            residuals={k: v for k, v in outcome.residuals.items() if v is not None},
            tolerances=ctx.tols.as_dict(),
            wall_time=time.perf_counter() - started,
            payload=outcome.payload,
        )
    except InputError as exc:
        logger.debug("input error", exc_info=True)
        return _fail(str(exc), EXIT_INPUT)
    except (NumericalError, np.linalg.LinAlgError) as exc:
        logger.debug("numerical failure", exc_info=True)
        return _fail(f"numerical failure: {exc}", EXIT_NUMERICAL)

    text = emit(report, args.format or cfg.report_format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    logger.info("%s -> %s (exit %d)", args.command, outcome.verdict, outcome.exit_code)
    return outcome.exit_code
