"""Command-line front end over JSON problem instances.

Exit codes are a stable contract:

* 0 informative (or success for ``simulate``, agreement for ``verify``)
* 1 input error (unreadable file, schema violation, self-contradictory data)
* 2 not informative
* 3 violated assumption (no usable candidate, or data contradicting the prior)
* 4 integrity failure (checker and oracle disagree, or a post-hoc spot check fails)
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np

from .informativity import InformativityVerdict, Verdict, check_informativity
from .instance import (
    InstanceError,
    ProblemInstance,
    instance_to_dict,
    load_instance,
    parse_system_spec,
    resolve_dataset,
)
from .matspace import AffineMatrixSet, column_space_basis
from .oracle import (
    CrosscheckReport,
    DegenerateSetError,
    OracleResult,
    brute_force_informative,
    crosscheck_verdict,
)
from .solver import (
    NoRegularMemberError,
    ReducedRankError,
    ReducedResidualError,
    SolutionIntegrityError,
    pick_regular_member,
    solve_from_data,
    solve_reduced,
)
from .sysmodel import (
    Dataset,
    InconsistentDataError,
    SubspaceActionPrior,
    consistent_set,
    effective_rank_tol,
)

EXIT_INFORMATIVE = 0
EXIT_INPUT_ERROR = 1
EXIT_NOT_INFORMATIVE = 2
EXIT_ASSUMPTION_VIOLATED = 3
EXIT_INTEGRITY_FAILURE = 4

_EXIT_BY_TAG = {
    Verdict.INFORMATIVE: EXIT_INFORMATIVE,
    Verdict.NOT_INFORMATIVE: EXIT_NOT_INFORMATIVE,
    Verdict.ASSUMPTION_VIOLATED: EXIT_ASSUMPTION_VIOLATED,
}

_CONTRADICTION_REASON = (
    "dataset and prior knowledge contradict each other: the candidate set is empty"
)


@dataclass
class _Build:
    """Everything the analysis commands share, resolved from one instance."""

    inst: ProblemInstance
    path: str
    ds: Dataset
    S: AffineMatrixSet | None
    rank_tol: float
    eff_rank_tol: float
    gap_tol: float
    agree_tol: float
    seed: int


def _shared_options(f):
    opts = [
        click.option("--tol-rank", type=float, default=None,
                     help="Override the rank / residual tolerance."),
        click.option("--tol-gap", type=float, default=None,
                     help="Override the eigenvalue-gap tolerance."),
        click.option("--tol-agree", type=float, default=None,
                     help="Override the oracle agreement tolerance."),
        click.option("--seed", type=int, default=None,
                     help="Override the instance seed."),
        click.option("--json", "as_json", is_flag=True,
                     help="Emit a machine-readable JSON report instead of text."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _fail_input(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_INPUT_ERROR)


def _build(instance_path: str, tol_rank, tol_gap, tol_agree, seed) -> _Build:
    try:
        inst = load_instance(instance_path)
        tols = inst.tolerances
        rank_tol = tols.rank_tol if tol_rank is None else tol_rank
        gap_tol = tols.gap_tol if tol_gap is None else tol_gap
        agree_tol = tols.agree_tol if tol_agree is None else tol_agree
        for name, value in (("--tol-rank", rank_tol), ("--tol-gap", gap_tol),
                            ("--tol-agree", agree_tol)):
            if not (np.isfinite(value) and value > 0.0):
                raise InstanceError(f"{name} must be a positive finite number")
        ds = resolve_dataset(inst)
        S = consistent_set(ds, inst.prior, rank_tol)
    except (InstanceError, InconsistentDataError, ValueError) as exc:
        _fail_input(str(exc))
    return _Build(inst=inst, path=instance_path, ds=ds, S=S, rank_tol=rank_tol,
                  eff_rank_tol=effective_rank_tol(ds, rank_tol), gap_tol=gap_tol,
                  agree_tol=agree_tol, seed=seed if seed is not None else inst.seed)


def _fmt_matrix(M) -> str:
    return np.array2string(np.asarray(M, dtype=float) + 0.0, precision=10)


def _witness_dict(witness) -> dict:
    return {
        "member_a": witness.member_a.tolist(),
        "member_b": witness.member_b.tolist(),
        "solution_a": witness.solution_a.tolist(),
        "solution_b": witness.solution_b.tolist(),
        "spread": witness.spread,
    }


def _oracle_dict(result: OracleResult | None) -> dict | None:
    if result is None:
        return None
    return {
        "agree": result.agree,
        "max_spread": result.max_spread,
        "threshold": result.threshold,
        "samples": result.sample_count,
        "solution": None if result.solution is None else result.solution.tolist(),
        "witness": None if result.witness is None else _witness_dict(result.witness),
    }


def _report_skeleton(command: str, build: _Build) -> dict:
    return {
        "command": command,
        "instance": build.path,
        "tolerances": {
            "rank_tol": build.rank_tol,
            "gap_tol": build.gap_tol,
            "agree_tol": build.agree_tol,
            "effective_rank_tol": build.eff_rank_tol,
        },
        "dataset": {
            "samples": build.ds.sample_count,
            "exact": build.ds.exact,
            "derivative_error": build.ds.deriv_error,
        },
        "candidate_directions": None if build.S is None else build.S.dim,
        "seed": build.seed,
    }


def _emit(report: dict, human_lines: list[str], as_json: bool):
    if as_json:
        click.echo(json.dumps(report, indent=2))
    else:
        for line in human_lines:
            click.echo(line)


def _human_header(build: _Build) -> list[str]:
    kind = "exact" if build.ds.exact else "approximate (finite-difference)"
    lines = [f"instance: {build.path}",
             f"dataset: {build.ds.sample_count} samples, {kind} derivatives"]
    if not build.ds.exact:
        lines.append(
            f"note: rank decisions loosened to {build.eff_rank_tol:.3e} "
            "for approximate derivatives"
        )
    return lines


def _run_checker(build: _Build) -> InformativityVerdict:
    if build.S is None:
        return InformativityVerdict(Verdict.ASSUMPTION_VIOLATED, None,
                                    {"reason": _CONTRADICTION_REASON})
    return check_informativity(build.S, build.inst.Q, rank_tol=build.eff_rank_tol,
                               gap_tol=build.gap_tol, seed=build.seed)


@click.group()
@click.version_option(package_name="lyapdata")
def main():
    """Joint informativity analysis and data-driven Lyapunov solves.

    All analysis commands consume a JSON problem instance bundling a
    state-trajectory dataset (inline or simulated), prior knowledge about
    the unknown dynamics, and the Lyapunov right-hand side Q.
    """


@main.command("check")
@click.argument("instance_path", type=click.Path(exists=True, dir_okay=False))
@_shared_options
@click.option("--samples", type=int, default=32, show_default=True,
              help="Oracle sample count used for the witness search.")
def cmd_check(instance_path, tol_rank, tol_gap, tol_agree, seed, as_json, samples):
    """Decide whether the data-knowledge pair is jointly informative."""
    build = _build(instance_path, tol_rank, tol_gap, tol_agree, seed)
    verdict = _run_checker(build)
    witness = None
    if verdict.tag is Verdict.NOT_INFORMATIVE:
        try:
            oracle = brute_force_informative(build.S, build.inst.prior, build.inst.Q,
                                             samples, build.seed, build.agree_tol,
                                             build.gap_tol)
            if oracle.witness is not None:
                witness = oracle.witness
            else:
                verdict.certificate["witness_note"] = (
                    f"no witness found among {samples} samples"
                )
        except DegenerateSetError as exc:
            verdict.certificate["witness_note"] = str(exc)

    report = _report_skeleton("check", build)
    report["verdict"] = verdict.tag.value
    report["solution"] = None if verdict.solution is None else verdict.solution.tolist()
    report["certificate"] = verdict.certificate
    report["witness"] = None if witness is None else _witness_dict(witness)
    code = _EXIT_BY_TAG[verdict.tag]
    report["exit_code"] = code

    lines = _human_header(build)
    lines.append(f"verdict: {verdict.tag.value}")
    if verdict.tag is Verdict.INFORMATIVE:
        lines.append("solution:")
        lines.append(_fmt_matrix(verdict.solution))
        lines.append(f"residual: {verdict.certificate['residual']:.3e} "
                     f"(threshold {verdict.certificate['threshold']:.3e})")
    elif verdict.tag is Verdict.NOT_INFORMATIVE:
        lines.append(f"residual: {verdict.certificate['residual']:.3e} "
                     f"(threshold {verdict.certificate['threshold']:.3e})")
        if witness is not None:
            lines.append(f"witness: two candidates with solutions "
                         f"{witness.spread:.3e} apart")
            lines.append("candidate A:")
            lines.append(_fmt_matrix(witness.member_a))
            lines.append("solution A:")
            lines.append(_fmt_matrix(witness.solution_a))
            lines.append("candidate B:")
            lines.append(_fmt_matrix(witness.member_b))
            lines.append("solution B:")
            lines.append(_fmt_matrix(witness.solution_b))
        elif "witness_note" in verdict.certificate:
            lines.append(f"witness: {verdict.certificate['witness_note']}")
    else:
        lines.append(f"reason: {verdict.certificate.get('reason', 'unknown')}")
    _emit(report, lines, as_json)
    sys.exit(code)


@main.command("solve")
@click.argument("instance_path", type=click.Path(exists=True, dir_okay=False))
@_shared_options
@click.option("--reduced", is_flag=True,
              help="Use the reduced r^2-unknown solve (subspace-action priors only).")
def cmd_solve(instance_path, tol_rank, tol_gap, tol_agree, seed, as_json, reduced):
    """Compute the Lyapunov solution shared by every candidate matrix."""
    build = _build(instance_path, tol_rank, tol_gap, tol_agree, seed)
    if reduced and not isinstance(build.inst.prior, SubspaceActionPrior):
        _fail_input("--reduced requires a subspace_action prior")
    verdict = _run_checker(build)
    report = _report_skeleton("solve", build)
    report["verdict"] = verdict.tag.value
    report["certificate"] = verdict.certificate
    lines = _human_header(build)
    lines.append(f"verdict: {verdict.tag.value}")

    if verdict.tag is not Verdict.INFORMATIVE:
        report["solution"] = None
        code = _EXIT_BY_TAG[verdict.tag]
        report["exit_code"] = code
        if verdict.tag is Verdict.ASSUMPTION_VIOLATED:
            lines.append(f"reason: {verdict.certificate.get('reason', 'unknown')}")
        else:
            lines.append("no solution: the pair is not informative for this Q")
        _emit(report, lines, as_json)
        sys.exit(code)

    code = EXIT_INFORMATIVE
    try:
        if reduced:
            Z = column_space_basis(
                np.hstack([build.ds.state_matrix, build.inst.prior.vectors]),
                build.eff_rank_tol,
            )
            member = pick_regular_member(build.S, build.gap_tol, build.seed)
            result = solve_reduced(member, Z, build.inst.Q, build.eff_rank_tol)
            P = result.P
            report["reduced"] = {
                "rank": Z.shape[1],
                "unknowns": Z.shape[1] ** 2,
                "W": result.W.tolist(),
                "Z": Z.tolist(),
                "member": member.tolist(),
            }
        else:
            P = solve_from_data(build.S, build.inst.Q, build.gap_tol, build.seed)
    except NoRegularMemberError as exc:
        report.update(solution=None, exit_code=EXIT_ASSUMPTION_VIOLATED,
                      error=str(exc))
        _emit(report, lines + [f"error: {exc}"], as_json)
        sys.exit(EXIT_ASSUMPTION_VIOLATED)
    except ReducedResidualError as exc:
        report.update(solution=None, exit_code=EXIT_NOT_INFORMATIVE, error=str(exc))
        _emit(report, lines + [f"error: {exc}"], as_json)
        sys.exit(EXIT_NOT_INFORMATIVE)
    except (SolutionIntegrityError, ReducedRankError) as exc:
        report.update(solution=None, exit_code=EXIT_INTEGRITY_FAILURE, error=str(exc))
        _emit(report, lines + [f"error: {exc}"], as_json)
        sys.exit(EXIT_INTEGRITY_FAILURE)

    report["solution"] = P.tolist()
    report["exit_code"] = code
    lines.append("solution:")
    lines.append(_fmt_matrix(P))
    if reduced:
        lines.append(f"reduced solve: rank {report['reduced']['rank']}, "
                     f"{report['reduced']['unknowns']} unknowns")
        lines.append("W:")
        lines.append(_fmt_matrix(result.W))
        lines.append("Z:")
        lines.append(_fmt_matrix(Z))
    _emit(report, lines, as_json)
    sys.exit(code)


@main.command("verify")
@click.argument("instance_path", type=click.Path(exists=True, dir_okay=False))
@_shared_options
@click.option("--samples", type=int, default=32, show_default=True,
              help="Oracle sample count.")
def cmd_verify(instance_path, tol_rank, tol_gap, tol_agree, seed, as_json, samples):
    """Run both the checker and the sampling oracle and compare their verdicts."""
    build = _build(instance_path, tol_rank, tol_gap, tol_agree, seed)
    verdict = _run_checker(build)
    report = _report_skeleton("verify", build)
    report["checker"] = {
        "verdict": verdict.tag.value,
        "solution": None if verdict.solution is None else verdict.solution.tolist(),
        "certificate": verdict.certificate,
    }
    lines = _human_header(build)
    lines.append(f"checker verdict: {verdict.tag.value}")

    if build.S is None:
        # Nothing to sample from; an empty candidate set is the degenerate
        # outcome the violated-assumption verdict predicts.
        report.update(oracle=None, match=True, exit_code=EXIT_INFORMATIVE,
                      note=_CONTRADICTION_REASON)
        lines.append("oracle: skipped (empty candidate set)")
        lines.append("verdicts agree")
        _emit(report, lines, as_json)
        sys.exit(EXIT_INFORMATIVE)

    crosscheck: CrosscheckReport = crosscheck_verdict(
        build.S, build.inst.prior, build.inst.Q, verdict.tag,
        count=samples, seed=build.seed, agree_tol=build.agree_tol,
        gap_tol=build.gap_tol,
    )
    report["oracle"] = _oracle_dict(crosscheck.oracle)
    report["oracle_outcome"] = crosscheck.oracle_outcome
    report["retried"] = crosscheck.retried
    report["match"] = crosscheck.match
    if crosscheck.note:
        report["note"] = crosscheck.note
    code = EXIT_INFORMATIVE if crosscheck.match else EXIT_INTEGRITY_FAILURE
    report["exit_code"] = code

    lines.append(f"oracle outcome: {crosscheck.oracle_outcome}"
                 + (" (after retry)" if crosscheck.retried else ""))
    if crosscheck.oracle is not None:
        lines.append(f"oracle max spread: {crosscheck.oracle.max_spread:.3e} "
                     f"(threshold {crosscheck.oracle.threshold:.3e}, "
                     f"{crosscheck.oracle.sample_count} samples)")
    if crosscheck.note:
        lines.append(f"note: {crosscheck.note}")
    lines.append("verdicts agree" if crosscheck.match
                 else "INTEGRITY FAILURE: checker and oracle disagree")
    _emit(report, lines, as_json)
    sys.exit(code)


@main.command("simulate")
@click.argument("system_spec_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("out_path", type=click.Path(dir_okay=False))
def cmd_simulate(system_spec_path, out_path):
    """Simulate a trajectory from a system spec and write an instance file.

    The spec provides A, x0 and times (plus optional n, Q, prior,
    tolerances, seed, which are carried into the written instance).
    """
    try:
        raw = Path(system_spec_path).read_text()
        spec = parse_system_spec(raw, system_spec_path)
        ds = resolve_dataset(spec)
    except (InstanceError, ValueError, OSError) as exc:
        _fail_input(str(exc))
    if np.allclose(spec.generator.x0, 0.0):
        click.echo("warning: x0 is zero, the simulated data carry no information",
                   err=True)
    out = instance_to_dict(ProblemInstance(
        n=spec.n, Q=spec.Q, prior=spec.prior, dataset=ds,
        tolerances=spec.tolerances, seed=spec.seed,
    ))
    try:
        Path(out_path).write_text(json.dumps(out, indent=2) + "\n")
    except OSError as exc:
        _fail_input(f"cannot write {out_path}: {exc}")
    click.echo(f"wrote {out_path} ({ds.sample_count} samples, exact derivatives)")
    sys.exit(0)


if __name__ == "__main__":
    main()
