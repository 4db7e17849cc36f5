"""Command-line entry point: run scenarios, emit text/JSON/CSV reports."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from . import __version__
from .classical import search_losr, search_memoryless
from .game import ScenarioResult, all_orders, trit_game, two_party_game
from .network import nonsignaling_program, solve_nonsignaling
from .quantum import (
    perfect_discrimination_state,
    quantum_memoryless_optimum,
    routing_matrix,
    sampled_discrimination_values,
    unbiased_order_states,
    verify_perfect_discrimination,
)
from .solver import SolveSettings, SolverFailed, dump_tableau, solve_shared_state_feasibility
from .tensor import operator_jsonable

SCENARIOS = (
    "two-party",
    "trit",
    "classical-memoryless",
    "losr",
    "nonsignaling",
    "quantum-memoryless",
    "lose-verify",
    "lose-sdp",
)

#: Probabilities the scenarios are expected to reproduce (used by --check).
EXPECTED = {
    "two-party": Fraction(1),
    "trit": Fraction(1),
    "classical-memoryless": Fraction(1, 3),
    "losr": Fraction(5, 6),
    "nonsignaling": Fraction(5, 6),
    "quantum-memoryless": Fraction(1, 3),
    "lose-verify": Fraction(1),
    "lose-sdp": Fraction(1),
}

#: Scenarios whose probability must be an exact rational, not a solver float.
EXACT_SCENARIOS = {"two-party", "trit", "classical-memoryless", "losr", "lose-verify"}


@dataclass
class RunConfig:
    scenario: str = "all"
    tolerance: float = 1e-8
    max_iters: int = 200_000
    seed: int = 42
    output: str = "text"
    dump_matrices: bool = False
    check: bool = False

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iters <= 0:
            raise ValueError("max_iters must be positive")

    def solver_settings(self) -> SolveSettings:
        return SolveSettings(tolerance=self.tolerance, max_iters=self.max_iters)


@dataclass
class Report:
    results: list[ScenarioResult]
    versions: str
    settings: RunConfig
    wall_time_ms: dict[str, float] = field(default_factory=dict)
    failures: dict[str, str] = field(default_factory=dict)
    files_written: list[str] = field(default_factory=list)


def _run_scenario(name: str, config: RunConfig) -> ScenarioResult:
    settings = config.solver_settings()
    if name == "two-party":
        return two_party_game()
    if name == "trit":
        return trit_game()
    if name == "classical-memoryless":
        return search_memoryless()
    if name == "losr":
        return search_losr()
    if name == "nonsignaling":
        return solve_nonsignaling(settings)
    if name == "quantum-memoryless":
        result = quantum_memoryless_optimum(unbiased_order_states(), settings)
        scan = sampled_discrimination_values(n_samples=100, seed=config.seed)
        result.certificate["sampled_check"] = {
            "samples": 100,
            "seed": config.seed,
            "max_value": scan.max_value,
        }
        return result
    if name == "lose-verify":
        return verify_perfect_discrimination(perfect_discrimination_state())
    if name == "lose-sdp":
        pair_ops = {
            (pp.name, p.name): routing_matrix(pp).op.to_float().data.conj().T
            @ routing_matrix(p).op.to_float().data
            for pp in all_orders()
            for p in all_orders()
            if pp != p
        }
        state, solver_report = solve_shared_state_feasibility(pair_ops, settings)
        result = verify_perfect_discrimination(
            state, atol=max(config.tolerance, 1e-8), scenario="lose-sdp"
        )
        result.certificate["solver"] = solver_report.jsonable()
        return result
    raise ValueError(f"unknown scenario: {name}")


def run(config: RunConfig) -> Report:
    names = list(SCENARIOS) if config.scenario == "all" else [config.scenario]
    report = Report(results=[], versions=__version__, settings=config)
    for name in sorted(names):
        start = time.perf_counter()
        try:
            result = _run_scenario(name, config)
            report.results.append(result)
        except SolverFailed as exc:
            report.failures[name] = str(exc)
        report.wall_time_ms[name] = (time.perf_counter() - start) * 1000.0
    if config.dump_matrices:
        report.files_written = _dump_matrices()
    return report


def _dump_matrices() -> list[str]:
    payload = {
        "shared_state": operator_jsonable(perfect_discrimination_state()),
        "routing": {
            pi.name: operator_jsonable(routing_matrix(pi).op) for pi in all_orders()
        },
    }
    with open("matrices.json", "w") as fh:
        json.dump(payload, fh)
    with open("nonsignaling.tableau", "w") as fh:
        fh.write(dump_tableau(nonsignaling_program()))
    return ["matrices.json", "nonsignaling.tableau"]


def check_report(report: Report, tolerance: float) -> list[str]:
    """Compare each result against its built-in expected value."""
    problems = list(report.failures)
    slack = max(tolerance, 1e-6)
    for result in report.results:
        expected = EXPECTED[result.scenario]
        if result.scenario in EXACT_SCENARIOS:
            if result.probability != expected:
                problems.append(
                    f"{result.scenario}: got {result.probability}, expected {expected}"
                )
        elif abs(result.probability_float - float(expected)) > slack:
            problems.append(
                f"{result.scenario}: got {result.probability_float}, expected "
                f"{float(expected)} within {slack}"
            )
    return problems


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------


def _result_row(result: ScenarioResult, report: Report) -> dict:
    solver = result.certificate.get("solver", {})
    return {
        "scenario": result.scenario,
        "probability": result.probability_float,
        "exact": result.probability_exact or "",
        "residual": solver.get("primal_residual", 0.0),
        "iterations": solver.get("iterations", 0),
        "wall_time_ms": report.wall_time_ms.get(result.scenario, 0.0),
    }


def emit(report: Report, fmt: str) -> str:
    if fmt == "json":
        payload = {
            "results": [
                {
                    "scenario": r.scenario,
                    "probability": r.probability_float,
                    "exact": r.probability_exact,
                    "strategy": r.strategy,
                    "certificate": _jsonable(r.certificate),
                    "wall_time_ms": report.wall_time_ms.get(r.scenario, 0.0),
                }
                for r in report.results
            ],
            "failures": report.failures,
            "versions": report.versions,
            "settings": asdict(report.settings),
            "files_written": report.files_written,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(
            buf,
            fieldnames=["scenario", "probability", "exact", "residual", "iterations", "wall_time_ms"],
        )
        writer.writeheader()
        for result in report.results:
            writer.writerow(_result_row(result, report))
        return buf.getvalue()
    # text
    lines = [
        f"{'scenario':<22}{'probability':<16}{'exact':<8}{'residual':<12}"
        f"{'iters':<9}{'ms':<10}"
    ]
    for result in report.results:
        row = _result_row(result, report)
        lines.append(
            f"{row['scenario']:<22}{row['probability']:<16.10f}{row['exact']:<8}"
            f"{row['residual']:<12.2e}{row['iterations']:<9}{row['wall_time_ms']:<10.1f}"
        )
    for name, message in report.failures.items():
        lines.append(f"{name:<22}FAILED: {message}")
    if len(report.results) == len(SCENARIOS):
        headline = {r.scenario: r for r in report.results}
        lines.append("")
        lines.append(
            "headline probabilities: classical memoryless "
            f"{headline['classical-memoryless'].probability_exact}, "
            f"shared randomness {headline['losr'].probability_exact}, "
            f"non-signaling {headline['nonsignaling'].probability_float:.6f}, "
            f"quantum memoryless {headline['quantum-memoryless'].probability_float:.6f}, "
            f"shared entanglement {headline['lose-verify'].probability_exact}"
        )
    return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (bool, int, float, str)) or obj is None:
        return obj
    return str(obj)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ordergame",
        description="Optimal strategies for the three-party order-guessing game.",
    )
    parser.add_argument("--scenario", choices=SCENARIOS + ("all",), default="all")
    parser.add_argument("--tolerance", type=float, default=1e-8, help="solver tolerance")
    parser.add_argument("--max-iters", type=int, default=200_000, help="solver iteration cap")
    parser.add_argument("--seed", type=int, default=42, help="seed for sampled checks")
    parser.add_argument("--output", choices=("text", "json", "csv"), default="text")
    parser.add_argument(
        "--dump-matrices",
        action="store_true",
        help="write matrices.json and nonsignaling.tableau to the working directory",
    )
    parser.add_argument(
        "--check",
        action="store_true",
        help="exit nonzero unless every scenario matches its expected value "
        "(within max(tolerance, 1e-6) for solver scenarios)",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = RunConfig(
        scenario=args.scenario,
        tolerance=args.tolerance,
        max_iters=args.max_iters,
        seed=args.seed,
        output=args.output,
        dump_matrices=args.dump_matrices,
        check=args.check,
    )
    report = run(config)
    sys.stdout.write(emit(report, config.output))
    if report.failures:
        return 2
    if config.check:
        problems = check_report(report, config.tolerance)
        if problems:
            for problem in problems:
                sys.stderr.write(f"check failed: {problem}\n")
            return 1
        sys.stderr.write("all checks passed\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
