import argparse
import sys
import time
from typing import Dict, List, Optional, Sequence

from app.config.settings import reload_settings
from app.core.exceptions import QuditBellError, UnsupportedDimensionError
from app.core.schemas import FigureData, OptimizerConfig, RunReport
from app.services import lhv_service, optimizer_service, quantum_service, verification_service
from app.utils.file_manager import save_figure, save_report
from app.utils.logger import setup_logger


logger = setup_logger("run_bell")

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_UNSUPPORTED = 2
EXIT_IO = 4

FIGURE_DEFAULT_RESOLUTION = {"fig1": 20, "fig2-r1": 50, "fig2-r2": 50}


def _elapsed_ms(started: float) -> int:
    return int(round((time.perf_counter() - started) * 1000))


def cmd_classical(d: int, method: str = "analytic") -> RunReport:
    """经典界：brute 仅支持 d <= brute_force_max_d"""
    started = time.perf_counter()
    if method == "brute":
        result = lhv_service.brute_force_bounds_exact(d)
        results = {
            "min": float(result.min_value),
            "max": float(result.max_value),
            "min_exact": str(result.min_value),
            "max_exact": str(result.max_value),
            "assignments_scanned": result.assignments_scanned,
            "argmin": result.argmin.as_dict(),
            "argmax": result.argmax.as_dict(),
        }
        bounds = (float(result.min_value), float(result.max_value))
    elif method == "analytic":
        low, high = lhv_service.analytic_bounds_exact(d)
        results = {"min": float(low), "max": float(high), "min_exact": str(low), "max_exact": str(high)}
        bounds = (float(low), float(high))
    else:
        raise UnsupportedDimensionError(f"unknown method {method!r}, expected 'brute' or 'analytic'")
    return RunReport(
        command="classical",
        d=d,
        inputs={"method": method},
        results=results,
        classical_bounds=bounds,
        violated=False,
        timing_ms=_elapsed_ms(started),
    )


def cmd_quantum(d: int) -> RunReport:
    started = time.perf_counter()
    result = quantum_service.evaluate_reference_configuration(d)
    results: Dict[str, object] = {
        "quantum_value": result.quantum_value,
        "ratio": result.ratio,
        "max_eigenvalue": result.max_eigenvalue,
    }
    if result.closed_form is not None:
        results["closed_form"] = result.closed_form
        results["gauss_sum"] = result.gauss_sum
        results["printed_xi_real"] = result.printed_xi.real
        results["printed_xi_imag"] = result.printed_xi.imag
    return RunReport(
        command="quantum",
        d=d,
        results=results,
        classical_bounds=(result.classical_lower, result.classical_upper),
        violated=result.violated,
        timing_ms=_elapsed_ms(started),
    )


def cmd_noise(d: int) -> RunReport:
    """Raises NoViolationError when the reference state does not violate at this d."""
    started = time.perf_counter()
    threshold = quantum_service.noise_threshold(d)
    low, high = lhv_service.analytic_bounds(d)
    return RunReport(
        command="noise",
        d=d,
        results={
            "quantum_value": threshold.quantum_value,
            "p_min": threshold.p_closed_form,
            "p_min_bisection": threshold.p_bisection,
            "agreement": threshold.agreement,
        },
        classical_bounds=(low, high),
        violated=True,
        timing_ms=_elapsed_ms(started),
    )


def build_figure(which: str, resolution: int, cfg: OptimizerConfig) -> FigureData:
    if which == "fig1":
        grid = optimizer_service.triangle_grid(resolution, cfg)
        rows = [list(p.point.squares) + [p.bell_max] for p in grid]
        columns = ["c0sq", "c1sq", "c2sq", "bell_max"]
    elif which in ("fig2-r1", "fig2-r2"):
        sweep = optimizer_service.route_sweep(which.split("-")[1], resolution, cfg)
        rows = [[p.entropy, p.bell_max] for p in sweep]
        columns = ["entropy", "bell_max"]
    else:
        raise UnsupportedDimensionError(f"unknown figure {which!r}")
    return FigureData(
        figure=which,
        columns=columns,
        rows=rows,
        inputs={"resolution": resolution, "restarts": cfg.restarts, "seed": cfg.seed},
    )


def cmd_figure(
    which: str,
    resolution: Optional[int] = None,
    out_path: Optional[str] = None,
    fmt: str = "json",
    cfg: Optional[OptimizerConfig] = None,
) -> RunReport:
    """生成图数据文件（I/O 失败抛出 OSError）"""
    started = time.perf_counter()
    cfg = cfg or OptimizerConfig()
    resolution = resolution or FIGURE_DEFAULT_RESOLUTION.get(which, 20)
    figure = build_figure(which, resolution, cfg)
    path = save_figure(figure, out_path or f"{which}.{fmt}", fmt)
    values = [row[-1] for row in figure.rows]
    return RunReport(
        command="figure",
        d=3,
        inputs={"figure": which, "resolution": resolution, "format": fmt, "restarts": cfg.restarts, "seed": cfg.seed},
        results={"rows": len(figure.rows), "bell_max": max(values), "path": str(path)},
        timing_ms=_elapsed_ms(started),
    )


def cmd_verify(overrides: Optional[Dict[str, float]] = None) -> RunReport:
    started = time.perf_counter()
    checks = verification_service.run_golden_checks(overrides)
    summary = verification_service.summarize(checks)
    return RunReport(
        command="verify",
        d=0,
        inputs={"overrides": dict(overrides or {})},
        results={**summary, "checks": [c.model_dump() for c in checks]},
        timing_ms=_elapsed_ms(started),
    )


def format_check_table(report: RunReport) -> str:
    lines = [f"{'check':<34}{'expected':>20}{'actual':>20}{'tol':>10}  result"]
    for c in report.results["checks"]:
        lines.append(
            f"{c['name']:<34}{c['expected']:>20.12g}{c['actual']:>20.12g}{c['tolerance']:>10.1e}  "
            f"{'PASS' if c['passed'] else 'FAIL'}"
        )
    lines.append(f"{report.results['passed']}/{report.results['total']} passed")
    return "\n".join(lines)


def _parse_override(text: str) -> tuple:
    name, _, value = text.partition("=")
    if not name or not value:
        raise argparse.ArgumentTypeError(f"override must look like NAME=VALUE, got {text!r}")
    return name, float(value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="run_bell",
        description="Multi-setting Bell inequalities for prime-dimensional qudits.",
    )
    parser.add_argument("--env-file", default="", help="Reload settings from this .env file before running.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classical", help="Classical (local hidden variable) bounds.")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--method", choices=["brute", "analytic"], default="analytic")
    p.add_argument("--out", type=str, default="", help="Also save the JSON report to this path.")

    for name, help_text in (
        ("quantum", "Quantum value of the reference settings and state."),
        ("noise", "White-noise threshold p_min."),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--d", type=int, required=True)
        p.add_argument("--out", type=str, default="", help="Also save the JSON report to this path.")

    p = sub.add_parser("figure", help="Emit the triangle grid or a route sweep as data.")
    p.add_argument("which", choices=["fig1", "fig2-r1", "fig2-r2"])
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", type=str, default="")
    p.add_argument("--format", choices=["json", "csv"], default="json")

    p = sub.add_parser("verify", help="Run the golden-number regression table.")
    p.add_argument(
        "--expect",
        type=_parse_override,
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="Override the expected value of one check.",
    )
    p.add_argument("--out", type=str, default="")
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def _dispatch(args: argparse.Namespace) -> RunReport:
    if args.command == "classical":
        return cmd_classical(args.d, args.method)
    if args.command == "quantum":
        return cmd_quantum(args.d)
    if args.command == "noise":
        return cmd_noise(args.d)
    if args.command == "figure":
        overrides = {"restarts": args.restarts, "seed": args.seed}
        cfg = OptimizerConfig(**{k: v for k, v in overrides.items() if v is not None})
        return cmd_figure(args.which, args.resolution, args.out or None, args.format, cfg)
    report = cmd_verify(dict(args.expect))
    print(format_check_table(report), file=sys.stderr)
    return report


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on bad usage, which is also our "unsupported input" code
        return int(e.code or 0)

    try:
        if args.env_file:
            reload_settings(args.env_file)
        report = _dispatch(args)
        if args.command != "figure" and args.out:
            save_report(report, args.out)
    except QuditBellError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except (KeyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO

    print(report.to_json())
    if report.command == "verify" and report.results["failed"]:
        return EXIT_VERIFY_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
