# resonance_lab/main.py

import argparse
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

# --- Configuration and Setup ---
from resonance_lab import config
from resonance_lab.errors import NumericalError, PotentialError, ResonanceLabError, RunConfigError
from resonance_lab.run_config import RunConfig, load_config, with_overrides

# --- Import Core Modules ---
from resonance_lab.classical.dynamics import empirical_band_top, gap_report
from resonance_lab.exact.rootfind import ResidualEvaluator, SpectralWindow, count_zeros, locate_all, match_predictions
from resonance_lab.exact.shooting import constant_well_roots
from resonance_lab.model.shapes import PolynomialShape
from resonance_lab.persistence import RunManifest, round_trips, write_results
from resonance_lab.semiclassical.asymptotic import (
    Tier,
    default_depth_multiplier,
    index_set,
    log_inverse,
    predict_all,
    spacing_constant,
)
from resonance_lab.semiclassical.quadrature import build_action_table

# --- Master Logging Configuration ---
# This sets up logging for the entire application run.
logging.basicConfig(
    level=config.LOG_LEVEL,
    format='%(asctime)s - %(levelname)s - [%(module)s] - %(message)s',
    handlers=[
        logging.FileHandler(config.LOG_FILE, delay=True),
        logging.StreamHandler()
    ]
)

COMMANDS = ("predict", "compute", "compare", "count", "gap", "oracle")

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL, EXIT_NUMERICAL = 0, 2, 3, 4


@dataclass
class HResult:
    h: float
    records: list = field(default_factory=list)
    rows: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    partial: bool = False
    wall_time: float = 0.0


def setup(run: RunConfig):
    """Ensures all necessary directories from the config exist."""
    logging.info("--- Initializing Setup ---")
    for directory in [*config.REQUIRED_DIRS, run.output_dir]:
        try:
            directory.mkdir(parents=True, exist_ok=True)
            logging.info(f"Directory ensured: {directory}")
        except OSError as e:
            logging.critical(f"FATAL: Could not create required directory {directory}. Error: {e}")
            raise


# --- Per-h commands ---

def _depth_scaled(z: complex, h: float) -> float:
    return -z.imag / (h * log_inverse(h))


def _window(run: RunConfig, h: float) -> SpectralWindow:
    M = run.M
    if M is None:
        try:
            M = default_depth_multiplier(run.potential, run.window, h)
        except PotentialError as e:
            raise RunConfigError(f"window.M is required here: {e}", key="window.M") from e
    return SpectralWindow(run.window[0], run.window[1], M, h, run.levels)


def _predictions(run: RunConfig, h: float, tier: Tier | None = None) -> list:
    table = build_action_table(run.potential, run.window)
    return predict_all(run.potential, run.window, h, tier or run.tier, table, run.K)


def _locate(run: RunConfig, h: float, seeds=()):
    window = _window(run, h)
    evaluator = ResidualEvaluator(run.potential, h, tol=run.tolerances["shoot_rtol"])
    return window, locate_all(window, run.potential, h, evaluator, seeds)


def _unresolved_summary(result) -> list[dict]:
    return [{"cell": u.cell.to_dict(), "winding": u.winding, "reason": u.reason} for u in result.unresolved]


def cmd_predict(run: RunConfig, h: float) -> HResult:
    predictions = _predictions(run, h)
    rows = [
        {"n": p.n, "h": h, "re_z": p.z_n.real, "im_z": p.z_n.imag, "E_n": p.E_n, "tier": p.tier.value,
         "depth_scaled": _depth_scaled(p.z_n, h)}
        for p in predictions
    ]
    summary = {"count": len(predictions), "tier": run.tier.value}
    if len(predictions) > 1:
        summary["spacing_constant"] = spacing_constant(predictions)
    return HResult(h=h, records=predictions, rows=rows, summary=summary)


def cmd_compute(run: RunConfig, h: float) -> HResult:
    window, result = _locate(run, h)
    rows = [
        {"index": i, "re_z": r.z.real, "im_z": r.z.imag, "residual_norm": r.residual_norm,
         "newton_iters": r.newton_iters, "depth_scaled": _depth_scaled(r.z, h)}
        for i, r in enumerate(result.roots)
    ]
    summary = {
        "M": window.M,
        "depth": window.depth,
        "total_count": result.total_count,
        "located": len(result.roots),
        "unresolved": _unresolved_summary(result),
        "evaluations": result.evaluations,
        "empirical_band_top": empirical_band_top(result.roots, h),
    }
    return HResult(h=h, records=result.roots, rows=rows, summary=summary, partial=bool(result.unresolved))


def cmd_compare(run: RunConfig, h: float) -> HResult:
    predictions = _predictions(run, h)
    window, result = _locate(run, h, [p.z_n for p in predictions])
    report, tagged = match_predictions(result.roots, predictions, h)
    rows = [
        {"n": pair["n"], "re_z_computed": pair["z_computed"].real, "im_z_computed": pair["z_computed"].imag,
         "re_z_predicted": pair["z_predicted"].real, "im_z_predicted": pair["z_predicted"].imag,
         "abs_dz": pair["abs_dz"], "normalized": pair["normalized"]}
        for pair in report.pairs
    ]
    summary = {
        "M": window.M,
        "tier": run.tier.value,
        "predicted": len(predictions),
        "computed": len(result.roots),
        "max_error": report.max_error,
        "median_error": report.median_error,
        "max_normalized": report.max_normalized,
        "median_normalized": report.median_normalized,
        "unmatched_computed": report.unmatched_computed,
        "unmatched_predicted": report.unmatched_predicted,
        "mismatch": report.mismatch,
        "pairs": report.pairs,
        "unresolved": _unresolved_summary(result),
    }
    if len(predictions) > 1:
        summary["spacing_constant"] = spacing_constant(predictions)
    by_index = {p.n: p for p in predictions}
    paired = [replace(by_index[pair["n"]], z_n=pair["z_computed"]) for pair in report.pairs]
    if len(paired) > 1:
        summary["computed_spacing_constant"] = spacing_constant(paired)
    return HResult(h=h, records=tagged, rows=rows, summary=summary,
                   partial=report.mismatch or bool(result.unresolved))


def cmd_count(run: RunConfig, h: float) -> HResult:
    window = _window(run, h)
    evaluator = ResidualEvaluator(run.potential, h, tol=run.tolerances["shoot_rtol"])
    winding = count_zeros(window.rectangle, evaluator, h)
    indices = index_set(run.potential, run.window, h)
    row = {"h": h, "M": window.M, "winding": winding, "index_count": len(indices),
           "difference": winding - len(indices)}
    logging.info(f"h={h}: winding {winding} vs |N(h)| = {len(indices)}")
    return HResult(h=h, records=[row], rows=[row], summary=dict(row), partial=abs(winding - len(indices)) > 1)


def cmd_gap(run: RunConfig, h: float) -> HResult:
    report = gap_report(run.potential, run.window, strict=False)
    _, result = _locate(run, h, [p.z_n for p in _predictions(run, h, Tier.CLOSED_FORM)])
    empirical = empirical_band_top(result.roots, h)
    threshold = -0.9 * report.nu0_bound * h * log_inverse(h) + 5 * h if math.isfinite(report.nu0_bound) else 0.0
    violations = [r.z for r in result.roots if r.z.imag > threshold]
    summary = {
        **report.to_dict(),
        "empirical_band_top": empirical,
        "band_top_relative_error": (abs(empirical - report.band_top) / report.band_top
                                    if empirical is not None and report.band_top > 0 else None),
        "strip_threshold": threshold,
        "strip_violations": violations,
    }
    summary.pop("samples")
    return HResult(h=h, records=result.roots, rows=report.samples, summary=summary,
                   partial=bool(violations) or bool(result.unresolved) or not report.consistent)


def cmd_oracle(run: RunConfig, h: float) -> HResult:
    V = run.potential
    shape = V.pieces[0].shape
    if len(V.pieces) != 1 or not isinstance(shape, PolynomialShape) or len(shape.coefficients) != 1:
        raise RunConfigError("The oracle command needs a single constant piece.", key="potential")
    V0, L = shape.coefficients[0], V.support_right
    window, result = _locate(run, h)
    exact = constant_well_roots(V0, L, h, run.window, window.depth)
    wkb = [p.z_n for p in _predictions(run, h, Tier.QC_WKB)]
    computed = [r.z for r in result.roots]

    def nearest(z, candidates):
        return min(candidates, key=lambda c: abs(c - z)) if candidates else None

    rows = []
    for z in exact:
        shot, qc = nearest(z, computed), nearest(z, wkb)
        rows.append({
            "re_z_oracle": z.real, "im_z_oracle": z.imag,
            "re_z_shooting": shot.real if shot is not None else None,
            "im_z_shooting": shot.imag if shot is not None else None,
            "abs_dz_shooting": abs(shot - z) if shot is not None else None,
            "re_z_qc_wkb": qc.real if qc is not None else None,
            "im_z_qc_wkb": qc.imag if qc is not None else None,
            "abs_dz_qc_wkb": abs(qc - z) if qc is not None else None,
        })
    shooting_errors = [row["abs_dz_shooting"] for row in rows if row["abs_dz_shooting"] is not None]
    qc_errors = [row["abs_dz_qc_wkb"] for row in rows if row["abs_dz_qc_wkb"] is not None]
    max_shooting = max(shooting_errors, default=0.0)
    agree = len(exact) == len(computed) and max_shooting <= 1e-8
    summary = {
        "V0": V0,
        "oracle_count": len(exact),
        "shooting_count": len(computed),
        "qc_wkb_count": len(wkb),
        "max_abs_dz_shooting": max_shooting,
        "max_abs_dz_qc_wkb": max(qc_errors, default=0.0),
        "agree": agree,
    }
    logging.info(f"Oracle h={h}: {len(exact)} exact, {len(computed)} shooting, max |Δz| = {max_shooting:.3e}")
    return HResult(h=h, records=result.roots, rows=rows, summary=summary, partial=not agree)


HANDLERS = {
    "predict": cmd_predict,
    "compute": cmd_compute,
    "compare": cmd_compare,
    "count": cmd_count,
    "gap": cmd_gap,
    "oracle": cmd_oracle,
}


def run_for_h(command: str, run: RunConfig, h: float) -> HResult:
    """One command at one h; top-level so worker processes can pickle it."""
    started = time.perf_counter()
    logging.info(f"--- {command} at h={h} ---")
    outcome = HANDLERS[command](run, h)
    outcome.wall_time = time.perf_counter() - started
    return outcome


def run_job(command: str, run: RunConfig, workers: int = config.WORKERS) -> int:
    """
    Executes one command over every h in the config and writes the result files
    plus the manifest. Returns the process exit code.
    """
    logging.info(f"========= STARTING NEW JOB | {command} | config {run.config_hash[:12]} =========")
    try:
        logging.info(f"--- Step 1: Running {command} for h in {list(run.h_list)} ---")
        if workers > 1 and len(run.h_list) > 1:
            with ProcessPoolExecutor(max_workers=min(workers, len(run.h_list))) as pool:
                futures = [pool.submit(run_for_h, command, run, h) for h in run.h_list]
                outcomes = [future.result() for future in futures]
        else:
            outcomes = [run_for_h(command, run, h) for h in run.h_list]

        logging.info("--- Step 2: Writing Results ---")
        manifest = RunManifest(command=command, config_hash=run.config_hash, deterministic=run.deterministic)
        for outcome in outcomes:
            if not outcome.records:
                logging.warning(f"No records for {command} at h={outcome.h}; writing an empty result file.")
            json_path, csv_path = write_results(run.output_dir, command, outcome.h, outcome.records,
                                                outcome.rows, outcome.summary)
            manifest.add(outcome.h, json_path, csv_path, "partial" if outcome.partial else "ok",
                         round_trips(json_path, outcome.records), outcome.wall_time)
        manifest.write(run.output_dir)

        if not all(entry["validation"]["round_trip"] for entry in manifest.results):
            raise NumericalError("A result file did not round-trip; see the manifest.")
        if any(outcome.partial for outcome in outcomes):
            logging.error("========= JOB FINISHED WITH PARTIAL RESULTS =========")
            return EXIT_PARTIAL
        logging.info("========= JOB COMPLETED SUCCESSFULLY =========")
        return EXIT_OK

    except RunConfigError as e:
        logging.critical(f"Configuration error: {e}")
        logging.critical("========= JOB FAILED =========")
        return EXIT_CONFIG
    except NumericalError as e:
        logging.critical(f"Numerical failure during the job: {e}")
        logging.critical("========= JOB FAILED =========")
        return EXIT_NUMERICAL
    except ResonanceLabError as e:
        logging.critical(f"Invalid input during the job: {e}")
        logging.critical("========= JOB FAILED =========")
        return EXIT_CONFIG


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="resonance-lab",
                                     description="Resonances of 1D semiclassical Schrödinger operators.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="TOML run configuration")
    parser.add_argument("--h", type=float, nargs="+", help="override h_list")
    parser.add_argument("--M", type=float, help="override the window depth multiplier")
    parser.add_argument("--out", help="override the output directory")
    parser.add_argument("--workers", type=int, default=config.WORKERS, help="processes for per-h dispatch")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run = with_overrides(load_config(args.config), h=args.h, M=args.M, out=args.out)
    except RunConfigError as e:
        logging.critical(f"Configuration error: {e}")
        return EXIT_CONFIG
    setup(run)
    return run_job(args.command, run, args.workers)


if __name__ == '__main__':
    # This is the entry point when the module is run directly.
    sys.exit(main())
