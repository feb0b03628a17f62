"""Command line front end: ``ambsim <command> [options]``.

Exit status is 0 on success, 1 when a run finished but tripped an invariant
check, 2 for invalid input or scenes and 3 when the solver failed.
"""

import argparse
import logging
import sys
import time
from pathlib import Path

from scripts import config
from scripts.analysis.analytic import opssa_match_table
from scripts.analysis.metrics import DetectionThreshold, LinkBudget
from scripts.analysis.selfcheck import loaded_system, run_selfcheck, selfcheck_scene
from scripts.analysis.sweep import (
    GridSpec,
    best_fixed_orientation,
    best_polarization,
    check_dominance,
    contrast_map,
    coverage_sweep,
    default_grid,
    outage_curves,
    snr_captured_curves,
)
from scripts.charts import charts
from scripts.config import Paths, SolverSettings
from scripts.data import outputs
from scripts.data.scene_io import (
    read_polarization_file,
    read_scene,
    scene_to_text,
    write_scene,
)
from scripts.errors import (
    AmbientBackscatterError,
    NumericalError,
    UnsupportedPreconditionError,
)
from scripts.logger import logger, run_log, setup_logger
from scripts.models.mom import EnvironmentSolver
from scripts.models.scene import (
    OrientationAngles,
    PolarizationSet,
    Scene,
    orientation_to_axis,
    polarization_set,
    preset_scene,
)
from scripts.utils import parse_range

EXIT_OK: int = 0
EXIT_FLAGGED: int = 1
EXIT_INPUT: int = 2
EXIT_SOLVER: int = 3

DEFAULT_PRESET: str = "table1"
DEFAULT_OUTAGE_POLS: str = "ipr,4pr,nr,nr-worst"
DEBUG_DUMP_NAME: str = "system.ambz"


def parse_pols(text: str) -> PolarizationSet:
    """``nr``, ``nr-worst``, ``4pr``, ``ipr`` or ``custom:<csv file>``."""
    if text.startswith("custom:"):
        return read_polarization_file(Path(text.removeprefix("custom:")))

    return polarization_set(text)


def parse_orientation(text: str) -> OrientationAngles:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"Expected phi,theta in degrees, got {text!r}")

    return OrientationAngles(float(parts[0]), float(parts[1]))


def load_scene(args) -> tuple[Scene, str, PolarizationSet | None]:
    """Scene from ``--scene`` or ``--preset``, its exact text and default tag set."""
    if args.scene:
        scene, text = read_scene(Path(args.scene))
        return scene, text, None

    scene, pols = preset_scene(args.preset or DEFAULT_PRESET, seed=args.seed)
    return scene, scene_to_text(scene), pols


def solver_settings(args) -> SolverSettings:
    return SolverSettings(
        segments_per_halfwave=args.segments,
        wire_radius=args.wire_radius,
        open_circuit_ohms=args.open_ohms,
    )


def output_dir(args) -> Path:
    """``--out`` or the command folder under the default output directory."""
    out = Path(args.out) if args.out else Paths.output / args.command
    out.mkdir(parents=True, exist_ok=True)

    return out


def dump_system(scene: Scene, settings: SolverSettings, out: Path) -> Path:
    ctx, currents = loaded_system(scene, settings)
    path = outputs.dump_debug(out / DEBUG_DUMP_NAME, ctx, currents)
    logger.info(f"Loaded system ({ctx.size} unknowns) dumped to {path}")

    return path


def cmd_scene_gen(args) -> int:
    scene, _ = preset_scene(args.preset, seed=args.seed)
    default = Paths.raw_data / f"{args.preset}_seed{args.seed}.json"
    path = Path(args.out) if args.out else default
    write_scene(scene, path)
    print(path)

    return EXIT_OK


def cmd_map(args) -> int:
    started = time.perf_counter()
    scene, text, default_pols = load_scene(args)
    pols = parse_pols(args.pols) if args.pols else default_pols or polarization_set("4pr")
    settings = solver_settings(args)
    grid = (
        GridSpec.parse(args.grid, z_fixed=scene.tag_template.center.z)
        if args.grid
        else default_grid(scene)
    )
    out = args.out_dir

    solver = EnvironmentSolver(scene, settings)
    budget = LinkBudget.from_reference(args.snr_tx, solver.reference_source_power())
    contrast = contrast_map(scene, grid, pols, budget, threads=args.threads, solver=solver)
    best = best_polarization(contrast)

    outputs.write_contrast_map(contrast, out)
    outputs.write_best_map(best, out)
    charts.best_heatmap(best, out / "best.png", args.db_range)
    charts.velvet_carpet(best, out / "carpet.png")
    if args.layer_images:
        for k in range(len(contrast)):
            charts.layer_heatmap(contrast, k, out / f"layer_{k}.png", args.db_range)
    if args.dump_debug:
        dump_system(scene, settings, out)

    index, fixed = best_fixed_orientation(contrast)
    manifest = outputs.build_manifest(
        "map",
        text,
        scene.rng_seed,
        settings,
        DetectionThreshold(delta_snr_target_db=args.threshold_db),
        started,
        grid=grid.as_dict(),
        polarizations={
            "name": pols.name,
            "orientations": [o.as_tuple() for o in pols],
            "distinct_axes": len(pols.distinct_axes()),
        },
        snr_tx_db=args.snr_tx,
        calibration=budget.calibration,
        best_fixed_orientation={"index": index, "orientation": fixed.as_tuple()},
        threads=args.threads,
    )
    outputs.write_manifest(out, manifest)
    logger.info(f"Map of {len(pols)} layers written to {out}")

    return EXIT_OK


def _coverage_sets(args) -> list[PolarizationSet]:
    text = args.pols or DEFAULT_OUTAGE_POLS
    return [parse_pols(kind.strip()) for kind in text.split(",") if kind.strip()]


def cmd_outage(args) -> int:
    started = time.perf_counter()
    scene, text, _ = load_scene(args)
    sets = _coverage_sets(args)
    settings = solver_settings(args)
    threshold = DetectionThreshold(delta_snr_target_db=args.threshold_db)
    snr_range = parse_range(args.snr_tx)
    out = args.out_dir

    sweep = coverage_sweep(scene, sets, args.step, settings, args.threads)
    curves = outage_curves(scene, sets, snr_range, threshold, sweep=sweep)
    flags = check_dominance(curves)
    monotone = all(
        all(b <= a for a, b in zip(curve.outage, curve.outage[1:])) for curve in curves
    )

    outputs.write_outage(curves, out)
    charts.outage_chart(curves, out / "outage.png")
    manifest = outputs.build_manifest(
        "outage",
        text,
        scene.rng_seed,
        settings,
        threshold,
        started,
        tag_types=[pols.name for pols in sets],
        snr_tx=args.snr_tx,
        coverage_step_m=args.step,
        positions=len(sweep.positions),
        dominance=flags.to_dict(orient="records"),
        monotone=monotone,
        threads=args.threads,
    )
    outputs.write_manifest(out, manifest)

    if not monotone or not flags.ok.all():
        logger.warning("Outage curves tripped an ordering check")
        return EXIT_FLAGGED

    return EXIT_OK


def cmd_captured(args) -> int:
    started = time.perf_counter()
    scene, text, _ = load_scene(args)
    sets = _coverage_sets(args)
    settings = solver_settings(args)
    out = args.out_dir

    curves = snr_captured_curves(
        scene, sets, parse_range(args.snr_tx), args.step, settings, args.threads
    )
    outputs.write_captured(curves, out)
    charts.captured_chart(curves, out / "snr_captured.png")
    manifest = outputs.build_manifest(
        "captured",
        text,
        scene.rng_seed,
        settings,
        DetectionThreshold(delta_snr_target_db=args.threshold_db),
        started,
        tag_types=[pols.name for pols in sets],
        snr_tx=args.snr_tx,
        coverage_step_m=args.step,
        threads=args.threads,
    )
    outputs.write_manifest(out, manifest)

    return EXIT_OK


def cmd_opssa(args) -> int:
    started = time.perf_counter()
    source = parse_orientation(args.source)
    vertical = abs(orientation_to_axis(source)[2]) == 1.0
    if args.closed_form and not vertical:
        raise UnsupportedPreconditionError(
            f"Closed-form tag orientation needs a vertical source, got {source.as_tuple()}"
        )

    if args.reader:
        reader = parse_orientation(args.reader)
        phi_values, theta_values = [reader.phi_deg], [reader.theta_deg]
    else:
        phi_values = parse_range(f"0:90:{args.reader_step}")
        theta_values = phi_values

    table = opssa_match_table(
        phi_values, theta_values, args.tag_step, source, closed_form=vertical
    )
    out = args.out_dir
    outputs.write_frame(table, out / "opssa.csv")
    print(table.to_string(index=False))

    manifest = outputs.build_manifest(
        "opssa",
        None,
        None,
        SolverSettings(),
        DetectionThreshold(delta_snr_target_db=args.threshold_db),
        started,
        source=source.as_tuple(),
        tag_step_deg=args.tag_step,
        readers=len(table),
    )
    outputs.write_manifest(out, manifest)

    return EXIT_OK


def cmd_selfcheck(args) -> int:
    started = time.perf_counter()
    settings = solver_settings(args)
    scene, text = (None, None)
    if args.scene:
        scene, text = read_scene(Path(args.scene))

    report = run_selfcheck(settings, scene, seed=args.seed)
    print(report.to_string(index=False))

    out = args.out_dir
    if args.dump_debug:
        dump_system(scene or selfcheck_scene(args.seed), settings, out)
    outputs.write_frame(report, out / "selfcheck.csv")
    outputs.write_manifest(
        out,
        outputs.build_manifest(
            "selfcheck",
            text,
            args.seed,
            settings,
            DetectionThreshold(delta_snr_target_db=args.threshold_db),
            started,
            failed=report.loc[lambda d: d.status == "fail", "check"].tolist(),
        ),
    )

    return EXIT_FLAGGED if (report.status == "fail").any() else EXIT_OK


def _common(parser: argparse.ArgumentParser, scene: bool = True) -> None:
    if scene:
        parser.add_argument("--scene", help="Scene file (JSON)")
        parser.add_argument("--preset", help="Scene preset when no --scene is given")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", help="Output directory (file for scene-gen)")
    parser.add_argument("--threshold-db", type=float, default=config.DELTA_SNR_TARGET_DB)
    parser.add_argument("--segments", type=int, default=config.SEGMENTS_PER_HALFWAVE)
    parser.add_argument("--wire-radius", type=float, default=None, help="Meters")
    parser.add_argument("--open-ohms", type=float, default=config.OPEN_CIRCUIT_OHMS)
    parser.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ambsim", description="Polarization-reconfigurable ambient backscatter simulator"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("scene-gen", help="Write a preset scene file")
    _common(gen, scene=False)
    gen.add_argument("--preset", required=True)
    gen.set_defaults(func=cmd_scene_gen)

    map_ = sub.add_parser("map", help="SNR contrast maps and best polarization")
    _common(map_)
    map_.add_argument("--pols", help="nr | nr-worst | 4pr | ipr | custom:<file>")
    map_.add_argument("--grid", help="x0:x1:y0:y1:step in meters")
    map_.add_argument("--snr-tx", type=float, default=config.MAP_SNR_TX_DB)
    map_.add_argument("--db-range", default=config.MAP_DB_RANGE, help="Colour scale lo:hi:step")
    map_.add_argument("--layer-images", action="store_true", help="Also draw every layer")
    map_.add_argument("--dump-debug", action="store_true", help="Write the loaded system (AMBZ)")
    map_.set_defaults(func=cmd_map)

    for name, func, help_ in (
        ("outage", cmd_outage, "Outage probability curves"),
        ("captured", cmd_captured, "Captured SNR curves"),
    ):
        curve = sub.add_parser(name, help=help_)
        _common(curve)
        curve.add_argument("--pols", help="Comma-separated tag types")
        curve.add_argument("--snr-tx", default=config.SNR_TX_RANGE, help="lo:hi:step in dB")
        curve.add_argument("--step", type=float, default=config.COVERAGE_STEP_M)
        curve.set_defaults(func=func)

    opssa = sub.add_parser("opssa", help="Closed-form against exhaustive tag orientation")
    _common(opssa, scene=False)
    opssa.add_argument("--source", default="0,0", help="phi,theta in degrees")
    opssa.add_argument("--reader", help="phi,theta; default sweeps a grid")
    opssa.add_argument("--reader-step", type=float, default=10.0)
    opssa.add_argument("--tag-step", type=float, default=1.0)
    opssa.add_argument("--closed-form", action="store_true", help="Require the closed form")
    opssa.set_defaults(func=cmd_opssa)

    check = sub.add_parser("selfcheck", help="Solver property suite")
    _common(check)
    check.add_argument("--dump-debug", action="store_true", help="Write the loaded system (AMBZ)")
    check.set_defaults(func=cmd_selfcheck)

    return parser


def _run(args) -> int:
    try:
        return args.func(args)
    except NumericalError as error:
        logger.error(f"Solver failure: {error} {error.diagnostics}")
        return EXIT_SOLVER
    except (AmbientBackscatterError, ValueError, OSError) as error:
        logger.error(str(error))
        return EXIT_INPUT


def main(argv: list | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logger(level=logging.DEBUG if args.verbose else logging.INFO)

    if args.command == "scene-gen":
        return _run(args)

    args.out_dir = output_dir(args)
    with run_log(args.out_dir):
        return _run(args)


if __name__ == "__main__":
    sys.exit(main())
