"""
Command-line front end for spintomo.

Usage:
  python -m app.cli list-presets
  python -m app.cli experiment I
  python -m app.cli --seed 7 --out output/ii experiment II --case ii --snapshot 0.005
  python -m app.cli analyze-tomogram output/I/tomogram_t16.json --bipartition "0|1"
  python -m app.cli --exact circuit --theta 1.5707963
  python -m app.cli --config run.json experiment
  python -m app.cli reference --n-pairs 128

Global flags override values from --config (a JSON RunConfig document),
which override environment defaults. Exit codes: 0 success, 2 invalid
configuration or tomogram data, 3 numeric cross-check failure.
"""
import argparse
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

from loguru import logger
from pydantic import ValidationError

from app import config
from app.circuits import build_equivalent_circuit, build_initial_state_circuit, circuit_to_text, tomogram_from_shots
from app.errors import ConfigError, SpinTomoError, TomogramDataError
from app.experiments import (
    CSV_COLUMNS,
    PRESET_INFO,
    ExperimentRun,
    default_t_grid,
    experiment_cases,
    preset,
    run_experiment_I,
    run_experiment_N,
)
from app.indicators import average_indicators, default_reduced_subset
from app.models import (
    Bipartition,
    CircuitSummary,
    ExperimentIConfig,
    RunConfig,
    SpinCoherentReference,
    TomogramAnalysis,
    uniform_grid,
)
from app.outputs import write_json, write_manifest, write_snapshots, write_timeseries
from app.squeezing import (
    entropic_squeezing_check,
    first_order_reference,
    second_order_reference,
    squeezing_from_tomogram,
)
from app.tomography import Tomogram, all_axes, marginal, read_tomogram, write_tomogram

LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} [{level}] {message}"


def setup_logging(level: str = config.LOG_LEVEL) -> None:
    logger.remove()
    logger.add(sys.stdout, format=LOG_FORMAT, level=level)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

OVERRIDES = [
    "experiment", "case", "seed", "out_dir", "chi_t_points", "t_max", "t_points",
    "epsilon", "snapshots", "n_samples", "n_pairs", "reduced_slices", "discord_mode",
    "discord_restarts", "discord_grid", "compute_discord", "pcc_mode", "theta",
    "variant", "n_shots", "repetitions", "exact", "tomogram_path", "bipartition",
    "normalization_tol", "orthonormal_pairs",
]


def build_config(args: argparse.Namespace, experiment: str) -> RunConfig:
    """Merge the --config document with command-line overrides."""
    base = {}
    if args.config is not None:
        try:
            base = RunConfig.model_validate_json(Path(args.config).read_text()).model_dump(
                exclude_unset=True
            )
        except OSError as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from exc
        except ValidationError as exc:
            raise ConfigError(f"invalid config file {args.config}: {exc}") from exc

    values = {**base}
    if experiment != "experiment":
        values["experiment"] = experiment
    for name in OVERRIDES:
        value = getattr(args, name, None)
        if value is not None:
            values[name] = value
    try:
        return RunConfig(**values)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _write_run(run: ExperimentRun, cfg: RunConfig, out_dir: Path) -> list[Path]:
    outputs = [write_timeseries(run.rows(), CSV_COLUMNS, out_dir / "timeseries.csv")]
    if cfg.snapshots:
        times = [r.t for r in run.records]
        outputs += write_snapshots(times, [r.tomogram for r in run.records], cfg.snapshots, out_dir)
    outputs.append(
        write_manifest(f"experiment {cfg.experiment}", cfg, {"analysis": cfg.seed}, outputs, out_dir)
    )
    return outputs


def cmd_experiment(cfg: RunConfig) -> list[Path]:
    """Run experiment I, or the requested (or every) case of II/III."""
    settings = cfg.analysis_settings()
    if cfg.experiment == "I":
        if cfg.case:
            raise ConfigError(f"experiment I has no cases; got --case {cfg.case}")
        try:
            exp_cfg = ExperimentIConfig(
                chi_t_grid=uniform_grid(0.0, math.pi / 2, cfg.chi_t_points), analysis=settings
            )
        except ValidationError as exc:
            raise ConfigError(f"invalid experiment I grid: {exc}") from exc
        return _write_run(run_experiment_I(exp_cfg), cfg, cfg.out_dir / "I")

    if cfg.experiment not in ("II", "III"):
        raise ConfigError(f"experiment must be I, II or III, got {cfg.experiment!r}")
    valid = experiment_cases(cfg.experiment)
    cases = [cfg.case] if cfg.case else valid
    outputs = []
    for case in cases:
        if case not in valid:
            raise ConfigError(
                f"case {case!r} is not part of experiment {cfg.experiment}; valid cases: {', '.join(valid)}"
            )
        exp_cfg = preset(
            case,
            t_grid=default_t_grid(cfg.t_max, cfg.t_points),
            epsilon=cfg.epsilon,
            analysis=settings,
        )
        outputs += _write_run(run_experiment_N(exp_cfg), cfg, cfg.out_dir / case)
    return outputs


def _entropic_reports(tomogram: Tomogram, tolerance: float, analysis: TomogramAnalysis) -> None:
    """Per-qubit entropic squeezing; shot noise between slices never fails the run."""
    for q in range(tomogram.n_qubits):
        missing = marginal(tomogram, [q], tolerance=None).missing("xyz")
        if missing:
            analysis.unavailable[f"entropic_q{q}"] = missing
            continue
        try:
            report = entropic_squeezing_check(tomogram, q, tolerance=tolerance)
        except TomogramDataError as exc:
            message = f"entropic_q{q}: {exc}; using slice averages"
            logger.warning(message)
            analysis.warnings.append(message)
            report = entropic_squeezing_check(tomogram, q, tolerance=None)
        analysis.entropic.append(report)


def analyze_tomogram(tomogram: Tomogram, cfg: RunConfig, source: str = "") -> TomogramAnalysis:
    """Indicators and squeezing quantities that the present slices support."""
    n = tomogram.n_qubits
    analysis = TomogramAnalysis(source=source, n_qubits=n, present_slices=tomogram.axes)
    missing = tomogram.missing(all_axes(n))

    if n == 1:
        analysis.unavailable["indicators"] = ["single-qubit tomogram has no bipartition"]
    else:
        try:
            bipartition = (
                Bipartition.parse(cfg.bipartition)
                if cfg.bipartition
                else Bipartition(side_a=(0,), side_b=tuple(range(1, n)))
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        requested = cfg.reduced_slices or default_reduced_subset(n)
        if not missing:
            report = average_indicators(
                tomogram, bipartition, reduced_subset=requested, pcc_mode=cfg.pcc_mode
            )
            analysis.indicators = report
            analysis.reduced = report.reduced
        else:
            analysis.unavailable["indicators"] = missing
            subset = requested if not tomogram.missing(requested) else tomogram.axes
            report = average_indicators(
                tomogram,
                bipartition,
                slice_subset=subset,
                reduced_subset=subset,
                pcc_mode=cfg.pcc_mode,
            )
            analysis.reduced = report.reduced
            logger.info(f"Partial tomogram: reduced averages over {', '.join(subset)}")

    if missing:
        analysis.unavailable["squeezing"] = missing
    else:
        analysis.squeezing = squeezing_from_tomogram(
            tomogram,
            n_samples=cfg.n_samples,
            n_pairs=cfg.n_pairs,
            seed=cfg.seed,
            orthonormal_pairs=cfg.orthonormal_pairs,
        )
    _entropic_reports(tomogram, cfg.normalization_tol, analysis)
    return analysis


def cmd_analyze_tomogram(cfg: RunConfig) -> Path:
    tomogram = read_tomogram(cfg.tomogram_path, tolerance=cfg.normalization_tol)
    logger.info(f"Read {len(tomogram.slices)} slices from {cfg.tomogram_path}")
    analysis = analyze_tomogram(tomogram, cfg, source=str(cfg.tomogram_path))
    return write_json(analysis, cfg.out_dir / "analysis.json")


def cmd_circuit(cfg: RunConfig) -> list[Path]:
    if cfg.variant:
        circuit = build_initial_state_circuit(cfg.variant)
    else:
        theta = math.pi / 2 if cfg.theta is None else cfg.theta
        circuit = build_equivalent_circuit(theta)
    logger.info(
        f"Circuit {circuit.label}: {cfg.repetitions} x {cfg.n_shots} shots per basis"
        + (" (exact)" if cfg.exact else "")
    )
    shots = tomogram_from_shots(circuit, cfg.n_shots, cfg.repetitions, cfg.seed, exact=cfg.exact)

    out_dir = cfg.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    circuit_path = out_dir / "circuit.txt"
    circuit_path.write_text(circuit_to_text(circuit), encoding="utf-8")
    outputs = [circuit_path]
    for k, tomogram in enumerate(shots.tomograms):
        outputs += write_tomogram(tomogram, out_dir / f"tomogram_rep{k}.json")

    summary = CircuitSummary(
        label=circuit.label,
        theta=None if cfg.variant else (math.pi / 2 if cfg.theta is None else cfg.theta),
        n_shots=cfg.n_shots,
        repetitions=cfg.repetitions,
        seed=cfg.seed,
        exact=cfg.exact,
        xi_tei_values=shots.xi_tei,
        xi_tei_mean=shots.mean,
        xi_tei_std=shots.std,
    )
    outputs.append(write_json(summary, out_dir / "summary.json"))
    logger.info(f"xi_TEI = {shots.mean:.4f} +/- {shots.std:.4f}")
    outputs.append(write_manifest("circuit", cfg, {"shots": cfg.seed}, outputs, out_dir))
    return outputs


def cmd_reference(cfg: RunConfig) -> Path:
    """Spin coherent baselines: N/4 at first order (N = 2, 3) and the second-order minimum."""
    first = {
        n: first_order_reference(n, n_samples=cfg.n_samples, seed=cfg.seed) for n in (2, 3)
    }
    second = second_order_reference(
        n_pairs=cfg.n_pairs, seed=cfg.seed, orthonormal_pairs=cfg.orthonormal_pairs
    )
    for n, value in first.items():
        logger.info(f"First-order reference, N={n}: {value:.6f}")
    logger.info(f"Second-order reference: {second:.6f}")
    reference = SpinCoherentReference(
        first_order=first,
        second_order=second,
        n_samples=cfg.n_samples,
        n_pairs=cfg.n_pairs,
        seed=cfg.seed,
        orthonormal_pairs=cfg.orthonormal_pairs,
    )
    path = write_json(reference, cfg.out_dir / "reference.json")
    write_manifest("reference", cfg, {"samplers": cfg.seed}, [path], cfg.out_dir)
    return path


def cmd_list_presets() -> None:
    for case, (description, nuclei) in PRESET_INFO.items():
        cfg = preset(case)
        omega = ", ".join(f"{w / (2 * math.pi):g}" for w in cfg.omega)
        print(f"{case:>4}  N={cfg.n_qubits}  [{nuclei}]  {description}")
        print(f"      omega/2pi (Hz): {omega}  bipartition {cfg.bipartition.label}  measured {cfg.measured}")


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _csv_list(text: str) -> list[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


LOOSE_PAIRS_HELP = (
    "Second-order pairs only satisfy v2 perpendicular to T.v1 (<cal J> = 0); "
    "by default v2 is also perpendicular to v1 (orthonormal pairs)"
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spintomo", description="Spin tomograms, entanglement indicators and squeezing"
    )
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument("--seed", type=int, help=f"Master seed (default: {config.DEFAULT_SEED})")
    parser.add_argument("--out", dest="out_dir", type=Path, help=f"Output directory (default: {config.OUTPUT_DIR})")
    parser.add_argument("--exact", action="store_const", const=True, help="Use exact probabilities instead of shots")
    parser.add_argument("--log-level", default=config.LOG_LEVEL, help="loguru level (default: %(default)s)")
    sub = parser.add_subparsers(dest="command", required=True)

    exp = sub.add_parser("experiment", help="Run an experiment time series")
    exp.add_argument("experiment", nargs="?", choices=["I", "II", "III"])
    exp.add_argument("--case", help="Case label (II: i, ii, iii; III: A, B, C, D)")
    exp.add_argument("--chi-t-points", type=int, help="Experiment I grid size (default: 65)")
    exp.add_argument("--t-max", type=float, help="Experiment II/III final time in s (default: 0.01)")
    exp.add_argument("--t-points", type=int, help="Experiment II/III grid size (default: 101)")
    exp.add_argument("--epsilon", type=float, help="Pseudo-pure polarization (default: 1e-4)")
    exp.add_argument("--snapshot", dest="snapshots", type=float, action="append",
                     help="Write the tomogram nearest this time (repeatable)")
    exp.add_argument("--n-samples", type=int, help="First-order direction samples")
    exp.add_argument("--n-pairs", type=int, help="Second-order pair samples")
    exp.add_argument("--reduced-slices", type=_csv_list, help="Slices for the reduced averages, e.g. xx,xy")
    exp.add_argument("--discord-mode", choices=["full", "product"])
    exp.add_argument("--discord-restarts", type=int)
    exp.add_argument("--discord-grid", type=int)
    exp.add_argument("--no-discord", dest="compute_discord", action="store_const", const=False,
                     help="Skip the discord optimization")
    exp.add_argument("--pcc-mode", choices=["collective", "max"])
    exp.add_argument("--loose-pairs", dest="orthonormal_pairs", action="store_const", const=False,
                     help=LOOSE_PAIRS_HELP)

    ana = sub.add_parser("analyze-tomogram", help="Analyze a tomogram file")
    ana.add_argument("tomogram_path", type=Path)
    ana.add_argument("--bipartition", help="Qubit groups, e.g. '0|1,2' (default: 0|rest)")
    ana.add_argument("--reduced-slices", type=_csv_list)
    ana.add_argument("--tolerance", dest="normalization_tol", type=float,
                     help=f"Slice normalization tolerance (default: {config.NORMALIZATION_TOL})")
    ana.add_argument("--pcc-mode", choices=["collective", "max"])
    ana.add_argument("--loose-pairs", dest="orthonormal_pairs", action="store_const", const=False,
                     help=LOOSE_PAIRS_HELP)

    circ = sub.add_parser("circuit", help="Shot-sampled tomography of the equivalent circuits")
    group = circ.add_mutually_exclusive_group()
    group.add_argument("--theta", type=float, help="Rotation angle in [0, pi) (default: pi/2)")
    group.add_argument("--variant", choices=["theta_zero", "compact"], help="Initial-state circuit")
    circ.add_argument("--shots", dest="n_shots", type=int, help="Shots per basis (default: 8192)")
    circ.add_argument("--repetitions", type=int, help="Repetitions (default: 6)")

    ref = sub.add_parser("reference", help="Spin coherent squeezing baselines")
    ref.add_argument("--n-samples", type=int, help="First-order direction samples")
    ref.add_argument("--n-pairs", type=int, help="Second-order pair samples")
    ref.add_argument("--loose-pairs", dest="orthonormal_pairs", action="store_const", const=False,
                     help=LOOSE_PAIRS_HELP)

    sub.add_parser("list-presets", help="Show the built-in experiment II/III cases")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level.upper())

    try:
        if args.command == "list-presets":
            cmd_list_presets()
            return 0
        if args.command == "experiment":
            cfg = build_config(args, "experiment")
            if getattr(args, "experiment", None) is None and args.config is None:
                raise ConfigError("experiment needs I, II or III (or --config)")
            cmd_experiment(cfg)
        elif args.command == "analyze-tomogram":
            cmd_analyze_tomogram(build_config(args, "tomogram"))
        elif args.command == "circuit":
            cmd_circuit(build_config(args, "circuit"))
        elif args.command == "reference":
            cmd_reference(build_config(args, "reference"))
    except SpinTomoError as exc:
        logger.error(str(exc))
        return exc.exit_code
    except (ValidationError, ValueError) as exc:
        # invalid parameters that slipped past RunConfig
        logger.error(f"invalid input: {exc}")
        return ConfigError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
