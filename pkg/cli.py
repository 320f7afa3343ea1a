#!/usr/bin/env python3
"""
Command-line interface for Levy-driven CARMA simulation and estimation
Simulates paths, fits models, recovers driver increments and fits noise laws
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

from config.settings import CarmaLevyConfig
from src.errors import INPUT_ERRORS, CarmaLevyError, DataError, SpecError
from src.estimator import Normalization, QmleOptions, RecoveryMode, qmle
from src.levy import LevyFamily, fit_noise
from src.recovery import Stencils, aggregate, recover_increments
from src.serialization import (
    ErrorDocument,
    FitResultDocument,
    NoiseDocument,
    NoiseFitDocument,
    SimulationEchoDocument,
    SpecDocument,
    read_increments_csv,
    read_series_csv,
    read_spec,
    write_document,
    write_increments_csv,
    write_path_csv,
)
from src.simulator import SamplingScheme, SimulationMethods, simulate

logger = logging.getLogger("carma_levy")

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_MODEL_ERROR = 3


class CommandModes:
    """Subcommands of the tool"""
    SIMULATE = "simulate"
    FIT = "fit"
    RECOVER_NOISE = "recover-noise"
    FIT_NOISE = "fit-noise"


@dataclass
class RunConfig:
    """
    One invocation of the tool

    burn_in is the number of discarded simulation steps for simulate and the
    number of leading increments dropped before the noise fit for fit and
    fit-noise. An aggregate of None leaves the increments at their own step.
    """

    command: str
    spec_path: Optional[Path] = None
    data_path: Optional[Path] = None
    out_dir: Optional[Path] = None
    seed: int = 0
    terminal: float = 100.0
    n: int = 1000
    method: str = SimulationMethods.EULER
    family: Optional[str] = None
    aggregate: Optional[float] = 1.0
    normalization: str = Normalization.SIGMA.value
    burn_in: int = 0
    stencil: str = Stencils.FORWARD
    recovery_mode: str = RecoveryMode.PARAMS_AND_INCREMENTS.value
    estimate_c0: bool = False
    atom_eps: Optional[float] = None
    log_level: Optional[str] = None


def configure_logging(level: str, log_file: Optional[Path] = None) -> None:
    """Console logging goes to stdout; stderr carries only the error document"""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stdout)]
    if log_file is not None:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def _require(path: Optional[Path], flag: str, error: type) -> Path:
    if path is None:
        raise error(f"{flag} is required for this command", flag=flag)
    if not Path(path).is_file():
        raise error(f"file not found: {path}", path=str(path))
    return Path(path)


def _require_family(config: RunConfig) -> LevyFamily:
    if config.family is None:
        raise SpecError("--family is required for this command")
    return LevyFamily.parse(config.family)


def _run_simulate(config: RunConfig, out_dir: Path) -> None:
    spec = read_spec(_require(config.spec_path, "--spec", SpecError))
    scheme = SamplingScheme(terminal=config.terminal, n=config.n)
    path = simulate(spec, scheme=scheme, seed=config.seed, method=config.method, burn_in=config.burn_in)
    echo = SimulationEchoDocument(
        spec=SpecDocument.from_spec(spec),
        noise=NoiseDocument.from_model(path.model),
        terminal=scheme.terminal,
        n=scheme.n,
        h=scheme.h,
        seed=config.seed,
        method=config.method,
        burn_in=config.burn_in,
    )
    write_path_csv(out_dir / "path.csv", path)
    write_increments_csv(out_dir / "noise.csv", path.noise)
    write_document(out_dir / "spec.json", echo)


def _run_fit(config: RunConfig, out_dir: Path, settings: CarmaLevyConfig) -> None:
    init = read_spec(_require(config.spec_path, "--spec", SpecError))
    data = read_series_csv(_require(config.data_path, "--data", DataError))
    options = QmleOptions(
        normalization=Normalization(config.normalization),
        estimate_c0=config.estimate_c0,
        recovery_mode=RecoveryMode(config.recovery_mode),
        aggregation=config.aggregate,
        stencil=config.stencil,
        drop_increments=config.burn_in,
        atom_eps=config.atom_eps,
    )
    family = LevyFamily.parse(config.family) if config.family is not None else None
    result = qmle(data, init, family=family, options=options, config=settings)
    print(result.summary())

    increments_path = out_dir / "increments.csv" if result.increments is not None else None
    document = FitResultDocument.from_result(result, increments_path=increments_path.name if increments_path else None)
    fit_path = write_document(out_dir / "fit.json", document)
    if increments_path is not None:
        try:
            write_increments_csv(increments_path, result.increments)
        except (OSError, CarmaLevyError):
            # fit.json names increments.csv, so it must not outlive a failed write
            fit_path.unlink(missing_ok=True)
            raise


def _run_recover_noise(config: RunConfig, out_dir: Path) -> None:
    spec = read_spec(_require(config.spec_path, "--spec", SpecError))
    data = read_series_csv(_require(config.data_path, "--data", DataError))
    increments = recover_increments(spec, data, config.stencil)
    write_increments_csv(out_dir / "increments.csv", increments)


def _run_fit_noise(config: RunConfig, out_dir: Path, settings: CarmaLevyConfig) -> None:
    family = _require_family(config)
    increments = read_increments_csv(_require(config.data_path, "--data", DataError))
    if config.burn_in:
        increments = increments.drop(config.burn_in)
    if config.aggregate is not None:
        increments = aggregate(increments, config.aggregate)
    fit = fit_noise(increments, family, None, settings, config.atom_eps)
    write_document(out_dir / "noise_fit.json", NoiseFitDocument.from_fit(fit))


def _write_error(error: str, message: str, code: int, details: dict) -> None:
    document = ErrorDocument(error=error, message=message, exit_code=code, details=details)
    sys.stderr.write(json.dumps(document.model_dump(), default=str) + "\n")


def run(config: RunConfig, settings: Optional[CarmaLevyConfig] = None) -> int:
    """
    Execute one command and write its artifacts

    Returns:
        0 on success, 2 for malformed input, 3 for model errors; the error
        document is written to stderr on failure
    """
    settings = settings or CarmaLevyConfig()
    out_dir = Path(config.out_dir) if config.out_dir is not None else settings.output_dir

    try:
        settings.ensure_output_dir(out_dir)
        logger.info("Running %s, artifacts in %s", config.command, out_dir)
        if config.command == CommandModes.SIMULATE:
            _run_simulate(config, out_dir)
        elif config.command == CommandModes.FIT:
            _run_fit(config, out_dir, settings)
        elif config.command == CommandModes.RECOVER_NOISE:
            _run_recover_noise(config, out_dir)
        elif config.command == CommandModes.FIT_NOISE:
            _run_fit_noise(config, out_dir, settings)
        else:
            raise SpecError(f"unknown command: {config.command}", command=config.command)
    except CarmaLevyError as e:
        code = EXIT_INPUT_ERROR if isinstance(e, INPUT_ERRORS) else EXIT_MODEL_ERROR
        logger.error("%s failed: %s", config.command, e.message)
        payload = e.to_dict()
        _write_error(payload["error"], payload["message"], code, payload["details"])
        return code
    except (OSError, ValueError) as e:
        # unwritable output directory, bad enum choices and similar input problems
        logger.error("%s failed: %s", config.command, e)
        details = {"path": str(e.filename)} if getattr(e, "filename", None) else {}
        _write_error(type(e).__name__, str(e), EXIT_INPUT_ERROR, details)
        return EXIT_INPUT_ERROR

    logger.info("%s completed", config.command)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Simulation and three-step estimation of Levy-driven CARMA(p,q) models",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Commands:
  simulate       Simulate a path; writes path.csv, noise.csv and spec.json
  fit            Quasi-likelihood fit; writes fit.json and increments.csv
  recover-noise  Recover increments under a fixed specification; writes increments.csv
  fit-noise      Fit a Levy family to increments; writes noise_fit.json

Examples:
  # CARMA(3,1) with Brownian noise on [0, 400] with 16000 steps
  python cli.py simulate --spec carma31.json --terminal 400 --n 16000 --seed 1 --out run

  # Fit the simulated path and the Brownian noise of the recovered increments
  python cli.py fit --spec carma31.json --data run/path.csv --family brownian --out fit

  # Refit the increments with a normal inverse Gaussian law on unit time steps
  python cli.py fit-noise --data fit/increments.csv --family nig --aggregate 1.0 --out nig
        """
    )
    parser.add_argument(
        'command',
        choices=[
            CommandModes.SIMULATE,
            CommandModes.FIT,
            CommandModes.RECOVER_NOISE,
            CommandModes.FIT_NOISE,
        ],
        help='Operation to run'
    )
    parser.add_argument('--spec', type=Path, help='Specification JSON (with optional noise block)')
    parser.add_argument('--data', type=Path, help='Observation CSV (t,y) or increment CSV (t,dL)')
    parser.add_argument('--out', type=Path, help='Output directory (default: CARMA_LEVY_OUTPUT_DIR or ./output)')
    parser.add_argument('--seed', type=int, default=0, help='Random seed (default: 0)')
    parser.add_argument('--terminal', type=float, default=100.0, help='Terminal time T (default: 100)')
    parser.add_argument('--n', type=int, default=1000, help='Number of steps on [0, T] (default: 1000)')
    parser.add_argument(
        '--method',
        choices=[SimulationMethods.EULER, SimulationMethods.EXACT],
        default=SimulationMethods.EULER,
        help='Simulation scheme (default: euler)'
    )
    parser.add_argument('--family', help='Levy family for the noise fit (brownian, cp, vg, nig, ...)')
    parser.add_argument(
        '--aggregate',
        type=float,
        default=1.0,
        help='Time step the increments are summed to before the noise fit; 0 disables (default: 1.0)'
    )
    parser.add_argument(
        '--normalization',
        choices=[item.value for item in Normalization],
        default=Normalization.SIGMA.value,
        help='Pin sigma or b0 to one (default: sigma)'
    )
    parser.add_argument(
        '--burn-in',
        type=int,
        default=0,
        help='Discarded simulation steps, or leading increments dropped before the noise fit'
    )
    parser.add_argument(
        '--stencil',
        choices=[Stencils.FORWARD, Stencils.CENTRAL],
        default=Stencils.FORWARD,
        help='Finite-difference stencil of the increment recovery (default: forward)'
    )
    parser.add_argument(
        '--recovery-mode',
        choices=[item.value for item in RecoveryMode],
        default=RecoveryMode.PARAMS_AND_INCREMENTS.value,
        help='What fit returns besides the coefficients'
    )
    parser.add_argument('--estimate-c0', action='store_true', help='Report a standard error for c0')
    parser.add_argument('--atom-eps', type=float, help='Compound Poisson atom width')
    parser.add_argument('--log-level', help='Logging level (default: CARMA_LEVY_LOG_LEVEL or INFO)')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = CarmaLevyConfig()
    configure_logging(args.log_level or settings.log_level, settings.log_file)

    config = RunConfig(
        command=args.command,
        spec_path=args.spec,
        data_path=args.data,
        out_dir=args.out,
        seed=args.seed,
        terminal=args.terminal,
        n=args.n,
        method=args.method,
        family=args.family,
        aggregate=args.aggregate if args.aggregate > 0 else None,
        normalization=args.normalization,
        burn_in=args.burn_in,
        stencil=args.stencil,
        recovery_mode=args.recovery_mode,
        estimate_c0=args.estimate_c0,
        atom_eps=args.atom_eps,
        log_level=args.log_level,
    )
    try:
        return run(config, settings)
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return 130


if __name__ == "__main__":
    sys.exit(main())
