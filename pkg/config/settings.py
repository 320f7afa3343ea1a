"""
Configuration settings for the carma-levy toolkit
Centralized numerical and runtime configuration with environment variable support
"""

import os
from pathlib import Path
from dataclasses import dataclass
from typing import Optional

# Load environment variables if python-dotenv is available
try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass  # dotenv not installed, continue without it


@dataclass
class CarmaLevyConfig:
    """
    Main configuration class for simulation and estimation runs

    Attributes:
        output_dir: Default directory for CLI artifacts
        log_level: Logging level name used by the CLI
        log_file: Optional log file written next to console output
        threads: Workers for the finite-difference Hessian; the simplex search itself is serial
        fourier_u_max: Half-width of the frequency grid for density inversion
        fourier_points: Number of frequency grid points for density inversion
        atom_eps: Width of the compound Poisson atom at zero in likelihoods
        poisson_tail: Tail mass at which Poisson mixtures are truncated
        maxiter_per_dim: Simplex iteration budget per free parameter
        ftol: Relative function tolerance of the simplex search
        eigen_gap: Relative gap below which eigenvalues count as repeated
        stationarity_margin: Eigenvalues need Re(lambda) below minus this value
    """

    output_dir: Path = Path("output")
    log_level: str = "INFO"
    log_file: Optional[Path] = None
    threads: int = 1
    fourier_u_max: float = 256.0
    fourier_points: int = 2 ** 14
    atom_eps: float = 1e-12
    poisson_tail: float = 1e-12
    maxiter_per_dim: int = 500
    ftol: float = 1e-10
    eigen_gap: float = 1e-8
    stationarity_margin: float = 1e-10

    def __post_init__(self) -> None:
        """Apply environment variable overrides; unparsable values keep the default"""
        if env_output_dir := os.getenv("CARMA_LEVY_OUTPUT_DIR"):
            self.output_dir = Path(env_output_dir)

        if env_log_level := os.getenv("CARMA_LEVY_LOG_LEVEL"):
            self.log_level = env_log_level.upper()

        if env_log_file := os.getenv("CARMA_LEVY_LOG_FILE"):
            self.log_file = Path(env_log_file)

        if env_threads := os.getenv("CARMA_LEVY_THREADS"):
            try:
                self.threads = max(1, int(env_threads))
            except ValueError:
                pass  # Keep default value

        if env_u_max := os.getenv("CARMA_LEVY_FOURIER_UMAX"):
            try:
                self.fourier_u_max = float(env_u_max)
            except ValueError:
                pass

        if env_points := os.getenv("CARMA_LEVY_FOURIER_POINTS"):
            try:
                self.fourier_points = int(env_points)
            except ValueError:
                pass

        if env_atom_eps := os.getenv("CARMA_LEVY_ATOM_EPS"):
            try:
                self.atom_eps = float(env_atom_eps)
            except ValueError:
                pass

        if env_maxiter := os.getenv("CARMA_LEVY_MAXITER_PER_DIM"):
            try:
                self.maxiter_per_dim = int(env_maxiter)
            except ValueError:
                pass

    def ensure_output_dir(self, path: Optional[Path] = None) -> Path:
        """Create (if needed) and return the artifact directory"""
        target = Path(path) if path is not None else self.output_dir
        target.mkdir(parents=True, exist_ok=True)
        return target


# Export only what's defined in this module
__all__ = ['CarmaLevyConfig']
