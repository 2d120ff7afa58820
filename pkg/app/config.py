from functools import lru_cache
from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Numerical defaults loaded from environment (VORTEX_*) or defaults."""

    # Logging
    log_level: str = "INFO"
    log_json: bool = True

    # Filament sampling
    mode_cutoff: int = 32
    quadrature_points: int = 256
    closure_tolerance: float = 1e-10
    coupling_tolerance: float = 1e-10

    # Time stepping
    rk4_safety: float = 0.5
    reparam_every: int = 100
    blowup_factor: float = 1e3

    # Eigen-solver
    eigen_tol: float = 1e-10
    eigen_maxiter: Optional[int] = None
    grid_cells_across: int = 128
    degeneracy_rtol: float = 1e-9

    # Output
    float_format: str = "%.15g"

    model_config = SettingsConfigDict(
        env_file=".env", env_prefix="VORTEX_", case_sensitive=False
    )


@lru_cache
def get_settings() -> "Settings":
    """Late-bind settings so tests can override env vars."""
    return Settings()


settings = get_settings()
