"""
app/services/config_loader.py

Läser experiment- och miljöfiler i ren key=value-text (dotenv-syntax).

Prioritet, lägst först:
  1. modellens standardvärden
  2. Settings (AUDIT_BAI_* i miljön eller .env)
  3. konfigurationsfilen
  4. CLI-flaggor
"""

import logging
from pathlib import Path
from typing import Any, Optional

from dotenv import dotenv_values
from pydantic import ValidationError

from app.config import Settings
from app.core.environment import builtin_environment
from app.models.environment import EnvironmentSpec
from app.models.experiment import ExperimentConfig

logger = logging.getLogger(__name__)

BUILTIN_ENVIRONMENTS = (
    "default", "heterogeneous", "indistinguishable_a", "indistinguishable_b",
)

# Miljöfilens listfält är kommaseparerade
_ENV_LIST_KEYS = ("arm_means", "bias")


def _read_key_values(path: str) -> dict[str, str]:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"Konfigurationsfilen finns inte: {path}")
    values = {k: v for k, v in dotenv_values(p).items() if v is not None}
    logger.info(f"Läste {len(values)} nycklar från {path}")
    return values


def load_experiment_config(
    path: Optional[str] = None,
    overrides: Optional[dict[str, Any]] = None,
    settings: Optional[Settings] = None,
) -> ExperimentConfig:
    settings = settings or Settings()
    values: dict[str, Any] = {
        "out_dir": settings.out_dir,
        "workers": settings.workers,
        "base_seed": settings.base_seed,
    }
    if path:
        values.update(_read_key_values(path))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})

    try:
        return ExperimentConfig(**values)
    except ValidationError as e:
        raise ExperimentConfigError(f"Ogiltig experimentkonfiguration: {e}") from e


def load_environment_file(path: str) -> EnvironmentSpec:
    raw: dict[str, Any] = _read_key_values(path)
    for key in _ENV_LIST_KEYS:
        if key in raw:
            raw[key] = [float(v) for v in raw[key].split(",") if v.strip()]
    raw.setdefault("name", Path(path).stem)
    return EnvironmentSpec(**raw)


def resolve_environment(name_or_path: str) -> EnvironmentSpec:
    if name_or_path in BUILTIN_ENVIRONMENTS:
        return builtin_environment(name_or_path)
    return load_environment_file(name_or_path)


# ── Egna undantagsklasser ─────────────────────────────────────────────────────

class ExperimentConfigError(ValueError):
    """Konfigurationen är ogiltig. Upptäcks innan något försök körs."""
