from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict

BASE_DIR = Path(__file__).resolve().parent.parent


class Settings(BaseSettings):
    log_level: str = "INFO"
    out_dir: str = "results"
    workers: int = 1
    base_seed: int = 42

    model_config = SettingsConfigDict(
        env_file=str(BASE_DIR / ".env"),
        env_prefix="AUDIT_BAI_",
        extra="ignore",
    )


settings = Settings()
