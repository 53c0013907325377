from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Logging
    log_level: str = "INFO"
    log_json: bool = True
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    log_dir: str = "logs"
    log_to_file: bool = False

    # Пайплайн
    default_preset: str = "desk"
    torch_threads: Optional[int] = None

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="PHS_",
        extra="ignore",
        env_file_encoding="utf-8",
    )


settings = Settings()
