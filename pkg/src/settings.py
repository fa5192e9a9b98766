import os

from dotenv import find_dotenv, load_dotenv
from pydantic import BaseModel, Field


class ToolkitSettings(BaseModel):
    """Process-level knobs read from the environment (and an optional .env file)."""

    threads: int = Field(default=1, ge=1)
    log_level: str = 'INFO'
    profile_dir: str | None = None


def load_settings(use_dotenv: bool = True) -> ToolkitSettings:
    '''
    Builds settings from SHFLBW_* environment variables. A .env file found
    by walking up from the working directory overrides the process environment.
    '''
    if use_dotenv:
        load_dotenv(find_dotenv(usecwd=True), override=True)
    return ToolkitSettings(
        threads=os.getenv('SHFLBW_THREADS', '1'),
        log_level=os.getenv('SHFLBW_LOG_LEVEL', 'INFO').upper(),
        profile_dir=os.getenv('SHFLBW_PROFILE_DIR') or None,
    )
