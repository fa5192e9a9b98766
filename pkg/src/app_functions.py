import hashlib
import json
import os
import sys
from contextlib import contextmanager
from importlib.metadata import PackageNotFoundError, version
from time import perf_counter
from typing import Any, Iterator

import typer
from loguru import logger
from pydantic import ValidationError
from rich import print
from rich.console import Console
from rich.table import Table

from src.data_models import RunManifest
from src.exceptions import BadParams, ShflBWError
from src.formats.fileio import FileIO

err_console = Console(stderr=True)


def tool_version() -> str:
    try:
        return version('shflbw-toolkit')
    except PackageNotFoundError:
        return '0.1.0'


def configure_logging(level: str = 'INFO') -> None:
    """Single stderr sink, so stdout stays clean for --json."""
    logger.remove()
    logger.add(sys.stderr, level=level.upper())


@contextmanager
def timer(log_template_str: str | None = None) -> Iterator[None]:
    """Context manager for timing code blocks."""
    t0 = perf_counter()
    try:
        yield
    finally:
        elapsed = perf_counter() - t0
        if elapsed >= 120:
            time_str = f'{elapsed/60:.2f} minutes'
        else:
            time_str = f'{elapsed:.2f} seconds'
        if log_template_str:
            logger.info(log_template_str.format(time=time_str))
        else:
            logger.info(time_str)


@contextmanager
def exit_on_error() -> Iterator[None]:
    '''
    Maps bad input to exit code 2 with a one-line message on stderr.
    '''
    try:
        yield
    except (ShflBWError, FileExistsError, FileNotFoundError, ValidationError) as e:
        err_console.print(f'[red]error:[/red] {type(e).__name__}: {e}', highlight=False)
        raise typer.Exit(code=2)


def parse_int_tuple(text: str | None, length: int, name: str) -> tuple[int, ...] | None:
    '''
    Parses "a,b,c" option values. Returns None for a missing option and
    raises BadParams on anything else that is not `length` integers.
    '''
    if text is None:
        return None
    try:
        values = tuple(int(part) for part in text.split(','))
    except ValueError:
        raise BadParams(f'{name} must be {length} comma separated integers, got {text!r}') from None
    if len(values) != length:
        raise BadParams(f'{name} must be {length} comma separated integers, got {text!r}')
    return values


def parse_float_list(text: str, name: str) -> list[float]:
    try:
        return [float(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise BadParams(f'{name} must be comma separated numbers, got {text!r}') from None


def sha256_digest(file_path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(file_path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b''):
            h.update(chunk)
    return h.hexdigest()


def manifest_path(out_path: str | os.PathLike) -> str:
    return f'{out_path}.manifest.json'


def write_manifest(command: str,
                   inputs: dict[str, Any],
                   params: dict[str, Any],
                   outputs: list[str],
                   out_path: str | os.PathLike,
                   seed: int | None = None,
                   overwrite: bool = False
                   ) -> str:
    '''
    Records how a command was run and the sha256 of every file it wrote,
    as <out_path>.manifest.json.
    '''
    manifest = RunManifest(
        command=command,
        inputs={k: str(v) for k, v in inputs.items() if v is not None},
        params=params,
        seed=seed,
        tool_version=tool_version(),
        output_digests={str(p): sha256_digest(p) for p in outputs},
    )
    return FileIO.save_as_json(manifest_path(out_path), manifest.model_dump(mode='json'), overwrite=overwrite)


def emit(payload: dict | list, as_json: bool, title: str | None = None) -> None:
    '''
    Prints a report: JSON on stdout with --json, otherwise a rich table
    (one row per key, or one row per record for a list of dicts).
    '''
    if as_json:
        typer.echo(json.dumps(payload, indent=2, sort_keys=True, default=str))
        return
    table = Table(title=title)
    if isinstance(payload, list):
        columns = list(payload[0].keys()) if payload else []
        for col in columns:
            table.add_column(col)
        for record in payload:
            table.add_row(*(_fmt(record.get(col)) for col in columns))
    else:
        table.add_column('field')
        table.add_column('value')
        for key, value in payload.items():
            table.add_row(key, _fmt(value))
    print(table)


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return f'{value:.6g}'
    if isinstance(value, (list, dict)):
        text = json.dumps(value, default=str)
        return text if len(text) <= 80 else text[:77] + '...'
    return str(value)
