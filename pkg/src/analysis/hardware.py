import os
import pathlib

from loguru import logger

from src.data_models import HardwareModel
from src.formats.fileio import FileIO

BUNDLED_PROFILE_DIR = pathlib.Path(__file__).resolve().parents[2] / 'data' / 'profiles'


def _search_dirs(extra_dir: str | os.PathLike | None) -> list[pathlib.Path]:
    dirs = [pathlib.Path(extra_dir)] if extra_dir else []
    return dirs + [BUNDLED_PROFILE_DIR]


def list_profiles(extra_dir: str | os.PathLike | None = None) -> list[str]:
    '''
    Names of the available hardware profiles, bundled ones plus any found
    in extra_dir. A name in extra_dir shadows the bundled one.
    '''
    names: set[str] = set()
    for d in _search_dirs(extra_dir):
        if d.is_dir():
            names.update(p.stem for p in d.glob('*.json'))
    return sorted(names)


def load_hardware_profile(name_or_path: str | os.PathLike,
                          extra_dir: str | os.PathLike | None = None
                          ) -> HardwareModel:
    '''
    Loads a HardwareModel from a JSON file path or from a profile name
    looked up in extra_dir, then in the bundled profile directory.
    Raises FileNotFoundError when nothing matches.
    '''
    path = pathlib.Path(name_or_path)
    if not path.is_file():
        candidates = [d / f'{name_or_path}.json' for d in _search_dirs(extra_dir)]
        path = next((c for c in candidates if c.is_file()), None)
        if path is None:
            raise FileNotFoundError(
                f'no hardware profile {name_or_path!r}; available: {", ".join(list_profiles(extra_dir))}'
            )
    data = FileIO.load_json(path)
    data.setdefault('name', path.stem)
    logger.debug(f'loaded hardware profile {data["name"]} from {path}')
    return HardwareModel(**data)
