import json
import os
import pathlib

import pandas as pd
from loguru import logger


class FileIO:
    '''
    Convenience class for saving and loading JSON sidecars, reports and
    tables to/from disk with explicit overwrite control.
    '''

    @staticmethod
    def _rename_file_extension(file_path: str, extension: str) -> str:
        '''
        Renames file with appropriate extension if file_path
        does not already have correct extension.
        '''
        prefix = os.path.splitext(file_path)[0]
        return prefix + '.' + extension

    @staticmethod
    def check_file_path(file_path: str | os.PathLike, overwrite: bool) -> None:
        '''
        Checks for existence of file and overwrite permissions, creating the
        parent directory when it does not exist yet.
        '''
        path = pathlib.Path(file_path)
        if path.exists() and not overwrite:
            raise FileExistsError(
                f'File by name {path} already exists, try using another file name or set overwrite to True.'
            )
        elif path.exists():
            path.unlink()
        else:
            path.parent.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def load_json(file_path: str | os.PathLike) -> dict | list:
        '''
        Loads json file from disk.
        '''
        with open(file_path) as f:
            return json.load(f)

    @classmethod
    def save_as_json(cls,
                     file_path: str | os.PathLike,
                     data: list | dict,
                     indent: int = 4,
                     overwrite: bool = False
                     ) -> str:
        '''
        Saves data to disk as a json file with sorted keys so that identical
        data always produces identical bytes. Returns the path written.
        '''
        file_path = str(file_path)
        if not file_path.endswith('json'):
            file_path = cls._rename_file_extension(file_path, 'json')
        cls.check_file_path(file_path, overwrite=overwrite)
        with open(file_path, 'w') as f:
            json.dump(data, f, indent=indent, sort_keys=True)
            f.write('\n')
        logger.info(f'Data saved as json file here: {file_path}')
        return file_path

    @classmethod
    def save_as_csv(cls,
                    file_path: str | os.PathLike,
                    data: pd.DataFrame | list[dict],
                    overwrite: bool = False
                    ) -> str:
        '''
        Saves a table to disk as csv, without the index.

        Args:
        -----
        file_path : str
            Output path, "csv" is appended as extension when missing.
        data : pd.DataFrame | list[dict]
            Rows to save; a list of dicts is converted to a DataFrame first.
        overwrite : bool
            Overwrite existing file if True, otherwise raise FileExistsError.
        '''
        if isinstance(data, list):
            data = pd.DataFrame.from_records(data)
        file_path = str(file_path)
        if not file_path.endswith('csv'):
            file_path = cls._rename_file_extension(file_path, 'csv')
        cls.check_file_path(file_path, overwrite=overwrite)
        data.to_csv(file_path, index=False)
        logger.info(f'Table saved as csv file here: {file_path}')
        return file_path
