from __future__ import annotations

import os
from pathlib import Path
from typing import Iterator

from appdirs import user_data_dir, site_data_dir

from .node import PathNode, PathLike, Settings
from .file import File


class Dir(PathNode):
    """
    A directory in the filesystem. Created on instanciation if it does not exist.

    Iteration yields the contained File objects in sorted name order, which is the order every cdpauth command pairs and indexes its inputs by.
    """

    ENV_VAR = "CDPAUTH_OUTPUT_DIR"

    def __init__(self, path: PathLike = "", settings: Settings = None) -> None:
        self.settings = self.Settings.from_settings(settings)
        self._path: Path = Path(path).absolute()
        self.create()

    def __repr__(self) -> str:
        return f"{type(self).__name__}(path={repr(self.path)}, files={len(self)})"

    def __len__(self) -> int:
        return len(list(self.files()))

    def __iter__(self) -> Iterator[File]:
        return self.files()

    def __contains__(self, name: str) -> bool:
        return self.path.joinpath(name).exists()

    def files(self, extension: str = None) -> Iterator[File]:
        """Iterate over the Files directly inside this Dir in sorted name order, optionally restricted to one extension."""
        names = sorted(item.name for item in os.scandir(self) if item.is_file())
        for name in names:
            file = self.settings.file_class(self.path.joinpath(name), settings=self.settings)
            if extension is None or file.extension == extension.strip(".").lower():
                yield file

    def create(self) -> Dir:
        """Create this Dir in the filesystem if it does not exist. This method is called implicitly during instanciation. Returns self."""
        self._prepare_dir_if_not_exists(self.path)
        return self

    def new_file(self, name: str, /, extension: str = None) -> File:
        """Instantiate a new File with the specified name within this Dir. If 'extension' is specified, it will be appended to 'name' with a dot as a separator. Returns that File."""
        return self.settings.file_class(self._parse_filename_args(name, extension=extension), settings=self.settings)

    def new_dir(self, name: str) -> Dir:
        """Instantiate a new Dir with the specified name within this Dir. Returns that Dir."""
        return self.settings.dir_class(self.path.joinpath(name), settings=self.settings)

    @classmethod
    def from_appdata(cls, app_name: str = "cdpauth", app_author: str = None, systemwide: bool = False, settings: Settings = None) -> Dir:
        """Create a Dir within an application data storage location appropriate to the operating system in use."""
        return cls(os.path.join(user_data_dir(app_name, app_author) if not systemwide else site_data_dir(app_name, app_author)), settings=settings)

    @classmethod
    def from_output_root(cls, settings: Settings = None) -> Dir:
        """Create the default output Dir: '$CDPAUTH_OUTPUT_DIR' if that variable is set, otherwise a 'runs' Dir inside the application data location."""
        if (override := os.environ.get(cls.ENV_VAR)):
            return cls(override, settings=settings)

        return cls.from_appdata(settings=settings).new_dir("runs")
