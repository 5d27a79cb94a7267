from __future__ import annotations

import os
from typing import Any, Optional
from pathlib import Path

from .node import PathNode, PathLike, Settings
from .format import FormatHandler
from .helper import file_digest


class File(PathNode):
    """
    A file in the filesystem whose content is read and written through the Format registered for its extension.

    'File.read()' and 'File.write()' dispatch to the format handler ('pgm' images as uint8 arrays, 'json' documents, 'csv' frames, 'svg' figures).
    Writing honours 'File.settings.if_exists', so an existing output is overwritten, trashed, or protected according to the active Settings.
    """

    def __init__(self, path: PathLike, settings: Settings = None) -> None:
        self.settings = self.Settings.from_settings(settings)
        self._path: Path = Path(path).absolute()
        self._handler: Optional[FormatHandler] = None

    def __repr__(self) -> str:
        return f"{type(self).__name__}(path={repr(self.path)}, exists={self.exists()})"

    def __bool__(self) -> bool:
        return self.exists() and os.path.getsize(self) > 0

    @property
    def stem(self) -> str:
        return self.path.stem

    @property
    def extension(self) -> str:
        """Return the extension of the name. Is always returned in lower-case regardless of how the filename is cased."""
        return self.path.suffix.strip(".").lower()

    @property
    def handler(self) -> FormatHandler:
        if self._handler is None or self._handler.file.extension != self.extension:
            self._handler = FormatHandler(self)

        return self._handler

    @property
    def sidecar(self) -> File:
        """Return the JSON metadata File that accompanies this File (same stem, '.json' extension)."""
        return self.settings.file_class(self.path.with_suffix(".json"), settings=self.settings)

    def read(self, **kwargs: Any) -> Any:
        """Return the File's content as the Python object its format produces. If provided, **kwargs are passed on to the underlying reader."""
        if not self.path.is_file():
            raise FileNotFoundError(f"File '{self.path}' does not exist.")

        return self.handler.read(**kwargs)

    def write(self, val: Any, **kwargs: Any) -> File:
        """Write to this File object's mapped file according to the 'if_exists' policy of its settings. Returns self."""
        self._validate(self.path)
        self._prepare_dir_if_not_exists(self.path.parent)
        self.handler.write(item=val, **kwargs)
        return self

    def digest(self) -> str:
        """Return the sha256 hex digest of the file's bytes."""
        return file_digest(self.path)
