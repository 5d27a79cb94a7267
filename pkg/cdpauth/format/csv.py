from __future__ import annotations

from typing import Any

from .format import Format


class Csv(Format):
    """Comma-separated tables, read as and written from pandas DataFrames."""
    extensions = {'csv'}

    @classmethod
    def initialize(cls) -> None:
        import pandas

        cls.module = pandas
        cls.readfuncs.update({'csv': pandas.read_csv})
        cls.writefuncs.update({'csv': pandas.DataFrame.to_csv})

    def write(self, item: Any, **kwargs: Any) -> None:
        kwargs = {'index': False, 'line_terminator': "\n"} | kwargs
        self.writefuncs[self.file.extension](item, str(self.file), **kwargs)
