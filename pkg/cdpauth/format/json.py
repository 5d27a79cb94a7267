from __future__ import annotations

from typing import Any

from .format import Format


class Json(Format):
    extensions = {'json'}

    @classmethod
    def initialize(cls) -> None:
        import simplejson

        cls.module = simplejson
        cls.readfuncs.update({'json': simplejson.load})
        cls.writefuncs.update({'json': simplejson.dump})

    def read(self, **kwargs: Any) -> Any:
        with open(self.file, encoding="utf-8") as file:
            return self.readfuncs[self.file.extension](file, **kwargs)

    def write(self, item: Any, indent: int = 4, sort_keys: bool = True, **kwargs: Any) -> None:
        with open(self.file, 'w', encoding="utf-8", newline="\n") as file:
            self.writefuncs[self.file.extension](item, file, indent=indent, sort_keys=sort_keys, **kwargs)
            file.write("\n")
