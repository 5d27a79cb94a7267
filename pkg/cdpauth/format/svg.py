from __future__ import annotations

from typing import Any

from .format import Format


class Svg(Format):
    """Vector figures. Written from matplotlib Figures with a fixed hash salt and no date stamp, so identical figures give identical bytes."""
    extensions = {'svg'}

    @classmethod
    def initialize(cls) -> None:
        import matplotlib

        matplotlib.use("Agg")
        matplotlib.rcParams["svg.hashsalt"] = "cdpauth"

        cls.module = matplotlib
        cls.writefuncs.update({'svg': lambda figure, path, **kwargs: figure.savefig(path, format="svg", metadata={"Date": None}, **kwargs)})

    def read(self, **kwargs: Any) -> str:
        with open(self.file, encoding="utf-8") as stream:
            return stream.read()
