from __future__ import annotations

from typing import Any

import numpy as np

from .format import Format


class Pgm(Format):
    """8-bit binary greyscale images (P5). Read as and written from 2-D uint8 arrays."""
    extensions = {'pgm'}

    @classmethod
    def initialize(cls) -> None:
        from PIL import Image

        cls.module = Image
        cls.readfuncs.update({'pgm': cls.module.open})

    def read(self, **kwargs: Any) -> np.ndarray:
        with self.readfuncs[self.file.extension](str(self.file), **kwargs) as image:
            if image.mode != "L":
                raise ValueError(f"'{self.file}' is not an 8-bit greyscale image (mode '{image.mode}').")

            return np.array(image, dtype=np.uint8)

    def write(self, item: np.ndarray, **kwargs: Any) -> None:
        array = np.asarray(item)
        if array.ndim != 2 or array.dtype != np.uint8:
            raise TypeError(f"{type(self).__name__} can only write 2-D uint8 arrays, not {array.dtype} of shape {array.shape}.")

        self.module.fromarray(np.ascontiguousarray(array)).save(str(self.file), format="PPM", **kwargs)
