from .format import Format, FormatHandler, FormatMeta
from .pgm import Pgm
from .json import Json
from .csv import Csv
from .svg import Svg
