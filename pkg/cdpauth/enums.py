from subtypes import Enum


class Enums:
    class IfExists(Enum):
        FAIL, ALLOW, TRASH = "fail", "allow", "trash"

    class BorderMode(Enum):
        INTERIOR, WHITE_PAD = "interior", "white_pad"

    class Orientation(Enum):
        HIGHER_IS_ORIGINAL, LOWER_IS_ORIGINAL = "higher_is_original", "lower_is_original"

    class MetricId(Enum):
        LLS, MSE, PCOR, HAMM = "LLS", "MSE", "PCOR", "HAMM"
        M_LLS, M_MSE, M_PCOR, M_HAMM = "M-LLS", "M-MSE", "M-PCOR", "M-HAMM"

    class PixelKind(Enum):
        MSE, PCOR = "MSE", "PCOR"
