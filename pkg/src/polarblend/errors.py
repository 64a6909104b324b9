"""Exception types raised by polarblend."""


class PolarBlendError(Exception):
    """Base class for all library errors."""


class InvalidMaterialError(PolarBlendError, ValueError):
    pass


class EmptyStackError(PolarBlendError, ValueError):
    pass


class OrthotropyViolation(PolarBlendError, ValueError):
    """Membrane tensor is not orthotropic within the requested tolerance."""

    def __init__(self, offset_deg: float, tolerance_deg: float):
        self.offset_deg = offset_deg
        self.tolerance_deg = tolerance_deg
        super().__init__(
            f"membrane tensor not orthotropic: Phi0-Phi1 is {offset_deg:.4f} deg "
            f"away from the nearest multiple of 45 deg (tolerance {tolerance_deg} deg)"
        )


class MissingStrengthData(PolarBlendError, ValueError):
    pass


class StackParseError(PolarBlendError, ValueError):
    def __init__(self, message: str, text: str, column: int, line: int = 1):
        self.text = text
        self.column = column
        self.line = line
        super().__init__(f"line {line}, column {column}: {message}")


class SchemeError(PolarBlendError, ValueError):
    pass


class DatasetIntegrityError(PolarBlendError):
    pass


class InputFormatError(PolarBlendError, ValueError):
    """Malformed input file or mismatching units header."""
