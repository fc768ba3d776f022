"""Exception types raised across the package."""


class MaskBlurError(Exception):
    """Base class for all package errors."""


class NonIntegralFactor(MaskBlurError, ValueError):
    pass


class DimensionMismatch(MaskBlurError, ValueError):
    pass


class KernelLargerThanImage(MaskBlurError, ValueError):
    pass


class BudgetExceeded(MaskBlurError, MemoryError):
    def __init__(self, required, available, what="matrix"):
        self.required = int(required)
        self.available = int(available)
        super().__init__(
            f"{what} needs ~{self.required} bytes, budget is {self.available} bytes"
        )


class NotSymmetric(MaskBlurError, ValueError):
    pass


class OddLength(MaskBlurError, ValueError):
    pass


class ZeroOuterTap(MaskBlurError, ValueError):
    pass


class NotConverged(MaskBlurError, RuntimeWarning):
    """Issued as a warning when CG stops at ``cg_max_iter`` before reaching ``cg_tol``."""


class TooManyPatterns(MaskBlurError, ValueError):
    pass


class UnsupportedFormat(MaskBlurError, ValueError):
    pass


class NonIntegralDownscale(MaskBlurError, ValueError):
    pass


class MissingResponse(MaskBlurError, ValueError):
    pass


class AllDarkBackground(MaskBlurError, ValueError):
    pass


class TrimTooLarge(MaskBlurError, ValueError):
    pass


class RadiusOutOfBounds(MaskBlurError, ValueError):
    pass


class ConfigInvalid(MaskBlurError, ValueError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ChecksumMismatch(MaskBlurError):
    def __init__(self, files):
        self.files = list(files)
        super().__init__("checksum mismatch: " + ", ".join(self.files))
