"""Exception types raised across the toolkit."""


class StencilError(ValueError):
    """Degenerate or malformed stencil."""


class BoundarySupportError(ValueError):
    """A stencil overhangs the boundary of a non-periodic grid."""


class DegenerateDataError(ValueError):
    """Data too degenerate for the requested closed form or solve."""


class BlowUpError(RuntimeError):
    """A reference solver left its magnitude guard."""
