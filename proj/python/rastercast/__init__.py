"""Raster display emission laboratory: synthesize attack pixel streams,
simulate the cable-as-transmitter channel, and decode the result with a
CSS soft modem."""

try:
    from ._rastercast import *  # noqa: F401,F403
    from ._rastercast import __version__  # noqa: F401
except ImportError:  # module on PYTHONPATH next to this package (test builds)
    from _rastercast import *  # noqa: F401,F403
    from _rastercast import __version__  # noqa: F401
