"""memadapter: out-of-process scoring adapter speaking the memlab wire
protocol (one path per stdin line, ``path<TAB>score`` per stdout line)."""

from .serve import AdapterConfig, ERROR_SENTINEL, load_scorer, serve, stub_scorer

__version__ = "0.1.0"

__all__ = ["AdapterConfig", "ERROR_SENTINEL", "load_scorer", "serve",
           "stub_scorer", "__version__"]
