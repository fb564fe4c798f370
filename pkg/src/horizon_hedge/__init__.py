"""Multi-horizon futures hedging: GARCH hedge ratios, frequency scaling and risk-based effectiveness."""

__version__ = "0.1.0"

from .errors import HedgeError, PipelineError  # noqa: E402

__all__ = ["HedgeError", "PipelineError", "__version__"]
