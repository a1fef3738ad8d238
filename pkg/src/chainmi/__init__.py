"""chainmi - chained mutual information bounds, covering numbers and Monte-Carlo oracles."""

from importlib.metadata import version, PackageNotFoundError

try:
    __version__ = version("chainmi")
except PackageNotFoundError:
    # Fallback for development without installation
    __version__ = "0.0.0-dev"
