"""Verbose logger for chainmi."""

from typing import Any

from rich.console import Console

# Global instance; stderr keeps report output on stdout clean
_console = Console(stderr=True)
_verbose = False


def set_verbose(enabled: bool) -> None:
    """Set verbose mode."""
    global _verbose
    _verbose = enabled


def is_verbose() -> bool:
    """Return whether verbose mode is enabled."""
    return _verbose


def _shorten(value: Any, limit: int) -> str:
    text = str(value)
    if len(text) > limit:
        text = text[: limit - 3] + "..."
    return text


def log_call(service: str, method: str, **kwargs: Any) -> None:
    """Log a service call with parameters.

    Args:
        service: Service name (e.g. "bound_engine")
        method: Method name (e.g. "chained_bound")
        **kwargs: Call parameters
    """
    if not _verbose:
        return

    params = [f"{key}={_shorten(value, 50)}" for key, value in kwargs.items() if value is not None]
    _console.print(f"  [dim]→ {service}.{method}({', '.join(params)})[/dim]")


def log_result(service: str, method: str, result: Any) -> None:
    """Log a service call result.

    Args:
        service: Service name
        method: Method name
        result: Call result
    """
    if _verbose:
        _console.print(f"  [dim]← {service}.{method} = {_shorten(result, 80)}[/dim]")


def log_info(message: str) -> None:
    """Log an informational message."""
    if _verbose:
        _console.print(f"  [dim]{message}[/dim]")


def log_warning(message: str) -> None:
    """Log a warning message."""
    # Always shown, warnings are important
    _console.print(f"  [yellow]⚠ {message}[/yellow]")
