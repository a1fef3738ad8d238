"""CLI interface for chainmi."""
