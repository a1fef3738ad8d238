"""Entry point for python -m chainmi."""

from chainmi.cli.main import app

if __name__ == "__main__":
    app()
