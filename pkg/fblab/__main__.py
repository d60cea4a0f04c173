"""Entry point for running fblab as a module."""

from __future__ import annotations

from .cli import main

if __name__ == "__main__":
    main()
