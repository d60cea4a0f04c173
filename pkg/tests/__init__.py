"""fblab test suite."""
