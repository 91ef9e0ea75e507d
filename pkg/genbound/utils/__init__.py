"""Utility functions for the CLI and the core modules."""
