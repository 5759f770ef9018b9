"""Orchestration services used by the command-line interface."""
