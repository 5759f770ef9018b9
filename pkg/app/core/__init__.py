"""Core utilities and exceptions."""

