"""Configuration management."""

