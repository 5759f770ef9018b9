"""Data models and schemas."""

