"""Routing policies: baseline heuristics and the parameter-sharing network."""
