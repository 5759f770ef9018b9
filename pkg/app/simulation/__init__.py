"""Discrete-event simulation of the virtual data center and its objectives."""
