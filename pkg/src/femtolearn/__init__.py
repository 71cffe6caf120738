"""Stackelberg power control for two-tier femtocell uplinks, learned by hierarchical Q-learning."""

__version__ = "0.1.0"
