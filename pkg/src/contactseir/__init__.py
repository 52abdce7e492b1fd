"""Stochastic SEIR epidemics on contact graphs, with interventions as graph edits."""

__version__ = "0.1.0"
