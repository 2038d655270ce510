"""Computational lab for gaps between squarefree numbers and the tools behind them."""

__version__ = "0.1.0"
