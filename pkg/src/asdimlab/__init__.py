"""Finite-scale cover laboratory for amalgamated products and right-angled
Coxeter groups: word-metric engines, dual-graph machinery, certified
(r, d)-cover construction, and exhaustive verification oracles."""

__version__ = "0.1.0"
