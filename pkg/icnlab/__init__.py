"""Joint caching and pricing equilibria for hierarchical information-centric networks."""

__version__ = "0.1.0"
