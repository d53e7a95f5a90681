"""Loss-tolerant parity-encoded optical memory: oracle, analytics, Monte Carlo and resource costing."""

__version__ = "0.1.0"
