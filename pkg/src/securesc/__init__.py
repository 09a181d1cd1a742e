"""Real-time and causal secure source coding."""

__version__ = "0.1.0"
