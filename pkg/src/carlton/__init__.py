"""Multi-agent Q-learning for distributed channel allocation among interfering networks."""

__version__ = "0.1.0"
