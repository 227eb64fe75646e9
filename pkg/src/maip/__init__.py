"""Multi-frame image reconstruction with an untrained multi-branch attention network."""

__version__ = "0.1.0"
