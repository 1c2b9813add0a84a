"""Figure rendering for qkicks CSV artifacts (consumes CSV + sidecar only)."""

__version__ = "0.1.0"
