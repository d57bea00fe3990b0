"""Echo state networks with orthogonal connectivity for likelihood estimation."""

__version__ = "0.1.0"
