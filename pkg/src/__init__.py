"""condimp - conditional feature importance estimation and testing."""

__version__ = "1.0.0"
