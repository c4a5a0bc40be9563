"""Green's-function channel models for RIS and STAR-RIS links."""
__version__ = "0.1.0"
