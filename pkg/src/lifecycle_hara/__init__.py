"""Life-cycle consumption and investment under time-varying HARA preferences."""
__version__ = "0.1.0"
