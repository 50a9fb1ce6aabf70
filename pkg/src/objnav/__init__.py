"""Object-goal navigation on a top-down semantic grid."""

__version__ = "0.1.0"
