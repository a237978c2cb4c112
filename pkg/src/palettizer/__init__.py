"""Structure-aware color palette recommendation for infographics."""

__version__ = "0.1.0"
