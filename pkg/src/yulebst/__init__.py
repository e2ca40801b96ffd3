"""Random binary search trees, the Yule tree process and their martingales."""

__version__ = "0.1.0"
