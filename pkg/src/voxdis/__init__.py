"""voxdis: speaker-disentangled acoustic pathology classification toolkit."""

__version__ = "0.1.0"
