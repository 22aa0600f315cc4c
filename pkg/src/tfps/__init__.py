"""Thomas-Fermi ground states of binary condensate mixtures in one dimension."""

__version__ = "0.1.0"
