"""egopass: graphical-password authentication challenges from first-person video."""

__version__ = "0.1.0"
