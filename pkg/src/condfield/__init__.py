"""CondField - volume conductors, conductivity networks and TMS field dosimetry."""

__version__ = "0.3.0"
