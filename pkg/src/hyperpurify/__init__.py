"""Single-copy entanglement purification with polarization/spatial-mode hyperentanglement."""

__version__ = "0.1.0"
