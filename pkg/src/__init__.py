"""Sub-harmonic jamming simulator for frequency-hopping wireless microphone links."""

__version__ = "0.1.0"
