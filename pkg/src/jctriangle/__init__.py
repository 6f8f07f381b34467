"""Non-Hermitian Jaynes-Cummings triangle: spectra, exceptional points, perturbation response and biorthogonal dynamics."""

__version__ = "0.1.0"
