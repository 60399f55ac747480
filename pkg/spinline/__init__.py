"""spinline: spin-chain thermodynamics, mean-field resonances and waveguide transmission."""

__version__ = "0.1.0"
