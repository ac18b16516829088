"""qme: quench simulations and relaxation diagnostics for spin-1/2 chains."""

__version__ = "0.1.0"
