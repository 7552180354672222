"""Classification and numerics for driftless diffusions ``dX = sigma(X) dB``
that may be strict local martingales."""

__version__ = "0.1.0"
