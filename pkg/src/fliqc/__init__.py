"""Reactive collision-aware velocity planning for serial-chain arms."""

__version__ = "0.1.0"
