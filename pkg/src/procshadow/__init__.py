"""Classical shadow tomography of quantum states and channels."""

__version__ = "0.1.0"
