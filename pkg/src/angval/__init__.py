"""Principal angles between subspaces, their derivatives along smooth
curves, and angular values of discrete and continuous linear systems."""

__version__ = "0.1.0"
