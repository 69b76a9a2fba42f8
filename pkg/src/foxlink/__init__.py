"""Fox H-function toolkit for mixed FSO/RF relay performance analysis."""

__version__ = "0.1.0"
