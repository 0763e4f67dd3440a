"""raildesk: a desk-scale automated rail dispatching assistant."""

__version__ = "0.1.0"
