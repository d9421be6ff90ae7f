"""Information-scrambling diagnostics for SYK and LMG models under closed and
Lindblad dynamics."""

__version__ = "0.1.0"
