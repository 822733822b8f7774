"""Best-choice prophet inequality and prophet secretary toolkit."""

__version__ = "0.1.0"
