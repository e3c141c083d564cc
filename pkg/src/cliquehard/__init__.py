"""Instance-hardness prediction and explanation for the maximum clique problem."""

__version__ = "0.1.0"
