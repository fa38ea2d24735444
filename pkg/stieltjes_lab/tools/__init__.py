"""Command-line tools; run with ``python -m stieltjes_lab.tools.<name>``."""
