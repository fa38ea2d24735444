"""
Library core: linear relations, contractions, RS functions, families and their checks.

Avoid side effects here: no logging setup, no configuration reads.
"""

__all__ = [
    "numerics",
    "linrel",
    "contractions",
    "rs_functions",
    "families",
    "integral_rep",
]
