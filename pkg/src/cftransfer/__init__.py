"""Exact continued-fraction constructions: thin subsets, seed sets, digit insertion."""
import sys

# digits of deep constructions run to hundreds of thousands of decimal places
if hasattr(sys, "set_int_max_str_digits"):
    sys.set_int_max_str_digits(0)

__version__ = "0.1.0"
