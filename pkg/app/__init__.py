# Dimer-monomer enumeration on Hanoi and Sierpinski-type graphs
import sys

__version__ = "1.0.0"

# Ledger integers reach hundreds of thousands of digits.
if hasattr(sys, "set_int_max_str_digits"):
    sys.set_int_max_str_digits(0)
