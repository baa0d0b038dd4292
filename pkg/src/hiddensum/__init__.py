"""Hidden-sum structures on F_2^n, differential-uniformity bounds, and the
hidden-sum attack on a 6-bit translation-based toy cipher."""

from .gf2 import AffineMap, BitMatrix, BitVector, PermutationTable
from .hidden_sum import RingProduct, build_product, exterior_algebra

__version__ = "0.1.0"

__all__ = ["AffineMap", "BitMatrix", "BitVector", "PermutationTable", "RingProduct",
           "build_product", "exterior_algebra"]
