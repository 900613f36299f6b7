"""The oracle families built on landmarks, balls and vicinities."""

from .additive import AdditiveOracle, build_additive, query_additive
from .common import Branch, QueryResult
from .mult import MultOracle, build_mult, query_mult, query_mult_optimized
from .stretch2 import Stretch2Oracle, build_stretch2, query2, query2_optimized

__all__ = [
    "AdditiveOracle",
    "Branch",
    "MultOracle",
    "QueryResult",
    "Stretch2Oracle",
    "build_additive",
    "build_mult",
    "build_stretch2",
    "query2",
    "query2_optimized",
    "query_additive",
    "query_mult",
    "query_mult_optimized",
]
