"""Landmark-based approximate distance oracles for sparse graphs.

Stretch-2, stretch-(4k-1) and additive-stretch oracles built from sampled
landmarks, balls and vicinities, a Thorup-Zwick sub-oracle, a node-splitting
reduction for skewed degrees, and a static compact-routing simulator.
"""

from .graph import Graph, dijkstra, exact_oracle, gen_geometric, gen_gnm, load_graph, read_graph, truncated_dijkstra
from .landmarks import BuildError, LandmarkSet, compute_ball, compute_vicinity, sample_landmarks
from .oracles import (
    AdditiveOracle,
    MultOracle,
    QueryResult,
    Stretch2Oracle,
    build_additive,
    build_mult,
    build_stretch2,
    query2,
    query2_optimized,
    query_additive,
    query_mult,
    query_mult_optimized,
)
from .reduction import reduce
from .serialize import dump_oracle, load_oracle, read_oracle, save_oracle
from .tz import TZOracle, tz_build, tz_query

__all__ = [
    "AdditiveOracle",
    "BuildError",
    "Graph",
    "LandmarkSet",
    "MultOracle",
    "QueryResult",
    "Stretch2Oracle",
    "TZOracle",
    "build_additive",
    "build_mult",
    "build_stretch2",
    "compute_ball",
    "compute_vicinity",
    "dijkstra",
    "dump_oracle",
    "exact_oracle",
    "gen_geometric",
    "gen_gnm",
    "load_graph",
    "load_oracle",
    "query2",
    "query2_optimized",
    "query_additive",
    "query_mult",
    "query_mult_optimized",
    "read_graph",
    "read_oracle",
    "reduce",
    "sample_landmarks",
    "save_oracle",
    "truncated_dijkstra",
    "tz_build",
    "tz_query",
]
