"""Shortest-path algorithms built on min-plus and counting matrix products."""
from .approx import ErrorProfile, approx_apsp, approx_paths
from .counting import (betweenness, betweenness_all, count_approx, count_capped_directed, count_exact,
                       count_mod_directed, count_undirected_seidel)
from .exact import (cred_apsp, one_red_apsp, seidel_apsp, undirected_small_weight_apsp, zwick_apsp)
from .graph import Graph, load_graph, parse_graph, save_graph
from .lex2 import aplsp, apslp, lex2_directed, lex2_gamma, lex2_undirected_positive
from .products import ProductEngine, funny_product, minplus, witness_count_product
from .semiring import INF, CostModel, format_matrix, parse_matrix

__version__ = "0.1.0"

__all__ = [
    "INF", "CostModel", "ErrorProfile", "Graph", "ProductEngine",
    "aplsp", "approx_apsp", "approx_paths", "apslp", "betweenness", "betweenness_all",
    "count_approx", "count_capped_directed", "count_exact", "count_mod_directed", "count_undirected_seidel",
    "cred_apsp", "format_matrix", "funny_product", "lex2_directed", "lex2_gamma", "lex2_undirected_positive",
    "load_graph", "minplus", "one_red_apsp", "parse_graph", "parse_matrix", "save_graph", "seidel_apsp",
    "undirected_small_weight_apsp", "witness_count_product", "zwick_apsp",
]
