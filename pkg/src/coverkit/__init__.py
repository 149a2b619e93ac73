"""Coverability of transducer languages by bounded-branching labeled trees."""
from importlib import resources

from .automata import (SINK, BuchiSpec, CoverProblem, Transducer, determinize_transducer,
                       language_upto, load_buchi, load_transducer, make_problem, parse_buchi,
                       parse_transducer, product_nonblocking_check, validate_determinism)
from .buchi import (INF, WeightRanking, build_buchi_cover_generator, lift_weights,
                    solve_realizability, validate_weight_ranking, verify_generator)
from .oracle import LevelProfile, oracle_coverable_acyclic, oracle_tree_search
from .search import BuchiCoverDecision, solve_weight_ranking
from .simple import CoverDecision, WeightDistribution, minimal_branching, solve_weights, validate_weights
from .trees import FREE, CoverGenerator, TreePrefix, build_cover_generator, check_coverage, materialize_prefix

__version__ = "0.1.0"

__all__ = [
    "BuchiCoverDecision",
    "BuchiSpec",
    "CoverDecision",
    "CoverGenerator",
    "CoverProblem",
    "FREE",
    "INF",
    "LevelProfile",
    "SINK",
    "Transducer",
    "TreePrefix",
    "WeightDistribution",
    "WeightRanking",
    "build_buchi_cover_generator",
    "build_cover_generator",
    "check_coverage",
    "determinize_transducer",
    "fixture_path",
    "language_upto",
    "lift_weights",
    "load_buchi",
    "load_transducer",
    "make_problem",
    "materialize_prefix",
    "minimal_branching",
    "oracle_coverable_acyclic",
    "oracle_tree_search",
    "parse_buchi",
    "parse_transducer",
    "product_nonblocking_check",
    "solve_realizability",
    "solve_weight_ranking",
    "solve_weights",
    "validate_determinism",
    "validate_weight_ranking",
    "validate_weights",
    "verify_generator",
]


def fixture_path(name: str):
    """Path of a bundled example document, e.g. ``fixture_path("fig1.json")``."""
    return resources.files(__name__).joinpath("fixtures", name)
