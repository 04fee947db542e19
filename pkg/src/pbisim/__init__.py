"""Exact probabilistic bisimulation for finite probabilistic transition systems.

Decides bisimilarity and similarity, computes the Kantorovich-lifted
bisimulation metric, and model-checks an adequate modal logic and a
probabilistic modal mu-calculus, all over exact rationals.
"""

from .bisim import OnTheFly, Partition, approximant, bisim, bisimilarity, similar
from .core import Dist, Plts, PltsError, format_plts, parse_dist, parse_plts
from .lifting import StateRelation, check
from .logic import distinguish, logically_equivalent, parse_formula, sat_dist, sat_state
from .metric import PseudoMetric, iterate_metric, kantorovich, stabilise
from .mucalc import characteristic_check, characteristic_formula, characteristic_system, greatest_solution
from .syntax import parse, show

__all__ = [
    "Dist",
    "Plts",
    "PltsError",
    "parse_plts",
    "format_plts",
    "parse_dist",
    "StateRelation",
    "check",
    "OnTheFly",
    "Partition",
    "bisim",
    "similar",
    "approximant",
    "bisimilarity",
    "PseudoMetric",
    "kantorovich",
    "iterate_metric",
    "stabilise",
    "parse_formula",
    "sat_state",
    "sat_dist",
    "distinguish",
    "logically_equivalent",
    "parse",
    "show",
    "characteristic_system",
    "characteristic_formula",
    "greatest_solution",
    "characteristic_check",
]
