"""Qualitative model checking and qualitative equivalences for finite MDPs."""
from .checker import NotAlternating, NotQrctl, check, check_atl, check_names, eval_f_apre, with_label
from .equivalence import BudgetExceeded, Partition, Refinement, Splitter, certify, coarsest_stable, equiv, quotient
from .formula import FormulaSyntaxError, dualize, parse, show
from .mdp import Mdp, ModelError, alternate, build, check_alternating, edge_relation, load, loads, validate
from .rabin import MissingComplement, NotDeterministic, RabinAutomaton, check_star, product, rabin_qual

__all__ = [
    "BudgetExceeded", "FormulaSyntaxError", "Mdp", "MissingComplement", "ModelError", "NotAlternating",
    "NotDeterministic", "NotQrctl", "Partition", "RabinAutomaton", "Refinement", "Splitter",
    "alternate", "build", "certify", "check", "check_alternating", "check_atl", "check_names",
    "check_star", "coarsest_stable", "dualize", "edge_relation", "equiv", "eval_f_apre", "load",
    "loads", "parse", "product", "quotient", "rabin_qual", "show", "validate", "with_label",
]
