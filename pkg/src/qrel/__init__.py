"""Quantum sets, relation calculus, nonduplicating predicate logic, and
verifiers for discrete quantum structures, with a .qrel workspace CLI."""

from . import config
from .subspace import Subspace, span, join, meet, complement, compare
from .qset import (
    Atom,
    QuantumSet,
    Relation,
    atoms,
    classical,
    product,
    unit,
    equality,
    compose,
    cross,
    dagger,
    conjugate,
    bend,
    unbend,
)
from .logic import Variable, Var, App, Atomic, interpret, truth

__version__ = "0.1.0"
