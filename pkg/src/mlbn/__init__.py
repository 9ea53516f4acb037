"""Max-linear Bayesian networks: simulation and edge-weight estimation."""

from .network import WeightedDag, make_dag, load_dag, save_dag
from .simulate import InnovationSpec, NoiseSpec, simulate, differences
from .tropical import TropicalMatrix, kleene_star

__all__ = [
    "WeightedDag",
    "make_dag",
    "load_dag",
    "save_dag",
    "InnovationSpec",
    "NoiseSpec",
    "simulate",
    "differences",
    "TropicalMatrix",
    "kleene_star",
]

__version__ = "0.1.0"
