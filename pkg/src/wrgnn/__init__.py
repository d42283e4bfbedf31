"""Local assortativity, structure/proximity computation graphs and weighted relational GNNs."""

from .compgraph import ComputationGraph, build_naive, build_practical, deserialize, serialize
from .graph import LabeledGraph, connected_component, degree, hop_ring, load_graph
from .mixing import (
    assortativity_profile,
    global_assortativity,
    global_mixing_matrix,
    local_assortativity,
    ppr_weights,
    totalrank_weights,
)
from .model import ModelConfig, WrgnnModel
from .structdist import degree_sequence, dtw_cost, structural_distances
from .training import TrainConfig, evaluate, stratified_split, train

__version__ = "0.1.0"
