"""Structural cohesion analysis: k-components, node connectivity and null models."""

from .graph import (
    ComplementView,
    Graph,
    InputError,
    NotBipartiteError,
    build_bipartite,
    build_graph,
    complement_view,
    density,
    one_mode_projection,
    read_edge_list,
)
from .decomposition import (
    biconnected_components,
    connected_components,
    core_numbers,
    k_core_subgraph,
)
from .connectivity import (
    PairConnectivityCache,
    average_node_connectivity,
    edge_connectivity,
    local_node_connectivity_approx,
    local_node_connectivity_exact,
    node_connectivity,
)

__version__ = "0.1.0"
