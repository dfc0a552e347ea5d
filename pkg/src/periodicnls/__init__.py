"""NLS ground states on Z-periodic metric graphs."""

from .graphs import CompactGraph, Edge, GraphError, graphs_equal
from .periodic import (
    NormalizationResult,
    PeriodicSpec,
    SpecError,
    TruncatedGraph,
    build_truncation,
    normalize_pasting,
    raw_glue,
    validate_spec,
)
from .mesh import (
    ElResidual,
    GraphFunction,
    Mesh,
    cell_shift,
    el_residual,
    energy,
    kinetic,
    l2_mass,
    lp_norm,
    lp_powersum,
    rescale_to_mass,
)
from .solitons import (
    MU_R,
    MU_R_PLUS,
    SolitonParams,
    critical_soliton,
    phi_mu,
    phi_one,
    soliton_params,
)
from .rearrange import (
    LineProfile,
    decreasing_rearrangement_to_halfline,
    level_measure,
    symmetric_rearrangement_to_line,
)
from .topology import TopologyClass, classify, cut_edge_set, double_cut_edges, has_terminal_edge, satisfies_h_per
from .trials import (
    SignpostParams,
    SignpostTrial,
    SubcriticalLayout,
    concentrating_bump,
    signpost_trial,
    subcritical_layout,
    subcritical_trial,
    vanishing_sequence,
)
from .gn import GNReport, critical_mass, estimate_cg, gn_quotient
from .minimizer import InconclusiveRun, MinimizeOptions, MinimizeReport, minimize, sweep

__version__ = "0.1.0"
