"""socrank: rank URLs shared on a follow network.

Three rankers over one social snapshot: scaled PageRank aggregated per URL
(PRSN), hubs-and-authorities on the sharer->URL incidence (HSN), and
per-person maximum-flow ranking over a personalized flow graph, plus the
measurement pipeline (affected sets, distance sampling, ranking-consistency
metrics) and a deterministic experiment CLI.
"""

from .analysis import (
    AffectedSetStats,
    ConsistencyStats,
    DistanceSample,
    SeparatorFit,
    UrlSetSelection,
    affected_set,
    avg_distance_to_spreaders,
    consistency,
    fit_linear_separator,
    pairwise_consistency,
    select_url_sets,
)
from .errors import (
    CanonicalizationError,
    ConfigError,
    DataError,
    MalformedLineError,
    SnapshotFormatError,
    SocrankError,
)
from .flow_rank import (
    FlowAssignment,
    FlowGraph,
    PersonalizedRanking,
    build_flow_graph,
    max_flow,
    personalized_rank,
    rank_for_users,
)
from .graph_store import (
    GraphSnapshot,
    ShareIndex,
    bfs_sample,
    canonicalize_url,
    load_edges,
    load_redirects,
    load_shares,
    load_snapshot,
    save_snapshot,
)
from .hsn import BipartiteShareMatrix, HitsState, build_share_matrix, hits, hsn_rank
from .prsn import (
    PageRankParams,
    ScoreVector,
    prsn_scores,
    rank_urls,
    scaled_pagerank,
    transition_weights,
)
from .ranking import RankedList, competition_rank
from .synth import SynthSpec, write_corpus

__version__ = "0.1.0"
