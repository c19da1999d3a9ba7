//! Fourier Sliced-Wasserstein message passing on featured graphs, together
//! with the reference machinery needed to study it: Weisfeiler-Leman
//! refinement, the doubly-stochastic and tree mover's graph metrics, and
//! empirical distortion and oversmoothing measurements.

pub mod analysis;
pub mod assignment;
pub mod ds;
pub mod fsw;
pub mod gnn;
pub mod graph;
pub mod linalg;
pub mod lp;
pub mod tmd;
pub mod wl;

pub use analysis::{
    dirichlet_energy, distortion_by_iterations, distortion_report, holder_fit, mad, smoothness_profile, AnalysisError,
    DistortionReport, Floors, GraphMetric, HolderFit, PairRecord, SmoothnessProfile, Violation,
    ViolationKind,
};
pub use assignment::{assignment_min_cost, assignment_value, Assignment, AssignmentError, CostMatrix};
pub use ds::{ds_metric, ds_metric_l1, ds_metric_l2, ds_metric_l2_with, DsError, DsResult, FrankWolfe, Norm, TransportPlan};
pub use fsw::{embed_multiset, quantile_cosine_integral, FswError, FswParams, Multiset};
pub use gnn::{default_hidden_dim, relative_distance, FswGnnModel, GnnError, UpdateKind};
pub use graph::{
    disjoint_union, enumerate_small_graphs, gen_neighbors_match, gen_transfer_graph, load_corpus,
    load_graph, Graph, GraphCorpus, GraphDocument, GraphError, Topology, TransferGraph,
};
pub use linalg::Matrix;
pub use lp::{lp_solve, LpError, LpProblem, LpSolution};
pub use tmd::{tmd, tmd_coupling, tree_distance, TmdError};
pub use wl::{computation_tree, wl_colors, wl_equivalent, wl_test, ComputationTree, TreeError, WlVerdict};
