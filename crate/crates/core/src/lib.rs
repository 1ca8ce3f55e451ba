//! Exact computation of genus-zero BCOV potentials and Frobenius structures on finite dGBV models.
//!
//! All arithmetic is over ℚ or ℚ(i); no floating point enters any computed quantity.

pub mod action;
pub mod feynman;
pub mod frobenius;
pub mod hodge;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod scalar;
pub mod series;
pub mod zoo;

pub use action::{build_action, cme_residual, vertex, ActionError, ActionFunctional, QuarticWeight};
pub use feynman::{enumerate_trees, f0_hpl, f0_tree_sum, tree_amplitude, FeynmanError, Genus0Potential, Tree};
pub use frobenius::{
    flat_metric, gamma_flat, j_function, mc_solve, potential_from_period, structure_constants, vhs_axiom_check,
    wdvv_residual, FrobeniusData, FrobeniusError, JFunction, MCSolution, VhsReport,
};
pub use hodge::{HodgeData, HodgeError, LinearOperator, PropagatorKernel};
pub use linalg::Matrix;
pub use model::{load_model, AxiomError, DGBVModel, Field, GradedElement, ModelError, ModelSpec, AXIOM_ORDER};
pub use pipeline::{run_pipeline, Method, PipelineError, PipelineParams, PipelineReport, Stage};
pub use scalar::Scalar;
pub use series::{LaurentSeries, Ring, SuperSeries, TLaurent};
pub use zoo::{generate_model, ZooError, ZooParams, ZOO_NAMES};
