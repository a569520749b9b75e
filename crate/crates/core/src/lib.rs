//! Linear-quadratic network games on graphs: the forward equilibrium model
//! and the inverse problem of learning the interaction graph and marginal
//! benefits from observed equilibrium actions.
//!
//! * [`graphs`]: dense weighted graphs, ER/WS/BA generators, Laplacians.
//! * [`games`]: payoffs, Nash equilibria, benefit samplers, synthetic data.
//! * [`inference`]: the independent-benefits convex program and the
//!   homophilous block-coordinate-descent learner.
//! * [`baselines`]: sample correlation and graphical Lasso.
//! * [`eval`]: edge AUC, benefit R², spectral clustering.
//! * [`experiment`]: config-driven sweeps and grid search on real data.

pub mod baselines;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod games;
pub mod graphs;
pub mod inference;
pub mod io;
pub mod seed;

pub use error::{Error, Result};
pub use games::{ActionMatrix, BenefitMatrix, BenefitRegime};
pub use graphs::{BetaSign, Graph, GraphModel, GraphModelParams};
pub use inference::{LearnedModel, SolverParams};
