//! Choosing the pooling amount and the anchor.

mod anchor;
mod grid;
mod js;
mod loo;
mod selection;

pub use anchor::{anchor_candidates, beta_anchor, grand_mean, resolve_anchor, AnchorSet, AnchorSpec, MIN_BETA_SHAPE};
pub use grid::AlphaGrid;
pub use js::{alpha_ap, alpha_js};
pub(crate) use loo::sum_curves;
pub use loo::{
    fold_assignment, kfold_criterion, kfold_curve, loo_criterion, loo_curve, loo_problem_curve, loo_problem_curves,
    select_alpha_kfold, select_alpha_loo, select_alpha_loo_with, select_joint_hloo, select_joint_hloo_spec,
};
pub(crate) use selection::{argmin_trace, select_from_curves};
pub use selection::{Method, PoolingSelection, TracePoint, CRITERION_RTOL};
