//! Plug-in optimizers for each cost model, the exact pooling path for finite
//! feasible sets, and the continuous-support newsvendor.

mod continuous;
mod path;
mod plugin;

pub use continuous::{continuous_newsvendor, AffineCdf, Cdf, EmpiricalCdf, FnCdf, ScaledBetaCdf, UniformCdf};
pub use path::{alpha_path, AlphaPath};
pub use plugin::{full_information_decision, solve_plugin, solve_plugin_probs, solve_shrunken, Workspace, TIE_TOL};
