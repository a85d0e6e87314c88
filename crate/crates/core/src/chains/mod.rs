//! Concrete kernels, targets and statistics.

mod ar1;
mod bimodal;
mod cpt;
mod matrix;

pub use ar1::{Ar1Kernel, StandardNormal};
pub use bimodal::{bimodal_chain, bimodal_target, mh_pm1_kernel, BIMODAL_MODES};
pub use cpt::{cpt_swap_step, CptChain, PermutationState};
pub use matrix::{
    checkerboard_swap_step, cooccurrence_statistic, cooccurrence_sum_of_squares, BinaryMatrix, SwapChain,
};
