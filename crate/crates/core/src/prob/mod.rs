//! Exact finite-alphabet probability engine.

mod channel;
mod diagnostics;
pub mod io;
mod joint;

pub use channel::Channel;
pub use diagnostics::{csiszar_sum_check, iid_proximity_diagnostic, iid_proximity_grouped};
pub use joint::{
    entropy_of_slice, iid_product, total_variation, tv_slices, Alphabet, Joint, NORMALIZATION_TOL,
    RENORMALIZE_TOL,
};

/// Default bound on dense state-space sizes.
pub const DEFAULT_STATE_CAP: u128 = 100_000_000;
