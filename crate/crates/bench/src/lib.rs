//! Shared fixtures for the criterion benches.

use iqdp_core::{Pmf, State};

/// Root state with `n` users drawing uniformly from {1, ..., l}.
pub fn uniform_root(n: usize, l: usize) -> State {
    State::root(n, Pmf::uniform(l).expect("valid support")).expect("valid root")
}
