use super::state::ModeState;
use crate::error::{Error, Result};
use crate::linalg;

/// Self-indistinguishability `Tr[ρ²]`, i.e. the state purity.
pub fn self_indistinguishability(state: &ModeState) -> f64 {
    let k = state.weighted();
    k.iter().map(|z| z.norm_sqr()).sum()
}

pub fn purity(state: &ModeState) -> f64 {
    self_indistinguishability(state)
}

/// Schmidt number `K = 1 / Tr[ρ²]`.
pub fn schmidt_number(state: &ModeState) -> f64 {
    1.0 / self_indistinguishability(state)
}

/// Inter-indistinguishability `Tr[ρ_a ρ_b]`: the Hong–Ou–Mandel visibility
/// of two equally bright sources, uncorrected for brightness imbalance.
pub fn inter_indistinguishability(a: &ModeState, b: &ModeState) -> Result<f64> {
    if a.domain() != b.domain() || !a.grid().matches(b.grid()) {
        return Err(Error::GridMismatch);
    }
    Ok(linalg::hermitian_overlap(&a.weighted(), &b.weighted()))
}
