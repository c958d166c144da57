//! Multiplication accounting.
//!
//! Closed-form counts for the receivers and the [`MulCounter`] hook that every
//! detection routine takes. One complex multiplication, one complex division,
//! one real-by-complex scaling and one squared modulus each count as a single
//! multiplication. Passing `&mut ()` selects the no-op counter, which inlines
//! away.

use serde::Serialize;

pub trait MulCounter {
    fn add(&mut self, n: u64);
}

impl MulCounter for () {
    #[inline(always)]
    fn add(&mut self, _n: u64) {}
}

/// Running multiplication total for one detector invocation.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct MulCount(pub u64);

impl MulCounter for MulCount {
    #[inline]
    fn add(&mut self, n: u64) {
        self.0 += n;
    }
}

impl MulCount {
    pub fn get(&self) -> u64 {
        self.0
    }

    pub fn reset(&mut self) {
        self.0 = 0;
    }
}

/// DLDF cost with the SNR-extraction term `B K M_b (K-1)`:
/// detection `B K^4`, SNR extraction `B K M_b (K-1)`, soft fusion `B K`.
pub fn dldf_cost(subarrays: u64, users: u64, antennas_per_subarray: u64) -> u64 {
    let (b, k, mb) = (subarrays, users, antennas_per_subarray);
    b * k.pow(4) + b * k * mb * (k - 1) + b * k
}

/// DLDF cost as tabulated without the `M_b` factor in the middle term.
pub fn dldf_cost_tabulated(subarrays: u64, users: u64) -> u64 {
    let (b, k) = (subarrays, users);
    b * k.pow(4) + b * k * (k - 1) + b * k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CostBounds {
    pub worst: u64,
    pub best: u64,
}

/// Worst and best case multiplication counts of the peeling detector.
///
/// Worst: all users end up in one subarray, `K^4 + K M_b (K-1)`.
/// Best: users spread evenly, `ceil(K^4 / B^3) + ceil(K M_b K / B)`.
pub fn alg3_cost_bounds(subarrays: u64, users: u64, antennas_per_subarray: u64) -> CostBounds {
    let (b, k, mb) = (subarrays, users, antennas_per_subarray);
    let worst = k.pow(4) + k * mb * (k - 1);
    let best = k.pow(4).div_ceil(b.pow(3)) + (k * mb * k).div_ceil(b);
    CostBounds { worst, best }
}

/// One row of a formula-versus-measurement comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub method: String,
    pub formula: u64,
    pub measured: u64,
}

impl CostReport {
    pub fn ratio(&self) -> f64 {
        self.measured as f64 / self.formula as f64
    }
}
