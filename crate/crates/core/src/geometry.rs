//! Linear-array scenario: configuration, antenna and user placement, and the
//! per-antenna distances that drive large-scale fading.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ExponentSign, PathlossNormalization, SubarrayLayout};
use crate::error::{Error, Result};
use crate::linalg::RMatrix;

/// All scenario parameters of one simulated system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Antenna count `M`.
    #[serde(alias = "M")]
    pub antennas: usize,
    /// Active user count `K`.
    #[serde(alias = "K")]
    pub users: usize,
    /// Subarray count `B`.
    #[serde(alias = "B")]
    pub subarrays: usize,
    /// Array length in meters.
    pub array_length: f64,
    /// Perpendicular distance of every user from the array line, meters.
    pub user_standoff: f64,
    /// Attenuation coefficient.
    pub beta: f64,
    /// Pathloss exponent.
    pub gamma: f64,
    pub exponent_sign: ExponentSign,
    pub pathloss_normalization: PathlossNormalization,
    /// Noise variance per complex entry. `rho = 1 / noise_variance`.
    pub noise_variance: f64,
    /// Power-coverage threshold of the bipartite graph.
    pub p0: f64,
    pub modulation_order: usize,
    pub subarray_layout: SubarrayLayout,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            antennas: 512,
            users: 16,
            subarrays: 16,
            array_length: 100.0,
            user_standoff: 5.0,
            beta: 1.0,
            gamma: 2.0,
            exponent_sign: ExponentSign::Negative,
            pathloss_normalization: PathlossNormalization::None,
            noise_variance: snr_db_to_noise_variance(25.0),
            p0: 0.9,
            modulation_order: 8,
            subarray_layout: SubarrayLayout::Contiguous,
            seed: 0,
        }
    }
}

pub fn snr_db_to_noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.antennas == 0 || self.users == 0 || self.subarrays == 0 {
            return bad("antennas, users and subarrays must be positive".into());
        }
        if self.subarrays > self.antennas {
            return bad(format!("{} subarrays exceed {} antennas", self.subarrays, self.antennas));
        }
        if self.antennas % self.subarrays != 0 {
            return Err(Error::NonUniformPartition { antennas: self.antennas, subarrays: self.subarrays });
        }
        if !(self.p0 > 0.0 && self.p0 <= 1.0) {
            return bad(format!("p0 = {} outside (0, 1]", self.p0));
        }
        if !(self.noise_variance >= 0.0) || self.noise_variance.is_infinite() {
            return bad(format!("noise variance {} must be finite and nonnegative", self.noise_variance));
        }
        if !(self.array_length > 0.0 && self.array_length.is_finite()) {
            return bad(format!("array length {} must be positive", self.array_length));
        }
        if !(self.user_standoff > 0.0 && self.user_standoff.is_finite()) {
            return bad(format!("user standoff {} must be positive", self.user_standoff));
        }
        if !(self.beta > 0.0 && self.beta.is_finite() && self.gamma.is_finite()) {
            return bad("beta must be positive and gamma finite".into());
        }
        if self.modulation_order != 8 {
            return bad(format!("modulation order {} unsupported, only 8-PSK", self.modulation_order));
        }
        Ok(())
    }

    pub fn rho(&self) -> f64 {
        1.0 / self.noise_variance
    }

    pub fn antennas_per_subarray(&self) -> usize {
        self.antennas / self.subarrays
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserLayout {
    pub positions: Vec<Point>,
}

/// `M` antennas equispaced on `[0, array_length]` along `y = 0`. A single
/// antenna sits at the midpoint.
pub fn antenna_positions(config: &SystemConfig) -> Vec<Point> {
    let m = config.antennas;
    let len = config.array_length;
    if m == 1 {
        return vec![Point { x: len / 2.0, y: 0.0 }];
    }
    let step = len / (m - 1) as f64;
    (0..m)
        .map(|i| Point { x: if i == m - 1 { len } else { i as f64 * step }, y: 0.0 })
        .collect()
}

/// Users uniform along the array at the common standoff distance.
pub fn place_users<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> UserLayout {
    let positions = (0..config.users)
        .map(|_| Point { x: rng.random_range(0.0..=config.array_length), y: config.user_standoff })
        .collect();
    UserLayout { positions }
}

/// `M x K` matrix of antenna-to-user Euclidean distances.
pub fn distances(layout: &UserLayout, antennas: &[Point]) -> RMatrix {
    RMatrix::from_fn(antennas.len(), layout.positions.len(), |m, k| {
        antennas[m].distance(&layout.positions[k])
    })
}
