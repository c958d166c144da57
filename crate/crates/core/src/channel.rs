//! Non-stationary channel generation and subarray partitioning.
//!
//! Column `k` of `H` is `sqrt(w_k) ⊙ g_k` with `g_k ~ CN(0, I)` and `w_k` the
//! per-antenna large-scale gain of user `k`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, SystemConfig, UserLayout};
use crate::linalg::{CMatrix, RMatrix, C64};

/// Sign applied to the pathloss exponent: `w = beta * d^(sign * gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ExponentSign {
    /// Power decays with distance.
    #[default]
    Negative,
    /// Power grows with distance.
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PathlossNormalization {
    /// Gains used as computed; received SNR depends on the standoff.
    #[default]
    None,
    /// Each user's gains rescaled to unit mean over the array.
    UnitMeanPerUser,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SubarrayLayout {
    /// Subarray `b` owns a run of adjacent antennas.
    #[default]
    Contiguous,
    /// Antenna `m` belongs to subarray `m mod B`.
    Interleaved,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathlossModel {
    pub beta: f64,
    pub gamma: f64,
    pub sign: ExponentSign,
    pub normalization: PathlossNormalization,
}

impl PathlossModel {
    pub fn from_config(config: &SystemConfig) -> Self {
        PathlossModel {
            beta: config.beta,
            gamma: config.gamma,
            sign: config.exponent_sign,
            normalization: config.pathloss_normalization,
        }
    }

    pub fn gains(&self, dist: &RMatrix) -> Result<RMatrix> {
        let exponent = match self.sign {
            ExponentSign::Negative => -self.gamma,
            ExponentSign::Positive => self.gamma,
        };
        for m in 0..dist.rows() {
            for k in 0..dist.cols() {
                if !(dist[(m, k)] > 0.0) {
                    return Err(Error::DegenerateGeometry { antenna: m, user: k });
                }
            }
        }
        let mut w = dist.map(|d| self.beta * d.powf(exponent));
        if self.normalization == PathlossNormalization::UnitMeanPerUser {
            for k in 0..w.cols() {
                let mean = w.column(k).iter().sum::<f64>() / w.rows() as f64;
                for m in 0..w.rows() {
                    w[(m, k)] /= mean;
                }
            }
        }
        Ok(w)
    }
}

/// `W[m,k] = beta * dist[m,k]^(-gamma)`.
pub fn large_scale_gains(dist: &RMatrix, beta: f64, gamma: f64) -> Result<RMatrix> {
    PathlossModel { beta, gamma, sign: ExponentSign::Negative, normalization: PathlossNormalization::None }
        .gains(dist)
}

/// Channel realization together with the large-scale gains it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub h: CMatrix,
    pub w: RMatrix,
}

impl ChannelMatrix {
    pub fn antennas(&self) -> usize {
        self.h.rows()
    }

    pub fn users(&self) -> usize {
        self.h.cols()
    }

    /// Places users, computes gains and draws one realization.
    pub fn generate<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Result<(UserLayout, Self)> {
        let layout = geometry::place_users(config, rng);
        let ants = geometry::antenna_positions(config);
        let w = PathlossModel::from_config(config).gains(&geometry::distances(&layout, &ants))?;
        Ok((layout, draw_channel(&w, rng)))
    }
}

/// Unit-variance circularly-symmetric complex Gaussian.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn draw_channel<R: Rng + ?Sized>(w: &RMatrix, rng: &mut R) -> ChannelMatrix {
    let h = CMatrix::from_fn(w.rows(), w.cols(), |m, k| complex_gaussian(rng) * w[(m, k)].sqrt());
    ChannelMatrix { h, w: w.clone() }
}

/// Disjoint antenna index sets, one per subarray, covering `0..M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubarrayPartition {
    blocks: Vec<Vec<usize>>,
    antennas: usize,
}

impl SubarrayPartition {
    pub fn new(antennas: usize, subarrays: usize, layout: SubarrayLayout) -> Result<Self> {
        if subarrays == 0 || subarrays > antennas || antennas % subarrays != 0 {
            return Err(Error::NonUniformPartition { antennas, subarrays });
        }
        let size = antennas / subarrays;
        let blocks = (0..subarrays)
            .map(|b| match layout {
                SubarrayLayout::Contiguous => (b * size..(b + 1) * size).collect(),
                SubarrayLayout::Interleaved => (b..antennas).step_by(subarrays).collect(),
            })
            .collect();
        Ok(SubarrayPartition { blocks, antennas })
    }

    pub fn from_config(config: &SystemConfig) -> Result<Self> {
        Self::new(config.antennas, config.subarrays, config.subarray_layout)
    }

    /// Arbitrary partition from explicit index lists; they must be disjoint and
    /// cover `0..antennas`.
    pub fn from_blocks(antennas: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; antennas];
        for &m in blocks.iter().flatten() {
            if m >= antennas || seen[m] {
                return Err(Error::InvalidConfig(format!("antenna {m} out of range or assigned twice")));
            }
            seen[m] = true;
        }
        if seen.iter().any(|s| !s) || blocks.iter().any(|b| b.is_empty()) {
            return Err(Error::InvalidConfig("partition must cover every antenna with nonempty blocks".into()));
        }
        Ok(SubarrayPartition { blocks, antennas })
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn indices(&self, b: usize) -> Result<&[usize]> {
        self.blocks
            .get(b)
            .map(Vec::as_slice)
            .ok_or(Error::SubarrayOutOfRange { index: b, count: self.blocks.len() })
    }

    pub fn size(&self, b: usize) -> usize {
        self.blocks[b].len()
    }

    /// Rows of `h` owned by subarray `b`, order preserved.
    pub fn block_rows(&self, h: &CMatrix, b: usize) -> Result<CMatrix> {
        self.check_len(h.rows())?;
        Ok(h.select_rows(self.indices(b)?))
    }

    /// Entries of `y` owned by subarray `b`, order preserved.
    pub fn block_vec<T: Copy>(&self, y: &[T], b: usize) -> Result<Vec<T>> {
        self.check_len(y.len())?;
        Ok(self.indices(b)?.iter().map(|&m| y[m]).collect())
    }

    fn check_len(&self, rows: usize) -> Result<()> {
        if rows != self.antennas {
            return Err(Error::DimensionMismatch(format!(
                "{rows} rows for a partition of {} antennas",
                self.antennas
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_gain() {
        let d = RMatrix::from_fn(1, 1, |_, _| 1.0);
        assert_eq!(large_scale_gains(&d, 1.0, 2.0).unwrap()[(0, 0)], 1.0);
    }

    #[test]
    fn ten_meters() {
        let d = RMatrix::from_fn(1, 1, |_, _| 10.0);
        assert!((large_scale_gains(&d, 1.0, 2.0).unwrap()[(0, 0)] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn doubling_distance_quarters_gain() {
        let d = RMatrix::from_fn(3, 2, |m, k| 1.0 + m as f64 + 2.5 * k as f64);
        let w1 = large_scale_gains(&d, 1.0, 2.0).unwrap();
        let w2 = large_scale_gains(&d.map(|x| 2.0 * x), 1.0, 2.0).unwrap();
        for m in 0..3 {
            for k in 0..2 {
                assert!((w2[(m, k)] * 4.0 - w1[(m, k)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_distance_is_degenerate() {
        let d = RMatrix::from_fn(2, 2, |m, k| if m == 1 && k == 0 { 0.0 } else { 1.0 });
        assert_eq!(
            large_scale_gains(&d, 1.0, 2.0),
            Err(Error::DegenerateGeometry { antenna: 1, user: 0 })
        );
    }

    #[test]
    fn positive_sign_and_normalization() {
        let d = RMatrix::from_fn(2, 1, |m, _| 1.0 + m as f64);
        let model = PathlossModel {
            beta: 1.0,
            gamma: 2.0,
            sign: ExponentSign::Positive,
            normalization: PathlossNormalization::UnitMeanPerUser,
        };
        let w = model.gains(&d).unwrap();
        // raw gains 1 and 4, mean 2.5
        assert!((w[(0, 0)] - 0.4).abs() < 1e-15);
        assert!((w[(1, 0)] - 1.6).abs() < 1e-15);
    }

    #[test]
    fn channel_column_variance() {
        let w = RMatrix::from_fn(10_000, 1, |_, _| 1.0);
        let ch = draw_channel(&w, &mut ChaCha8Rng::seed_from_u64(1));
        let var = ch.h.column_norm_sqr(0, &mut ()) / 10_000.0;
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn channel_power_tracks_gain() {
        let w = RMatrix::from_fn(2, 2, |m, k| [[0.5, 2.0], [0.01, 1.0]][m][k]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut acc = RMatrix::zeros(2, 2);
        let draws = 100_000;
        for _ in 0..draws {
            let ch = draw_channel(&w, &mut rng);
            for m in 0..2 {
                for k in 0..2 {
                    acc[(m, k)] += ch.h[(m, k)].norm_sqr();
                }
            }
        }
        for m in 0..2 {
            for k in 0..2 {
                let mean = acc[(m, k)] / draws as f64;
                assert!((mean / w[(m, k)] - 1.0).abs() < 0.02, "({m},{k}) mean {mean}");
            }
        }
    }

    #[test]
    fn channel_is_seeded() {
        let w = RMatrix::from_fn(8, 3, |m, k| 1.0 / (1.0 + (m + k) as f64));
        let a = draw_channel(&w, &mut ChaCha8Rng::seed_from_u64(9));
        let b = draw_channel(&w, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn contiguous_and_interleaved() {
        let c = SubarrayPartition::new(4, 2, SubarrayLayout::Contiguous).unwrap();
        assert_eq!(c.blocks(), &[vec![0, 1], vec![2, 3]]);
        let i = SubarrayPartition::new(4, 2, SubarrayLayout::Interleaved).unwrap();
        assert_eq!(i.blocks(), &[vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn thirty_two_blocks_of_sixteen() {
        let p = SubarrayPartition::new(512, 32, SubarrayLayout::Contiguous).unwrap();
        assert_eq!(p.len(), 32);
        assert!(p.blocks().iter().all(|b| b.len() == 16));
    }

    #[test]
    fn non_dividing_rejected() {
        assert!(matches!(
            SubarrayPartition::new(10, 3, SubarrayLayout::Contiguous),
            Err(Error::NonUniformPartition { .. })
        ));
    }

    #[test]
    fn block_out_of_range() {
        let p = SubarrayPartition::new(4, 2, SubarrayLayout::Contiguous).unwrap();
        assert!(matches!(p.block_vec(&[0; 4], 2), Err(Error::SubarrayOutOfRange { .. })));
    }

    #[test]
    fn single_block_is_identity() {
        let h = CMatrix::from_fn(5, 2, |m, k| C64::new(m as f64, k as f64));
        let p = SubarrayPartition::new(5, 1, SubarrayLayout::Contiguous).unwrap();
        assert_eq!(p.block_rows(&h, 0).unwrap(), h);
    }

    #[test]
    fn blocks_match_hand_slices() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = CMatrix::from_fn(6, 2, |_, _| complex_gaussian(&mut rng));
        let p = SubarrayPartition::new(6, 3, SubarrayLayout::Contiguous).unwrap();
        for b in 0..3 {
            let blk = p.block_rows(&h, b).unwrap();
            for r in 0..2 {
                for k in 0..2 {
                    assert_eq!(blk[(r, k)], h[(2 * b + r, k)]);
                }
            }
        }
        let mut stacked = Vec::new();
        for b in 0..3 {
            stacked.extend_from_slice(p.block_rows(&h, b).unwrap().as_slice());
        }
        assert_eq!(stacked, h.as_slice());
    }

    #[test]
    fn explicit_blocks_validated() {
        assert!(SubarrayPartition::from_blocks(3, vec![vec![0, 2], vec![1]]).is_ok());
        assert!(SubarrayPartition::from_blocks(3, vec![vec![0, 1], vec![1]]).is_err());
        assert!(SubarrayPartition::from_blocks(3, vec![vec![0, 1]]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn partitions_cover_disjointly(b in 1usize..32, size in 1usize..20, interleaved: bool) {
                let m = b * size;
                let layout = if interleaved { SubarrayLayout::Interleaved } else { SubarrayLayout::Contiguous };
                let p = SubarrayPartition::new(m, b, layout).unwrap();
                let mut all: Vec<usize> = p.blocks().iter().flatten().copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..m).collect::<Vec<_>>());
                prop_assert!(p.blocks().iter().all(|blk| blk.len() == size));
            }
        }
    }
}
