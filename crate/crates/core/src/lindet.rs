//! Linear detection: centralized zero-forcing and distributed linear data
//! fusion (DLDF) of per-subarray ZF estimates.

use rayon::prelude::*;

use crate::channel::SubarrayPartition;
use crate::complexity::{MulCount, MulCounter};
use crate::error::{Error, Result};
use crate::linalg::{norm_sqr, CMatrix, HouseholderQr, Matrix, ZfBank, C64, RANK_TOL};
use crate::modem::{Constellation, Decision};

/// ZF receiver row of one user: `h_k^H P / (h_k^H P h_k)` where `P` projects
/// onto the orthogonal complement of the other users' columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ZfReceiver {
    row: Vec<C64>,
    gain: f64,
}

impl ZfReceiver {
    pub fn row(&self) -> &[C64] {
        &self.row
    }

    /// `h_k^H P h_k`.
    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn post_snr(&self, rho: f64) -> f64 {
        rho * self.gain
    }

    pub fn apply(&self, y: &[C64], ops: &mut impl MulCounter) -> C64 {
        ops.add(y.len() as u64);
        self.row.iter().zip(y).map(|(f, v)| f * v).sum()
    }
}

/// Builds the ZF receiver of user `k` by projecting `h_k` off the span of the
/// remaining columns, using a QR factorization of that reduced matrix.
pub fn zf_receiver(h: &CMatrix, k: usize, ops: &mut impl MulCounter) -> Result<ZfReceiver> {
    let (m, n) = (h.rows(), h.cols());
    if k >= n {
        return Err(Error::DimensionMismatch(format!("user {k} of {n}")));
    }
    if m < n {
        return Err(Error::ZfInfeasible(format!("{m} antennas for {n} users")));
    }
    let hk = h.column(k);
    let hk_norm = norm_sqr(&hk, ops);
    if hk_norm == 0.0 {
        return Err(Error::ZfInfeasible(format!("user {k} has an all-zero channel")));
    }
    let others: Vec<usize> = (0..n).filter(|&j| j != k).collect();
    let mut u = hk;
    if !others.is_empty() {
        let qr = HouseholderQr::new(&h.select_cols(&others), ops)?;
        qr.checked_r_inverse(ops)?;
        qr.apply_qh(&mut u, ops);
        for z in &mut u[..others.len()] {
            *z = C64::new(0.0, 0.0);
        }
        qr.apply_q(&mut u, ops);
    }
    let gain = norm_sqr(&u, ops);
    if !(gain > RANK_TOL * RANK_TOL * hk_norm) {
        return Err(Error::ZfInfeasible(format!("user {k} lies in the span of the other users")));
    }
    ops.add(m as u64);
    let row = u.iter().map(|z| z.conj() / gain).collect();
    Ok(ZfReceiver { row, gain })
}

/// `rho * h_k^H P h_k`.
pub fn zf_post_snr(h: &CMatrix, k: usize, rho: f64, ops: &mut impl MulCounter) -> Result<f64> {
    Ok(zf_receiver(h, k, ops)?.post_snr(rho))
}

/// ZF estimate of user `k` from one subarray.
pub fn subarray_soft(h_b: &CMatrix, y_b: &[C64], k: usize, ops: &mut impl MulCounter) -> Result<C64> {
    if y_b.len() != h_b.rows() {
        return Err(Error::DimensionMismatch(format!("{} samples for {} antennas", y_b.len(), h_b.rows())));
    }
    Ok(zf_receiver(h_b, k, ops)?.apply(y_b, ops))
}

/// SNR-proportional fusion weights, the minimizer of `sum_b a_b^2 / snr_b`
/// subject to `sum_b a_b = 1`.
pub fn dldf_weights(snr: &[f64]) -> Result<Vec<f64>> {
    if let Some((index, &value)) = snr.iter().enumerate().find(|(_, &s)| !(s > 0.0)) {
        return Err(Error::NonPositiveSnr { index, value });
    }
    let total: f64 = snr.iter().sum();
    Ok(snr.iter().map(|s| s / total).collect())
}

/// `B x K` fusion weights; each column sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionWeights {
    pub alpha: Matrix<f64>,
}

/// How per-subarray receivers are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZfMode {
    /// One QR of the subarray channel serves every user.
    #[default]
    Batch,
    /// A separate projection per user, as in the per-user receiver formula.
    PerUser,
}

/// Soft estimates and post-processing gains of all users on one subarray.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockEstimate {
    pub soft: Vec<C64>,
    /// `h_k^H P h_k` per user; the post-processing SNR is `rho` times this.
    pub gain: Vec<f64>,
}

impl BlockEstimate {
    pub fn compute(h_b: &CMatrix, y_b: &[C64], mode: ZfMode, ops: &mut impl MulCounter) -> Result<Self> {
        match mode {
            ZfMode::Batch => {
                let bank = ZfBank::new(h_b, ops)?;
                let gain = (0..bank.users()).map(|k| bank.gain(k)).collect();
                Ok(BlockEstimate { soft: bank.soft(y_b, ops), gain })
            }
            ZfMode::PerUser => {
                let mut soft = Vec::with_capacity(h_b.cols());
                let mut gain = Vec::with_capacity(h_b.cols());
                for k in 0..h_b.cols() {
                    let rx = zf_receiver(h_b, k, ops)?;
                    soft.push(rx.apply(y_b, ops));
                    gain.push(rx.gain());
                }
                Ok(BlockEstimate { soft, gain })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DldfOutput {
    pub soft: Vec<C64>,
    pub decisions: Vec<Decision>,
    pub blocks: Vec<BlockEstimate>,
    pub weights: FusionWeights,
    /// `sum_b SNR_k^(b)`, the post-fusion SNR of each user.
    pub fused_snr: Vec<f64>,
}

/// Centralized ZF over the full array.
#[derive(Debug, Clone, PartialEq)]
pub struct ZfOutput {
    pub soft: Vec<C64>,
    pub decisions: Vec<Decision>,
    pub snr: Vec<f64>,
}

pub fn detect_zf(h: &CMatrix, y: &[C64], rho: f64, ops: &mut impl MulCounter) -> Result<ZfOutput> {
    check_dims(h, y)?;
    let bank = ZfBank::new(h, ops)?;
    let soft = bank.soft(y, ops);
    let decisions = decide(&soft)?;
    let snr = (0..bank.users()).map(|k| rho * bank.gain(k)).collect();
    Ok(ZfOutput { soft, decisions, snr })
}

pub fn detect_dldf(
    h: &CMatrix,
    y: &[C64],
    partition: &SubarrayPartition,
    rho: f64,
    ops: &mut impl MulCounter,
) -> Result<DldfOutput> {
    detect_dldf_with(h, y, partition, rho, ZfMode::Batch, ops)
}

pub fn detect_dldf_with(
    h: &CMatrix,
    y: &[C64],
    partition: &SubarrayPartition,
    rho: f64,
    mode: ZfMode,
    ops: &mut impl MulCounter,
) -> Result<DldfOutput> {
    check_dims(h, y)?;
    let blocks = (0..partition.len())
        .map(|b| block_estimate(h, y, partition, b, mode, ops))
        .collect::<Result<Vec<_>>>()?;
    fuse(blocks, rho, ops)
}

/// Same as [`detect_dldf_with`] with the subarrays processed concurrently.
/// Returns the summed multiplication count of all blocks.
pub fn detect_dldf_parallel(
    h: &CMatrix,
    y: &[C64],
    partition: &SubarrayPartition,
    rho: f64,
    mode: ZfMode,
) -> Result<(DldfOutput, MulCount)> {
    check_dims(h, y)?;
    let per_block = (0..partition.len())
        .into_par_iter()
        .map(|b| {
            let mut ops = MulCount::default();
            block_estimate(h, y, partition, b, mode, &mut ops).map(|e| (e, ops))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ops = MulCount(per_block.iter().map(|(_, c)| c.get()).sum());
    let blocks = per_block.into_iter().map(|(e, _)| e).collect();
    let out = fuse(blocks, rho, &mut ops)?;
    Ok((out, ops))
}

fn block_estimate(
    h: &CMatrix,
    y: &[C64],
    partition: &SubarrayPartition,
    b: usize,
    mode: ZfMode,
    ops: &mut impl MulCounter,
) -> Result<BlockEstimate> {
    let h_b = partition.block_rows(h, b)?;
    let y_b = partition.block_vec(y, b)?;
    BlockEstimate::compute(&h_b, &y_b, mode, ops).map_err(|e| match e {
        Error::ZfInfeasible(reason) => Error::BlockInfeasible { block: b, reason },
        other => other,
    })
}

fn fuse(blocks: Vec<BlockEstimate>, rho: f64, ops: &mut impl MulCounter) -> Result<DldfOutput> {
    let nb = blocks.len();
    let k_users = blocks.first().map_or(0, |e| e.soft.len());
    let mut alpha = Matrix::<f64>::zeros(nb, k_users);
    let mut soft = vec![C64::new(0.0, 0.0); k_users];
    let mut fused_snr = vec![0.0; k_users];
    for k in 0..k_users {
        // weights are scale invariant, so the rho-free gains are used directly;
        // this keeps rho = inf (noiseless) well defined
        let gains: Vec<f64> = blocks.iter().map(|e| e.gain[k]).collect();
        let w = dldf_weights(&gains)?;
        ops.add(nb as u64);
        for (b, wb) in w.iter().enumerate() {
            alpha[(b, k)] = *wb;
            soft[k] += blocks[b].soft[k] * *wb;
        }
        fused_snr[k] = rho * gains.iter().sum::<f64>();
    }
    let decisions = decide(&soft)?;
    Ok(DldfOutput { soft, decisions, blocks, weights: FusionWeights { alpha }, fused_snr })
}

fn decide(soft: &[C64]) -> Result<Vec<Decision>> {
    let c = Constellation::psk8();
    soft.iter().map(|&s| c.hard_decision(s)).collect()
}

fn check_dims(h: &CMatrix, y: &[C64]) -> Result<()> {
    if h.rows() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} samples for {} antennas", y.len(), h.rows())));
    }
    Ok(())
}
