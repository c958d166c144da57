//! Monte-Carlo bit-error-rate experiments.
//!
//! A trial places users, draws one channel and then sends `symbols_per_trial`
//! independent symbol vectors through it with fresh noise. All requested
//! detectors see the same `(H, y)`. Every trial owns a ChaCha stream keyed by
//! `(seed, point, trial)`, and per-trial results are reduced in index order,
//! so the report does not depend on scheduling or pool size.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelMatrix, SubarrayPartition};
use crate::complexity::{self, CostReport, MulCount};
use crate::error::{Error, Result};
use crate::geometry::{snr_db_to_noise_variance, SystemConfig};
use crate::graphsic::{self, SicOptions};
use crate::lindet::{self, ZfMode};
use crate::modem::{self, Constellation, Decision, BITS_PER_SYMBOL};

pub const CSV_HEADER: &str = "detector,sweep_param,sweep_value,trials,bits,bit_errors,ber,fail_rate,mults_mean,wall_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Detector {
    #[serde(rename = "zf")]
    CentralizedZf,
    #[serde(rename = "dldf")]
    Dldf,
    /// DLDF with one projection per user and subarray.
    #[serde(rename = "dldf-per-user")]
    DldfPerUser,
    #[serde(rename = "graph-sic")]
    GraphSic,
}

impl Detector {
    pub fn name(&self) -> &'static str {
        match self {
            Detector::CentralizedZf => "zf",
            Detector::Dldf => "dldf",
            Detector::DldfPerUser => "dldf-per-user",
            Detector::GraphSic => "graph-sic",
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zf" | "centralized-zf" => Ok(Detector::CentralizedZf),
            "dldf" => Ok(Detector::Dldf),
            "dldf-per-user" => Ok(Detector::DldfPerUser),
            "graph-sic" | "sic" => Ok(Detector::GraphSic),
            other => Err(Error::Parse(format!("unknown detector {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "B")]
    Subarrays,
    #[serde(rename = "K")]
    Users,
    #[serde(rename = "snr_db")]
    SnrDb,
    #[serde(rename = "p0")]
    P0,
    #[serde(rename = "standoff")]
    Standoff,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Subarrays => "B",
            SweepParam::Users => "K",
            SweepParam::SnrDb => "snr_db",
            SweepParam::P0 => "p0",
            SweepParam::Standoff => "standoff",
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "B" | "subarrays" => Ok(SweepParam::Subarrays),
            "K" | "users" => Ok(SweepParam::Users),
            "snr_db" | "snr" => Ok(SweepParam::SnrDb),
            "p0" => Ok(SweepParam::P0),
            "standoff" => Ok(SweepParam::Standoff),
            other => Err(Error::Parse(format!("unknown sweep parameter {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub trials: usize,
    /// Symbol vectors sent per channel draw.
    pub symbols_per_trial: usize,
    pub detectors: Vec<Detector>,
    /// Keep `M_b = K` while sweeping `K` by setting `B = M / K`.
    pub subarray_size_follows_users: bool,
    pub sic: SicOptions,
    /// Fill the `wall_ms` column; otherwise it is written as 0 so reports are
    /// byte-reproducible.
    pub record_wall_time: bool,
    /// Worker threads; 0 uses the global pool.
    pub threads: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            param: SweepParam::Subarrays,
            values: vec![2.0, 4.0, 8.0, 16.0, 32.0],
            trials: 100,
            symbols_per_trial: 10,
            detectors: vec![Detector::Dldf, Detector::GraphSic],
            subarray_size_follows_users: false,
            sic: SicOptions::default(),
            record_wall_time: false,
            threads: 0,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidConfig("sweep value list is empty".into()));
        }
        if self.trials == 0 || self.symbols_per_trial == 0 {
            return Err(Error::InvalidConfig("trials and symbols per trial must be positive".into()));
        }
        if self.detectors.is_empty() {
            return Err(Error::InvalidConfig("no detectors requested".into()));
        }
        Ok(())
    }

    /// Configuration of sweep point `value`.
    pub fn apply(&self, base: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut c = base.clone();
        let count = |v: f64| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidConfig(format!("{} must be a positive integer, got {v}", self.param.name())))
            }
        };
        match self.param {
            SweepParam::Subarrays => c.subarrays = count(value)?,
            SweepParam::Users => {
                c.users = count(value)?;
                if self.subarray_size_follows_users {
                    if c.antennas % c.users != 0 {
                        return Err(Error::NonUniformPartition { antennas: c.antennas, subarrays: c.antennas / c.users });
                    }
                    c.subarrays = c.antennas / c.users;
                }
            }
            SweepParam::SnrDb => c.noise_variance = snr_db_to_noise_variance(value),
            SweepParam::P0 => c.p0 = value,
            SweepParam::Standoff => c.user_standoff = value,
        }
        c.validate()?;
        Ok(c)
    }
}

/// Config file layout: `[system]` and `[sweep]` tables.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Experiment {
    pub system: SystemConfig,
    pub sweep: SweepSpec,
}

impl Experiment {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::io(path, e))
    }
}

/// Outcome of one detector over one trial.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectorTally {
    pub bits: u64,
    pub bit_errors: u64,
    pub failure: Option<String>,
    pub mults: u64,
    pub calls: u64,
    pub wall_ns: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub tallies: Vec<(Detector, DetectorTally)>,
}

impl TrialOutcome {
    pub fn tally(&self, d: Detector) -> Option<&DetectorTally> {
        self.tallies.iter().find(|(x, _)| *x == d).map(|(_, t)| t)
    }
}

/// Runs one detector on `(H, y)`.
pub fn detect<R: Rng + ?Sized>(
    detector: Detector,
    config: &SystemConfig,
    ch: &ChannelMatrix,
    partition: &SubarrayPartition,
    y: &[crate::C64],
    sic: SicOptions,
    tie_rng: &mut R,
    ops: &mut MulCount,
) -> Result<Vec<Decision>> {
    let rho = config.rho();
    match detector {
        Detector::CentralizedZf => Ok(lindet::detect_zf(&ch.h, y, rho, ops)?.decisions),
        Detector::Dldf => Ok(lindet::detect_dldf_with(&ch.h, y, partition, rho, ZfMode::Batch, ops)?.decisions),
        Detector::DldfPerUser => {
            Ok(lindet::detect_dldf_with(&ch.h, y, partition, rho, ZfMode::PerUser, ops)?.decisions)
        }
        Detector::GraphSic => {
            let graph = graphsic::build_graph(&ch.h, partition, config.p0, ops)?;
            Ok(graphsic::peel_detect(&graph, &ch.h, y, partition, rho, tie_rng, sic, ops)?.decisions)
        }
    }
}

/// One channel draw and `symbols` transmissions through it.
pub fn run_trial<R: Rng + ?Sized>(
    config: &SystemConfig,
    detectors: &[Detector],
    symbols: usize,
    sic: SicOptions,
    rng: &mut R,
) -> Result<TrialOutcome> {
    config.validate()?;
    let constellation = Constellation::psk8();
    let (_, ch) = ChannelMatrix::generate(config, rng)?;
    let partition = SubarrayPartition::from_config(config)?;
    let mut tie_rng = ChaCha8Rng::seed_from_u64(rng.random());
    let k = config.users;
    let mut tallies: Vec<(Detector, DetectorTally)> = detectors.iter().map(|&d| (d, DetectorTally::default())).collect();
    for _ in 0..symbols {
        let bits = modem::random_bits(k * BITS_PER_SYMBOL, rng);
        let x = constellation.modulate(&bits)?;
        let clean = ch.h.mul_vec(&x, &mut ());
        let y = modem::awgn(&clean, config.noise_variance, rng);
        for (det, tally) in tallies.iter_mut() {
            if tally.failure.is_some() {
                continue;
            }
            let mut ops = MulCount::default();
            let start = Instant::now();
            let result = detect(*det, config, &ch, &partition, &y, sic, &mut tie_rng, &mut ops);
            tally.wall_ns += start.elapsed().as_nanos();
            match result {
                Ok(decisions) => {
                    let errors = decisions
                        .iter()
                        .flat_map(|d| d.bits())
                        .zip(&bits)
                        .filter(|(a, b)| a != *b)
                        .count();
                    tally.bits += bits.len() as u64;
                    tally.bit_errors += errors as u64;
                    tally.mults += ops.get();
                    tally.calls += 1;
                }
                Err(e) => {
                    // the whole trial counts as a failure for this detector
                    *tally = DetectorTally { failure: Some(e.to_string()), wall_ns: tally.wall_ns, ..Default::default() };
                }
            }
        }
    }
    Ok(TrialOutcome { tallies })
}

/// RNG stream of trial `trial` at sweep point `point`.
pub fn trial_rng(seed: u64, point: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point as u64) << 32) | trial as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub detector: Detector,
    pub sweep_param: &'static str,
    pub sweep_value: f64,
    pub trials: usize,
    pub failures: usize,
    pub bits: u64,
    pub bit_errors: u64,
    pub mults_mean: f64,
    pub wall_ms: f64,
}

impl ReportRow {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits as f64
        }
    }

    /// Binomial standard error of the BER estimate.
    pub fn ber_std_error(&self) -> f64 {
        if self.bits == 0 {
            return 0.0;
        }
        let p = self.ber();
        (p * (1.0 - p) / self.bits as f64).sqrt()
    }

    pub fn fail_rate(&self) -> f64 {
        self.failures as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    pub rows: Vec<ReportRow>,
}

impl DetectionReport {
    pub fn row(&self, detector: Detector, value: f64) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.detector == detector && r.sweep_value == value)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{:.6e},{:.6},{:.1},{:.3}",
                r.detector,
                r.sweep_param,
                r.sweep_value,
                r.trials,
                r.bits,
                r.bit_errors,
                r.ber(),
                r.fail_rate(),
                r.mults_mean,
                r.wall_ms
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

pub fn run_sweep(spec: &SweepSpec, base: &SystemConfig) -> Result<DetectionReport> {
    spec.validate()?;
    let configs = spec.values.iter().map(|&v| spec.apply(base, v)).collect::<Result<Vec<_>>>()?;
    let body = || -> Result<DetectionReport> {
        let mut rows = Vec::new();
        for (point, (config, &value)) in configs.iter().zip(&spec.values).enumerate() {
            let outcomes = (0..spec.trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = trial_rng(base.seed, point, trial);
                    run_trial(config, &spec.detectors, spec.symbols_per_trial, spec.sic, &mut rng)
                })
                .collect::<Result<Vec<_>>>()?;
            for (i, &det) in spec.detectors.iter().enumerate() {
                let mut row = ReportRow {
                    detector: det,
                    sweep_param: spec.param.name(),
                    sweep_value: value,
                    trials: spec.trials,
                    failures: 0,
                    bits: 0,
                    bit_errors: 0,
                    mults_mean: 0.0,
                    wall_ms: 0.0,
                };
                let (mut mults, mut calls, mut wall) = (0u64, 0u64, 0u128);
                for o in &outcomes {
                    let t = &o.tallies[i].1;
                    row.failures += t.failure.is_some() as usize;
                    row.bits += t.bits;
                    row.bit_errors += t.bit_errors;
                    mults += t.mults;
                    calls += t.calls;
                    wall += t.wall_ns;
                }
                if calls > 0 {
                    row.mults_mean = mults as f64 / calls as f64;
                }
                if spec.record_wall_time {
                    row.wall_ms = wall as f64 / 1e6;
                }
                rows.push(row);
            }
        }
        Ok(DetectionReport { rows })
    };
    if spec.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.threads)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        pool.install(body)
    } else {
        body()
    }
}

/// Closed-form counts next to measured means for `B` subarrays of `M_b`
/// antennas serving `K` users.
pub fn cost_comparison(
    base: &SystemConfig,
    subarrays: usize,
    users: usize,
    antennas_per_subarray: usize,
    trials: usize,
) -> Result<Vec<CostReport>> {
    let config = SystemConfig {
        antennas: subarrays * antennas_per_subarray,
        users,
        subarrays,
        ..base.clone()
    };
    let spec = SweepSpec {
        param: SweepParam::Subarrays,
        values: vec![subarrays as f64],
        trials,
        symbols_per_trial: 1,
        detectors: vec![Detector::Dldf, Detector::DldfPerUser, Detector::GraphSic],
        ..SweepSpec::default()
    };
    let report = run_sweep(&spec, &config)?;
    let measured = |d: Detector| report.row(d, subarrays as f64).map_or(0, |r| r.mults_mean.round() as u64);
    let (b, k, mb) = (subarrays as u64, users as u64, antennas_per_subarray as u64);
    let bounds = complexity::alg3_cost_bounds(b, k, mb);
    let row = |method: &str, formula: u64, det: Detector| CostReport { method: method.into(), formula, measured: measured(det) };
    Ok(vec![
        row("dldf", complexity::dldf_cost(b, k, mb), Detector::Dldf),
        row("dldf-tabulated", complexity::dldf_cost_tabulated(b, k), Detector::Dldf),
        row("dldf-per-user", complexity::dldf_cost(b, k, mb), Detector::DldfPerUser),
        row("graph-sic-worst", bounds.worst, Detector::GraphSic),
        row("graph-sic-best", bounds.best, Detector::GraphSic),
    ])
}
