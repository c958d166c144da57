use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use xmimo::channel::{ExponentSign, PathlossNormalization, SubarrayLayout};
use xmimo::graphsic::{self, Cancellation};
use xmimo::harness::{self, Detector, Experiment, SweepParam};
use xmimo::matio;
use xmimo::modem::{self, Constellation};
use xmimo::{ChannelMatrix, SubarrayPartition};

#[derive(Parser, Debug)]
#[command(name = "xmimo", version, about = "Uplink detectors for extremely large aperture arrays")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// TOML file with [system] and [sweep] tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Comma separated: zf, dldf, dldf-per-user, graph-sic.
    #[arg(long, global = true, value_delimiter = ',')]
    detectors: Option<Vec<Detector>>,
    #[command(flatten)]
    system: SystemOverrides,
}

#[derive(Args, Debug)]
struct SystemOverrides {
    #[arg(long, global = true)]
    antennas: Option<usize>,
    #[arg(long, global = true)]
    users: Option<usize>,
    #[arg(long, global = true)]
    subarrays: Option<usize>,
    #[arg(long, global = true)]
    array_length: Option<f64>,
    #[arg(long, global = true)]
    standoff: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    exponent_sign: Option<SignArg>,
    #[arg(long, global = true)]
    normalization: Option<NormArg>,
    /// Sets the noise variance to 10^(-snr/10).
    #[arg(long, global = true, conflicts_with = "noise_variance")]
    snr_db: Option<f64>,
    #[arg(long, global = true)]
    noise_variance: Option<f64>,
    #[arg(long, global = true)]
    p0: Option<f64>,
    #[arg(long, global = true)]
    layout: Option<LayoutArg>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SignArg {
    Negative,
    Positive,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum NormArg {
    None,
    UnitMeanPerUser,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum LayoutArg {
    Contiguous,
    Interleaved,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum CancelArg {
    Hard,
    Soft,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum FormatArg {
    Text,
    Binary,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a Monte-Carlo BER sweep and write CSV.
    Sweep(SweepArgs),
    /// Run graph-SIC on one draw and print the peeling log.
    Trace {
        /// Use the built-in five-user fixture instead of a random draw.
        #[arg(long)]
        fixture: bool,
    },
    /// Compare closed-form multiplication counts with measured ones.
    Cost {
        #[arg(long = "B", alias = "b", default_value_t = 2)]
        subarrays: usize,
        #[arg(long = "K", alias = "k", default_value_t = 2)]
        users: usize,
        #[arg(long = "Mb", alias = "mb", default_value_t = 4)]
        antennas_per_subarray: usize,
    },
    /// Write the channel H and large-scale gains W of one draw.
    DumpChannel {
        #[arg(long, value_enum, default_value_t = FormatArg::Text)]
        format: FormatArg,
        /// Where to write W; skipped when absent.
        #[arg(long)]
        gains: Option<PathBuf>,
    },
    /// Print the 8-PSK labeling table.
    Constellation,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// B, K, snr_db, p0 or standoff.
    #[arg(long)]
    param: Option<SweepParam>,
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    #[arg(long)]
    symbols_per_trial: Option<usize>,
    /// Set B = M / K at every point of a K sweep.
    #[arg(long)]
    mb_equals_k: bool,
    #[arg(long)]
    cancellation: Option<CancelArg>,
    /// Keep the first SNR ordering inside multiuser subarrays.
    #[arg(long)]
    fixed_order: bool,
    #[arg(long)]
    threads: Option<usize>,
    /// Fill the wall_ms column.
    #[arg(long)]
    wall_time: bool,
}

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

fn experiment(g: &Global) -> Result<Experiment, Failure> {
    let mut e = match &g.config {
        Some(p) => Experiment::load(p).map_err(|e| Failure::Usage(e.into()))?,
        None => Experiment::default(),
    };
    let s = &mut e.system;
    let o = &g.system;
    macro_rules! set {
        ($field:ident, $src:expr) => {
            if let Some(v) = $src {
                s.$field = v;
            }
        };
    }
    set!(antennas, o.antennas);
    set!(users, o.users);
    set!(subarrays, o.subarrays);
    set!(array_length, o.array_length);
    set!(user_standoff, o.standoff);
    set!(beta, o.beta);
    set!(gamma, o.gamma);
    set!(noise_variance, o.noise_variance);
    set!(noise_variance, o.snr_db.map(xmimo::geometry::snr_db_to_noise_variance));
    set!(p0, o.p0);
    set!(seed, g.seed);
    set!(
        exponent_sign,
        o.exponent_sign.map(|v| match v {
            SignArg::Negative => ExponentSign::Negative,
            SignArg::Positive => ExponentSign::Positive,
        })
    );
    set!(
        pathloss_normalization,
        o.normalization.map(|v| match v {
            NormArg::None => PathlossNormalization::None,
            NormArg::UnitMeanPerUser => PathlossNormalization::UnitMeanPerUser,
        })
    );
    set!(
        subarray_layout,
        o.layout.map(|v| match v {
            LayoutArg::Contiguous => SubarrayLayout::Contiguous,
            LayoutArg::Interleaved => SubarrayLayout::Interleaved,
        })
    );
    if let Some(t) = g.trials {
        e.sweep.trials = t;
    }
    if let Some(d) = &g.detectors {
        e.sweep.detectors = d.clone();
    }
    e.system.validate().map_err(|e| Failure::Usage(e.into()))?;
    Ok(e)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout().write_all(bytes).context("writing stdout"),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut e = experiment(&cli.global)?;
    let out = cli.global.out.as_deref();
    let rt = Failure::Runtime;
    match cli.command {
        Command::Sweep(a) => {
            let sw = &mut e.sweep;
            if let Some(p) = a.param {
                sw.param = p;
            }
            if let Some(v) = a.values {
                sw.values = v;
            }
            if let Some(n) = a.symbols_per_trial {
                sw.symbols_per_trial = n;
            }
            if let Some(n) = a.threads {
                sw.threads = n;
            }
            if let Some(c) = a.cancellation {
                sw.sic.cancellation = match c {
                    CancelArg::Hard => Cancellation::Hard,
                    CancelArg::Soft => Cancellation::Soft,
                };
            }
            sw.subarray_size_follows_users |= a.mb_equals_k;
            sw.sic.resort &= !a.fixed_order;
            sw.record_wall_time |= a.wall_time;
            sw.validate().map_err(|e| Failure::Usage(e.into()))?;
            for &v in &sw.values {
                sw.apply(&e.system, v).map_err(|e| Failure::Usage(e.into()))?;
            }
            let report = harness::run_sweep(sw, &e.system).map_err(|e| rt(e.into()))?;
            emit(out, report.to_csv().as_bytes()).map_err(rt)
        }
        Command::Trace { fixture } => {
            let trace = if fixture {
                let ex = graphsic::worked_example();
                let y = ex.h.mul_vec(&ex.symbols, &mut ());
                let mut rng = ChaCha8Rng::seed_from_u64(ex.tie_seed);
                graphsic::peel_detect(&ex.graph, &ex.h, &y, &ex.partition, f64::INFINITY, &mut rng, e.sweep.sic, &mut ())
                    .map_err(|e| rt(e.into()))?
                    .trace
            } else {
                let c = &e.system;
                let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
                let (_, ch) = ChannelMatrix::generate(c, &mut rng).map_err(|e| rt(e.into()))?;
                let part = SubarrayPartition::from_config(c).map_err(|e| rt(e.into()))?;
                let x = Constellation::psk8()
                    .modulate(&modem::random_bits(3 * c.users, &mut rng))
                    .map_err(|e| rt(e.into()))?;
                let y = modem::awgn(&ch.h.mul_vec(&x, &mut ()), c.noise_variance, &mut rng);
                let graph = graphsic::build_graph(&ch.h, &part, c.p0, &mut ()).map_err(|e| rt(e.into()))?;
                graphsic::peel_detect(&graph, &ch.h, &y, &part, c.rho(), &mut rng, e.sweep.sic, &mut ())
                    .map_err(|e| rt(e.into()))?
                    .trace
            };
            emit(out, trace.to_string().as_bytes()).map_err(rt)
        }
        Command::Cost { subarrays, users, antennas_per_subarray } => {
            if subarrays == 0 || users == 0 || antennas_per_subarray == 0 {
                return Err(Failure::Usage(anyhow::anyhow!("B, K and M_b must be positive")));
            }
            let trials = cli.global.trials.unwrap_or(100);
            let rows = harness::cost_comparison(&e.system, subarrays, users, antennas_per_subarray, trials)
                .map_err(|e| rt(e.into()))?;
            let mut s = format!("B={subarrays} K={users} M_b={antennas_per_subarray} trials={trials}\n");
            s.push_str("method\tformula\tmeasured\tratio\n");
            for r in rows {
                s.push_str(&format!("{}\t{}\t{}\t{:.3}\n", r.method, r.formula, r.measured, r.ratio()));
            }
            emit(out, s.as_bytes()).map_err(rt)
        }
        Command::DumpChannel { format, gains } => {
            let mut rng = ChaCha8Rng::seed_from_u64(e.system.seed);
            let (_, ch) = ChannelMatrix::generate(&e.system, &mut rng).map_err(|e| rt(e.into()))?;
            match format {
                FormatArg::Text => {
                    emit(out, matio::to_text_complex(&ch.h).as_bytes()).map_err(rt)?;
                    if let Some(p) = &gains {
                        emit(Some(p), matio::to_text_real(&ch.w).as_bytes()).map_err(rt)?;
                    }
                }
                FormatArg::Binary => {
                    let Some(p) = out else {
                        return Err(Failure::Usage(anyhow::anyhow!("binary output needs --out")));
                    };
                    write_binary(p, |w| matio::write_binary_complex(&ch.h, w)).map_err(rt)?;
                    if let Some(p) = &gains {
                        write_binary(p, |w| matio::write_binary_real(&ch.w, w)).map_err(rt)?;
                    }
                }
            }
            Ok(())
        }
        Command::Constellation => emit(out, Constellation::psk8().table_text().as_bytes()).map_err(rt),
    }
}

fn write_binary(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> anyhow::Result<()> {
    let ctx = || format!("writing {}", path.display());
    let mut w = BufWriter::new(File::create(path).with_context(ctx)?);
    f(&mut w).with_context(ctx)?;
    w.flush().with_context(ctx)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
