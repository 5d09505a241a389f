//! Command-line flags and the JSON config merged beneath them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use d4_core::engine::{BitId, Precision};
use d4_core::experiments::{Ensemble, Mode, RunSpec, SectorSpec};
use d4_core::modelops::{BorromeanVariant, Schedule};
use d4_core::noise::NoiseModel;
use d4_core::prep::PrepVariant;

use crate::output::CliError;

#[derive(Parser, Debug)]
#[command(name = "d4sim", version, about = "Simulator for the D4 topological order on a kagome torus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Prepare a ground state and report its stabilizers and logicals.
    Prepare(Common),
    /// Stabilizer table after optional X-type logicals.
    Stabilizers {
        #[command(flatten)]
        common: Common,
        /// Logicals applied after preparation, e.g. `RH,GV`.
        #[arg(long, value_delimiter = ',')]
        apply: Vec<String>,
    },
    /// Run a braid from a JSON spec or a built-in sequence.
    Braid {
        #[command(flatten)]
        common: Common,
        /// Braid spec file (JSON).
        #[arg(long, conflicts_with = "named")]
        spec: Option<PathBuf>,
        #[arg(long, value_enum)]
        named: Option<NamedBraid>,
    },
    /// Borromean-ring phase, exact or by interferometry.
    Borromean {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = RingsArg::Rgb)]
        rings: RingsArg,
        #[arg(long, value_enum, default_value_t = ScheduleArg::Interleaved)]
        schedule: ScheduleArg,
    },
    /// Logical sectors: list admissibility or prepare all ground states.
    Sectors {
        #[command(flatten)]
        common: Common,
        /// Only list the 64 sign patterns with their admissibility.
        #[arg(long)]
        list: bool,
    },
    /// Single blue charge from two logicals.
    SingleAnyon(Common),
    /// Random states projected onto the code space, logicals sampled.
    DegeneracyScan {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2200)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = EnsembleArg::Product)]
        ensemble: EnsembleArg,
    },
    /// Fidelity bounds from projector expectations.
    FidelityBound {
        #[command(flatten)]
        common: Common,
        /// `<R>,<G>,<B>`; computed from a prepared state when absent.
        #[arg(long, value_delimiter = ',')]
        expectations: Option<Vec<f64>>,
        #[arg(long)]
        sites: Option<usize>,
        /// Omit the highest-index star and triangle of each colour instead
        /// of the lowest.
        #[arg(long)]
        alternate: bool,
    },
    /// Anyon labels, S, T and fusion rules.
    AnyonTable {
        /// Fuse two anyons by name, e.g. `m_B,m_B`.
        #[arg(long, value_delimiter = ',')]
        fuse: Option<Vec<String>>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Exact-mode invariant suite.
    Selftest {
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum NamedBraid {
    CreateMoveFuse,
    GreenAroundBlue,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum RingsArg {
    Rgb,
    Rb,
    Gb,
}

impl From<RingsArg> for BorromeanVariant {
    fn from(r: RingsArg) -> Self {
        match r {
            RingsArg::Rgb => BorromeanVariant::Rgb,
            RingsArg::Rb => BorromeanVariant::RbOnly,
            RingsArg::Gb => BorromeanVariant::GbOnly,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ScheduleArg {
    Interleaved,
    Block,
}

impl From<ScheduleArg> for Schedule {
    fn from(s: ScheduleArg) -> Self {
        match s {
            ScheduleArg::Interleaved => Schedule::Interleaved,
            ScheduleArg::Block => Schedule::Block,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EnsembleArg {
    Product,
    Haar,
}

impl From<EnsembleArg> for Ensemble {
    fn from(e: EnsembleArg) -> Self {
        match e {
            EnsembleArg::Product => Ensemble::Product,
            EnsembleArg::Haar => Ensemble::Haar,
        }
    }
}

/// Flags shared by the experiment subcommands. Unset flags fall back to the
/// config file, then to built-in defaults.
#[derive(Args, Debug, Default, Clone)]
pub struct Common {
    /// JSON config file with any of the fields below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Torus size `LxxLy`.
    #[arg(long)]
    pub size: Option<String>,
    #[arg(long, value_parser = ["exact", "sampled"])]
    pub mode: Option<String>,
    #[arg(long, value_parser = ["naive", "compiled"])]
    pub variant: Option<String>,
    /// Six bits RH GH BH RV GV BV, 1 meaning -1.
    #[arg(long)]
    pub sector: Option<String>,
    /// Shots per measurement setting.
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Noise model file (JSON).
    #[arg(long)]
    pub noise: Option<PathBuf>,
    /// Use the default noise model.
    #[arg(long)]
    pub noisy: bool,
    /// Readout-mitigate sampled estimators.
    #[arg(long)]
    pub mitigate: bool,
    #[arg(long, value_parser = ["c64", "c128"])]
    pub precision: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, env = "D4SIM_THREADS")]
    pub threads: Option<usize>,
    /// Memory limit in MiB for the run estimate.
    #[arg(long)]
    pub max_memory_mb: Option<u64>,
    /// Report costs and the memory estimate without simulating.
    #[arg(long)]
    pub dry_run: bool,
    /// Fixed ancilla outcomes, e.g. `1=1,5=1`.
    #[arg(long, value_delimiter = ',')]
    pub force_ancilla_outcomes: Vec<String>,
}

/// Config file contents; every field optional.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub size: Option<String>,
    pub mode: Option<String>,
    pub variant: Option<String>,
    pub sector: Option<String>,
    pub shots: Option<usize>,
    pub seed: Option<u64>,
    pub noise: Option<NoiseModel>,
    pub mitigate: Option<bool>,
    pub precision: Option<String>,
    pub threads: Option<usize>,
    pub max_memory_mb: Option<u64>,
    pub force_ancilla_outcomes: Option<BTreeMap<BitId, u8>>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub lx: usize,
    pub ly: usize,
    pub sector: SectorSpec,
    pub spec: RunSpec,
    pub output: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub threads: Option<usize>,
    pub max_memory_mb: u64,
    pub dry_run: bool,
}

pub const DEFAULT_MAX_MEMORY_MB: u64 = 4096;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn parse_size(s: &str) -> Result<(usize, usize), CliError> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| usage(format!("size must look like 3x3, got {s:?}")))?;
    let p = |x: &str| x.trim().parse::<usize>().map_err(|_| usage(format!("bad size component {x:?}")));
    Ok((p(a)?, p(b)?))
}

fn parse_forced(items: &[String]) -> Result<BTreeMap<BitId, u8>, CliError> {
    items
        .iter()
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| usage(format!("forced outcome must be star=bit, got {kv:?}")))?;
            let k = k.trim().parse::<BitId>().map_err(|_| usage(format!("bad star index {k:?}")))?;
            let v = v.trim().parse::<u8>().ok().filter(|&v| v <= 1).ok_or_else(|| usage(format!("bad outcome {v:?}")))?;
            Ok((k, v))
        })
        .collect()
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

impl Common {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let file: FileConfig = match &self.config {
            Some(p) => read_json(p)?,
            None => FileConfig::default(),
        };
        let size = self.size.clone().or(file.size).unwrap_or_else(|| String::from("3x3"));
        let (lx, ly) = parse_size(&size)?;
        let mode = match self.mode.clone().or(file.mode).as_deref() {
            None | Some("exact") => Mode::Exact,
            Some("sampled") => Mode::Sampled,
            Some(m) => return Err(usage(format!("unknown mode {m:?}"))),
        };
        let variant = match self.variant.clone().or(file.variant).as_deref() {
            None | Some("compiled") => PrepVariant::Compiled,
            Some("naive") => PrepVariant::Naive,
            Some(v) => return Err(usage(format!("unknown variant {v:?}"))),
        };
        let precision = match self.precision.clone().or(file.precision).as_deref() {
            None | Some("c128") => Precision::C128,
            Some("c64") => Precision::C64,
            Some(p) => return Err(usage(format!("unknown precision {p:?}"))),
        };
        let sector = match self.sector.clone().or(file.sector) {
            Some(s) => s.parse::<SectorSpec>().map_err(usage)?,
            None => SectorSpec::from_bits(0),
        };
        let noise = match (&self.noise, self.noisy) {
            (Some(p), _) => Some(read_json::<NoiseModel>(p)?),
            (None, true) => Some(NoiseModel::default()),
            (None, false) => file.noise,
        };
        if let Some(n) = &noise {
            n.validate().map_err(|e| usage(e.to_string()))?;
        }
        let forced = if self.force_ancilla_outcomes.is_empty() {
            file.force_ancilla_outcomes.unwrap_or_default()
        } else {
            parse_forced(&self.force_ancilla_outcomes)?
        };
        let shots = self.shots.or(file.shots).unwrap_or(500);
        if shots == 0 {
            return Err(usage("shots must be positive"));
        }
        let spec = RunSpec {
            mode,
            variant,
            shots,
            seed: self.seed.or(file.seed).unwrap_or(0),
            noise,
            mitigate: self.mitigate || file.mitigate.unwrap_or(false),
            precision,
            forced,
        };
        Ok(RunConfig {
            lx,
            ly,
            sector,
            spec,
            output: self.output.clone(),
            csv: self.csv.clone(),
            threads: self.threads.or(file.threads),
            max_memory_mb: self.max_memory_mb.or(file.max_memory_mb).unwrap_or(DEFAULT_MAX_MEMORY_MB),
            dry_run: self.dry_run,
        })
    }
}
