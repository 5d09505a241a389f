//! Subcommand bodies.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use d4_core::anyons::{self, Gauss};
use d4_core::engine::DEFAULT_MAX_SUPPORT;
use d4_core::experiments::{self as ex, ExperimentReport, ProjectorChoice, RunSpec};
use d4_core::lattice::{Color, Dir, KagomeTorus};
use d4_core::modelops::BraidSpec;
use d4_core::prep::{compile_prep, prepare_on, CostReport, PrepConfig};

use crate::args::{read_json, NamedBraid, RunConfig};
use crate::output::{write_csv, write_json, CliError};

#[derive(Serialize)]
struct MemoryEstimate {
    peak_register: usize,
    max_support: usize,
    bytes: u64,
    limit_bytes: u64,
}

fn memory_estimate(cfg: &RunConfig, cost: &CostReport) -> MemoryEstimate {
    // Sparse support is bounded by both the register and the engine limit;
    // key, amplitude and one working copy per entry.
    let support = (1usize << cost.peak_register.min(62)).min(DEFAULT_MAX_SUPPORT);
    MemoryEstimate {
        peak_register: cost.peak_register,
        max_support: support,
        bytes: support as u64 * 2 * (8 + 16),
        limit_bytes: cfg.max_memory_mb << 20,
    }
}

fn torus(cfg: &RunConfig) -> Result<KagomeTorus, CliError> {
    Ok(KagomeTorus::new(cfg.lx, cfg.ly)?)
}

/// Validates size and memory before anything is simulated.
fn check_resources(cfg: &RunConfig) -> Result<(KagomeTorus, CostReport, MemoryEstimate), CliError> {
    let t = torus(cfg)?;
    let (_, cost) = compile_prep(&t, cfg.spec.variant);
    let mem = memory_estimate(cfg, &cost);
    eprintln!("memory estimate: {} MiB (limit {} MiB)", mem.bytes >> 20, cfg.max_memory_mb);
    if mem.bytes > mem.limit_bytes {
        return Err(CliError::Resource(format!("estimated {} MiB exceeds the limit of {} MiB", mem.bytes >> 20, cfg.max_memory_mb)));
    }
    Ok((t, cost, mem))
}

fn finish(reports: &[ExperimentReport], cfg: &RunConfig) -> Result<(), CliError> {
    if let Some(p) = &cfg.csv {
        write_csv(reports, p)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct DryRun {
    variant: String,
    size: [usize; 2],
    two_qubit_gates: usize,
    one_qubit_gates: usize,
    peak_register: usize,
    depth: usize,
    memory: MemoryEstimate,
}

pub fn prepare(cfg: &RunConfig) -> Result<(), CliError> {
    let (t, cost, memory) = check_resources(cfg)?;
    if cfg.dry_run {
        let d = DryRun {
            variant: format!("{:?}", cfg.spec.variant).to_lowercase(),
            size: [t.lx, t.ly],
            two_qubit_gates: cost.two_qubit_gates,
            one_qubit_gates: cost.one_qubit_gates,
            peak_register: cost.peak_register,
            depth: cost.depth,
            memory,
        };
        return write_json(&d, cfg.output.as_deref());
    }
    let mut r = ex::prepare_report(&t, cfg.sector, &cfg.spec)?;
    r.scalars.insert("two_qubit_gates".into(), cost.two_qubit_gates as f64);
    r.scalars.insert("peak_register".into(), cost.peak_register as f64);
    finish(std::slice::from_ref(&r), cfg)?;
    write_json(&r, cfg.output.as_deref())
}

fn parse_logical(s: &str) -> Result<(Color, Dir), CliError> {
    let s = s.trim().trim_start_matches(['X', 'x']).trim_start_matches('_');
    let mut ch = s.chars();
    let c = match ch.next() {
        Some('R' | 'r') => Color::R,
        Some('G' | 'g') => Color::G,
        Some('B' | 'b') => Color::B,
        _ => return Err(CliError::Usage(format!("bad logical {s:?}; expected e.g. RH or GV"))),
    };
    let d = match (ch.next(), ch.next()) {
        (Some('H' | 'h'), None) => Dir::H,
        (Some('V' | 'v'), None) => Dir::V,
        _ => return Err(CliError::Usage(format!("bad logical {s:?}; expected e.g. RH or GV"))),
    };
    Ok((c, d))
}

pub fn stabilizers(cfg: &RunConfig, apply: &[String]) -> Result<(), CliError> {
    let (t, _, _) = check_resources(cfg)?;
    if cfg.dry_run {
        return Ok(());
    }
    let r = if apply.is_empty() {
        ex::prepare_report(&t, cfg.sector, &cfg.spec)?
    } else {
        let toggles = apply.iter().map(|s| parse_logical(s)).collect::<Result<Vec<_>, _>>()?;
        let name = format!("stabilizers_X{}", apply.join("_X"));
        ex::logicals_report(&t, &cfg.spec, &name, &toggles)?
    };
    finish(std::slice::from_ref(&r), cfg)?;
    write_json(&r, cfg.output.as_deref())
}

#[derive(Serialize)]
struct BraidOutput {
    spec: BraidSpec,
    segments: Vec<ExperimentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cross_check: Option<ex::BraidCrossCheck>,
}

pub fn braid(cfg: &RunConfig, spec: Option<&Path>, named: Option<NamedBraid>) -> Result<(), CliError> {
    let (t, _, _) = check_resources(cfg)?;
    let (bspec, check) = match (spec, named) {
        (Some(p), _) => (read_json::<BraidSpec>(p)?, false),
        (None, Some(NamedBraid::CreateMoveFuse)) | (None, None) => (ex::braid_create_move_fuse(), false),
        (None, Some(NamedBraid::GreenAroundBlue)) => (ex::braid_green_around_blue(), true),
    };
    if cfg.dry_run {
        return write_json(&bspec, cfg.output.as_deref());
    }
    let segments = ex::braid_experiment(&t, &bspec, cfg.spec.seed)?;
    let cross_check = if check { Some(ex::braid_cross_check(&t)?) } else { None };
    finish(&segments, cfg)?;
    write_json(&BraidOutput { spec: bspec, segments, cross_check }, cfg.output.as_deref())
}

pub fn borromean(cfg: &RunConfig, rings: d4_core::modelops::BorromeanVariant, schedule: d4_core::modelops::Schedule) -> Result<(), CliError> {
    let (t, _, _) = check_resources(cfg)?;
    if cfg.dry_run {
        return Ok(());
    }
    let r = ex::borromean(&t, rings, cfg.spec.mode, cfg.spec.shots, cfg.spec.seed, schedule)?;
    write_json(&r, cfg.output.as_deref())
}

#[derive(Serialize)]
struct SectorLine {
    sector: String,
    signs: [i8; 6],
    admissible: bool,
}

pub fn sectors(cfg: &RunConfig, list: bool) -> Result<(), CliError> {
    if list {
        let lines: Vec<SectorLine> =
            ex::enumerate_sectors().into_iter().map(|s| SectorLine { sector: s.bit_string(), signs: s.signs, admissible: s.admissible }).collect();
        return write_json(&lines, cfg.output.as_deref());
    }
    let (t, _, _) = check_resources(cfg)?;
    if cfg.dry_run {
        return Ok(());
    }
    let sectors: Vec<_> = ex::enumerate_sectors().into_iter().filter(|s| s.admissible).collect();
    let reports = sectors
        .par_iter()
        .map(|&s| {
            let mut r = ex::prepare_report(&t, s, &cfg.spec)?;
            r.experiment = format!("sector_{}", s.bit_string());
            Ok(r)
        })
        .collect::<Result<Vec<_>, ex_err::E>>()?;
    finish(&reports, cfg)?;
    write_json(&reports, cfg.output.as_deref())
}

mod ex_err {
    pub type E = d4_core::error::ExperimentError;
}

pub fn single_anyon(cfg: &RunConfig) -> Result<(), CliError> {
    let (t, _, _) = check_resources(cfg)?;
    if cfg.dry_run {
        return Ok(());
    }
    let r = ex::single_anyon(&t, &cfg.spec)?;
    finish(std::slice::from_ref(&r), cfg)?;
    write_json(&r, cfg.output.as_deref())
}

#[derive(Serialize)]
pub struct ScanOutput {
    pub size: [usize; 2],
    pub seed: u64,
    pub trials: usize,
    pub ensemble: ex::Ensemble,
    pub histogram: Vec<ex::SectorCount>,
    pub forbidden_count: u64,
    pub max_forbidden_mass: f64,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub retries: usize,
    /// Postselection-weighted sector distribution over the admissible
    /// sectors.
    pub weighted: Vec<(String, f64)>,
    pub effective_trials: f64,
    pub weighted_max_deviation: f64,
}

pub fn scan_output(t: &KagomeTorus, scan: &ex::DegeneracyScan, seed: u64) -> ScanOutput {
    let chi = scan.chi_square();
    let p_value = 1.0 - ChiSquared::new(21.0).map(|d| d.cdf(chi)).unwrap_or(f64::NAN);
    ScanOutput {
        size: [t.lx, t.ly],
        seed,
        trials: scan.trials,
        ensemble: scan.ensemble,
        histogram: scan.histogram(),
        forbidden_count: scan.forbidden_count(),
        max_forbidden_mass: scan.max_forbidden_mass,
        chi_square: chi,
        degrees_of_freedom: 21,
        p_value,
        retries: scan.retries,
        weighted: ex::enumerate_sectors()
            .iter()
            .zip(&scan.weighted)
            .filter(|(s, _)| s.admissible)
            .map(|(s, &w)| (s.bit_string(), w))
            .collect(),
        effective_trials: scan.effective_trials,
        weighted_max_deviation: scan.weighted_max_deviation(),
    }
}

pub fn degeneracy_scan(cfg: &RunConfig, trials: usize, ensemble: ex::Ensemble) -> Result<(), CliError> {
    let t = torus(cfg)?;
    if cfg.dry_run {
        return Ok(());
    }
    let scan = ex::degeneracy_scan(&t, trials, cfg.spec.seed, ensemble)?;
    let out = scan_output(&t, &scan, cfg.spec.seed);
    if let Some(p) = &cfg.csv {
        let mut w = csv::Writer::from_path(p).map_err(|e| CliError::Resource(e.to_string()))?;
        for row in &out.histogram {
            w.serialize(row).map_err(|e| CliError::Resource(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::Resource(e.to_string()))?;
    }
    write_json(&out, cfg.output.as_deref())
}

#[derive(Serialize)]
struct FidelityOutput {
    expectations: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    expectation_sems: Option<[f64; 3]>,
    n_sites: usize,
    bounds: ex::FidelityBounds,
    #[serde(skip_serializing_if = "Option::is_none")]
    choice: Option<ProjectorChoice>,
    discarded: usize,
}

pub fn fidelity_bound(cfg: &RunConfig, given: Option<&[f64]>, sites: Option<usize>, alternate: bool) -> Result<(), CliError> {
    if let Some(v) = given {
        if v.len() != 3 {
            return Err(CliError::Usage(format!("--expectations takes three values, got {}", v.len())));
        }
        let n = sites.unwrap_or(27);
        let bounds = ex::fidelity_bounds(v[0], v[1], v[2], n)?;
        let out = FidelityOutput { expectations: [v[0], v[1], v[2]], expectation_sems: None, n_sites: n, bounds, choice: None, discarded: 0 };
        return write_json(&out, cfg.output.as_deref());
    }
    let (t, _, _) = check_resources(cfg)?;
    if cfg.dry_run {
        return Ok(());
    }
    let choice = if alternate { ProjectorChoice::alternate(&t) } else { ProjectorChoice::canonical(&t) };
    let n = sites.unwrap_or(t.num_vertices());
    let spec: &RunSpec = &cfg.spec;
    let pcfg = PrepConfig { lx: t.lx, ly: t.ly, variant: spec.variant, sector: [1; 6], seed: spec.seed, noise: spec.noise, ..PrepConfig::default() };
    let (vals, sems, discarded) = match spec.mode {
        ex::Mode::Exact if spec.noise.is_none() => {
            let psi = prepare_on::<f64>(&t, &pcfg)?.state;
            (ex::projector_expectations(&t, &psi, &choice)?, None, 0)
        }
        _ => {
            let (e, d) = ex::sampled_projector_expectations(&t, &pcfg, spec.shots, spec.seed, &choice)?;
            (e.map(|x| x.mean), Some(e.map(|x| x.sem)), d)
        }
    };
    let bounds = ex::fidelity_bounds(vals[0], vals[1], vals[2], n)?;
    write_json(&FidelityOutput { expectations: vals, expectation_sems: sems, n_sites: n, bounds, choice: Some(choice), discarded }, cfg.output.as_deref())
}

#[derive(Serialize)]
struct AnyonRow {
    index: usize,
    name: String,
    dim: i64,
    twist: String,
}

#[derive(Serialize)]
struct AnyonTable {
    anyons: Vec<AnyonRow>,
    /// `8 S` as exact Gaussian rationals.
    s_times_8: Vec<Vec<String>>,
    total_dim_sq: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fusion: Option<Vec<(String, u32)>>,
    reference_mismatches: usize,
}

pub fn anyon_table(fuse: Option<&[String]>, output: Option<&Path>) -> Result<(), CliError> {
    let md = anyons::modular_data();
    let eight = Gauss::int(8);
    let fusion = match fuse {
        Some(pair) => {
            if pair.len() != 2 {
                return Err(CliError::Usage(format!("--fuse takes two anyon names, got {}", pair.len())));
            }
            let find = |n: &str| anyons::label_by_name(n).ok_or_else(|| CliError::Usage(format!("unknown anyon {n:?}")));
            let (a, b) = (find(&pair[0])?, find(&pair[1])?);
            let out = md.fuse(a.index, b.index).map_err(|e| CliError::Internal(e.to_string()))?;
            Some(out.into_iter().map(|(k, n)| (md.labels[k].name.clone(), n)).collect())
        }
        None => None,
    };
    let (s_bad, t_bad) = anyons::reference_mismatches(&md);
    let table = AnyonTable {
        anyons: md
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| AnyonRow { index: i, name: l.name.clone(), dim: md.dims[i], twist: md.t[i].to_string() })
            .collect(),
        s_times_8: md.s.iter().map(|row| row.iter().map(|x| (*x * eight).to_string()).collect()).collect(),
        total_dim_sq: md.total_dim_sq(),
        fusion,
        reference_mismatches: s_bad.len() + t_bad.len(),
    };
    write_json(&table, output)
}
