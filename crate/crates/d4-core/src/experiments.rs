//! Named experiments producing [`ExperimentReport`]s: ground states and
//! sectors, the star/logical constraint, single anyons, braids, the
//! Borromean phase, degeneracy scans and fidelity bounds.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::anyons::{self, GroupElement};
use crate::engine::{apply_program, BitId, Precision, sample, GateProgram, MeasBasis, MeasurementSetting, OperatorExpr, QubitId, Real, Samples, StateVector};
use crate::error::ExperimentError;
use crate::lattice::{Color, Dir, KagomeTorus};
use crate::modelops::{
    b_plus_basis, borromean_geometry, borromean_overlap, borromean_phase_interferometric, closed_braid, logical, logical_at, qid, ColorOrder, run_braid,
    snapshot, star_op, state_from_vertex_keys, BorromeanVariant, BraidSpec, BraidStep, LogicalKind, PhaseEstimate, Schedule,
    StabilizerSnapshot, LOGICAL_ORDER,
};
use crate::noise::{apply_gate_noise, mitigate_readout, NoiseModel};
use crate::prep::{prepare_on, sector_admissible, PrepConfig, PrepVariant};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Exact,
    Sampled,
}

/// Mean with standard error; exact values carry `sem = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub sem: f64,
}

impl Estimate {
    pub fn exact(mean: f64) -> Self {
        Estimate { mean, sem: 0.0 }
    }

    pub fn from_values(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Estimate { mean: f64::NAN, sem: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Estimate { mean, sem: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        Estimate { mean, sem: libm::sqrt(var / n as f64) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogicalEstimate {
    pub label: String,
    pub value: Estimate,
}

/// Six logical signs in the order RH, GH, BH, RV, GV, BV.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectorSpec {
    pub signs: [i8; 6],
    pub admissible: bool,
}

impl SectorSpec {
    pub fn new(signs: [i8; 6]) -> Self {
        SectorSpec { signs, admissible: sector_admissible(&signs) }
    }

    /// From a six-bit word, most significant bit = RH, bit 1 meaning -1.
    pub fn from_bits(m: u32) -> Self {
        SectorSpec::new(core::array::from_fn(|k| if m >> (5 - k) & 1 == 1 { -1 } else { 1 }))
    }

    pub fn bits(&self) -> u32 {
        self.signs.iter().fold(0, |acc, &s| acc << 1 | (s < 0) as u32)
    }

    pub fn bit_string(&self) -> String {
        self.signs.iter().map(|&s| if s < 0 { '1' } else { '0' }).collect()
    }
}

impl core::str::FromStr for SectorSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s.len() != 6 || !s.chars().all(|c| c == '0' || c == '1') {
            return Err(format!("sector must be six bits (RH GH BH RV GV BV), got {s:?}"));
        }
        Ok(SectorSpec::from_bits(u32::from_str_radix(s, 2).map_err(|e| e.to_string())?))
    }
}

/// All 64 sign assignments in bit order.
pub fn enumerate_sectors() -> Vec<SectorSpec> {
    (0..64).map(SectorSpec::from_bits).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorCount {
    pub sector: String,
    pub admissible: bool,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    pub size: [usize; 2],
    pub mode: Mode,
    pub seed: u64,
    pub shots: usize,
    pub discarded: usize,
    pub noise: Option<NoiseModel>,
    pub sector: Option<SectorSpec>,
    pub stars: Vec<Estimate>,
    pub triangles: Vec<Estimate>,
    pub logicals: Vec<LogicalEstimate>,
    pub scalars: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram: Option<Vec<SectorCount>>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, t: &KagomeTorus, mode: Mode, seed: u64) -> Self {
        ExperimentReport {
            schema_version: REPORT_SCHEMA_VERSION,
            experiment: String::from(experiment),
            size: [t.lx, t.ly],
            mode,
            seed,
            shots: 0,
            discarded: 0,
            noise: None,
            sector: None,
            stars: Vec::new(),
            triangles: Vec::new(),
            logicals: Vec::new(),
            scalars: BTreeMap::new(),
            histogram: None,
        }
    }

    pub fn scalar(&self, k: &str) -> Option<f64> {
        self.scalars.get(k).copied()
    }

    fn set(&mut self, k: &str, v: f64) {
        self.scalars.insert(String::from(k), v);
    }

    /// Energy per Hamiltonian term from the stabilizer tables.
    pub fn energy_density(&self) -> f64 {
        let n = (self.stars.len() + self.triangles.len()) as f64;
        -(self.stars.iter().chain(&self.triangles).map(|e| e.mean).sum::<f64>()) / n
    }

    pub fn logical_means(&self) -> [f64; 6] {
        core::array::from_fn(|k| self.logicals.get(k).map_or(f64::NAN, |l| l.value.mean))
    }

    pub fn pinning(&self, target: &[i8; 6]) -> f64 {
        self.logical_means().iter().zip(target).map(|(z, &s)| z * s as f64).sum::<f64>() / 6.0
    }

    pub fn negative_stars(&self, tol: f64) -> Vec<usize> {
        (0..self.stars.len()).filter(|&s| self.stars[s].mean < -1.0 + tol).collect()
    }

    fn fill_from_snapshot(&mut self, s: &StabilizerSnapshot) {
        self.stars = s.stars.iter().map(|&x| Estimate::exact(x)).collect();
        self.triangles = s.triangles.iter().map(|&x| Estimate::exact(x)).collect();
        self.logicals = logical_labels().into_iter().zip(s.logical_means()).map(|(label, m)| LogicalEstimate { label, value: Estimate::exact(m) }).collect();
        self.finish_scalars();
    }

    fn finish_scalars(&mut self) {
        let e = self.energy_density();
        self.set("energy_density", e);
        if let Some(sec) = self.sector {
            let p = self.pinning(&sec.signs);
            self.set("pinning", p);
        }
    }
}

pub fn logical_labels() -> Vec<String> {
    LOGICAL_ORDER.iter().map(|(c, d)| format!("Z_{}{}", c.letter(), if *d == Dir::H { 'H' } else { 'V' })).collect()
}

/// Shared run parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSpec {
    pub mode: Mode,
    pub variant: PrepVariant,
    /// Shots per measurement setting (sampled mode).
    pub shots: usize,
    pub seed: u64,
    pub noise: Option<NoiseModel>,
    /// Apply readout mitigation to sampled stabilizer estimators.
    pub mitigate: bool,
    pub precision: Precision,
    /// Forced ancilla outcomes keyed by star index.
    pub forced: BTreeMap<BitId, u8>,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            mode: Mode::Exact,
            variant: PrepVariant::Compiled,
            shots: 500,
            seed: 0,
            noise: None,
            mitigate: false,
            precision: Precision::C128,
            forced: BTreeMap::new(),
        }
    }
}

impl RunSpec {
    fn prep(&self, t: &KagomeTorus, sector: [i8; 6]) -> PrepConfig {
        PrepConfig {
            lx: t.lx,
            ly: t.ly,
            variant: self.variant,
            sector,
            seed: self.seed,
            noise: self.noise,
            forced: self.forced.clone(),
            ..PrepConfig::default()
        }
    }

    fn noisy(&self) -> bool {
        self.noise.is_some_and(|n| n.depol() > 0.0 || n.readout().is_some())
    }
}

// ---------------------------------------------------------------------------
// Sampled estimators

/// The four settings: all-Z, and colour `c` in X with the rest in Z.
fn settings(t: &KagomeTorus) -> Vec<MeasurementSetting> {
    let mut out = Vec::new();
    for x in [None, Some(Color::R), Some(Color::G), Some(Color::B)] {
        let bases = (0..t.num_vertices())
            .map(|v| (qid(v), if Some(t.vertices[v].color) == x { MeasBasis::X } else { MeasBasis::Z }))
            .collect();
        out.push(MeasurementSetting { name: x.map_or(String::from("Z"), |c| format!("X{}", c.letter())), bases });
    }
    out
}

/// Shot words re-indexed so bit `v` is vertex `v`.
fn vertex_words(s: &Samples) -> Vec<u64> {
    let pos: Vec<(usize, u64)> = s.qubits.iter().enumerate().map(|(i, &q)| (i, 1u64 << q)).collect();
    s.shots
        .iter()
        .map(|&w| pos.iter().fold(0u64, |acc, &(i, m)| if w >> i & 1 == 1 { acc | m } else { acc }))
        .collect()
}

/// Per-setting shot words over the vertices, plus the discard count.
fn collect_shots(
    t: &KagomeTorus,
    cfg: &PrepConfig,
    after: &GateProgram,
    shots: usize,
    seed: u64,
) -> Result<(Vec<Vec<u64>>, usize), ExperimentError> {
    let noise = cfg.noise.unwrap_or(NoiseModel::noiseless());
    let sets = settings(t);
    let mut out = vec![Vec::with_capacity(shots); sets.len()];
    let per_shot = noise.depol() > 0.0 || noise.readout().is_some();
    if !per_shot {
        let mut p = prepare_on::<f64>(t, cfg)?;
        apply_program(&mut p.state, after)?;
        for (k, st) in sets.iter().enumerate() {
            out[k] = vertex_words(&sample(&p.state, st, shots, seed ^ (k as u64) << 48, None)?);
        }
        return Ok((out, 0));
    }
    let mut discarded = 0;
    for (k, st) in sets.iter().enumerate() {
        let mut shot = 0u64;
        while out[k].len() < shots {
            let c = PrepConfig { shot: shot + ((k as u64) << 40), ..cfg.clone() };
            shot += 1;
            let mut p = match prepare_on::<f64>(t, &c) {
                Ok(p) => p,
                Err(crate::error::PrepError::Engine(crate::error::EngineError::ZeroNorm)) => {
                    discarded += 1;
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            if p.discarded {
                discarded += 1;
                continue;
            }
            let noisy_after = apply_gate_noise(after, &noise, c.seed ^ c.shot.rotate_left(17) ^ 0x5bd1_e995);
            apply_program(&mut p.state, &noisy_after)?;
            p.state.renormalize()?;
            let s = sample(&p.state, st, 1, seed ^ c.shot.rotate_left(7) ^ (k as u64) << 48, noise.readout())?;
            out[k].extend(vertex_words(&s));
        }
    }
    Ok((out, discarded))
}

fn sign_of(parity: u32) -> f64 {
    if parity & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Value of `A_s` on a shot of the X-setting of its colour.
fn star_value(t: &KagomeTorus, s: usize, w: u64) -> f64 {
    let st = &t.stars[s];
    let tips: u32 = st.tips.iter().map(|&v| (w >> v & 1) as u32).sum();
    let ring: u32 = (0..6).map(|i| ((w >> st.hexagon[i]) & (w >> st.hexagon[(i + 1) % 6]) & 1) as u32).sum();
    sign_of(tips + ring)
}

fn parity_value(w: u64, vs: &[usize]) -> f64 {
    sign_of(vs.iter().map(|&v| (w >> v & 1) as u32).sum())
}

/// Estimator of `f` over `support`, optionally readout-mitigated.
fn estimate(words: &[u64], support: &[usize], f: impl Fn(u64) -> f64, mitigation: Option<&NoiseModel>) -> Result<Estimate, ExperimentError> {
    let raw = Estimate::from_values(&words.iter().map(|&w| f(w)).collect::<Vec<_>>());
    let Some(m) = mitigation else { return Ok(raw) };
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for &w in words {
        let local = support.iter().enumerate().fold(0u64, |acc, (i, &v)| acc | ((w >> v & 1) << i));
        *counts.entry(local).or_insert(0) += 1;
    }
    let counts: Vec<(u64, u64)> = counts.into_iter().collect();
    let lift = |local: u64| support.iter().enumerate().fold(0u64, |acc, (i, &v)| acc | ((local >> i & 1) << v));
    let mean = mitigate_readout(support.len(), &counts, m, |local| f(lift(local))).map_err(crate::error::PrepError::from)?;
    // Error bar scaled by the inverse-matrix gain over the support.
    let gain = 1.0 / libm::pow(m.readout_det(), support.len() as f64);
    Ok(Estimate { mean, sem: raw.sem * gain })
}

/// Sampled stabilizer tables for the state prepared by `cfg` followed by
/// `after`.
pub fn sampled_report(
    t: &KagomeTorus,
    experiment: &str,
    cfg: &PrepConfig,
    after: &GateProgram,
    shots: usize,
    seed: u64,
    mitigate: bool,
) -> Result<ExperimentReport, ExperimentError> {
    let (words, discarded) = collect_shots(t, cfg, after, shots, seed)?;
    let noise = cfg.noise.filter(|n| n.readout().is_some());
    let mit = if mitigate { noise.as_ref() } else { None };
    let mut r = ExperimentReport::new(experiment, t, Mode::Sampled, seed);
    r.shots = shots;
    r.discarded = discarded;
    r.noise = cfg.noise;
    for s in 0..t.num_stars() {
        let st = &t.stars[s];
        let mut support: Vec<usize> = st.tips.iter().chain(st.hexagon.iter()).copied().collect();
        support.sort_unstable();
        let k = 1 + st.color.index();
        r.stars.push(estimate(&words[k], &support, |w| star_value(t, s, w), mit)?);
    }
    for tr in &t.triangles {
        r.triangles.push(estimate(&words[0], &tr.vertices, |w| parity_value(w, &tr.vertices), mit)?);
    }
    for (label, (c, d)) in logical_labels().into_iter().zip(LOGICAL_ORDER) {
        let n = t.line_translates(d);
        let mut mean = 0.0;
        let mut sem_sq = 0.0;
        for off in 0..n {
            let sup = t.z_logical_support(c, d, off);
            let e = estimate(&words[0], &sup, |w| parity_value(w, &sup), mit)?;
            mean += e.mean / n as f64;
            sem_sq += e.sem * e.sem / (n * n) as f64;
        }
        r.logicals.push(LogicalEstimate { label, value: Estimate { mean, sem: libm::sqrt(sem_sq) } });
    }
    r.set("discard_fraction", discarded as f64 / (discarded + 4 * shots).max(1) as f64);
    r.finish_scalars();
    Ok(r)
}

fn exact_report<T: Real>(t: &KagomeTorus, experiment: &str, state: &StateVector<T>, seed: u64) -> Result<ExperimentReport, ExperimentError> {
    let s = snapshot(t, state, experiment)?;
    let mut r = ExperimentReport::new(experiment, t, Mode::Exact, seed);
    r.fill_from_snapshot(&s);
    Ok(r)
}

/// Ground state (or the state of `sector`) under `spec`.
pub fn prepare_report(t: &KagomeTorus, sector: SectorSpec, spec: &RunSpec) -> Result<ExperimentReport, ExperimentError> {
    let cfg = spec.prep(t, sector.signs);
    let mut r = match spec.mode {
        Mode::Exact if !spec.noisy() && spec.precision == Precision::C64 => {
            let p = prepare_on::<f32>(t, &cfg)?;
            let mut r = exact_report(t, "prepare", &p.state, spec.seed)?;
            r.set("herald", p.record.herald as u8 as f64);
            r
        }
        Mode::Exact if !spec.noisy() => {
            let p = prepare_on::<f64>(t, &cfg)?;
            let mut r = exact_report(t, "prepare", &p.state, spec.seed)?;
            r.set("herald", p.record.herald as u8 as f64);
            r
        }
        _ => sampled_report(t, "prepare", &cfg, &GateProgram::new(), spec.shots, spec.seed, spec.mitigate)?,
    };
    r.sector = Some(sector);
    r.finish_scalars();
    Ok(r)
}

/// One report per admissible sector.
pub fn all_ground_states(t: &KagomeTorus, spec: &RunSpec) -> Result<Vec<ExperimentReport>, ExperimentError> {
    enumerate_sectors()
        .into_iter()
        .filter(|s| s.admissible)
        .map(|s| {
            let mut r = prepare_report(t, s, spec)?;
            r.experiment = format!("sector_{}", s.bit_string());
            Ok(r)
        })
        .collect()
}

/// Ground state followed by X-type logicals (applied in order); reports the
/// stars left at `-1`.
pub fn logicals_report(t: &KagomeTorus, spec: &RunSpec, name: &str, toggles: &[(Color, Dir)]) -> Result<ExperimentReport, ExperimentError> {
    let mut after = GateProgram::new();
    for &(c, d) in toggles {
        after.extend(&logical(t, c, d, LogicalKind::X)?.program());
    }
    let cfg = spec.prep(t, [1; 6]);
    let mut r = match spec.mode {
        Mode::Exact if !spec.noisy() => {
            let mut p = prepare_on::<f64>(t, &cfg)?;
            apply_program(&mut p.state, &after)?;
            exact_report(t, name, &p.state, spec.seed)?
        }
        _ => sampled_report(t, name, &cfg, &after, spec.shots, spec.seed, spec.mitigate)?,
    };
    let tol = if r.mode == Mode::Exact { 1e-9 } else { 0.5 };
    let neg = r.negative_stars(tol);
    r.set("negative_stars", neg.len() as f64);
    if let [s] = neg[..] {
        r.set("anyon_star", s as f64);
        r.set("anyon_color", t.stars[s].color.index() as f64);
    }
    Ok(r)
}

/// `X_GV X_RH` on the ground state: a lone blue charge.
pub fn single_anyon(t: &KagomeTorus, spec: &RunSpec) -> Result<ExperimentReport, ExperimentError> {
    logicals_report(t, spec, "single_anyon", &[(Color::R, Dir::H), (Color::G, Dir::V)])
}

// ---------------------------------------------------------------------------
// Constraint between star products and logicals

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub exhaustive: bool,
    pub states_checked: usize,
    /// Largest `|<prod A_s> - <rhs>|` over colours and states.
    pub max_deviation: f64,
    /// Basis states whose right-hand side is `-1` for some colour.
    pub negative_states: usize,
}

/// Product of all stars of one colour.
pub fn star_product(t: &KagomeTorus, c: Color) -> Result<OperatorExpr, ExperimentError> {
    let mut op = OperatorExpr::identity();
    for s in t.stars_of_color(c) {
        op = op.times(&star_op(t, s)?.op);
    }
    Ok(op)
}

fn z_bit(t: &KagomeTorus, key: u64, c: Color, d: Dir) -> u32 {
    t.z_logical_support(c, d, 0).iter().map(|&v| (key >> v & 1) as u32).sum::<u32>() & 1
}

/// Right-hand side of the constraint for colour `c` on a basis key:
/// `(-1)^([Z_xH=-1][Z_yV=-1] + [Z_xV=-1][Z_yH=-1])` with `x = c+1`,
/// `y = c+2`.
pub fn constraint_rhs(t: &KagomeTorus, c: Color, key: u64) -> i8 {
    let (x, y) = (c.next(), c.next().next());
    let n = z_bit(t, key, x, Dir::H) * z_bit(t, key, y, Dir::V) + z_bit(t, key, x, Dir::V) * z_bit(t, key, y, Dir::H);
    if n & 1 == 1 {
        -1
    } else {
        1
    }
}

/// Checks the identity on every basis state of the `B_t = +1` subspace
/// (`trials = None`) or on `trials` random superpositions.
pub fn constraint_check(t: &KagomeTorus, trials: Option<usize>, seed: u64) -> Result<ConstraintReport, ExperimentError> {
    let basis = b_plus_basis(t);
    let prods: Vec<(Color, OperatorExpr)> = Color::ALL.into_iter().map(|c| Ok((c, star_product(t, c)?))).collect::<Result<_, ExperimentError>>()?;
    let mut max_dev = 0.0f64;
    let mut negative = 0;
    match trials {
        None => {
            for &key in &basis {
                let psi = state_from_vertex_keys(t, vec![(key, Complex::new(1.0, 0.0))]);
                let mut any_neg = false;
                for (c, op) in &prods {
                    let rhs = constraint_rhs(t, *c, key) as f64;
                    any_neg |= rhs < 0.0;
                    let mut phi = psi.clone();
                    op.apply(&mut phi)?;
                    let dev = (phi.inner(&psi)?.re - rhs).abs().max(libm::sqrt((phi.norm_sqr() - 1.0).abs()));
                    // a diagonal operator must return the same key
                    if phi.support() != 1 || phi.entries()[0].0 != psi.entries()[0].0 || dev > 1e-9 {
                        return Err(ExperimentError::ConstraintViolation(key));
                    }
                    max_dev = max_dev.max(dev);
                }
                negative += any_neg as usize;
            }
            Ok(ConstraintReport { exhaustive: true, states_checked: basis.len(), max_deviation: max_dev, negative_states: negative })
        }
        Some(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..n {
                let mut entries: Vec<(u64, Complex<f64>)> = Vec::new();
                for &k in &basis {
                    if rng.random::<f64>() < 0.05 {
                        entries.push((k, gaussian_amp(&mut rng)));
                    }
                }
                if entries.is_empty() {
                    continue;
                }
                let mut psi = state_from_vertex_keys(t, entries.clone());
                psi.renormalize()?;
                for (c, op) in &prods {
                    let rhs: f64 = psi
                        .entries()
                        .iter()
                        .map(|&(k, a)| a.norm_sqr() * constraint_rhs(t, *c, vertex_key(&psi, k)) as f64)
                        .sum();
                    let lhs = op.expval_real(&psi)?;
                    let dev = (lhs - rhs).abs();
                    if dev > 1e-9 {
                        return Err(ExperimentError::ConstraintViolation(entries[0].0));
                    }
                    max_dev = max_dev.max(dev);
                }
            }
            Ok(ConstraintReport { exhaustive: false, states_checked: n, max_deviation: max_dev, negative_states: 0 })
        }
    }
}

/// Key over vertex bits for an entry of a state on vertex qubits.
fn vertex_key<T: Real>(psi: &StateVector<T>, key: u64) -> u64 {
    psi.live_qubits().iter().enumerate().fold(0u64, |acc, (i, &q)| acc | ((key >> i & 1) << q))
}

/// Basis state with one blue loop winding horizontally and one green loop
/// winding vertically (the X-supports of the corresponding logicals, in
/// rows/columns where they cross at a single red star).
pub fn crossing_example(t: &KagomeTorus) -> Result<u64, ExperimentError> {
    let b = logical_at(t, Color::B, Dir::H, LogicalKind::X, 0, ColorOrder::default_for(Color::B))?;
    let g = logical_at(t, Color::G, Dir::V, LogicalKind::X, 1 % t.lx, ColorOrder::default_for(Color::G))?;
    let mut key = 0u64;
    for l in [b, g] {
        for &v in &l.string.as_ref().map(|s| s.x.clone()).unwrap_or_default() {
            key ^= 1 << v;
        }
    }
    Ok(key)
}

/// Number of CZ factors in the stars of colour `c` that evaluate to `-1`
/// on `key`.
pub fn negative_cz_count(t: &KagomeTorus, c: Color, key: u64) -> usize {
    t.stars_of_color(c)
        .map(|s| {
            let h = t.stars[s].hexagon;
            (0..6).filter(|&i| key >> h[i] & 1 == 1 && key >> h[(i + 1) % 6] & 1 == 1).count()
        })
        .sum()
}

// ---------------------------------------------------------------------------
// Degeneracy scan

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    /// Independent Haar-random single-qubit states.
    #[default]
    Product,
    /// Gaussian random vector on the `B_t = +1` subspace.
    Haar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyScan {
    pub trials: usize,
    pub ensemble: Ensemble,
    pub counts: Vec<u64>,
    /// Largest total probability on inadmissible sectors over all trials.
    pub max_forbidden_mass: f64,
    pub retries: usize,
    /// Sector distribution with each trial weighted by its survival
    /// probability under the projections, as a postselected measurement
    /// would see it.
    pub weighted: Vec<f64>,
    /// Kish effective number of trials behind `weighted`.
    pub effective_trials: f64,
}

impl DegeneracyScan {
    pub fn forbidden_count(&self) -> u64 {
        enumerate_sectors().iter().zip(&self.counts).filter(|(s, _)| !s.admissible).map(|(_, c)| c).sum()
    }

    /// Pearson statistic against the uniform distribution on the admissible
    /// sectors (21 degrees of freedom).
    pub fn chi_square(&self) -> f64 {
        let allowed: Vec<u64> = enumerate_sectors().iter().zip(&self.counts).filter(|(s, _)| s.admissible).map(|(_, &c)| c).collect();
        let n: u64 = allowed.iter().sum();
        let e = n as f64 / allowed.len() as f64;
        allowed.iter().map(|&c| (c as f64 - e) * (c as f64 - e) / e).sum()
    }

    /// Largest relative deviation of `weighted` from `1/22` over the
    /// admissible sectors.
    pub fn weighted_max_deviation(&self) -> f64 {
        enumerate_sectors()
            .iter()
            .zip(&self.weighted)
            .filter(|(s, _)| s.admissible)
            .map(|(_, &w)| (w * 22.0 - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn histogram(&self) -> Vec<SectorCount> {
        enumerate_sectors().iter().zip(&self.counts).map(|(s, &count)| SectorCount { sector: s.bit_string(), admissible: s.admissible, count }).collect()
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = rng.random::<f64>().max(1e-300);
    let u2 = rng.random::<f64>();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}

fn gaussian_amp(rng: &mut ChaCha8Rng) -> Complex<f64> {
    Complex::new(gaussian(rng), gaussian(rng))
}

fn trial_state(t: &KagomeTorus, basis: &[u64], ensemble: Ensemble, rng: &mut ChaCha8Rng) -> StateVector<f64> {
    let entries: Vec<(u64, Complex<f64>)> = match ensemble {
        Ensemble::Haar => basis.iter().map(|&k| (k, gaussian_amp(rng))).collect(),
        Ensemble::Product => {
            let amps: Vec<[Complex<f64>; 2]> = (0..t.num_vertices())
                .map(|_| {
                    let cos_t = 2.0 * rng.random::<f64>() - 1.0;
                    let phi = 2.0 * core::f64::consts::PI * rng.random::<f64>();
                    let c = libm::sqrt((1.0 + cos_t) / 2.0);
                    let s = libm::sqrt((1.0 - cos_t) / 2.0);
                    [Complex::new(c, 0.0), Complex::new(s * libm::cos(phi), s * libm::sin(phi))]
                })
                .collect();
            basis.iter().map(|&k| (k, (0..amps.len()).fold(Complex::new(1.0, 0.0), |acc, v| acc * amps[v][(k >> v & 1) as usize]))).collect()
        }
    };
    state_from_vertex_keys(t, entries)
}

/// `(psi + O psi) / 2`.
pub fn half_sum(psi: &StateVector<f64>, op: &OperatorExpr) -> Result<StateVector<f64>, ExperimentError> {
    let mut o = psi.clone();
    op.apply(&mut o)?;
    o.absorb_phase();
    let mut p = psi.clone();
    p.absorb_phase();
    let o = o.reordered_like(&p)?;
    let entries: Vec<(u64, Complex<f64>)> = p.entries().iter().chain(o.entries()).map(|&(k, a)| (k, a * 0.5)).collect();
    let mut out = StateVector::from_entries(p.live_qubits().to_vec(), entries);
    out.set_cap(psi.cap());
    Ok(out)
}

/// Random state, projected onto `B_t = +1` (directly, by restricting to the
/// subspace basis) and then by every `(1 + A_s)/2`; the six logicals are
/// read out by Born sampling.
pub fn degeneracy_scan(t: &KagomeTorus, trials: usize, seed: u64, ensemble: Ensemble) -> Result<DegeneracyScan, ExperimentError> {
    let basis = b_plus_basis(t);
    let stars: Vec<OperatorExpr> = (0..t.num_stars()).map(|s| Ok(star_op(t, s)?.op)).collect::<Result<_, ExperimentError>>()?;
    let mut counts = vec![0u64; 64];
    let mut max_forbidden = 0.0f64;
    let mut retries = 0;
    let mut weighted = [0.0f64; 64];
    let (mut sum_w, mut sum_w2) = (0.0f64, 0.0f64);
    let sectors = enumerate_sectors();
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let probs = loop {
            let mut psi = trial_state(t, &basis, ensemble, &mut rng);
            for a in &stars {
                psi = half_sum(&psi, a)?;
            }
            let norm = psi.norm_sqr();
            if norm < 1e-24 {
                retries += 1;
                if retries > 100 * (trials + 1) {
                    return Err(ExperimentError::ZeroNormState);
                }
                continue;
            }
            let mut p = [0.0f64; 64];
            for &(k, a) in psi.entries() {
                let key = vertex_key(&psi, k);
                let m = LOGICAL_ORDER.iter().fold(0u32, |acc, &(c, d)| acc << 1 | z_bit(t, key, c, d));
                p[m as usize] += a.norm_sqr() / norm;
            }
            break (p, norm);
        };
        let (probs, norm) = probs;
        sum_w += norm;
        sum_w2 += norm * norm;
        for (acc, p) in weighted.iter_mut().zip(&probs) {
            *acc += norm * p;
        }
        let forbidden: f64 = sectors.iter().zip(&probs).filter(|(s, _)| !s.admissible).map(|(_, p)| p).sum();
        max_forbidden = max_forbidden.max(forbidden);
        let u = rng.random::<f64>();
        let mut acc = 0.0;
        let mut pick = 63;
        for (m, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                pick = m;
                break;
            }
        }
        counts[pick] += 1;
    }
    let weighted = weighted.iter().map(|w| if sum_w > 0.0 { w / sum_w } else { 0.0 }).collect();
    let effective_trials = if sum_w2 > 0.0 { sum_w * sum_w / sum_w2 } else { 0.0 };
    Ok(DegeneracyScan { trials, ensemble, counts, max_forbidden_mass: max_forbidden, retries, weighted, effective_trials })
}

// ---------------------------------------------------------------------------
// Fidelity bounds

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityBounds {
    pub lower: f64,
    pub upper: f64,
    pub per_site_lower: f64,
    pub per_site_upper: f64,
}

/// Bounds on the ground-state fidelity from the three projector
/// expectations: `max(0, R + G + B - 2) <= F <= min(R, G, B)`.
pub fn fidelity_bounds(r: f64, g: f64, b: f64, n_sites: usize) -> Result<FidelityBounds, ExperimentError> {
    for (name, v) in [("R", r), ("G", g), ("B", b)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(ExperimentError::OutOfRange(format!("<{name}> = {v}")));
        }
    }
    if n_sites == 0 {
        return Err(ExperimentError::OutOfRange(String::from("n_sites = 0")));
    }
    let lower = (r + g + b - 2.0).max(0.0);
    let upper = r.min(g).min(b);
    let root = |x: f64| libm::pow(x, 1.0 / n_sites as f64);
    Ok(FidelityBounds { lower, upper, per_site_lower: root(lower), per_site_upper: root(upper) })
}

/// Omitted star and triangle per colour in the R, G, B projectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectorChoice {
    pub stars: [usize; 3],
    pub triangles: [usize; 3],
}

impl ProjectorChoice {
    /// Lowest-index star and triangle of each colour.
    pub fn canonical(t: &KagomeTorus) -> Self {
        ProjectorChoice {
            stars: Color::ALL.map(|c| t.stars_of_color(c).next().expect("colour present")),
            triangles: Color::ALL.map(|c| t.triangles_of_color(c).next().expect("colour present")),
        }
    }

    /// Highest-index star and triangle of each colour.
    pub fn alternate(t: &KagomeTorus) -> Self {
        ProjectorChoice {
            stars: Color::ALL.map(|c| t.stars_of_color(c).last().expect("colour present")),
            triangles: Color::ALL.map(|c| t.triangles_of_color(c).last().expect("colour present")),
        }
    }
}

/// Terms of the projector for colour `c`: stars of `c` (minus one), the
/// triangles inscribed in them (minus the omitted ones), and both logicals
/// of colour `c + 1`.
pub struct ProjectorTerms {
    pub stars: Vec<usize>,
    pub triangles: Vec<usize>,
    pub logicals: Vec<Vec<usize>>,
}

pub fn projector_terms(t: &KagomeTorus, c: Color, choice: &ProjectorChoice) -> ProjectorTerms {
    let stars: Vec<usize> = t.stars_of_color(c).filter(|&s| s != choice.stars[c.index()]).collect();
    let triangles: Vec<usize> = t
        .stars_of_color(c)
        .flat_map(|s| t.stars[s].triangles)
        .filter(|&tr| choice.triangles[t.triangles[tr].color.index()] != tr)
        .collect();
    let lc = c.next();
    let logicals = [Dir::H, Dir::V].iter().map(|&d| t.z_logical_support(lc, d, 0)).collect();
    ProjectorTerms { stars, triangles, logicals }
}

/// Unnormalised image of `psi` under the projector of colour `c`.
pub fn apply_projector(t: &KagomeTorus, c: Color, choice: &ProjectorChoice, psi: &StateVector<f64>) -> Result<StateVector<f64>, ExperimentError> {
    let terms = projector_terms(t, c, choice);
    let mut phi = psi.clone();
    phi.absorb_phase();
    // diagonal factors first: keep keys whose parities are all even
    let live: Vec<QubitId> = phi.live_qubits().to_vec();
    let diag: Vec<Vec<usize>> = terms.triangles.iter().map(|&tr| t.triangles[tr].vertices.to_vec()).chain(terms.logicals.iter().cloned()).collect();
    let kept: Vec<(u64, Complex<f64>)> = phi
        .entries()
        .iter()
        .filter(|&&(k, _)| {
            let key = live.iter().enumerate().fold(0u64, |acc, (i, &q)| acc | ((k >> i & 1) << q));
            diag.iter().all(|vs| vs.iter().map(|&v| (key >> v & 1) as u32).sum::<u32>() % 2 == 0)
        })
        .copied()
        .collect();
    let mut phi = StateVector::from_entries(live, kept);
    phi.set_cap(psi.cap().max(64));
    for &s in &terms.stars {
        phi = half_sum(&phi, &star_op(t, s)?.op)?;
    }
    Ok(phi)
}

/// Exact `(<R>, <G>, <B>)`.
pub fn projector_expectations(t: &KagomeTorus, psi: &StateVector<f64>, choice: &ProjectorChoice) -> Result<[f64; 3], ExperimentError> {
    let norm = psi.norm_sqr();
    let mut out = [0.0; 3];
    for c in Color::ALL {
        out[c.index()] = apply_projector(t, c, choice, psi)?.norm_sqr() / norm;
    }
    Ok(out)
}

/// Sampled `(<R>, <G>, <B>)` from the X-setting of each colour.
pub fn sampled_projector_expectations(
    t: &KagomeTorus,
    cfg: &PrepConfig,
    shots: usize,
    seed: u64,
    choice: &ProjectorChoice,
) -> Result<([Estimate; 3], usize), ExperimentError> {
    let (words, discarded) = collect_shots(t, cfg, &GateProgram::new(), shots, seed)?;
    let mut out = [Estimate::default(); 3];
    for c in Color::ALL {
        let terms = projector_terms(t, c, choice);
        let vals: Vec<f64> = words[1 + c.index()]
            .iter()
            .map(|&w| {
                let ok = terms.stars.iter().all(|&s| star_value(t, s, w) > 0.0)
                    && terms.triangles.iter().all(|&tr| parity_value(w, &t.triangles[tr].vertices) > 0.0)
                    && terms.logicals.iter().all(|l| parity_value(w, l) > 0.0);
                ok as u8 as f64
            })
            .collect();
        out[c.index()] = Estimate::from_values(&vals);
    }
    Ok((out, discarded))
}

// ---------------------------------------------------------------------------
// Braids

/// Blue pair on stars 0 and 1, one end moved along 1-4-5, then fused.
pub fn braid_create_move_fuse() -> BraidSpec {
    BraidSpec {
        name: Some(String::from("create_move_fuse")),
        steps: vec![
            BraidStep::Create { color: Color::B, from: 1, to: 2, via: Some(vec![0, 1]), order: None },
            BraidStep::Move { color: Color::B, from: 2, to: 10, via: Some(vec![1, 4, 5]) },
            BraidStep::Annihilate { color: Color::B, from: 1, to: 10, via: None },
        ],
    }
}

/// Blue pair on stars 0 and 1, a green ring around star 1, then the blue
/// pair fused.
pub fn braid_green_around_blue() -> BraidSpec {
    BraidSpec {
        name: Some(String::from("green_around_blue")),
        steps: vec![
            BraidStep::Create { color: Color::B, from: 1, to: 2, via: Some(vec![0, 1]), order: None },
            BraidStep::Ring { center: 1, k0: 0, order: None },
            BraidStep::Annihilate { color: Color::B, from: 1, to: 2, via: None },
        ],
    }
}

/// Runs a closed braid on the ground state; one report per segment, the
/// last carrying the return fidelity and the charges left behind.
pub fn braid_experiment(t: &KagomeTorus, spec: &BraidSpec, seed: u64) -> Result<Vec<ExperimentReport>, ExperimentError> {
    let cfg = PrepConfig { lx: t.lx, ly: t.ly, seed, ..PrepConfig::default() };
    let psi0 = prepare_on::<f64>(t, &cfg)?.state;
    let braid = closed_braid(t, spec)?;
    let mut st = psi0.clone();
    let snaps = run_braid(t, &mut st, &braid)?;
    let name = spec.name.clone().unwrap_or_else(|| String::from("braid"));
    let mut out = Vec::new();
    for (seg, snap) in braid.segments.iter().zip(&snaps) {
        let mut r = ExperimentReport::new(&format!("{name}/{}", seg.label), t, Mode::Exact, seed);
        r.fill_from_snapshot(snap);
        r.set("excited_triangles", seg.excited.len() as f64);
        out.push(r);
    }
    if let Some(last) = out.last_mut() {
        let f = st.fidelity(&psi0)?;
        last.set("return_fidelity", f);
        let neg = last.negative_stars(1e-9);
        last.set("negative_stars", neg.len() as f64);
        for c in Color::ALL {
            let n = neg.iter().filter(|&&s| t.stars[s].color == c).count();
            last.set(&format!("negative_stars_{}", c.letter()), n as f64);
        }
    }
    Ok(out)
}

/// Agreement between the algebraic prediction for a green flux braided
/// around a blue one and the circuit-level braid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BraidCrossCheck {
    /// Charges of the two pairs after the algebraic braid.
    pub algebraic: [Option<GroupElement>; 2],
    /// Colours of the charges left on the lattice.
    pub circuit: Vec<Color>,
    pub agree: bool,
}

pub fn braid_cross_check(t: &KagomeTorus) -> Result<BraidCrossCheck, ExperimentError> {
    let mg = anyons::label_by_name("m_G").expect("label");
    let mb = anyons::label_by_name("m_B").expect("label");
    let (a, b) = anyons::pair_braid_charges(&mg, &mb).map_err(|_| ExperimentError::ZeroNormState)?;
    let reports = braid_experiment(t, &braid_green_around_blue(), 0)?;
    let last = reports.last().expect("segments");
    let circuit: Vec<Color> = last.negative_stars(1e-9).into_iter().map(|s| t.stars[s].color).collect();
    let charge_color = |g: Option<GroupElement>| match g {
        Some(GroupElement::R) => Some(Color::R),
        Some(GroupElement::G) => Some(Color::G),
        Some(GroupElement::B) => Some(Color::B),
        _ => None,
    };
    let predicted: Vec<Option<Color>> = vec![charge_color(a), charge_color(b)];
    let agree = circuit.len() == 2 && predicted.iter().all(|p| p.is_some()) && {
        let mut c = circuit.clone();
        c.sort_by_key(|c| c.index());
        let mut p: Vec<Color> = predicted.iter().flatten().copied().collect();
        p.sort_by_key(|c| c.index());
        c == p
    };
    Ok(BraidCrossCheck { algebraic: [a, b], circuit, agree })
}

// ---------------------------------------------------------------------------
// Borromean phase

pub fn borromean(
    t: &KagomeTorus,
    variant: BorromeanVariant,
    mode: Mode,
    shots: usize,
    seed: u64,
    schedule: Schedule,
) -> Result<ExperimentReport, ExperimentError> {
    let geom = borromean_geometry(t)?;
    let cfg = PrepConfig { lx: t.lx, ly: t.ly, seed, ..PrepConfig::default() };
    let psi0 = prepare_on::<f64>(t, &cfg)?.state;
    let est: PhaseEstimate = match mode {
        Mode::Exact => PhaseEstimate::from_value(borromean_overlap(&geom, &psi0, variant)?),
        Mode::Sampled => borromean_phase_interferometric(t, &geom, &psi0, variant, shots, seed, schedule)?,
    };
    let name = match variant {
        BorromeanVariant::Rgb => "borromean_rgb",
        BorromeanVariant::RbOnly => "borromean_rb",
        BorromeanVariant::GbOnly => "borromean_gb",
    };
    let mut r = ExperimentReport::new(name, t, mode, seed);
    r.shots = if mode == Mode::Sampled { shots } else { 0 };
    // The phase is defined modulo 2 pi; report it in [0, 2).
    let mut phase = est.phase_over_pi;
    if phase < -1e-12 {
        phase += 2.0;
    }
    r.set("re", est.re);
    r.set("im", est.im);
    r.set("re_err", est.re_err);
    r.set("im_err", est.im_err);
    r.set("modulus", est.r);
    r.set("phase_over_pi", phase);
    r.set("phase_err_over_pi", est.phase_err_over_pi);
    r.set("phase", phase * core::f64::consts::PI);
    Ok(r)
}

// ---------------------------------------------------------------------------
// Noisy preparation statistics

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeraldStats {
    pub shots: usize,
    pub heralded: usize,
    pub herald_rate: f64,
    pub herald_rate_err: f64,
    /// Mean energy density of kept shots.
    pub energy_density_kept: f64,
}

/// Herald rate and kept-shot energy of the preparation under `noise`.
pub fn herald_statistics(t: &KagomeTorus, variant: PrepVariant, noise: NoiseModel, shots: usize, seed: u64) -> Result<HeraldStats, ExperimentError> {
    let mut heralded = 0;
    let mut e_sum = 0.0;
    let mut kept = 0;
    for shot in 0..shots as u64 {
        let cfg = PrepConfig { lx: t.lx, ly: t.ly, variant, seed, shot, noise: Some(noise), ..PrepConfig::default() };
        match prepare_on::<f64>(t, &cfg) {
            Ok(p) if p.record.herald => heralded += 1,
            Ok(mut p) => {
                p.state.renormalize()?;
                e_sum += snapshot(t, &p.state, "shot")?.energy_density();
                kept += 1;
            }
            Err(crate::error::PrepError::Engine(crate::error::EngineError::ZeroNorm)) => heralded += 1,
            Err(e) => return Err(e.into()),
        }
    }
    let rate = heralded as f64 / shots.max(1) as f64;
    Ok(HeraldStats {
        shots,
        heralded,
        herald_rate: rate,
        herald_rate_err: libm::sqrt(rate * (1.0 - rate) / shots.max(1) as f64),
        energy_density_kept: if kept > 0 { e_sum / kept as f64 } else { f64::NAN },
    })
}
