//! Adaptive ground-state preparation: SPT entangler on the star ancillas,
//! CNOTs onto the vertices, X-basis ancilla readout and Z-string
//! feed-forward. Qubit ids: vertex `v` is `v`, the ancilla of star `s` is
//! `3N + s`, and its outcome is classical bit `s`.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_8;

use serde::{Deserialize, Serialize};

use crate::engine::{
    apply_program, BitId, GateProgram, InitBasis, Instruction, Machine, QubitId, Real, RunOptions, ShotRecord, StateVector,
    DEFAULT_CAP, DEFAULT_MAX_SUPPORT,
};
use crate::error::{EngineError, PrepError};
use crate::lattice::{Color, Dir, KagomeTorus};
use crate::modelops::{logical, z_string, LogicalKind, LOGICAL_ORDER};
use crate::noise::{apply_gate_noise, NoiseModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrepVariant {
    /// Every three-qubit phase and CNOT as written; all ancillas live at once.
    Naive,
    /// Paired phase gates, CNOT-chain absorption and ancilla reuse.
    Compiled,
}

/// How `-1` ancilla outcomes are paired.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Repeatedly join the closest remaining pair; ties go to the lowest
    /// star indices.
    Greedy,
    /// Join every excited star to a fixed reference star of its colour
    /// (one per colour, in R, G, B order).
    Reference([usize; 3]),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrepConfig {
    pub lx: usize,
    pub ly: usize,
    pub variant: PrepVariant,
    /// Target signs in the order RH, GH, BH, RV, GV, BV, reached by
    /// X-type logical loops after the feed-forward.
    pub sector: [i8; 6],
    pub seed: u64,
    pub shot: u64,
    pub noise: Option<NoiseModel>,
    /// Flag odd-parity shots as discarded.
    pub discard_on_odd_herald: bool,
    /// Return [`PrepError::HeraldedDiscard`] instead of flagging.
    pub error_on_herald: bool,
    /// Forced ancilla outcomes keyed by star index.
    pub forced: BTreeMap<BitId, u8>,
    pub pairing: Pairing,
    /// Register cap; `None` uses the larger of the default and the
    /// program's peak.
    pub cap: Option<usize>,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            lx: 3,
            ly: 3,
            variant: PrepVariant::Compiled,
            sector: [1; 6],
            seed: 0,
            shot: 0,
            noise: None,
            discard_on_odd_herald: true,
            error_on_herald: false,
            forced: BTreeMap::new(),
            pairing: Pairing::Greedy,
            cap: None,
        }
    }
}

pub fn vertex_qubit(v: usize) -> QubitId {
    v as QubitId
}

pub fn ancilla_qubit(t: &KagomeTorus, s: usize) -> QubitId {
    (t.num_vertices() + s) as QubitId
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    pub two_qubit_gates: usize,
    pub one_qubit_gates: usize,
    pub peak_register: usize,
    pub depth: usize,
}

/// Two-qubit gate count of one instruction: the three-qubit phase counts as
/// three, Toffoli-class gates as six.
pub fn two_qubit_cost(ins: &Instruction) -> usize {
    match ins {
        Instruction::CZ { .. } | Instruction::CNOT { .. } | Instruction::ZZPhase { .. } => 1,
        Instruction::ZZZPhase { .. } => 3,
        Instruction::CCZ { .. } | Instruction::CCX { .. } => 6,
        Instruction::CondProgram { program, .. } => program.instructions.iter().map(two_qubit_cost).sum(),
        _ => 0,
    }
}

pub fn cost_report(program: &GateProgram) -> CostReport {
    let mut two = 0;
    let mut one = 0;
    let mut time: BTreeMap<QubitId, usize> = BTreeMap::new();
    let mut depth = 0;
    for ins in &program.instructions {
        two += two_qubit_cost(ins);
        let counts_as_gate = match ins {
            Instruction::H { .. }
            | Instruction::X { .. }
            | Instruction::Y { .. }
            | Instruction::Z { .. }
            | Instruction::S { .. }
            | Instruction::Sdg { .. }
            | Instruction::Phase { .. }
            | Instruction::CondX { .. }
            | Instruction::CondZ { .. } => {
                one += 1;
                true
            }
            Instruction::Alloc { .. } | Instruction::Drop { .. } | Instruction::GlobalPhase { .. } => false,
            Instruction::Barrier { .. } => {
                let m = time.values().copied().max().unwrap_or(0);
                time.values_mut().for_each(|v| *v = m);
                false
            }
            _ => true,
        };
        if counts_as_gate {
            let qs = ins.qubits();
            let start = qs.iter().map(|q| time.get(q).copied().unwrap_or(0)).max().unwrap_or(0);
            for q in qs {
                time.insert(q, start + 1);
            }
            depth = depth.max(start + 1);
        }
    }
    CostReport { two_qubit_gates: two, one_qubit_gates: one, peak_register: crate::engine::peak_register(program), depth }
}

fn zzz_theta(sign: i8) -> f64 {
    sign as f64 * FRAC_PI_8
}

/// Preparation program up to (and including) the ancilla measurements.
pub fn prep_program(t: &KagomeTorus, variant: PrepVariant) -> GateProgram {
    let n = t.num_stars();
    let anc = |s: usize| ancilla_qubit(t, s);
    let mut p = GateProgram::new();
    let measure = |p: &mut GateProgram, s: usize| {
        p.push(Instruction::MeasureX { q: anc(s), bit: s as BitId });
        p.push(Instruction::Drop { q: anc(s) });
    };
    match variant {
        PrepVariant::Naive => {
            for s in 0..n {
                p.push(Instruction::Alloc { q: anc(s), basis: InitBasis::Plus });
            }
            for v in 0..t.num_vertices() {
                p.push(Instruction::Alloc { q: vertex_qubit(v), basis: InitBasis::Zero });
            }
            for at in &t.ancilla_triangles {
                let [a, b, c] = at.stars;
                p.push(Instruction::ZZZPhase { a: anc(a), b: anc(b), c: anc(c), theta: zzz_theta(at.sign) });
            }
            for v in 0..t.num_vertices() {
                for &s in &t.vertices[v].tip_of {
                    p.push(Instruction::CNOT { c: anc(s), t: vertex_qubit(v) });
                }
            }
            p.push(Instruction::Barrier { label: Some("entangled".into()) });
            for s in 0..n {
                measure(&mut p, s);
            }
        }
        PrepVariant::Compiled => {
            for s in 0..n {
                p.push(Instruction::Alloc { q: anc(s), basis: InitBasis::Plus });
            }
            for c in [Color::G, Color::B] {
                for v in t.vertices_of_color(c) {
                    p.push(Instruction::Alloc { q: vertex_qubit(v), basis: InitBasis::Zero });
                }
            }
            // Up triangle (s, e, n) and down triangle (e, n, ne) share the
            // edge (e, n): one parallelogram of four two-qubit gates.
            for s in 0..n {
                let up = &t.ancilla_triangles[2 * s];
                let down = &t.ancilla_triangles[2 * s + 1];
                let [a, e, nn] = up.stars;
                let ne = down.stars[2];
                debug_assert_eq!([down.stars[0], down.stars[1]], [e, nn]);
                p.push(Instruction::CNOT { c: anc(e), t: anc(nn) });
                p.push(Instruction::ZZPhase { a: anc(a), b: anc(nn), theta: -2.0 * zzz_theta(up.sign) });
                p.push(Instruction::ZZPhase { a: anc(ne), b: anc(nn), theta: -2.0 * zzz_theta(down.sign) });
                p.push(Instruction::CNOT { c: anc(e), t: anc(nn) });
            }
            for c in [Color::G, Color::B] {
                cnot_chains(t, c, &mut p);
            }
            p.push(Instruction::Barrier { label: Some("step1".into()) });
            for c in [Color::G, Color::B] {
                for s in t.stars_of_color(c) {
                    measure(&mut p, s);
                }
            }
            for v in t.vertices_of_color(Color::R) {
                p.push(Instruction::Alloc { q: vertex_qubit(v), basis: InitBasis::Zero });
            }
            for v in t.vertices_of_color(Color::R) {
                for &s in &t.vertices[v].tip_of {
                    p.push(Instruction::CNOT { c: anc(s), t: vertex_qubit(v) });
                }
            }
            p.push(Instruction::Barrier { label: Some("step2".into()) });
            for s in t.stars_of_color(Color::R) {
                measure(&mut p, s);
            }
        }
    }
    p
}

/// Vertices sharing a pair of parent stars receive the parity of the first
/// of them instead of two CNOTs each.
fn cnot_chains(t: &KagomeTorus, c: Color, p: &mut GateProgram) {
    let mut groups: BTreeMap<[usize; 2], Vec<usize>> = BTreeMap::new();
    for v in t.vertices_of_color(c) {
        groups.entry(t.vertices[v].tip_of).or_default().push(v);
    }
    for (parents, vs) in groups {
        let first = vs[0];
        for s in parents {
            p.push(Instruction::CNOT { c: ancilla_qubit(t, s), t: vertex_qubit(first) });
        }
        for &v in &vs[1..] {
            p.push(Instruction::CNOT { c: vertex_qubit(first), t: vertex_qubit(v) });
        }
    }
}

pub fn compile_prep(t: &KagomeTorus, variant: PrepVariant) -> (GateProgram, CostReport) {
    let p = prep_program(t, variant);
    let c = cost_report(&p);
    (p, c)
}

/// A Z string joining two excited stars of one colour.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZCorrection {
    pub color: Color,
    pub stars: [usize; 2],
    pub vertices: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedForwardPlan {
    pub corrections: Vec<ZCorrection>,
    /// Unpaired excited star per colour (R, G, B), if the count was odd.
    pub leftover: [Option<usize>; 3],
}

impl FeedForwardPlan {
    pub fn herald(&self) -> bool {
        self.leftover.iter().any(Option::is_some)
    }

    pub fn herald_colors(&self) -> Vec<Color> {
        Color::ALL.into_iter().filter(|c| self.leftover[c.index()].is_some()).collect()
    }

    /// The Z layer, with strings of one vertex cancelling where they overlap.
    pub fn program(&self) -> GateProgram {
        let mut odd: BTreeSet<usize> = BTreeSet::new();
        for c in &self.corrections {
            for &v in &c.vertices {
                if !odd.remove(&v) {
                    odd.insert(v);
                }
            }
        }
        let mut p = GateProgram::new();
        for v in odd {
            p.push(Instruction::Z { q: vertex_qubit(v) });
        }
        p
    }
}

/// Distances between stars of one colour on their superlattice.
fn color_distances(t: &KagomeTorus, from: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; t.num_stars()];
    dist[from] = 0;
    let mut q = VecDeque::from([from]);
    while let Some(s) = q.pop_front() {
        for &v in &t.stars[s].tips {
            let tp = t.vertices[v].tip_of;
            let o = if tp[0] == s { tp[1] } else { tp[0] };
            if dist[o] == usize::MAX {
                dist[o] = dist[s] + 1;
                q.push_back(o);
            }
        }
    }
    dist
}

/// Pairs the `-1` outcomes (`outcomes[s] == 1`) colour by colour.
pub fn pair_anyons(t: &KagomeTorus, outcomes: &[u8], pairing: &Pairing) -> Result<FeedForwardPlan, PrepError> {
    let mut plan = FeedForwardPlan::default();
    for c in Color::ALL {
        let mut ex: Vec<usize> = t.stars_of_color(c).filter(|&s| outcomes.get(s).copied().unwrap_or(0) == 1).collect();
        match pairing {
            Pairing::Greedy => {
                while ex.len() >= 2 {
                    let mut best: Option<(usize, usize, usize)> = None;
                    for (i, &a) in ex.iter().enumerate() {
                        let d = color_distances(t, a);
                        for &b in &ex[i + 1..] {
                            if best.is_none_or(|(bd, _, _)| d[b] < bd) {
                                best = Some((d[b], a, b));
                            }
                        }
                    }
                    let (_, a, b) = best.expect("at least two stars");
                    ex.retain(|&s| s != a && s != b);
                    plan.corrections.push(ZCorrection { color: c, stars: [a, b], vertices: z_string(t, c, a, b)? });
                }
                plan.leftover[c.index()] = ex.first().copied();
            }
            Pairing::Reference(refs) => {
                let r = refs[c.index()];
                if t.stars.get(r).is_none_or(|s| s.color != c) {
                    return Err(crate::error::ModelError::BadEndpoints.into());
                }
                // Toggling the reference star for every excitation leaves it
                // excited exactly when the count is odd.
                let mut ref_excited = false;
                for &s in &ex {
                    if s == r {
                        ref_excited ^= true;
                    } else {
                        ref_excited ^= true;
                        plan.corrections.push(ZCorrection { color: c, stars: [s, r], vertices: z_string(t, c, s, r)? });
                    }
                }
                plan.leftover[c.index()] = ref_excited.then_some(r);
            }
        }
    }
    Ok(plan)
}

/// X-type logical loops realising the target signs, horizontal loops first.
/// `X_{c,d}` flips `Z_{c,d'}` for the other direction `d'`.
pub fn sector_toggles(sector: &[i8; 6]) -> Vec<(Color, Dir)> {
    let mut out = Vec::new();
    for loop_dir in [Dir::H, Dir::V] {
        for (k, (c, d)) in LOGICAL_ORDER.iter().enumerate() {
            if sector[k] < 0 && d.other() == loop_dir {
                out.push((*c, loop_dir));
            }
        }
    }
    out
}

pub fn sector_program(t: &KagomeTorus, sector: &[i8; 6]) -> Result<GateProgram, PrepError> {
    let mut p = GateProgram::new();
    for (c, d) in sector_toggles(sector) {
        p.extend(&logical(t, c, d, LogicalKind::X)?.program());
    }
    Ok(p)
}

/// Outcome of one preparation shot.
#[derive(Clone, Debug, PartialEq)]
pub struct Prepared<T: Real> {
    pub state: StateVector<T>,
    pub record: ShotRecord,
    pub plan: FeedForwardPlan,
    pub discarded: bool,
    /// Whether the target sector satisfies the ground-state constraint.
    pub admissible: bool,
    pub cost: CostReport,
}

/// Runs one shot of the protocol.
pub fn prepare<T: Real>(config: &PrepConfig) -> Result<(StateVector<T>, ShotRecord), PrepError> {
    let p = prepare_detailed::<T>(config)?;
    Ok((p.state, p.record))
}

pub fn prepare_detailed<T: Real>(config: &PrepConfig) -> Result<Prepared<T>, PrepError> {
    let t = KagomeTorus::new(config.lx, config.ly).map_err(crate::error::ModelError::from)?;
    prepare_on::<T>(&t, config)
}

pub fn prepare_on<T: Real>(t: &KagomeTorus, config: &PrepConfig) -> Result<Prepared<T>, PrepError> {
    let base = prep_program(t, config.variant);
    let cost = cost_report(&base);
    let cap = config.cap.unwrap_or(DEFAULT_CAP.max(cost.peak_register));
    if cost.peak_register > cap {
        return Err(EngineError::RegisterOverflow { needed: cost.peak_register, cap }.into());
    }
    let noise = config.noise.unwrap_or(NoiseModel::noiseless());
    noise.validate()?;
    let noise_seed = |k: u64| config.seed ^ 0x9e37_79b9_7f4a_7c15 ^ config.shot.wrapping_mul(0x0100_0000_01b3) ^ (k << 56);
    let program = apply_gate_noise(&base, &noise, noise_seed(1));
    let opts = RunOptions { cap, max_support: DEFAULT_MAX_SUPPORT, forced: config.forced.clone(), readout: noise.readout() };
    let mut m: Machine<T> = Machine::new(config.seed, config.shot, opts);
    m.execute(&program)?;
    let (mut state, mut record) = m.finish();

    let outcomes: Vec<u8> = (0..t.num_stars()).map(|s| record.bits.get(&(s as BitId)).copied().unwrap_or(0)).collect();
    let plan = pair_anyons(t, &outcomes, &config.pairing)?;
    record.herald = plan.herald();
    if record.herald && config.error_on_herald {
        return Err(PrepError::HeraldedDiscard(plan.herald_colors()));
    }
    apply_program(&mut state, &plan.program())?;
    let sp = apply_gate_noise(&sector_program(t, &config.sector)?, &noise, noise_seed(2));
    apply_program(&mut state, &sp)?;
    if state.norm_sqr().to64() < 1e-20 {
        return Err(EngineError::ZeroNorm.into());
    }
    Ok(Prepared {
        state,
        discarded: record.herald && config.discard_on_odd_herald,
        record,
        plan,
        admissible: sector_admissible(&config.sector),
        cost,
    })
}

/// Ground-state constraint on the six logical signs: for every colour `c`,
/// with `x = c + 1` and `y = c + 2`, the count
/// `[Z_xH = -1 and Z_yV = -1] + [Z_xV = -1 and Z_yH = -1]` must be even.
pub fn sector_admissible(sector: &[i8; 6]) -> bool {
    let neg = |c: Color, d: Dir| {
        let k = LOGICAL_ORDER.iter().position(|&(cc, dd)| cc == c && dd == d).expect("label");
        sector[k] < 0
    };
    Color::ALL.into_iter().all(|c| {
        let (x, y) = (c.next(), c.next().next());
        let n = (neg(x, Dir::H) && neg(y, Dir::V)) as u8 + (neg(x, Dir::V) && neg(y, Dir::H)) as u8;
        n % 2 == 0
    })
}
