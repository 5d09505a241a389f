//! Gate programs, the executor, Pauli/CZ operator expressions and sampling.

mod state;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::EngineError;

pub use state::{pairwise_sum, Precision, QubitId, Real, StateVector, DEFAULT_CAP, DEFAULT_MAX_SUPPORT};

pub type BitId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitBasis {
    Zero,
    Plus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MeasBasis {
    X,
    Y,
    Z,
}

/// Classical condition: fires when the XOR of the listed bits differs from
/// `invert`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cond {
    pub bits: Vec<BitId>,
    #[serde(default)]
    pub invert: bool,
}

impl Cond {
    pub fn bit(b: BitId) -> Self {
        Cond { bits: alloc::vec![b], invert: false }
    }

    pub fn parity(bits: Vec<BitId>) -> Self {
        Cond { bits, invert: false }
    }
}

/// One program step. Angles are in radians.
///
/// `ZZPhase(theta)` is `exp(-i theta/2 Z Z)`; `ZZZPhase(theta)` is
/// `exp(+i theta Z Z Z)`; `Phase(theta)` is `diag(1, e^{i theta})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op")]
pub enum Instruction {
    Alloc { q: QubitId, basis: InitBasis },
    H { q: QubitId },
    X { q: QubitId },
    Y { q: QubitId },
    Z { q: QubitId },
    S { q: QubitId },
    Sdg { q: QubitId },
    Phase { q: QubitId, theta: f64 },
    CZ { a: QubitId, b: QubitId },
    CNOT { c: QubitId, t: QubitId },
    CCZ { a: QubitId, b: QubitId, c: QubitId },
    CCX { c1: QubitId, c2: QubitId, t: QubitId },
    ZZPhase { a: QubitId, b: QubitId, theta: f64 },
    ZZZPhase { a: QubitId, b: QubitId, c: QubitId, theta: f64 },
    GlobalPhase { theta: f64 },
    MeasureX { q: QubitId, bit: BitId },
    MeasureY { q: QubitId, bit: BitId },
    MeasureZ { q: QubitId, bit: BitId },
    Drop { q: QubitId },
    CondZ { q: QubitId, cond: Cond },
    CondX { q: QubitId, cond: Cond },
    CondProgram { program: GateProgram, cond: Cond },
    Barrier { label: Option<String> },
}

impl Instruction {
    pub fn name(&self) -> &'static str {
        use Instruction::*;
        match self {
            Alloc { .. } => "Alloc",
            H { .. } => "H",
            X { .. } => "X",
            Y { .. } => "Y",
            Z { .. } => "Z",
            S { .. } => "S",
            Sdg { .. } => "Sdg",
            Phase { .. } => "Phase",
            CZ { .. } => "CZ",
            CNOT { .. } => "CNOT",
            CCZ { .. } => "CCZ",
            CCX { .. } => "CCX",
            ZZPhase { .. } => "ZZPhase",
            ZZZPhase { .. } => "ZZZPhase",
            GlobalPhase { .. } => "GlobalPhase",
            MeasureX { .. } => "MeasureX",
            MeasureY { .. } => "MeasureY",
            MeasureZ { .. } => "MeasureZ",
            Drop { .. } => "Drop",
            CondZ { .. } => "CondZ",
            CondX { .. } => "CondX",
            CondProgram { .. } => "CondProgram",
            Barrier { .. } => "Barrier",
        }
    }

    /// Qubits the instruction acts on (empty for global/classical steps).
    pub fn qubits(&self) -> Vec<QubitId> {
        use Instruction::*;
        match *self {
            Alloc { q, .. } | H { q } | X { q } | Y { q } | Z { q } | S { q } | Sdg { q } | Phase { q, .. } => alloc::vec![q],
            MeasureX { q, .. } | MeasureY { q, .. } | MeasureZ { q, .. } | Drop { q } | CondZ { q, .. } | CondX { q, .. } => {
                alloc::vec![q]
            }
            CZ { a, b } | ZZPhase { a, b, .. } => alloc::vec![a, b],
            CNOT { c, t } => alloc::vec![c, t],
            CCZ { a, b, c } | ZZZPhase { a, b, c, .. } => alloc::vec![a, b, c],
            CCX { c1, c2, t } => alloc::vec![c1, c2, t],
            CondProgram { ref program, .. } => {
                let mut v: Vec<QubitId> = program.instructions.iter().flat_map(|i| i.qubits()).collect();
                v.sort_unstable();
                v.dedup();
                v
            }
            GlobalPhase { .. } | Barrier { .. } => Vec::new(),
        }
    }

    pub fn is_unitary(&self) -> bool {
        use Instruction::*;
        !matches!(self, Alloc { .. } | MeasureX { .. } | MeasureY { .. } | MeasureZ { .. } | Drop { .. } | CondZ { .. } | CondX { .. } | CondProgram { .. })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GateProgram {
    pub instructions: Vec<Instruction>,
}

impl GateProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, i: Instruction) -> &mut Self {
        self.instructions.push(i);
        self
    }

    pub fn extend(&mut self, other: &GateProgram) -> &mut Self {
        self.instructions.extend(other.instructions.iter().cloned());
        self
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    /// Unitary inverse. Fails on non-unitary steps.
    pub fn inverse(&self) -> Result<GateProgram, EngineError> {
        use Instruction::*;
        let mut out = GateProgram::new();
        for ins in self.instructions.iter().rev() {
            let inv = match ins.clone() {
                S { q } => Sdg { q },
                Sdg { q } => S { q },
                Phase { q, theta } => Phase { q, theta: -theta },
                ZZPhase { a, b, theta } => ZZPhase { a, b, theta: -theta },
                ZZZPhase { a, b, c, theta } => ZZZPhase { a, b, c, theta: -theta },
                GlobalPhase { theta } => GlobalPhase { theta: -theta },
                other if other.is_unitary() => other,
                other => return Err(EngineError::NonUnitaryInstruction(other.name().to_string())),
            };
            out.push(inv);
        }
        Ok(out)
    }
}

/// Rewrites every gate as its `ancilla`-controlled version, preserving order.
pub fn controlled(program: &GateProgram, ancilla: QubitId) -> Result<GateProgram, EngineError> {
    use Instruction::*;
    let mut out = GateProgram::new();
    for ins in &program.instructions {
        match *ins {
            X { q } => {
                out.push(CNOT { c: ancilla, t: q });
            }
            Z { q } => {
                out.push(CZ { a: ancilla, b: q });
            }
            Y { q } => {
                out.push(Sdg { q }).push(CNOT { c: ancilla, t: q }).push(S { q });
            }
            CZ { a, b } => {
                out.push(CCZ { a: ancilla, b: a, c: b });
            }
            CNOT { c, t } => {
                out.push(CCX { c1: ancilla, c2: c, t });
            }
            GlobalPhase { theta } => {
                out.push(Phase { q: ancilla, theta });
            }
            Barrier { ref label } => {
                out.push(Barrier { label: label.clone() });
            }
            ref other => return Err(EngineError::NonUnitaryInstruction(other.name().to_string())),
        }
    }
    Ok(out)
}

/// Asymmetric classical bit-flip probabilities applied to recorded outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutFlips {
    /// Probability of reading 0 when the qubit is 1.
    pub p_0given1: f64,
    /// Probability of reading 1 when the qubit is 0.
    pub p_1given0: f64,
}

impl ReadoutFlips {
    pub fn flip<R: Rng + ?Sized>(&self, bit: u8, rng: &mut R) -> u8 {
        let p = if bit == 1 { self.p_0given1 } else { self.p_1given0 };
        if p > 0.0 && rng.random::<f64>() < p {
            bit ^ 1
        } else {
            bit
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub cap: usize,
    pub max_support: usize,
    /// Outcomes to impose instead of sampling.
    pub forced: BTreeMap<BitId, u8>,
    pub readout: Option<ReadoutFlips>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { cap: DEFAULT_CAP, max_support: DEFAULT_MAX_SUPPORT, forced: BTreeMap::new(), readout: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub seed: u64,
    pub shot: u64,
    /// Recorded outcome per classical bit (1 means eigenvalue -1).
    pub bits: BTreeMap<BitId, u8>,
    pub herald: bool,
    pub peak_register: usize,
    pub peak_support: usize,
}

/// Shot-scoped executor: owns the state, the classical record and the
/// per-shot random stream.
pub struct Machine<T: Real> {
    pub state: StateVector<T>,
    pub record: ShotRecord,
    rng: ChaCha8Rng,
    opts: RunOptions,
    measured: BTreeMap<QubitId, MeasBasis>,
}

/// Per-shot random stream: seed selects the key, shot selects the stream.
pub fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng
}

impl<T: Real> Machine<T> {
    pub fn new(seed: u64, shot: u64, opts: RunOptions) -> Self {
        Machine {
            state: StateVector::with_limits(opts.cap, opts.max_support),
            record: ShotRecord { seed, shot, ..Default::default() },
            rng: shot_rng(seed, shot),
            opts,
            measured: BTreeMap::new(),
        }
    }

    /// Continues from an existing state.
    pub fn from_state(state: StateVector<T>, seed: u64, shot: u64, opts: RunOptions) -> Self {
        let mut m = Self::new(seed, shot, opts);
        m.record.peak_register = state.num_qubits();
        m.record.peak_support = state.support();
        m.state = state;
        m
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn pos(&self, q: QubitId) -> Result<usize, EngineError> {
        self.state.position(q)
    }

    fn touch(&mut self, qs: &[QubitId]) {
        for q in qs {
            self.measured.remove(q);
        }
    }

    fn cond(&self, c: &Cond) -> Result<bool, EngineError> {
        let mut v = c.invert;
        for &b in &c.bits {
            match self.record.bits.get(&b) {
                Some(&x) => v ^= x == 1,
                None => return Err(EngineError::InvalidCondition(b)),
            }
        }
        Ok(v)
    }

    fn measure(&mut self, q: QubitId, basis: MeasBasis, bit: BitId) -> Result<(), EngineError> {
        let p = self.pos(q)?;
        match basis {
            MeasBasis::Z => {}
            MeasBasis::X => self.state.hadamard(p)?,
            MeasBasis::Y => {
                self.state.phase_gate(p, -core::f64::consts::FRAC_PI_2);
                self.state.hadamard(p)?;
            }
        }
        let p1 = self.state.prob_one(p).to64();
        let outcome = match self.opts.forced.get(&bit) {
            Some(&b) => {
                let pb = if b == 1 { p1 } else { 1.0 - p1 };
                if pb <= 1e-12 {
                    return Err(EngineError::ImpossibleOutcome(bit));
                }
                b
            }
            None => u8::from(self.rng.random::<f64>() < p1),
        };
        self.state.project(p, outcome)?;
        match basis {
            MeasBasis::Z => {}
            MeasBasis::X => self.state.hadamard(p)?,
            MeasBasis::Y => {
                self.state.hadamard(p)?;
                self.state.phase_gate(p, core::f64::consts::FRAC_PI_2);
            }
        }
        let recorded = match self.opts.readout {
            Some(r) => r.flip(outcome, &mut self.rng),
            None => outcome,
        };
        self.record.bits.insert(bit, recorded);
        self.measured.insert(q, basis);
        Ok(())
    }

    fn drop_qubit(&mut self, q: QubitId) -> Result<(), EngineError> {
        let basis = *self.measured.get(&q).ok_or(EngineError::DropUnmeasured(q))?;
        let p = self.pos(q)?;
        match basis {
            MeasBasis::Z => {}
            MeasBasis::X => self.state.hadamard(p)?,
            MeasBasis::Y => {
                self.state.phase_gate(p, -core::f64::consts::FRAC_PI_2);
                self.state.hadamard(p)?;
            }
        }
        self.state.remove_qubit(q)?;
        self.measured.remove(&q);
        Ok(())
    }

    /// Executes one instruction.
    pub fn step(&mut self, ins: &Instruction) -> Result<(), EngineError> {
        use Instruction::*;
        match ins {
            Alloc { q, basis } => {
                self.state.alloc(*q, *basis == InitBasis::Plus)?;
                self.measured.remove(q);
            }
            H { q } => {
                let p = self.pos(*q)?;
                self.state.hadamard(p)?;
            }
            X { q } => {
                let p = self.pos(*q)?;
                self.state.pauli_x(p);
            }
            Y { q } => {
                let p = self.pos(*q)?;
                self.state.pauli_y(p);
            }
            Z { q } => {
                let p = self.pos(*q)?;
                self.state.pauli_z(p);
            }
            S { q } => {
                let p = self.pos(*q)?;
                self.state.phase_gate(p, core::f64::consts::FRAC_PI_2);
            }
            Sdg { q } => {
                let p = self.pos(*q)?;
                self.state.phase_gate(p, -core::f64::consts::FRAC_PI_2);
            }
            Phase { q, theta } => {
                let p = self.pos(*q)?;
                self.state.phase_gate(p, *theta);
            }
            CZ { a, b } => {
                let ps = [self.pos(*a)?, self.pos(*b)?];
                self.state.controlled_z(&ps);
            }
            CCZ { a, b, c } => {
                let ps = [self.pos(*a)?, self.pos(*b)?, self.pos(*c)?];
                self.state.controlled_z(&ps);
            }
            CNOT { c, t } => {
                let (pc, pt) = (self.pos(*c)?, self.pos(*t)?);
                self.state.controlled_x(&[pc], pt);
            }
            CCX { c1, c2, t } => {
                let (p1, p2, pt) = (self.pos(*c1)?, self.pos(*c2)?, self.pos(*t)?);
                self.state.controlled_x(&[p1, p2], pt);
            }
            ZZPhase { a, b, theta } => {
                let ps = [self.pos(*a)?, self.pos(*b)?];
                self.state.z_string_phase(&ps, -theta / 2.0);
            }
            ZZZPhase { a, b, c, theta } => {
                let ps = [self.pos(*a)?, self.pos(*b)?, self.pos(*c)?];
                self.state.z_string_phase(&ps, *theta);
            }
            GlobalPhase { theta } => self.state.multiply_global_phase(*theta),
            MeasureX { q, bit } => self.measure(*q, MeasBasis::X, *bit)?,
            MeasureY { q, bit } => self.measure(*q, MeasBasis::Y, *bit)?,
            MeasureZ { q, bit } => self.measure(*q, MeasBasis::Z, *bit)?,
            Drop { q } => self.drop_qubit(*q)?,
            CondZ { q, cond } => {
                if self.cond(cond)? {
                    let p = self.pos(*q)?;
                    self.state.pauli_z(p);
                }
            }
            CondX { q, cond } => {
                if self.cond(cond)? {
                    let p = self.pos(*q)?;
                    self.state.pauli_x(p);
                }
            }
            CondProgram { program, cond } => {
                if self.cond(cond)? {
                    self.execute(program)?;
                }
            }
            Barrier { .. } => {}
        }
        if !matches!(ins, MeasureX { .. } | MeasureY { .. } | MeasureZ { .. } | Drop { .. } | Alloc { .. }) {
            let qs = ins.qubits();
            self.touch(&qs);
        }
        self.record.peak_register = self.record.peak_register.max(self.state.num_qubits());
        self.record.peak_support = self.record.peak_support.max(self.state.support());
        Ok(())
    }

    pub fn execute(&mut self, program: &GateProgram) -> Result<(), EngineError> {
        for ins in &program.instructions {
            self.step(ins)?;
        }
        Ok(())
    }

    pub fn finish(self) -> (StateVector<T>, ShotRecord) {
        (self.state, self.record)
    }
}

/// Runs a program from the empty register.
pub fn run<T: Real>(program: &GateProgram, seed: u64) -> Result<(StateVector<T>, ShotRecord), EngineError> {
    run_with(program, seed, 0, &RunOptions::default())
}

pub fn run_with<T: Real>(program: &GateProgram, seed: u64, shot: u64, opts: &RunOptions) -> Result<(StateVector<T>, ShotRecord), EngineError> {
    let mut m = Machine::new(seed, shot, opts.clone());
    m.execute(program)?;
    Ok(m.finish())
}

/// Applies a measurement-free program to a state in place.
pub fn apply_program<T: Real>(state: &mut StateVector<T>, program: &GateProgram) -> Result<(), EngineError> {
    let mut m = Machine::from_state(core::mem::take(state), 0, 0, RunOptions { cap: 64, ..RunOptions::default() });
    let r = m.execute(program);
    *state = m.state;
    r
}

/// Peak live-qubit count of a program, computed statically.
pub fn peak_register(program: &GateProgram) -> usize {
    fn walk(p: &GateProgram, live: &mut usize, peak: &mut usize) {
        for ins in &p.instructions {
            match ins {
                Instruction::Alloc { .. } => {
                    *live += 1;
                    *peak = (*peak).max(*live);
                }
                Instruction::Drop { .. } => *live -= 1,
                Instruction::CondProgram { program, .. } => walk(program, live, peak),
                _ => {}
            }
        }
    }
    let (mut live, mut peak) = (0, 0);
    walk(program, &mut live, &mut peak);
    peak
}

/// Single factor of an operator product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Factor {
    X(QubitId),
    Y(QubitId),
    Z(QubitId),
    CZ(QubitId, QubitId),
}

/// Product `factors[0] * factors[1] * ...` of Pauli and CZ factors; the last
/// factor acts first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorExpr {
    pub factors: Vec<Factor>,
}

/// Sign/phase exponent: the factor is `i^k`.
type Quarter = u8;

impl OperatorExpr {
    pub fn new(factors: Vec<Factor>) -> Self {
        OperatorExpr { factors }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    /// `self * other`.
    pub fn times(&self, other: &OperatorExpr) -> OperatorExpr {
        let mut f = self.factors.clone();
        f.extend(other.factors.iter().copied());
        OperatorExpr { factors: f }
    }

    pub fn support(&self) -> Vec<QubitId> {
        let mut v: Vec<QubitId> = self
            .factors
            .iter()
            .flat_map(|f| match *f {
                Factor::X(q) | Factor::Y(q) | Factor::Z(q) => alloc::vec![q],
                Factor::CZ(a, b) => alloc::vec![a, b],
            })
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Program applying the operator (last factor first).
    pub fn to_program(&self) -> GateProgram {
        let mut p = GateProgram::new();
        for f in self.factors.iter().rev() {
            p.push(match *f {
                Factor::X(q) => Instruction::X { q },
                Factor::Y(q) => Instruction::Y { q },
                Factor::Z(q) => Instruction::Z { q },
                Factor::CZ(a, b) => Instruction::CZ { a, b },
            });
        }
        p
    }

    fn resolve<T: Real>(&self, state: &StateVector<T>) -> Result<Vec<(u8, u64, u64)>, EngineError> {
        // (kind, mask a, mask b); kind 0=X 1=Y 2=Z 3=CZ
        let mut out = Vec::with_capacity(self.factors.len());
        for f in self.factors.iter().rev() {
            out.push(match *f {
                Factor::X(q) => (0, 1u64 << state.position(q)?, 0),
                Factor::Y(q) => (1, 1u64 << state.position(q)?, 0),
                Factor::Z(q) => (2, 1u64 << state.position(q)?, 0),
                Factor::CZ(a, b) => (3, 1u64 << state.position(a)?, 1u64 << state.position(b)?),
            });
        }
        Ok(out)
    }

    fn act(ops: &[(u8, u64, u64)], mut k: u64) -> (u64, Quarter) {
        let mut ph: Quarter = 0;
        for &(kind, m, m2) in ops {
            match kind {
                0 => k ^= m,
                1 => {
                    // Y|0> = i|1>, Y|1> = -i|0>
                    ph += if k & m == 0 { 1 } else { 3 };
                    k ^= m;
                }
                2 => {
                    if k & m != 0 {
                        ph += 2;
                    }
                }
                _ => {
                    if k & m != 0 && k & m2 != 0 {
                        ph += 2;
                    }
                }
            }
        }
        (k, ph % 4)
    }

    fn quarter<T: Real>(q: Quarter) -> Complex<T> {
        match q {
            0 => Complex::new(T::one(), T::zero()),
            1 => Complex::new(T::zero(), T::one()),
            2 => Complex::new(-T::one(), T::zero()),
            _ => Complex::new(T::zero(), -T::one()),
        }
    }

    /// Applies the operator in place.
    pub fn apply<T: Real>(&self, state: &mut StateVector<T>) -> Result<(), EngineError> {
        let ops = self.resolve(state)?;
        let qubits = state.live_qubits().to_vec();
        let phase = state.global_phase();
        let entries: Vec<(u64, Complex<T>)> = state
            .entries()
            .iter()
            .map(|&(k, a)| {
                let (k2, q) = Self::act(&ops, k);
                (k2, a * Self::quarter::<T>(q) * phase)
            })
            .collect();
        let cap = state.cap();
        *state = StateVector::from_entries(qubits, entries);
        state.set_cap(cap);
        Ok(())
    }

    /// Exact `<psi|O|psi>` (normalised by `<psi|psi>`).
    pub fn expval<T: Real>(&self, state: &StateVector<T>) -> Result<Complex<f64>, EngineError> {
        let ops = self.resolve(state)?;
        let entries = state.entries();
        let mut terms: Vec<f64> = Vec::with_capacity(entries.len());
        let mut terms_im: Vec<f64> = Vec::with_capacity(entries.len());
        for &(k, a) in entries {
            let (k2, q) = Self::act(&ops, k);
            let b = match entries.binary_search_by_key(&k2, |e| e.0) {
                Ok(i) => entries[i].1,
                Err(_) => continue,
            };
            let z = b.conj() * a * Self::quarter::<T>(q);
            terms.push(z.re.to64());
            terms_im.push(z.im.to64());
        }
        let n = state.norm_sqr().to64();
        Ok(Complex::new(pairwise_sum(&terms) / n, pairwise_sum(&terms_im) / n))
    }

    /// Real part of the expectation, asserting the imaginary part is tiny.
    pub fn expval_real<T: Real>(&self, state: &StateVector<T>) -> Result<f64, EngineError> {
        Ok(self.expval(state)?.re)
    }
}

/// Per-qubit measurement bases; unlisted live qubits are read in Z.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub name: String,
    pub bases: BTreeMap<QubitId, MeasBasis>,
}

/// Born samples; bit `i` of each shot word is the outcome of `qubits[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Samples {
    pub qubits: Vec<QubitId>,
    pub shots: Vec<u64>,
}

impl Samples {
    pub fn bit(&self, shot: usize, q: QubitId) -> Option<u8> {
        let i = self.qubits.iter().position(|&x| x == q)?;
        Some(((self.shots[shot] >> i) & 1) as u8)
    }

    /// Parity (as +1/-1) of the listed qubits in one shot.
    pub fn parity(&self, shot: usize, qs: &[QubitId]) -> i8 {
        let mut p = 0u8;
        for &q in qs {
            p ^= self.bit(shot, q).unwrap_or(0);
        }
        if p == 1 {
            -1
        } else {
            1
        }
    }
}

/// Draws `shots` i.i.d. samples under `setting`, optionally passing each bit
/// through a readout-flip channel. Shot `n` uses stream `n` of `seed`.
pub fn sample<T: Real>(
    state: &StateVector<T>,
    setting: &MeasurementSetting,
    shots: usize,
    seed: u64,
    readout: Option<ReadoutFlips>,
) -> Result<Samples, EngineError> {
    let mut s = state.clone();
    for (&q, &b) in &setting.bases {
        let p = s.position(q)?;
        match b {
            MeasBasis::Z => {}
            MeasBasis::X => s.hadamard(p)?,
            MeasBasis::Y => {
                s.phase_gate(p, -core::f64::consts::FRAC_PI_2);
                s.hadamard(p)?;
            }
        }
    }
    let probs = s.probabilities();
    let mut cum = Vec::with_capacity(probs.len());
    let mut acc = 0.0f64;
    for &(_, p) in &probs {
        acc += p.to64();
        cum.push(acc);
    }
    let n = s.num_qubits();
    let mut out = Vec::with_capacity(shots);
    for shot in 0..shots {
        let mut rng = shot_rng(seed, shot as u64);
        let u = rng.random::<f64>() * acc;
        let idx = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
        let mut key = probs[idx].0;
        if let Some(r) = readout {
            for i in 0..n {
                let b = ((key >> i) & 1) as u8;
                if r.flip(b, &mut rng) != b {
                    key ^= 1 << i;
                }
            }
        }
        out.push(key);
    }
    Ok(Samples { qubits: s.live_qubits().to_vec(), shots: out })
}

#[cfg(test)]
mod tests;
