//! Parametric noise: asymmetric readout flips, two-qubit depolarising
//! insertions, and support-local readout mitigation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{GateProgram, Instruction, QubitId, ReadoutFlips};
use crate::error::NoiseError;

pub const DEFAULT_P_DEPOL2: f64 = 0.002;
pub const DEFAULT_P_READ_0GIVEN1: f64 = 2.37e-3;
pub const DEFAULT_P_READ_1GIVEN0: f64 = 0.82e-3;
/// Largest support handled by [`mitigate_readout`].
pub const MAX_MITIGATION_SUPPORT: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub p_depol2: f64,
    pub p_read_0given1: f64,
    pub p_read_1given0: f64,
    pub depol_enabled: bool,
    pub readout_enabled: bool,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            p_depol2: DEFAULT_P_DEPOL2,
            p_read_0given1: DEFAULT_P_READ_0GIVEN1,
            p_read_1given0: DEFAULT_P_READ_1GIVEN0,
            depol_enabled: true,
            readout_enabled: true,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel { p_depol2: 0.0, p_read_0given1: 0.0, p_read_1given0: 0.0, depol_enabled: false, readout_enabled: false }
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        for (name, p) in [("p_depol2", self.p_depol2), ("p_read_0given1", self.p_read_0given1), ("p_read_1given0", self.p_read_1given0)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(NoiseError::BadProbability(format!("{name} = {p}")));
            }
        }
        if self.readout_enabled && self.readout_det() <= 0.0 {
            return Err(NoiseError::BadProbability(format!("singular readout matrix (det {})", self.readout_det())));
        }
        Ok(())
    }

    /// Readout flips, or `None` when disabled or trivial.
    pub fn readout(&self) -> Option<ReadoutFlips> {
        (self.readout_enabled && (self.p_read_0given1 > 0.0 || self.p_read_1given0 > 0.0))
            .then_some(ReadoutFlips { p_0given1: self.p_read_0given1, p_1given0: self.p_read_1given0 })
    }

    pub fn depol(&self) -> f64 {
        if self.depol_enabled {
            self.p_depol2
        } else {
            0.0
        }
    }

    /// Transition matrix `M[measured][true]`.
    pub fn readout_matrix(&self) -> [[f64; 2]; 2] {
        let (p10, p01) = if self.readout_enabled { (self.p_read_1given0, self.p_read_0given1) } else { (0.0, 0.0) };
        [[1.0 - p10, p01], [p10, 1.0 - p01]]
    }

    pub fn readout_det(&self) -> f64 {
        let m = self.readout_matrix();
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn readout_inverse(&self) -> [[f64; 2]; 2] {
        let m = self.readout_matrix();
        let d = self.readout_det();
        [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
    }
}

/// Independent asymmetric flips of a bit string.
pub fn apply_readout_noise(bits: &[u8], model: &NoiseModel, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match model.readout() {
        Some(r) => bits.iter().map(|&b| r.flip(b, &mut rng)).collect(),
        None => bits.to_vec(),
    }
}

/// Readout-corrected expectation of `estimator` over a support of
/// `support_len` qubits.
///
/// `counts` holds `(word, count)` pairs where bit `i` of `word` is the
/// outcome on the i-th support qubit; `estimator` maps a word to its value.
/// The empirical distribution is transformed by the tensor power of the
/// inverse transition matrix before averaging.
pub fn mitigate_readout<F: Fn(u64) -> f64>(
    support_len: usize,
    counts: &[(u64, u64)],
    model: &NoiseModel,
    estimator: F,
) -> Result<f64, NoiseError> {
    if support_len > MAX_MITIGATION_SUPPORT {
        return Err(NoiseError::SupportTooLarge(support_len));
    }
    model.validate()?;
    let total: u64 = counts.iter().map(|c| c.1).sum();
    if total == 0 {
        return Ok(0.0);
    }
    let dim = 1usize << support_len;
    let mut p = vec![0.0f64; dim];
    for &(w, c) in counts {
        p[(w as usize) & (dim - 1)] += c as f64 / total as f64;
    }
    let inv = model.readout_inverse();
    for q in 0..support_len {
        let bit = 1usize << q;
        for x in 0..dim {
            if x & bit == 0 {
                let (p0, p1) = (p[x], p[x | bit]);
                p[x] = inv[0][0] * p0 + inv[0][1] * p1;
                p[x | bit] = inv[1][0] * p0 + inv[1][1] * p1;
            }
        }
    }
    Ok(p.iter().enumerate().map(|(x, &px)| px * estimator(x as u64)).sum())
}

/// Mitigated parity `<Z...Z>` over the first `support_len` bits.
pub fn mitigate_parity(support_len: usize, counts: &[(u64, u64)], model: &NoiseModel) -> Result<f64, NoiseError> {
    mitigate_readout(support_len, counts, model, |w| if w.count_ones() % 2 == 0 { 1.0 } else { -1.0 })
}

fn two_qubit_sites(ins: &Instruction) -> Vec<(QubitId, QubitId)> {
    match *ins {
        Instruction::CZ { a, b } => vec![(a, b)],
        Instruction::CNOT { c, t } => vec![(c, t)],
        Instruction::ZZPhase { a, b, .. } => vec![(a, b)],
        // Counted as its three-gate decomposition.
        Instruction::ZZZPhase { a, b, c, .. } => vec![(a, b), (b, c), (a, b)],
        _ => Vec::new(),
    }
}

fn pauli(q: QubitId, k: u8) -> Option<Instruction> {
    match k {
        1 => Some(Instruction::X { q }),
        2 => Some(Instruction::Y { q }),
        3 => Some(Instruction::Z { q }),
        _ => None,
    }
}

/// After each two-qubit gate, inserts a uniformly random non-identity
/// two-qubit Pauli with probability `p_depol2`. Conditional sub-programs
/// are processed recursively.
pub fn apply_gate_noise(program: &GateProgram, model: &NoiseModel, seed: u64) -> GateProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    noisy(program, model.depol(), &mut rng)
}

fn noisy(program: &GateProgram, p: f64, rng: &mut ChaCha8Rng) -> GateProgram {
    if p <= 0.0 {
        return program.clone();
    }
    let mut out = GateProgram::new();
    for ins in &program.instructions {
        if let Instruction::CondProgram { program: sub, cond } = ins {
            out.push(Instruction::CondProgram { program: noisy(sub, p, rng), cond: cond.clone() });
            continue;
        }
        out.push(ins.clone());
        for (a, b) in two_qubit_sites(ins) {
            if rng.random::<f64>() < p {
                let k: u8 = rng.random_range(1..16);
                out.instructions.extend(pauli(a, k & 3));
                out.instructions.extend(pauli(b, k >> 2));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let m = NoiseModel::default();
        m.validate().unwrap();
        assert!(m.readout_det() > 0.99);
        assert!(NoiseModel { p_depol2: 1.5, ..m }.validate().is_err());
    }

    #[test]
    fn zero_rates_are_identity() {
        let m = NoiseModel { p_read_0given1: 0.0, p_read_1given0: 0.0, ..NoiseModel::default() };
        let bits = vec![0, 1, 1, 0, 1];
        assert_eq!(apply_readout_noise(&bits, &m, 3), bits);
        let mut p = GateProgram::new();
        p.push(Instruction::CZ { a: 0, b: 1 });
        let m0 = NoiseModel { p_depol2: 0.0, ..NoiseModel::default() };
        assert_eq!(apply_gate_noise(&p, &m0, 9), p);
    }

    #[test]
    fn flip_fractions_match_rates() {
        let m = NoiseModel::default();
        let n = 2_000_000;
        let zeros = apply_readout_noise(&vec![0; n], &m, 1);
        let f0 = zeros.iter().filter(|&&b| b == 1).count() as f64 / n as f64;
        let ones = apply_readout_noise(&vec![1; n], &m, 2);
        let f1 = ones.iter().filter(|&&b| b == 0).count() as f64 / n as f64;
        let s0 = (DEFAULT_P_READ_1GIVEN0 / n as f64).sqrt();
        let s1 = (DEFAULT_P_READ_0GIVEN1 / n as f64).sqrt();
        assert!((f0 - DEFAULT_P_READ_1GIVEN0).abs() < 4.0 * s0, "{f0}");
        assert!((f1 - DEFAULT_P_READ_0GIVEN1).abs() < 4.0 * s1, "{f1}");
    }

    #[test]
    fn noiseless_counts_unchanged() {
        let m = NoiseModel::noiseless();
        let counts = [(0b00, 30), (0b01, 10), (0b11, 60)];
        let v = mitigate_parity(2, &counts, &m).unwrap();
        assert!((v - 0.8).abs() < 1e-12);
    }

    #[test]
    fn inverse_undoes_transition_exactly() {
        // Feed the exact noisy distribution of a known state; mitigation
        // must return the noiseless value.
        let m = NoiseModel { p_read_0given1: 0.05, p_read_1given0: 0.02, ..NoiseModel::default() };
        let t = m.readout_matrix();
        // true state: |1> with prob 0.7, |0> with 0.3
        let p1 = 0.7;
        let meas1 = t[1][0] * (1.0 - p1) + t[1][1] * p1;
        let scale = 1_000_000_000u64;
        let c1 = (meas1 * scale as f64).round() as u64;
        let counts = [(0, scale - c1), (1, c1)];
        let z = mitigate_parity(1, &counts, &m).unwrap();
        assert!((z - (1.0 - 2.0 * p1)).abs() < 1e-6, "{z}");
    }

    #[test]
    fn support_limit() {
        assert_eq!(mitigate_parity(17, &[], &NoiseModel::default()), Err(NoiseError::SupportTooLarge(17)));
    }

    #[test]
    fn full_depolarising_is_reproducible() {
        let mut p = GateProgram::new();
        for q in 0..10 {
            p.push(Instruction::CNOT { c: q, t: q + 1 });
        }
        let m = NoiseModel { p_depol2: 1.0, ..NoiseModel::default() };
        let a = apply_gate_noise(&p, &m, 5);
        assert_eq!(a, apply_gate_noise(&p, &m, 5));
        // every gate got at least one Pauli
        assert!(a.len() >= 20);
    }
}
