//! Sparse exact statevector over a dynamic register.
//!
//! Amplitudes are stored as a key-sorted list of `(basis, amplitude)` pairs;
//! bit `p` of a basis key is the computational value of the qubit at
//! register position `p`. Every state the simulator produces is supported on
//! a small subset of the computational basis (stabiliser-like wavefunctions
//! with diagonal phases), so this representation is exact and its size
//! tracks the support rather than the register width.

use alloc::vec::Vec;
use core::fmt::Debug;

use num_complex::Complex;
use num_traits::{Float, FloatConst};
use serde::{Deserialize, Serialize};

use crate::error::EngineError;

pub type QubitId = u32;

/// Floating-point precision of a state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Precision {
    /// `Complex<f32>`.
    C64,
    /// `Complex<f64>`.
    C128,
}

/// Scalar type usable for amplitudes.
pub trait Real: Float + FloatConst + Debug + Default + Send + Sync + 'static {
    /// Allowed deviation of the squared norm from one.
    const NORM_TOL: f64;
    /// Amplitudes with squared modulus below this are dropped.
    const PRUNE: f64;
    const PRECISION: Precision;

    fn of(x: f64) -> Self;
    fn to64(self) -> f64;
}

impl Real for f32 {
    const NORM_TOL: f64 = 1e-6;
    const PRUNE: f64 = 1e-14;
    const PRECISION: Precision = Precision::C64;

    fn of(x: f64) -> Self {
        x as f32
    }

    fn to64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    const NORM_TOL: f64 = 1e-12;
    const PRUNE: f64 = 1e-28;
    const PRECISION: Precision = Precision::C128;

    fn of(x: f64) -> Self {
        x
    }

    fn to64(self) -> f64 {
        self
    }
}

/// Default cap on simultaneously live qubits.
pub const DEFAULT_CAP: usize = 30;
/// Default cap on stored amplitudes (about 400 MB at c128).
pub const DEFAULT_MAX_SUPPORT: usize = 1 << 24;

/// Pairwise (fixed-tree) summation for reproducible reductions.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    match xs.len() {
        0 => T::zero(),
        1 => xs[0],
        n if n <= 8 => xs.iter().fold(T::zero(), |a, &b| a + b),
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

fn pairwise_sum_c<T: Real>(xs: &[Complex<T>]) -> Complex<T> {
    match xs.len() {
        0 => Complex::new(T::zero(), T::zero()),
        1 => xs[0],
        n if n <= 8 => xs.iter().fold(Complex::new(T::zero(), T::zero()), |a, &b| a + b),
        n => pairwise_sum_c(&xs[..n / 2]) + pairwise_sum_c(&xs[n / 2..]),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T: Real> {
    qubits: Vec<QubitId>,
    entries: Vec<(u64, Complex<T>)>,
    phase: Complex<T>,
    cap: usize,
    max_support: usize,
}

impl<T: Real> Default for StateVector<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> StateVector<T> {
    /// The empty register (a single amplitude 1 on the empty basis state).
    pub fn new() -> Self {
        Self::with_limits(DEFAULT_CAP, DEFAULT_MAX_SUPPORT)
    }

    pub fn with_limits(cap: usize, max_support: usize) -> Self {
        StateVector {
            qubits: Vec::new(),
            entries: alloc::vec![(0, Complex::new(T::one(), T::zero()))],
            phase: Complex::new(T::one(), T::zero()),
            cap: cap.min(64),
            max_support,
        }
    }

    pub fn precision(&self) -> Precision {
        T::PRECISION
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn set_cap(&mut self, cap: usize) {
        self.cap = cap.min(64);
    }

    pub fn live_qubits(&self) -> &[QubitId] {
        &self.qubits
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn support(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(u64, Complex<T>)] {
        &self.entries
    }

    /// Explicit global phase factor (multiplies every amplitude).
    pub fn global_phase(&self) -> Complex<T> {
        self.phase
    }

    pub fn position(&self, q: QubitId) -> Result<usize, EngineError> {
        self.qubits.iter().position(|&x| x == q).ok_or(EngineError::UnknownQubit(q))
    }

    pub fn is_live(&self, q: QubitId) -> bool {
        self.qubits.contains(&q)
    }

    /// Amplitude of a basis state given as `(qubit, bit)` pairs covering
    /// every live qubit.
    pub fn amplitude(&self, assignment: &[(QubitId, u8)]) -> Result<Complex<T>, EngineError> {
        let mut key = 0u64;
        for &(q, b) in assignment {
            if b & 1 == 1 {
                key |= 1 << self.position(q)?;
            }
        }
        Ok(self.lookup(key) * self.phase)
    }

    fn lookup(&self, key: u64) -> Complex<T> {
        match self.entries.binary_search_by_key(&key, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => Complex::new(T::zero(), T::zero()),
        }
    }

    pub fn norm_sqr(&self) -> T {
        let v: Vec<T> = self.entries.iter().map(|e| e.1.norm_sqr()).collect();
        pairwise_sum(&v)
    }

    pub fn check_norm(&self) -> bool {
        (self.norm_sqr().to64() - 1.0).abs() <= T::NORM_TOL
    }

    /// Adds a qubit at the top of the register.
    pub fn alloc(&mut self, q: QubitId, plus: bool) -> Result<(), EngineError> {
        if self.is_live(q) {
            return Err(EngineError::DuplicateQubit(q));
        }
        if self.qubits.len() + 1 > self.cap {
            return Err(EngineError::RegisterOverflow { needed: self.qubits.len() + 1, cap: self.cap });
        }
        self.qubits.push(q);
        if plus {
            let p = self.qubits.len() - 1;
            self.hadamard(p)?;
        }
        Ok(())
    }

    fn mask(&self, p: usize) -> u64 {
        1u64 << p
    }

    fn resort(&mut self) {
        self.entries.sort_unstable_by_key(|e| e.0);
    }

    /// Multiplies every amplitude by `f(basis)`.
    pub fn apply_diagonal<F: Fn(u64) -> Complex<T>>(&mut self, f: F) {
        for e in self.entries.iter_mut() {
            e.1 = e.1 * f(e.0);
        }
    }

    /// Relabels basis states by a bijection `f`.
    pub fn apply_permutation<F: Fn(u64) -> u64>(&mut self, f: F) {
        for e in self.entries.iter_mut() {
            e.0 = f(e.0);
        }
        self.resort();
    }

    /// Applies a 2x2 unitary `m` (row-major) at register position `p`.
    pub fn apply_1q(&mut self, p: usize, m: [[Complex<T>; 2]; 2]) -> Result<(), EngineError> {
        let mask = self.mask(p);
        let zero = Complex::new(T::zero(), T::zero());
        let mut out: Vec<(u64, Complex<T>)> = Vec::with_capacity(2 * self.entries.len());
        for &(k, a) in &self.entries {
            let b = ((k >> p) & 1) as usize;
            let k0 = k & !mask;
            let c0 = m[0][b] * a;
            let c1 = m[1][b] * a;
            if c0 != zero {
                out.push((k0, c0));
            }
            if c1 != zero {
                out.push((k0 | mask, c1));
            }
        }
        out.sort_by_key(|e| e.0);
        let mut merged: Vec<(u64, Complex<T>)> = Vec::with_capacity(out.len());
        for (k, a) in out {
            match merged.last_mut() {
                Some(last) if last.0 == k => last.1 = last.1 + a,
                _ => merged.push((k, a)),
            }
        }
        let prune = T::of(T::PRUNE);
        merged.retain(|e| e.1.norm_sqr() > prune);
        if merged.len() > self.max_support {
            return Err(EngineError::SupportOverflow { needed: merged.len(), cap: self.max_support });
        }
        self.entries = merged;
        Ok(())
    }

    pub fn hadamard(&mut self, p: usize) -> Result<(), EngineError> {
        let s = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
        self.apply_1q(p, [[s, s], [s, -s]])
    }

    pub fn pauli_x(&mut self, p: usize) {
        let mask = self.mask(p);
        self.apply_permutation(|k| k ^ mask);
    }

    pub fn pauli_z(&mut self, p: usize) {
        let mask = self.mask(p);
        self.apply_diagonal(|k| if k & mask != 0 { Complex::new(-T::one(), T::zero()) } else { Complex::new(T::one(), T::zero()) });
    }

    pub fn pauli_y(&mut self, p: usize) {
        // Y = i X Z
        self.pauli_z(p);
        self.pauli_x(p);
        self.phase = self.phase * Complex::new(T::zero(), T::one());
    }

    /// `diag(1, e^{i theta})` at position `p`.
    pub fn phase_gate(&mut self, p: usize, theta: f64) {
        let mask = self.mask(p);
        let w = Complex::new(T::of(libm::cos(theta)), T::of(libm::sin(theta)));
        let one = Complex::new(T::one(), T::zero());
        self.apply_diagonal(|k| if k & mask != 0 { w } else { one });
    }

    /// Sign flip when all listed positions are 1 (CZ, CCZ, ...).
    pub fn controlled_z(&mut self, ps: &[usize]) {
        let mask = ps.iter().fold(0u64, |m, &p| m | (1 << p));
        self.apply_diagonal(|k| if k & mask == mask { Complex::new(-T::one(), T::zero()) } else { Complex::new(T::one(), T::zero()) });
    }

    /// Flips `target` when all `controls` are 1.
    pub fn controlled_x(&mut self, controls: &[usize], target: usize) {
        let cm = controls.iter().fold(0u64, |m, &p| m | (1 << p));
        let tm = 1u64 << target;
        self.apply_permutation(|k| if k & cm == cm { k ^ tm } else { k });
    }

    /// `exp(i theta Z...Z)` on the listed positions.
    pub fn z_string_phase(&mut self, ps: &[usize], theta: f64) {
        let mask = ps.iter().fold(0u64, |m, &p| m | (1 << p));
        let plus = Complex::new(T::of(libm::cos(theta)), T::of(libm::sin(theta)));
        let minus = plus.conj();
        self.apply_diagonal(|k| if (k & mask).count_ones() % 2 == 0 { plus } else { minus });
    }

    pub fn multiply_global_phase(&mut self, theta: f64) {
        let w = Complex::new(T::of(libm::cos(theta)), T::of(libm::sin(theta)));
        self.phase = self.phase * w;
    }

    /// Probability that the qubit at position `p` reads 1 in the Z basis.
    pub fn prob_one(&self, p: usize) -> T {
        let mask = self.mask(p);
        let v: Vec<T> = self.entries.iter().filter(|e| e.0 & mask != 0).map(|e| e.1.norm_sqr()).collect();
        pairwise_sum(&v) / self.norm_sqr()
    }

    /// Projects position `p` onto `bit` and renormalises.
    pub fn project(&mut self, p: usize, bit: u8) -> Result<(), EngineError> {
        let mask = self.mask(p);
        let want = if bit & 1 == 1 { mask } else { 0 };
        self.entries.retain(|e| e.0 & mask == want);
        self.renormalize()
    }

    pub fn renormalize(&mut self) -> Result<(), EngineError> {
        let n = self.norm_sqr();
        if n.to64() <= T::PRUNE {
            return Err(EngineError::ZeroNorm);
        }
        let s = T::one() / n.sqrt();
        for e in self.entries.iter_mut() {
            e.1 = e.1 * s;
        }
        Ok(())
    }

    /// Removes a qubit that is in a computational basis state.
    pub fn remove_qubit(&mut self, q: QubitId) -> Result<(), EngineError> {
        let p = self.position(q)?;
        let mask = self.mask(p);
        let low = mask - 1;
        if let Some(first) = self.entries.first() {
            let v = first.0 & mask;
            debug_assert!(self.entries.iter().all(|e| e.0 & mask == v));
        }
        for e in self.entries.iter_mut() {
            e.0 = (e.0 & low) | ((e.0 >> (p + 1)) << p);
        }
        self.qubits.remove(p);
        Ok(())
    }

    /// `<self|other>` including global phases. Both registers must list the
    /// same qubits (in any order).
    pub fn inner(&self, other: &Self) -> Result<Complex<T>, EngineError> {
        let other = other.reordered_like(self)?;
        let mut terms = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() && j < other.entries.len() {
            let (ka, a) = self.entries[i];
            let (kb, b) = other.entries[j];
            if ka == kb {
                terms.push(a.conj() * b);
                i += 1;
                j += 1;
            } else if ka < kb {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok(pairwise_sum_c(&terms) * self.phase.conj() * other.phase)
    }

    /// Fidelity `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> Result<T, EngineError> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// A copy whose register order matches `like`.
    pub fn reordered_like(&self, like: &Self) -> Result<Self, EngineError> {
        if self.qubits == like.qubits {
            return Ok(self.clone());
        }
        if self.qubits.len() != like.qubits.len() {
            return Err(EngineError::UnknownQubit(
                self.qubits.iter().chain(like.qubits.iter()).copied().find(|q| !self.is_live(*q) || !like.is_live(*q)).unwrap_or(0),
            ));
        }
        let mut map = Vec::with_capacity(self.qubits.len());
        for &q in &self.qubits {
            map.push(like.position(q)?);
        }
        let mut out = self.clone();
        out.qubits = like.qubits.clone();
        out.apply_permutation(|k| {
            let mut n = 0u64;
            for (p, &to) in map.iter().enumerate() {
                if k >> p & 1 == 1 {
                    n |= 1 << to;
                }
            }
            n
        });
        Ok(out)
    }

    /// Probability distribution over basis keys, in key order.
    pub fn probabilities(&self) -> Vec<(u64, T)> {
        self.entries.iter().map(|e| (e.0, e.1.norm_sqr())).collect()
    }

    /// Basis keys restricted to listed qubits (bit `i` = qubit `qs[i]`).
    pub fn key_to_bits(&self, key: u64, qs: &[QubitId]) -> Result<u64, EngineError> {
        let mut out = 0u64;
        for (i, &q) in qs.iter().enumerate() {
            let p = self.position(q)?;
            if key >> p & 1 == 1 {
                out |= 1 << i;
            }
        }
        Ok(out)
    }

    /// Builds a state from explicit entries (keys relative to `qubits`).
    pub fn from_entries(qubits: Vec<QubitId>, mut entries: Vec<(u64, Complex<T>)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(u64, Complex<T>)> = Vec::with_capacity(entries.len());
        for (k, a) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == k => last.1 = last.1 + a,
                _ => merged.push((k, a)),
            }
        }
        StateVector {
            qubits,
            entries: merged,
            phase: Complex::new(T::one(), T::zero()),
            cap: DEFAULT_CAP.max(64),
            max_support: DEFAULT_MAX_SUPPORT,
        }
    }

    /// Folds the global phase into the amplitudes.
    pub fn absorb_phase(&mut self) {
        let ph = self.phase;
        for e in self.entries.iter_mut() {
            e.1 = e.1 * ph;
        }
        self.phase = Complex::new(T::one(), T::zero());
    }

    /// Converts to another precision.
    pub fn convert<U: Real>(&self) -> StateVector<U> {
        StateVector {
            qubits: self.qubits.clone(),
            entries: self.entries.iter().map(|&(k, a)| (k, Complex::new(U::of(a.re.to64()), U::of(a.im.to64())))).collect(),
            phase: Complex::new(U::of(self.phase.re.to64()), U::of(self.phase.im.to64())),
            cap: self.cap,
            max_support: self.max_support,
        }
    }
}
