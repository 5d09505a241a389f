//! Error types shared across modules.

use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("torus {lx}x{ly} is too small: both periods must be at least 2")]
    SizeTooSmall { lx: usize, ly: usize },
    #[error("torus {lx}x{ly} admits no three-colouring: both periods must be multiples of 3")]
    NotColorable { lx: usize, ly: usize },
    #[error("no string path connects the requested endpoints")]
    NoPath,
    #[error("string path overlaps itself on this torus")]
    SelfOverlap,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("register overflow: {needed} live qubits exceed the cap of {cap}")]
    RegisterOverflow { needed: usize, cap: usize },
    #[error("qubit {0} is not live")]
    UnknownQubit(u32),
    #[error("qubit {0} is already live")]
    DuplicateQubit(u32),
    #[error("condition references unmeasured bit {0}")]
    InvalidCondition(u32),
    #[error("qubit {0} dropped before being measured")]
    DropUnmeasured(u32),
    #[error("instruction {0} has no controlled form")]
    NonUnitaryInstruction(String),
    #[error("forced outcome for bit {0} has zero probability")]
    ImpossibleOutcome(u32),
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("state support of {needed} amplitudes exceeds the limit of {cap}")]
    SupportOverflow { needed: usize, cap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("string endpoints must be triangles of the string colour with opposite orientations")]
    BadEndpoints,
    #[error("braid leaves dangling anyons at triangles {0:?}")]
    DanglingAnyon(alloc::vec::Vec<usize>),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrepError {
    #[error("heralded discard: odd number of ancilla excitations in colours {0:?}")]
    HeraldedDiscard(alloc::vec::Vec<crate::lattice::Color>),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnyonError {
    #[error("non-integer fusion multiplicity for ({0}, {1}, {2})")]
    NonIntegerMultiplicity(usize, usize, usize),
    #[error("internal state has dimension {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExperimentError {
    #[error("constraint violated for basis state {0:#x}")]
    ConstraintViolation(u64),
    #[error("projection annihilated the trial state")]
    ZeroNormState,
    #[error("expectation {0} outside [0, 1]")]
    OutOfRange(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Prep(#[from] PrepError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NoiseError {
    #[error("estimator support of {0} qubits exceeds the limit of 16")]
    SupportTooLarge(usize),
    #[error("probability {0} outside [0, 1]")]
    BadProbability(String),
}
