use super::*;
use alloc::vec;
use proptest::prelude::*;
use rand::Rng;

fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

fn amp(s: &StateVector<f64>, bits: &[(QubitId, u8)]) -> Complex<f64> {
    s.amplitude(bits).unwrap()
}

#[test]
fn cz_on_plus_plus() {
    use Instruction::*;
    let p = GateProgram {
        instructions: vec![Alloc { q: 0, basis: InitBasis::Plus }, Alloc { q: 1, basis: InitBasis::Plus }, CZ { a: 0, b: 1 }],
    };
    let (s, _) = run::<f64>(&p, 1).unwrap();
    for (a, b, sign) in [(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, -1.0)] {
        let z = amp(&s, &[(0, a), (1, b)]);
        assert!((z - c(0.5 * sign, 0.0)).norm() < 1e-15);
    }
}

#[test]
fn zzz_phase_on_zero() {
    use Instruction::*;
    let p = GateProgram {
        instructions: vec![
            Alloc { q: 0, basis: InitBasis::Zero },
            Alloc { q: 1, basis: InitBasis::Zero },
            Alloc { q: 2, basis: InitBasis::Zero },
            ZZZPhase { a: 0, b: 1, c: 2, theta: core::f64::consts::FRAC_PI_8 },
        ],
    };
    let (s, _) = run::<f64>(&p, 1).unwrap();
    let z = amp(&s, &[(0, 0), (1, 0), (2, 0)]);
    let w = c(libm::cos(core::f64::consts::FRAC_PI_8), libm::sin(core::f64::consts::FRAC_PI_8));
    assert!((z - w).norm() < 1e-15);
}

#[test]
fn measure_x_on_plus_is_deterministic() {
    use Instruction::*;
    let p = GateProgram { instructions: vec![Alloc { q: 4, basis: InitBasis::Plus }, MeasureX { q: 4, bit: 0 }, Drop { q: 4 }] };
    for seed in 0..20 {
        let (s, r) = run::<f64>(&p, seed).unwrap();
        assert_eq!(r.bits[&0], 0);
        assert_eq!(s.num_qubits(), 0);
    }
}

#[test]
fn drop_requires_measure() {
    use Instruction::*;
    let p = GateProgram { instructions: vec![Alloc { q: 0, basis: InitBasis::Plus }, Drop { q: 0 }] };
    assert_eq!(run::<f64>(&p, 0).unwrap_err(), EngineError::DropUnmeasured(0));
}

#[test]
fn condition_on_unmeasured_bit() {
    use Instruction::*;
    let p = GateProgram { instructions: vec![Alloc { q: 0, basis: InitBasis::Zero }, CondZ { q: 0, cond: Cond::bit(9) }] };
    assert_eq!(run::<f64>(&p, 0).unwrap_err(), EngineError::InvalidCondition(9));
}

#[test]
fn forced_outcome_and_impossible() {
    use Instruction::*;
    let p = GateProgram { instructions: vec![Alloc { q: 0, basis: InitBasis::Plus }, MeasureZ { q: 0, bit: 3 }] };
    let mut o = RunOptions::default();
    o.forced.insert(3, 1);
    let (s, r) = run_with::<f64>(&p, 0, 0, &o).unwrap();
    assert_eq!(r.bits[&3], 1);
    assert!((amp(&s, &[(0, 1)]).norm() - 1.0).abs() < 1e-15);
    let p = GateProgram { instructions: vec![Alloc { q: 0, basis: InitBasis::Zero }, MeasureZ { q: 0, bit: 3 }] };
    assert_eq!(run_with::<f64>(&p, 0, 0, &o).unwrap_err(), EngineError::ImpossibleOutcome(3));
}

#[test]
fn register_overflow() {
    use Instruction::*;
    let p = GateProgram { instructions: (0..3).map(|q| Alloc { q, basis: InitBasis::Zero }).collect() };
    let o = RunOptions { cap: 2, ..Default::default() };
    assert!(matches!(run_with::<f64>(&p, 0, 0, &o), Err(EngineError::RegisterOverflow { needed: 3, cap: 2 })));
}

#[test]
fn expval_basics() {
    use Instruction::*;
    let p = GateProgram { instructions: vec![Alloc { q: 0, basis: InitBasis::Plus }] };
    let (s, _) = run::<f64>(&p, 0).unwrap();
    assert!((OperatorExpr::new(vec![Factor::X(0)]).expval_real(&s).unwrap() - 1.0).abs() < 1e-15);
    let p = GateProgram { instructions: (0..3).map(|q| Alloc { q, basis: InitBasis::Zero }).collect() };
    let (s, _) = run::<f64>(&p, 0).unwrap();
    let zzz = OperatorExpr::new(vec![Factor::Z(0), Factor::Z(1), Factor::Z(2)]);
    assert!((zzz.expval_real(&s).unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(OperatorExpr::new(vec![Factor::Z(7)]).expval(&s), Err(EngineError::UnknownQubit(7)));
}

#[test]
fn y_expectation_on_y_eigenstate() {
    use Instruction::*;
    let p = GateProgram { instructions: vec![Alloc { q: 0, basis: InitBasis::Plus }, S { q: 0 }] };
    let (s, _) = run::<f64>(&p, 0).unwrap();
    let y = OperatorExpr::new(vec![Factor::Y(0)]);
    assert!((y.expval(&s).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
    let mut t = s.clone();
    t.pauli_y(0);
    assert!((s.inner(&t).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
}

#[test]
fn controlled_rewrites() {
    use Instruction::*;
    let p = GateProgram { instructions: vec![X { q: 1 }, CZ { a: 2, b: 3 }] };
    let cp = controlled(&p, 0).unwrap();
    assert_eq!(cp.instructions, vec![CNOT { c: 0, t: 1 }, CCZ { a: 0, b: 2, c: 3 }]);
    let bad = GateProgram { instructions: vec![MeasureZ { q: 1, bit: 0 }] };
    assert!(matches!(controlled(&bad, 0), Err(EngineError::NonUnitaryInstruction(_))));
}

#[test]
fn sampling_born_rule() {
    use Instruction::*;
    let (s0, _) = run::<f64>(&GateProgram { instructions: vec![Alloc { q: 0, basis: InitBasis::Zero }] }, 0).unwrap();
    let smp = sample(&s0, &MeasurementSetting::default(), 100, 5, None).unwrap();
    assert!(smp.shots.iter().all(|&k| k == 0));
    let (sp, _) = run::<f64>(&GateProgram { instructions: vec![Alloc { q: 0, basis: InitBasis::Plus }] }, 0).unwrap();
    let n = 20000;
    let smp = sample(&sp, &MeasurementSetting::default(), n, 5, None).unwrap();
    let ones = smp.shots.iter().filter(|&&k| k == 1).count() as f64 / n as f64;
    assert!((ones - 0.5).abs() < 3.0 * 0.5 / (n as f64).sqrt());
}

#[test]
fn measure_then_drop_matches_projection() {
    // 3-qubit GHZ-like state with a phase; measuring qubit 1 in X and dropping
    // it must equal <+|_1 or <-|_1 applied by hand.
    use Instruction::*;
    let prep = vec![
        Alloc { q: 0, basis: InitBasis::Plus },
        Alloc { q: 1, basis: InitBasis::Zero },
        Alloc { q: 2, basis: InitBasis::Plus },
        CNOT { c: 0, t: 1 },
        CZ { a: 1, b: 2 },
        Phase { q: 2, theta: 0.3 },
    ];
    let (full, _) = run::<f64>(&GateProgram { instructions: prep.clone() }, 0).unwrap();
    for forced in [0u8, 1] {
        let mut ins = prep.clone();
        ins.push(MeasureX { q: 1, bit: 0 });
        ins.push(Drop { q: 1 });
        let mut o = RunOptions::default();
        o.forced.insert(0, forced);
        let (s, _) = run_with::<f64>(&GateProgram { instructions: ins }, 0, 0, &o).unwrap();
        let sign = if forced == 0 { 1.0 } else { -1.0 };
        let mut v = [c(0.0, 0.0); 4];
        for a in 0..2u8 {
            for b in 0..2u8 {
                let x0 = amp(&full, &[(0, a), (1, 0), (2, b)]);
                let x1 = amp(&full, &[(0, a), (1, 1), (2, b)]);
                v[(a + 2 * b) as usize] = (x0 + x1 * sign) / 2f64.sqrt();
            }
        }
        let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for a in 0..2u8 {
            for b in 0..2u8 {
                let got = amp(&s, &[(0, a), (2, b)]);
                assert!((got - v[(a + 2 * b) as usize] / n).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn squared_zzz_pair_decomposition() {
    // exp(i t Z0Z1Z2) exp(-i t Z1Z2Z3) equals CNOT(1->2) e^{i t Z0Z2} e^{-i t Z3Z2} CNOT(1->2).
    use Instruction::*;
    let t = core::f64::consts::FRAC_PI_8;
    let init: Vec<Instruction> = (0..4).map(|q| Alloc { q, basis: InitBasis::Plus }).chain([Phase { q: 1, theta: 0.7 }, Phase { q: 3, theta: -0.2 }]).collect();
    let mut a = init.clone();
    a.push(ZZZPhase { a: 0, b: 1, c: 2, theta: t });
    a.push(ZZZPhase { a: 1, b: 2, c: 3, theta: -t });
    let mut b = init;
    b.push(CNOT { c: 1, t: 2 });
    b.push(ZZPhase { a: 0, b: 2, theta: -2.0 * t });
    b.push(ZZPhase { a: 3, b: 2, theta: 2.0 * t });
    b.push(CNOT { c: 1, t: 2 });
    let (sa, _) = run::<f64>(&GateProgram { instructions: a }, 0).unwrap();
    let (sb, _) = run::<f64>(&GateProgram { instructions: b }, 0).unwrap();
    assert!((sa.fidelity(&sb).unwrap() - 1.0).abs() < 1e-12);
    assert!((sa.inner(&sb).unwrap() - c(1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn program_json_roundtrip() {
    use Instruction::*;
    let p = GateProgram {
        instructions: vec![
            Alloc { q: 0, basis: InitBasis::Plus },
            MeasureX { q: 0, bit: 2 },
            CondProgram { program: GateProgram { instructions: vec![Z { q: 0 }] }, cond: Cond::parity(vec![2]) },
            Barrier { label: Some("x".into()) },
        ],
    };
    let s = serde_json::to_string(&p).unwrap();
    let back: GateProgram = serde_json::from_str(&s).unwrap();
    assert_eq!(p, back);
}

#[test]
fn inverse_program_undoes() {
    use Instruction::*;
    let init: Vec<Instruction> = (0..3).map(|q| Alloc { q, basis: InitBasis::Plus }).collect();
    let body = GateProgram {
        instructions: vec![
            H { q: 0 },
            S { q: 1 },
            CNOT { c: 0, t: 2 },
            ZZPhase { a: 1, b: 2, theta: 0.4 },
            CCZ { a: 0, b: 1, c: 2 },
            Y { q: 2 },
            GlobalPhase { theta: 1.1 },
        ],
    };
    let (s0, _) = run::<f64>(&GateProgram { instructions: init.clone() }, 0).unwrap();
    let mut all = GateProgram { instructions: init };
    all.extend(&body).extend(&body.inverse().unwrap());
    let (s1, _) = run::<f64>(&all, 0).unwrap();
    assert!((s0.inner(&s1).unwrap() - c(1.0, 0.0)).norm() < 1e-12);
}

fn random_state(seed: u64, n: u32) -> StateVector<f64> {
    use Instruction::*;
    let mut rng = shot_rng(seed, 0);
    let mut p = GateProgram::new();
    for q in 0..n {
        p.push(Alloc { q, basis: InitBasis::Plus });
        p.push(Phase { q, theta: rng.random::<f64>() * 6.0 });
    }
    for _ in 0..3 * n {
        let a = rng.random_range(0..n);
        let b = (a + 1 + rng.random_range(0..n - 1)) % n;
        match rng.random_range(0..3) {
            0 => p.push(CNOT { c: a, t: b }),
            1 => p.push(H { q: a }),
            _ => p.push(ZZPhase { a, b, theta: rng.random::<f64>() }),
        };
    }
    run::<f64>(&p, 0).unwrap().0
}

/// Reduced density matrix on qubit subset `keep`, as a dense map.
fn reduced(s: &StateVector<f64>, keep: &[QubitId]) -> BTreeMap<(u64, u64), Complex<f64>> {
    let rest: Vec<QubitId> = s.live_qubits().iter().copied().filter(|q| !keep.contains(q)).collect();
    let mut by_rest: BTreeMap<u64, Vec<(u64, Complex<f64>)>> = BTreeMap::new();
    for &(k, a) in s.entries() {
        let kk = s.key_to_bits(k, keep).unwrap();
        let kr = s.key_to_bits(k, &rest).unwrap();
        by_rest.entry(kr).or_default().push((kk, a));
    }
    let mut rho = BTreeMap::new();
    for v in by_rest.values() {
        for &(i, a) in v {
            for &(j, b) in v {
                *rho.entry((i, j)).or_insert(c(0.0, 0.0)) += a * b.conj();
            }
        }
    }
    rho
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn unitary_steps_preserve_norm(seed in 0u64..10_000) {
        let s = random_state(seed, 6);
        prop_assert!(s.check_norm());
        let s32: StateVector<f32> = s.convert();
        prop_assert!(s32.check_norm());
    }

    #[test]
    fn diagonal_gates_leave_complement_unchanged(seed in 0u64..10_000, a in 0u32..8, b in 0u32..8, theta in -3.0f64..3.0) {
        prop_assume!(a != b);
        let s = random_state(seed, 8);
        let keep: Vec<QubitId> = (0..8).filter(|&q| q != a && q != b).collect();
        let before = reduced(&s, &keep);
        let mut m = Machine::<f64>::new(0, 0, RunOptions::default());
        m.state = s;
        m.step(&Instruction::CZ { a, b }).unwrap();
        m.step(&Instruction::ZZPhase { a, b, theta }).unwrap();
        let after = reduced(&m.state, &keep);
        for (k, v) in &before {
            let w = after.get(k).copied().unwrap_or(c(0.0, 0.0));
            prop_assert!((v - w).norm() < 1e-12);
        }
    }

    #[test]
    fn operator_apply_matches_expval(seed in 0u64..10_000, qs in proptest::collection::vec((0u32..5, 0u8..4), 1..6)) {
        let s = random_state(seed, 5);
        let factors: Vec<Factor> = qs.iter().map(|&(q, k)| match k {
            0 => Factor::X(q),
            1 => Factor::Y(q),
            2 => Factor::Z(q),
            _ => Factor::CZ(q, (q + 1) % 5),
        }).collect();
        let op = OperatorExpr::new(factors);
        let e = op.expval(&s).unwrap();
        let mut t = s.clone();
        op.apply(&mut t).unwrap();
        let e2 = s.inner(&t).unwrap();
        prop_assert!((e - e2).norm() < 1e-12);
        let mut t2 = s.clone();
        let mut m = Machine::<f64>::new(0, 0, RunOptions::default());
        m.state = t2.clone();
        m.execute(&op.to_program()).unwrap();
        t2 = m.state;
        prop_assert!((t2.inner(&t).unwrap() - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn seeded_runs_are_reproducible(seed in 0u64..1000) {
        use Instruction::*;
        let p = GateProgram { instructions: vec![
            Alloc { q: 0, basis: InitBasis::Plus }, Alloc { q: 1, basis: InitBasis::Plus },
            CZ { a: 0, b: 1 }, MeasureX { q: 0, bit: 0 }, MeasureY { q: 1, bit: 1 },
        ]};
        let a = run::<f64>(&p, seed).unwrap();
        let b = run::<f64>(&p, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
