use super::*;
use crate::prep::{prepare_on, PrepConfig};
use proptest::prelude::*;

fn torus() -> KagomeTorus {
    KagomeTorus::new(3, 3).unwrap()
}

fn psi0(t: &KagomeTorus) -> StateVector<f64> {
    prepare_on::<f64>(t, &PrepConfig::default()).unwrap().state
}

/// Simple star routes avoiding colour `c`, `2..=max_len` stars, ending on
/// opposite-orientation triangles.
fn open_routes(t: &KagomeTorus, c: Color, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack: Vec<Vec<usize>> = t.stars.iter().filter(|s| s.color != c).map(|s| vec![s.index]).collect();
    while let Some(p) = stack.pop() {
        if p.len() >= 2 && p.len() % 2 == 0 {
            out.push(p.clone());
        }
        if p.len() < max_len {
            for &nb in &t.stars[*p.last().unwrap()].neighbors {
                if t.stars[nb].color != c && !p.contains(&nb) {
                    let mut q = p.clone();
                    q.push(nb);
                    stack.push(q);
                }
            }
        }
    }
    out
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-10
}

#[test]
fn star_and_triangle_supports() {
    let t = torus();
    let a = star_op(&t, 0).unwrap();
    assert_eq!(a.support.len(), 12);
    assert_eq!(a.op.factors.len(), 12);
    let b = triangle_op(&t, 0).unwrap();
    assert_eq!(b.support.len(), 3);
    assert!(b.support.iter().all(|&v| t.vertices[v].color == b.color));
    assert_eq!(star_op(&t, 99), Err(ModelError::IndexOutOfRange(99)));
}

#[test]
fn stars_commute_only_in_flux_free_subspace() {
    let t = torus();
    let r = commutator_check(&t, 7).unwrap();
    assert!(r.full_space_max > 0.1, "{r:?}");
    assert!(r.subspace_max < 1e-12, "{r:?}");
    assert!(r.disjoint_max < 1e-12, "{r:?}");
}

#[test]
fn b_plus_subspace_dimension() {
    // Per colour: 9 vertices, 6 triangles with 5 independent constraints.
    assert_eq!(b_plus_basis(&torus()).len(), 1 << 12);
}

#[test]
fn z_string_joins_stars() {
    let t = torus();
    for c in Color::ALL {
        let stars: Vec<usize> = t.stars_of_color(c).collect();
        let vs = z_string(&t, c, stars[0], stars[1]).unwrap();
        assert_eq!(vs.len(), 1);
        assert!(t.vertices[vs[0]].tip_of.contains(&stars[0]) && t.vertices[vs[0]].tip_of.contains(&stars[1]));
        assert!(z_string(&t, c, stars[0], stars[0]).unwrap().is_empty());
    }
    assert_eq!(z_string(&t, Color::R, 0, 1), Err(ModelError::BadEndpoints));
}

#[test]
fn z_logical_translates_agree_on_ground_state() {
    let t = torus();
    let s = snapshot(&t, &psi0(&t), "gs").unwrap();
    for l in &s.logicals {
        assert_eq!(l.translates.len(), 3);
        assert!(l.translates.iter().all(|&z| close(z, 1.0)));
    }
    assert!(close(s.energy_density(), -1.0));
    assert!(close(s.pinning(&[1; 6]), 1.0));
}

#[test]
fn x_logical_flips_only_its_partner() {
    let t = torus();
    let g = psi0(&t);
    for (c, d) in LOGICAL_ORDER {
        let l = logical(&t, c, d, LogicalKind::X).unwrap();
        let mut st = g.clone();
        apply_program(&mut st, &l.program()).unwrap();
        let s = snapshot(&t, &st, "x").unwrap();
        assert!(close(s.energy_density(), -1.0), "{c:?}{d:?}");
        for lv in &s.logicals {
            let want = if lv.color == c && lv.dir == d.other() { -1.0 } else { 1.0 };
            assert!(lv.translates.iter().all(|&z| close(z, want)), "{c:?}{d:?} -> {lv:?}");
        }
    }
}

#[test]
fn x_logical_is_self_inverse() {
    let t = torus();
    let g = psi0(&t);
    let l = logical(&t, Color::B, Dir::V, LogicalKind::X).unwrap();
    let mut st = g.clone();
    apply_program(&mut st, &l.program()).unwrap();
    apply_program(&mut st, &l.program()).unwrap();
    assert!(close(st.fidelity(&g).unwrap(), 1.0));
}

#[test]
fn same_orientation_string_is_rejected() {
    let t = torus();
    // Blue triangles of stars 0 and 4 both point right.
    assert_eq!(anyon_string(&t, Color::B, 1, 9, ColorOrder::default_for(Color::B), None).unwrap_err(), ModelError::BadEndpoints);
    assert_eq!(anyon_string(&t, Color::B, 0, 2, ColorOrder::default_for(Color::B), None).unwrap_err(), ModelError::BadEndpoints);
}

#[test]
fn every_open_string_excites_only_its_ends() {
    let t = torus();
    let g = psi0(&t);
    for c in Color::ALL {
        for route in open_routes(&t, c, 4) {
            let path = explicit_path(&t, c, route.clone()).unwrap();
            let s = decorate(&t, path, ColorOrder::default_for(c)).unwrap();
            let ends = s.endpoints();
            assert_eq!(ends.len(), 2);
            let end_stars = [t.triangles[ends[0]].star, t.triangles[ends[1]].star];
            let mut st = g.clone();
            apply_program(&mut st, &s.program()).unwrap();
            let snap = snapshot(&t, &st, "s").unwrap();
            let mut neg = snap.negative_triangles(1e-10);
            neg.sort_unstable();
            let mut want = ends.clone();
            want.sort_unstable();
            assert_eq!(neg, want, "{c:?} {route:?}");
            for (k, &a) in snap.stars.iter().enumerate() {
                let expect = if end_stars.contains(&k) { 0.0 } else { 1.0 };
                assert!(close(a, expect), "{c:?} {route:?} star {k}: {a}");
            }
        }
    }
}

fn create_move_fuse_spec() -> BraidSpec {
    BraidSpec {
        name: Some("create-move-fuse".into()),
        steps: vec![
            BraidStep::Create { color: Color::B, from: 1, to: 2, via: Some(vec![0, 1]), order: None },
            BraidStep::Move { color: Color::B, from: 2, to: 10, via: Some(vec![1, 4, 5]) },
            BraidStep::Annihilate { color: Color::B, from: 1, to: 10, via: None },
        ],
    }
}

#[test]
fn create_move_fuse_returns_ground_state() {
    let t = torus();
    let g = psi0(&t);
    let b = closed_braid(&t, &create_move_fuse_spec()).unwrap();
    let mut st = g.clone();
    let snaps = run_braid(&t, &mut st, &b).unwrap();
    assert_eq!(b.segments[0].excited, vec![1, 2]);
    assert_eq!(b.segments[1].excited, vec![1, 10]);
    assert!(b.segments[2].excited.is_empty());
    for (snap, ends) in snaps.iter().zip([[0usize, 1], [0, 5]]) {
        for e in ends {
            assert!(snap.stars[e].abs() < 1e-10);
        }
    }
    assert!((st.fidelity(&g).unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn green_around_blue_leaves_two_red_charges() {
    let t = torus();
    let spec = BraidSpec {
        name: None,
        steps: vec![
            BraidStep::Create { color: Color::B, from: 1, to: 2, via: Some(vec![0, 1]), order: None },
            BraidStep::Ring { center: 1, k0: 0, order: None },
            BraidStep::Annihilate { color: Color::B, from: 1, to: 2, via: None },
        ],
    };
    let b = closed_braid(&t, &spec).unwrap();
    let mut st = psi0(&t);
    let snaps = run_braid(&t, &mut st, &b).unwrap();
    let last = snaps.last().unwrap();
    let neg = last.negative_stars(1e-10);
    assert_eq!(neg.len(), 2);
    assert!(neg.iter().all(|&s| t.stars[s].color == Color::R));
    assert!(last.triangles.iter().all(|&b| close(b, 1.0)));
    assert!(last.stars.iter().all(|&a| close(a.abs(), 1.0)));
}

#[test]
fn ring_without_flux_is_trivial() {
    let t = torus();
    let g = psi0(&t);
    for center in 0..t.num_stars() {
        let p = ring_path(&t, center, 0).unwrap();
        let s = decorate(&t, p, ColorOrder::default_for(t.stars[center].color)).unwrap();
        let mut st = g.clone();
        apply_program(&mut st, &s.program()).unwrap();
        assert!(close(st.fidelity(&g).unwrap(), 1.0), "ring around {center}");
    }
}

#[test]
fn annihilating_along_another_route_closes_a_loop() {
    let t = torus();
    let g = psi0(&t);
    // Blue pair 0-1, fused along 0-5-4-1 instead of retracting: the closed
    // loop 0-5-4-1 encloses no flux, so the ground state is restored.
    let spec = BraidSpec {
        name: None,
        steps: vec![
            BraidStep::Create { color: Color::B, from: 1, to: 2, via: Some(vec![0, 1]), order: None },
            BraidStep::Annihilate { color: Color::B, from: 2, to: 1, via: Some(vec![1, 4, 5, 0]) },
        ],
    };
    let b = closed_braid(&t, &spec).unwrap();
    let mut st = g.clone();
    run_braid(&t, &mut st, &b).unwrap();
    let s = snapshot(&t, &st, "end").unwrap();
    assert!(close(s.energy_density(), -1.0));
}

#[test]
fn braid_bookkeeping_errors() {
    let t = torus();
    let dangling = BraidSpec {
        name: None,
        steps: vec![BraidStep::Create { color: Color::B, from: 1, to: 2, via: None, order: None }],
    };
    assert!(braid_sequence(&t, &dangling).is_ok());
    assert_eq!(closed_braid(&t, &dangling).unwrap_err(), ModelError::DanglingAnyon(vec![1, 2]));
    let unpaired = BraidSpec {
        name: None,
        steps: vec![BraidStep::Annihilate { color: Color::B, from: 1, to: 2, via: None }],
    };
    assert!(matches!(braid_sequence(&t, &unpaired), Err(ModelError::DanglingAnyon(_))));
    let double = BraidSpec {
        name: None,
        steps: vec![
            BraidStep::Create { color: Color::B, from: 1, to: 2, via: None, order: None },
            BraidStep::Create { color: Color::B, from: 1, to: 2, via: None, order: None },
        ],
    };
    assert!(matches!(braid_sequence(&t, &double), Err(ModelError::DanglingAnyon(_))));
}

#[test]
fn braid_spec_json_roundtrip() {
    let spec = create_move_fuse_spec();
    let j = serde_json::to_string(&spec).unwrap();
    assert!(j.contains("\"step\":\"create\""));
    let back: BraidSpec = serde_json::from_str(&j).unwrap();
    assert_eq!(back, spec);
}

#[test]
fn borromean_exact_phases() {
    let t = torus();
    let g = psi0(&t);
    let geom = borromean_geometry(&t).unwrap();
    let rgb = borromean_overlap(&geom, &g, BorromeanVariant::Rgb).unwrap();
    let rb = borromean_overlap(&geom, &g, BorromeanVariant::RbOnly).unwrap();
    let gb = borromean_overlap(&geom, &g, BorromeanVariant::GbOnly).unwrap();
    assert!((rgb - Complex::new(-1.0, 0.0)).norm() < 1e-9, "{rgb}");
    assert!((rb - Complex::new(1.0, 0.0)).norm() < 1e-9, "{rb}");
    assert!((gb - Complex::new(1.0, 0.0)).norm() < 1e-9, "{gb}");
    assert!((PhaseEstimate::from_value(rgb).phase_over_pi.abs() - 1.0).abs() < 1e-9);
}

#[test]
fn hadamard_test_reproduces_pi() {
    let t = torus();
    let g = psi0(&t);
    let geom = borromean_geometry(&t).unwrap();
    for schedule in [Schedule::Interleaved, Schedule::Block] {
        let est = borromean_phase_interferometric(&t, &geom, &g, BorromeanVariant::Rgb, 10_000, 11, schedule).unwrap();
        assert_eq!(est.shots_x + est.shots_y, 10_000);
        // Phase is pi; measured modulo 2pi, so compare the distance to +-1.
        let dist = (est.phase_over_pi.abs() - 1.0).abs();
        assert!(dist <= 3.0 * est.phase_err_over_pi, "{schedule:?}: {est:?}");
        assert!(est.re < -0.95);
    }
    let est = borromean_phase_interferometric(&t, &geom, &g, BorromeanVariant::GbOnly, 2_000, 3, Schedule::Interleaved).unwrap();
    assert!(est.phase_over_pi.abs() <= 3.0 * est.phase_err_over_pi + 1e-12, "{est:?}");
}

#[test]
fn controlled_blue_is_identity_when_blue_removed() {
    // With the ancilla in |0> the controlled braid reduces to K K = 1.
    let t = torus();
    let g = psi0(&t);
    let geom = borromean_geometry(&t).unwrap();
    let mut st = g.clone();
    for (_, p, blue) in geom.sequence(BorromeanVariant::Rgb) {
        if !blue {
            apply_program(&mut st, &p).unwrap();
        }
    }
    assert!(close(st.fidelity(&g).unwrap(), 1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn strings_are_self_inverse(ci in 0usize..3, pick in 0usize..1000, rev in any::<bool>()) {
        let t = torus();
        let c = Color::from_index(ci);
        let routes = open_routes(&t, c, 4);
        let route = &routes[pick % routes.len()];
        let order = if rev { ColorOrder::default_for(c).reversed() } else { ColorOrder::default_for(c) };
        let s = decorate(&t, explicit_path(&t, c, route.clone()).unwrap(), order).unwrap();
        let g = psi0(&t);
        let mut st = g.clone();
        apply_program(&mut st, &s.program()).unwrap();
        apply_program(&mut st, &s.program()).unwrap();
        prop_assert!((st.fidelity(&g).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn string_commutes_with_far_stars_on_flux_free_states(ci in 0usize..3, pick in 0usize..1000, seed in any::<u64>()) {
        // On a random B=+1 state, a string commutes with every star whose
        // hexagon it does not end in.
        let t = torus();
        let c = Color::from_index(ci);
        let routes = open_routes(&t, c, 4);
        let route = &routes[pick % routes.len()];
        let s = decorate(&t, explicit_path(&t, c, route.clone()).unwrap(), ColorOrder::default_for(c)).unwrap();
        let op = s.operator();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = b_plus_basis(&t);
        let entries: Vec<(u64, Complex<f64>)> = basis.iter().step_by(7).map(|&k| (k, random_amp(&mut rng))).collect();
        let mut psi = state_from_vertex_keys(&t, entries);
        psi.renormalize().unwrap();
        let ends = [route[0], *route.last().unwrap()];
        for st in 0..t.num_stars() {
            if ends.contains(&st) {
                continue;
            }
            let a = star_op(&t, st).unwrap().op;
            prop_assert!(commutator_norm(&a, &op, &psi).unwrap() < 1e-10, "star {st} route {route:?}");
        }
    }
}
