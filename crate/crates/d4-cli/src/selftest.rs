//! Exact-mode invariant suite.

use serde::Serialize;

use d4_core::anyons;
use d4_core::experiments::{self as ex, Ensemble, RunSpec};
use d4_core::lattice::{Color, KagomeTorus};
use d4_core::modelops::{BorromeanVariant, Schedule};
use d4_core::prep::{compile_prep, PrepVariant};

#[derive(Serialize, Debug)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Serialize, Debug)]
pub struct Selftest {
    pub size: [usize; 2],
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn check(out: &mut Vec<Check>, name: &'static str, f: impl FnOnce() -> Result<(bool, String), String>) {
    let (pass, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    out.push(Check { name, pass, detail });
}

fn near(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Runs every check; a 2x2 torus admits no colouring, so the suite uses 3x3.
pub fn run() -> Selftest {
    let t = KagomeTorus::new(3, 3).expect("3x3 torus");
    let spec = RunSpec::default();
    let mut c = Vec::new();
    check(&mut c, "ground_state", || {
        let r = ex::prepare_report(&t, ex::SectorSpec::from_bits(0), &spec).map_err(|e| e.to_string())?;
        let worst = r.stars.iter().chain(&r.triangles).map(|e| (e.mean - 1.0).abs()).chain(r.logical_means().map(|z| (z - 1.0).abs())).fold(0.0, f64::max);
        Ok((worst < 1e-10, format!("max |<O> - 1| = {worst:.2e}")))
    });
    check(&mut c, "constraint_exhaustive", || {
        let r = ex::constraint_check(&t, None, 0).map_err(|e| e.to_string())?;
        Ok((r.max_deviation < 1e-9, format!("{} basis states, max deviation {:.1e}", r.states_checked, r.max_deviation)))
    });
    check(&mut c, "sector_census", || {
        let n = ex::enumerate_sectors().iter().filter(|s| s.admissible).count();
        let reports = ex::all_ground_states(&t, &spec).map_err(|e| e.to_string())?;
        let ok = reports.iter().all(|r| near(r.energy_density(), -1.0, 1e-10) && near(r.scalar("pinning").unwrap_or(0.0), 1.0, 1e-10));
        Ok((n == 22 && ok, format!("{n} admissible, all exact ground states: {ok}")))
    });
    check(&mut c, "single_anyon", || {
        let r = ex::single_anyon(&t, &spec).map_err(|e| e.to_string())?;
        let ok = r.scalar("negative_stars") == Some(1.0) && r.scalar("anyon_color") == Some(Color::B.index() as f64);
        Ok((ok, format!("negative stars {:?}", r.negative_stars(1e-9))))
    });
    check(&mut c, "create_move_fuse", || {
        let r = ex::braid_experiment(&t, &ex::braid_create_move_fuse(), 0).map_err(|e| e.to_string())?;
        let f = r.last().and_then(|r| r.scalar("return_fidelity")).unwrap_or(0.0);
        Ok((f > 1.0 - 1e-10, format!("return fidelity {f}")))
    });
    check(&mut c, "green_around_blue", || {
        let x = ex::braid_cross_check(&t).map_err(|e| e.to_string())?;
        Ok((x.agree, format!("circuit {:?}, algebra {:?}", x.circuit, x.algebraic)))
    });
    check(&mut c, "borromean", || {
        let mut d = Vec::new();
        let mut ok = true;
        for (v, want) in [(BorromeanVariant::Rgb, 1.0), (BorromeanVariant::RbOnly, 0.0), (BorromeanVariant::GbOnly, 0.0)] {
            let r = ex::borromean(&t, v, ex::Mode::Exact, 0, 0, Schedule::Interleaved).map_err(|e| e.to_string())?;
            let p = r.scalar("phase_over_pi").unwrap_or(f64::NAN);
            ok &= near(p, want, 1e-9);
            d.push(format!("{v:?} {p:.3}pi"));
        }
        Ok((ok, d.join(", ")))
    });
    check(&mut c, "modular_data", || {
        let md = anyons::modular_data();
        let (s, tt) = anyons::reference_mismatches(&md);
        let fusion = md.fusion_table().is_ok();
        Ok((s.is_empty() && tt.is_empty() && fusion && md.total_dim_sq() == 64, format!("S/T mismatches {}, sum d^2 = {}", s.len() + tt.len(), md.total_dim_sq())))
    });
    check(&mut c, "fidelity_bounds", || {
        let a = ex::fidelity_bounds(0.90, 0.85, 0.89, 27).map_err(|e| e.to_string())?;
        let b = ex::fidelity_bounds(0.94, 0.89, 0.93, 27).map_err(|e| e.to_string())?;
        let ok = near(a.lower, 0.65, 0.02) && near(a.per_site_lower, 0.984, 1e-3) && near(b.lower, 0.75, 0.02) && near(b.per_site_lower, 0.990, 1e-3);
        Ok((ok, format!("{:.3}/{:.4}, {:.3}/{:.4}", a.lower, a.per_site_lower, b.lower, b.per_site_lower)))
    });
    check(&mut c, "compiler_costs", || {
        let (_, n) = compile_prep(&t, PrepVariant::Naive);
        let (_, m) = compile_prep(&t, PrepVariant::Compiled);
        let ok = (n.two_qubit_gates, n.peak_register, m.two_qubit_gates, m.peak_register) == (108, 36, 78, 30);
        Ok((ok, format!("naive {}/{}, compiled {}/{}", n.two_qubit_gates, n.peak_register, m.two_qubit_gates, m.peak_register)))
    });
    check(&mut c, "degeneracy_scan", || {
        let s = ex::degeneracy_scan(&t, 44, 0, Ensemble::Product).map_err(|e| e.to_string())?;
        Ok((s.forbidden_count() == 0 && s.max_forbidden_mass < 1e-12, format!("forbidden mass {:.1e}", s.max_forbidden_mass)))
    });
    let passed = c.iter().all(|x| x.pass);
    Selftest { size: [3, 3], checks: c, passed }
}
