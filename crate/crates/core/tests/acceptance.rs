//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! a failure status if any criterion fails.

mod common;

use common::{all_fixtures, eval_at, fixture, probe_points, zero_normal, zero_tangential};
use curldiv::exact::{rat, Rational};
use curldiv::gauge::{
    build_l_star, build_n_star, curl_image_basis, curl_image_rank, verify_periods,
};
use curldiv::io::convergence::run_convergence;
use curldiv::io::mms;
use curldiv::io::structured::cube_mesh;
use curldiv::lift::{curl_residual, divergence_residual, nedelec_potential, rt_potential};
use curldiv::solver::{
    assemble_normal, assemble_tangential, error_norms, solve_normal, solve_normal_with_lift,
    solve_tangential, solve_tangential_with_lift, AssembledSystem, CgOptions, Formulation,
};
use curldiv::whitney::{differential, interpolate, AnalyticCoefficient, CoefficientField, Field};
use curldiv::{FEFunction, Mesh, Point3, Space, Topology, Vec3};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::process::ExitCode;
use std::time::Instant;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn convergence(formulation: Formulation) -> Outcome {
    let start = Instant::now();
    let r = run_convergence("mms1", formulation, 3, 1, CgOptions::default())
        .map_err(|e| e.to_string())?;
    let seconds = start.elapsed().as_secs_f64();
    let n: Vec<usize> = r.levels.iter().map(|l| l.n).collect();
    ensure(n == [2, 4, 8], || format!("levels {n:?}"))?;
    let rates: Vec<String> = r
        .graph_rates
        .iter()
        .map(|x| format!("{:.3}", x.unwrap_or(f64::NAN)))
        .collect();
    let rate = r.final_graph_rate().ok_or("no final rate")?;
    let detail = format!("graph-norm rates [{}], {seconds:.2} s", rates.join(", "));
    ensure(rate >= 0.85, || {
        format!("final rate {rate:.3} < 0.85; {detail}")
    })?;
    ensure(seconds < 120.0, || format!("runtime too long; {detail}"))?;
    Ok(detail)
}

fn criterion_1() -> Outcome {
    convergence(Formulation::Tangential)
}

fn criterion_2() -> Outcome {
    convergence(Formulation::Normal)
}

fn criterion_3() -> Outcome {
    let mut parts = Vec::new();
    for name in ["cube", "solid_torus", "hollow_ball"] {
        let (m, topo) = fixture(name);
        let n_q = topo.tree.n_q();
        let (g, p) = (topo.g(), topo.p());
        let lhs = n_q as i64 - g as i64;
        let rhs = m.n_faces() as i64 - m.n_tets() as i64 - p as i64;
        ensure(lhs == rhs, || {
            format!("{name}: n_Q - g = {lhs}, n_f - n_t - p = {rhs}")
        })?;
        let gb = build_n_star(&m, &topo.tree, &topo.homology);
        ensure(gb.len() as i64 == lhs, || {
            format!("{name}: {} basis fields", gb.len())
        })?;
        let rank = curl_image_rank(&topo.ops, &gb);
        ensure(rank as i64 == lhs, || {
            format!("{name}: curl rank {rank}, expected {lhs}")
        })?;
        parts.push(format!("{name} {lhs}"));
    }
    Ok(format!("dim W0h: {}", parts.join(", ")))
}

fn criterion_4() -> Outcome {
    for (name, m, topo) in all_fixtures() {
        let cg = topo.ops.curl.matmul(&topo.ops.grad);
        ensure(cg.triplets().all(|(_, _, v)| v == 0), || {
            format!("{name}: C G != 0")
        })?;
        let dc = topo.ops.div.matmul(&topo.ops.curl);
        ensure(dc.triplets().all(|(_, _, v)| v == 0), || {
            format!("{name}: D C != 0")
        })?;
        let gb = build_n_star(&m, &topo.tree, &topo.homology);
        let ct = topo.ops.curl.transpose();
        for (l, field) in gb.exact_fields().iter().enumerate() {
            let mut faces = vec![Rational::zero(); m.n_faces()];
            for (e, c) in field {
                let (fs, ss) = ct.row(*e);
                for (&f, &s) in fs.iter().zip(ss) {
                    faces[f] += c * rat(i64::from(s));
                }
            }
            for t in 0..m.n_tets() {
                let (fs, ss) = topo.ops.div.row(t);
                let d: Rational = fs
                    .iter()
                    .zip(ss)
                    .map(|(&f, &s)| &faces[f] * rat(i64::from(s)))
                    .sum();
                ensure(d.is_zero(), || {
                    format!("{name}: div of curl of field {l} is {d} on tet {t}")
                })?;
            }
        }
    }
    Ok("exact on all fixtures".into())
}

fn criterion_5() -> Outcome {
    let mut worst_flux: f64 = 0.0;
    for (name, m, topo) in all_fixtures() {
        let gb = build_n_star(&m, &topo.tree, &topo.homology);
        for (l, img) in curl_image_basis(&topo.ops, &gb).iter().enumerate() {
            let mut dense = vec![0.0; m.n_faces()];
            let mut scale: f64 = 0.0;
            for &(f, x) in img {
                dense[f] = x;
                scale = scale.max(x.abs());
            }
            for c in &topo.boundary.components {
                let flux = c.flux(&dense).abs() / scale;
                worst_flux = worst_flux.max(flux);
                ensure(flux <= 1e-12, || {
                    format!("{name}: field {l} has relative flux {flux:e}")
                })?;
            }
        }
    }
    let (m, topo) = fixture("solid_torus");
    let gb = build_n_star(&m, &topo.tree, &topo.homology);
    ensure(gb.n_combined() == 1, || {
        format!("{} combined fields on the torus", gb.n_combined())
    })?;
    let periods = verify_periods(&m, &gb, &topo.homology).map_err(|e| e.to_string())?;
    ensure(periods.max_abs <= 1e-10, || {
        format!("period {:e}", periods.max_abs)
    })?;
    Ok(format!(
        "max relative flux {worst_flux:.1e}, max period {:.1e}",
        periods.max_abs
    ))
}

fn criterion_6() -> Outcome {
    let mut worst: f64 = 0.0;
    for (name, m, topo) in all_fixtures() {
        let t = solve_tangential(
            &m,
            &topo,
            &zero_tangential(CoefficientField::Identity, topo.p()),
            CgOptions::default(),
        )
        .map_err(|e| format!("{name}: {e}"))?;
        let n = solve_normal(
            &m,
            &topo,
            &zero_normal(CoefficientField::Identity, topo.g()),
            CgOptions::default(),
        )
        .map_err(|e| format!("{name}: {e}"))?;
        for (what, v) in [("tangential", &t.coefficients), ("normal", &n.coefficients)] {
            let max = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            worst = worst.max(max);
            ensure(max <= 1e-10, || {
                format!("{name} {what}: max coefficient {max:e}")
            })?;
        }
    }
    Ok(format!("max coefficient {worst:.1e}"))
}

fn rayleigh_check(name: &str, sys: &AssembledSystem, rng: &mut ChaCha8Rng) -> Result<f64, String> {
    let mut min_q = f64::INFINITY;
    for _ in 0..100 {
        let z: Vec<f64> = (0..sys.dim())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let nz: f64 = z.iter().map(|x| x * x).sum();
        let q = sys.energy(&z) / nz;
        ensure(q > 0.0, || format!("{name}: Rayleigh quotient {q:e}"))?;
        min_q = min_q.min(q);
    }
    Ok(min_q)
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let case = mms::case("mms1").map_err(|e| e.to_string())?;
    let mut worst_residual: f64 = 0.0;
    let mut count = 0;
    for (name, m, topo) in all_fixtures() {
        for coefficient in [
            CoefficientField::Identity,
            CoefficientField::Analytic(AnalyticCoefficient::Layered),
        ] {
            let mut tp = case.tangential_problem(&m, &topo);
            tp.eta = coefficient.clone();
            let gb = build_n_star(&m, &topo.tree, &topo.homology);
            let g_h =
                interpolate(&m, Space::Cell, Field::Scalar(&*tp.g)).map_err(|e| e.to_string())?;
            let lift = rt_potential(&m, &topo.ops, &topo.boundary, &g_h, &tp.alpha)
                .map_err(|e| e.to_string())?;
            rayleigh_check(name, &assemble_tangential(&m, &tp, &gb, &lift), &mut rng)?;
            let sol = solve_tangential(&m, &topo, &tp, CgOptions::default())
                .map_err(|e| format!("{name}: {e}"))?;
            worst_residual = worst_residual.max(sol.stats.relative_residual);

            let mut np = case.normal_problem(&m, &topo);
            np.mu = coefficient;
            let lift = FEFunction::zeros(&m, Space::Edge);
            rayleigh_check(
                name,
                &assemble_normal(&m, &np, &build_l_star(&m), &lift),
                &mut rng,
            )?;
            let sol = solve_normal(&m, &topo, &np, CgOptions::default())
                .map_err(|e| format!("{name}: {e}"))?;
            worst_residual = worst_residual.max(sol.stats.relative_residual);
            count += 2;
        }
    }
    ensure(worst_residual <= 1e-10, || {
        format!("CG relative residual {worst_residual:e}")
    })?;
    Ok(format!(
        "{count} systems, 100 quotients each, worst CG residual {worst_residual:.1e}"
    ))
}

/// Vector field whose components are quadratics in the monomials
/// `1, x, y, z, x^2, y^2, z^2, xy, xz, yz`.
#[derive(Clone)]
struct Quadratic {
    c: [[f64; 10]; 3],
}

impl Quadratic {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        Self {
            c: std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))),
        }
    }

    fn value(&self, p: &Point3) -> Vec3 {
        let mono = [
            1.0,
            p.x,
            p.y,
            p.z,
            p.x * p.x,
            p.y * p.y,
            p.z * p.z,
            p.x * p.y,
            p.x * p.z,
            p.y * p.z,
        ];
        Vec3::from_fn(|i, _| self.c[i].iter().zip(&mono).map(|(a, b)| a * b).sum())
    }

    /// `d u_i / d x_j`.
    fn derivative(&self, i: usize, j: usize, p: &Point3) -> f64 {
        let c = &self.c[i];
        match j {
            0 => c[1] + 2.0 * c[4] * p.x + c[7] * p.y + c[8] * p.z,
            1 => c[2] + 2.0 * c[5] * p.y + c[7] * p.x + c[9] * p.z,
            _ => c[3] + 2.0 * c[6] * p.z + c[8] * p.x + c[9] * p.y,
        }
    }

    fn div(&self, p: &Point3) -> f64 {
        (0..3).map(|k| self.derivative(k, k, p)).sum()
    }

    fn curl(&self, p: &Point3) -> Vec3 {
        let d = |i, j| self.derivative(i, j, p);
        Vec3::new(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1))
    }
}

fn criterion_8() -> Outcome {
    let m = cube_mesh(2);
    let topo = Topology::analyze(&m).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut worst_div, mut worst_curl): (f64, f64) = (0.0, 0.0);
    for _ in 0..10 {
        let q = Quadratic::random(&mut rng);
        let u = |p: &Point3| q.value(p);
        let div_u = |p: &Point3| q.div(p);
        let curl_u = |p: &Point3| q.curl(p);
        let i_rt = interpolate(&m, Space::Face, Field::Vector(&u)).map_err(|e| e.to_string())?;
        let i_n = interpolate(&m, Space::Edge, Field::Vector(&u)).map_err(|e| e.to_string())?;
        let d = differential(&m, &topo.ops, &i_rt).map_err(|e| e.to_string())?;
        let i_pc =
            interpolate(&m, Space::Cell, Field::Scalar(&div_u)).map_err(|e| e.to_string())?;
        let div_err = (0..m.n_tets())
            .map(|t| m.volume(t) * (d.coeffs[t] - i_pc.coeffs[t]).powi(2))
            .sum::<f64>()
            .sqrt();
        let c = differential(&m, &topo.ops, &i_n).map_err(|e| e.to_string())?;
        let i_curl =
            interpolate(&m, Space::Face, Field::Vector(&curl_u)).map_err(|e| e.to_string())?;
        let curl_err = c
            .coeffs
            .iter()
            .zip(&i_curl.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst_div = worst_div.max(div_err);
        worst_curl = worst_curl.max(curl_err);
    }
    ensure(worst_div <= 1e-10 && worst_curl <= 1e-10, || {
        format!("div defect {worst_div:e}, curl defect {worst_curl:e}")
    })?;
    Ok(format!(
        "10 random quadratics: div defect {worst_div:.1e}, curl defect {worst_curl:.1e}"
    ))
}

fn max_difference(m: &Mesh, a: &FEFunction, b: &FEFunction) -> f64 {
    probe_points(m, 10)
        .iter()
        .map(|p| (eval_at(m, a, p) - eval_at(m, b, p)).norm())
        .fold(0.0, f64::max)
}

fn criterion_9() -> Outcome {
    let case = mms::case("mms1").map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut worst_res, mut worst_constraint, mut worst_shift): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut meshes = all_fixtures();
    let cube = cube_mesh(2);
    let cube_topo = Topology::analyze(&cube).map_err(|e| e.to_string())?;
    meshes.push(("cube n=2", cube, cube_topo));
    for (name, m, topo) in meshes {
        let opts = CgOptions::default();

        let mut tp = case.tangential_problem(&m, &topo);
        for a in tp.alpha.iter_mut() {
            *a += 0.25;
        }
        let g_h = interpolate(&m, Space::Cell, Field::Scalar(&*tp.g)).map_err(|e| e.to_string())?;
        let lift = rt_potential(&m, &topo.ops, &topo.boundary, &g_h, &tp.alpha)
            .map_err(|e| format!("{name}: {e}"))?;
        let scale = 1.0 + g_h.max_abs();
        let res = divergence_residual(&m, &topo.ops, &lift, &g_h) / scale;
        let flux = topo.boundary.components[1..]
            .iter()
            .zip(&tp.alpha)
            .map(|(c, a)| (c.flux(&lift.coeffs) - a).abs())
            .fold(0.0, f64::max);
        ensure(res <= 1e-10 && flux <= 1e-10, || {
            format!("{name}: RT lift residual {res:e}, flux error {flux:e}")
        })?;
        worst_res = worst_res.max(res);
        worst_constraint = worst_constraint.max(flux);

        let z: Vec<f64> = (0..m.n_edges())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let cz = topo.ops.curl.map(f64::from).matvec(&z);
        let shifted = FEFunction::new(
            &m,
            Space::Face,
            lift.coeffs.iter().zip(&cz).map(|(a, b)| a + b).collect(),
        )
        .map_err(|e| e.to_string())?;
        let a = solve_tangential_with_lift(&m, &topo, &tp, lift, opts)
            .map_err(|e| format!("{name}: {e}"))?;
        let b = solve_tangential_with_lift(&m, &topo, &tp, shifted, opts)
            .map_err(|e| format!("{name}: {e}"))?;
        let shift = max_difference(&m, &a.u_h, &b.u_h);
        ensure(shift <= 1e-8, || {
            format!("{name}: tangential solution moved by {shift:e}")
        })?;
        worst_shift = worst_shift.max(shift);

        let mut np = case.normal_problem(&m, &topo);
        for b in np.beta.iter_mut() {
            *b -= 0.5;
        }
        let j_h = interpolate(&m, Space::Face, Field::Vector(&*np.j)).map_err(|e| e.to_string())?;
        let lift = nedelec_potential(
            &m,
            &topo.ops,
            &topo.boundary,
            &topo.tree,
            &topo.homology,
            &j_h,
            &np.beta,
        )
        .map_err(|e| format!("{name}: {e}"))?;
        let scale = 1.0 + j_h.max_abs();
        let res = curl_residual(&topo.ops, &lift, &j_h) / scale;
        let period = (0..topo.g())
            .map(|n| (topo.homology.period(n, &lift.coeffs) - np.beta[n]).abs())
            .fold(0.0, f64::max);
        ensure(res <= 1e-10 && period <= 1e-10, || {
            format!("{name}: Nedelec lift residual {res:e}, period error {period:e}")
        })?;
        worst_res = worst_res.max(res);
        worst_constraint = worst_constraint.max(period);

        let phi: Vec<f64> = (0..m.n_vertices())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let gphi = topo.ops.grad.map(f64::from).matvec(&phi);
        let shifted = FEFunction::new(
            &m,
            Space::Edge,
            lift.coeffs.iter().zip(&gphi).map(|(a, b)| a + b).collect(),
        )
        .map_err(|e| e.to_string())?;
        let a = solve_normal_with_lift(&m, &topo, &np, lift, opts)
            .map_err(|e| format!("{name}: {e}"))?;
        let b = solve_normal_with_lift(&m, &topo, &np, shifted, opts)
            .map_err(|e| format!("{name}: {e}"))?;
        let shift = max_difference(&m, &a.u_h, &b.u_h);
        ensure(shift <= 1e-8, || {
            format!("{name}: normal solution moved by {shift:e}")
        })?;
        worst_shift = worst_shift.max(shift);
    }
    Ok(format!(
        "residual {worst_res:.1e}, constraints {worst_constraint:.1e}, lift-shift invariance {worst_shift:.1e}"
    ))
}

fn criterion_10() -> Outcome {
    let mut worst: f64 = 0.0;
    for (name, m, topo) in all_fixtures() {
        let volume: f64 = (0..m.n_tets()).map(|t| m.volume(t)).sum();
        for case_name in ["constant", "constant-aniso"] {
            let case = mms::case(case_name).map_err(|e| e.to_string())?;
            let exact = case.exact();
            let norm_u = (case.u)(&Point3::origin()).norm() * volume.sqrt();
            let opts = CgOptions::default();
            let t = solve_tangential(&m, &topo, &case.tangential_problem(&m, &topo), opts)
                .map_err(|e| format!("{name}: {e}"))?;
            let n = solve_normal(&m, &topo, &case.normal_problem(&m, &topo), opts)
                .map_err(|e| format!("{name}: {e}"))?;
            for (what, u_h) in [("tangential", &t.u_h), ("normal", &n.u_h)] {
                let e = error_norms(&m, &topo.ops, u_h, &exact).graph / norm_u;
                worst = worst.max(e);
                ensure(e <= 1e-9, || {
                    format!("{name} {case_name} {what}: relative error {e:e}")
                })?;
            }
        }
    }
    Ok(format!("worst relative graph-norm error {worst:.1e}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("tangential convergence rate", criterion_1),
        ("normal convergence rate", criterion_2),
        ("dimension identity and curl rank", criterion_3),
        ("exact complex identities", criterion_4),
        ("fluxes and periods of the gauged basis", criterion_5),
        ("uniqueness for zero data", criterion_6),
        ("positive definiteness and CG", criterion_7),
        ("commuting interpolation", criterion_8),
        ("potential lifts", criterion_9),
        ("constants reproduction", criterion_10),
    ];
    let mut failed = 0;
    for (k, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!(
                "PASS criterion {:>2} {title}: {detail} [{secs:.2} s]",
                k + 1
            ),
            Err(detail) => {
                failed += 1;
                println!(
                    "FAIL criterion {:>2} {title}: {detail} [{secs:.2} s]",
                    k + 1
                );
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
