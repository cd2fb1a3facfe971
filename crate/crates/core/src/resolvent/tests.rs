use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::complexmath::adaptive_quad;
use crate::fundsys::PanelSet;

fn point(ell: u32, omega: Real) -> SpectralPoint {
    SpectralPoint::new(3, ell, 1.0, omega).unwrap()
}

fn kernel_with(ell: u32, omega: Real, v: RadialPotential, branch: Option<Branch>) -> GreenKernel {
    let o = SolverOptions::default();
    let p = point(ell, omega);
    let grid = RadialGrid::for_point(&p, o.c, o.r_min, o.r_max, 120, 120).unwrap();
    build_green_kernel(&p, &v, &grid, &o, branch).unwrap()
}

fn kernel(ell: u32, omega: Real) -> GreenKernel {
    kernel_with(ell, omega, RadialPotential::zero(), None)
}

/// Smooth bump on `(c - w, c + w)` with complex amplitude `a`.
fn bump(c: Real, w: Real, a: Cplx) -> impl Fn(Real) -> Cplx {
    move |r| {
        let x = (r - c) / w;
        if x.abs() >= 1.0 {
            Cplx::new(0.0, 0.0)
        } else {
            a * (1.0 - 1.0 / (1.0 - x * x)).exp()
        }
    }
}

fn random_vector(n: usize, seed: u64) -> Vec<Cplx> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Cplx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn dot(a: &[Cplx], b: &[Cplx]) -> Cplx {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[test]
fn rank_one_kernel_has_product_norm() {
    let panels = PanelSet::adapted(0.1, 4.0, 1.0, |_| 4.0);
    let g: Vec<Cplx> = panels.nodes.iter().map(|&r| Cplx::new(1.0, r) * (-r).exp()).collect();
    let h: Vec<Cplx> = panels.nodes.iter().map(|&s| Cplx::new(s.sin() + 0.5, 0.0)).collect();
    let norm = |f: &[Cplx]| f.iter().zip(&panels.weights).map(|(z, w)| z.norm_sqr() * w).sum::<Real>().sqrt();
    let expected = norm(&g) * norm(&h);
    let sg: Vec<ScaledC> = g.iter().map(|&z| ScaledC::from_complex(z)).collect();
    let sh: Vec<ScaledC> = h.iter().map(|&z| ScaledC::from_complex(z)).collect();
    let op = SeparableOperator::from_factors(panels, &sg, &sh, &sg, &sh);
    let est = op.norm_estimate(&PowerOptions::default()).unwrap();
    assert!((est.norm - expected).abs() < 1e-9 * expected, "{} vs {expected}", est.norm);
}

#[test]
fn rank_one_kernel_applies_as_outer_product() {
    let panels = PanelSet::adapted(0.0, 2.0, 1.0, |_| 3.0);
    let g: Vec<ScaledC> = panels.nodes.iter().map(|&r| ScaledC::from_real(1.0 + r)).collect();
    let h: Vec<ScaledC> = panels.nodes.iter().map(|&s| ScaledC::from_real(s * s)).collect();
    let op = SeparableOperator::from_factors(panels.clone(), &g, &h, &g, &h);
    let ones = vec![Cplx::new(1.0, 0.0); panels.len()];
    // int_0^2 s^2 ds = 8/3
    for (u, &r) in op.apply(&ones).iter().zip(&panels.nodes) {
        assert!((u - (1.0 + r) * 8.0 / 3.0).norm() < 1e-12);
    }
}

#[test]
fn adjoint_is_the_conjugate_transpose() {
    let k = kernel(2, 400.0);
    let op = ResolventOperator::new(k);
    let n = op.nodes().len();
    let (x, y) = (random_vector(n, 1), random_vector(n, 2));
    let lhs = dot(&op.op.apply(&x), &y);
    let rhs = dot(&x, &op.op.apply_adjoint(&y));
    assert!((lhs - rhs).norm() <= 1e-11 * lhs.norm().max(rhs.norm()), "{lhs} vs {rhs}");
}

#[test]
fn zero_data_gives_zero_solution() {
    let op = ResolventOperator::new(kernel(1, 200.0));
    let u = op.apply_reduced_resolvent(&vec![Cplx::new(0.0, 0.0); op.nodes().len()]);
    assert!(u.iter().all(|z| *z == Cplx::new(0.0, 0.0)));
}

#[test]
fn reduced_resolvent_is_linear() {
    let op = ResolventOperator::new(kernel(3, 500.0));
    let n = op.nodes().len();
    let (f, g) = (random_vector(n, 3), random_vector(n, 4));
    let combo: Vec<Cplx> = f.iter().zip(&g).map(|(a, b)| a + 2.0 * b).collect();
    let (uf, ug, uc) = (op.apply_reduced_resolvent(&f), op.apply_reduced_resolvent(&g), op.apply_reduced_resolvent(&combo));
    let scale = uc.iter().map(|z| z.norm()).fold(0.0, Real::max);
    let err = uc.iter().zip(uf.iter().zip(&ug)).map(|(c, (a, b))| (c - a - 2.0 * b).norm()).fold(0.0, Real::max);
    assert!(err <= 1e-12 * scale, "{err:e} vs {scale:e}");
}

#[test]
fn apply_matches_adaptive_quadrature_of_the_kernel() {
    let k = kernel(2, 300.0);
    let f = bump(1.4, 0.8, Cplx::new(1.0, -0.5));
    let op = ResolventOperator::new(k.clone());
    let fvals: Vec<Cplx> = op.nodes().iter().map(|&r| f(r)).collect();
    let u = op.apply_reduced_resolvent(&fvals);
    let weight = 1.0; // (d - 1)/2 in three dimensions
    for i in (0..op.nodes().len()).step_by(97) {
        let r = op.nodes()[i];
        let integrand = |s: Real| k.eval_complex(r, s) * s.powf(weight) * f(s);
        let (lo, hi) = (0.6, 2.2);
        let mut direct = Cplx::new(0.0, 0.0);
        for (a, b) in [(lo, r.clamp(lo, hi)), (r.clamp(lo, hi), hi)] {
            if b > a {
                direct += adaptive_quad(integrand, a, b, 1e-14).unwrap().value;
            }
        }
        let direct = direct * r.powf(-weight);
        assert!((u[i] - direct).norm() <= 1e-8 * direct.norm().max(1e-3 * u.iter().map(|z| z.norm()).fold(0.0, Real::max)),
            "r = {r}: {} vs {direct}", u[i]);
    }
}

#[test]
fn weighted_kernel_is_symmetric() {
    for (ell, omega) in [(0, 100.0), (5, 1000.0), (30, 400.0)] {
        let k = kernel(ell, omega);
        let radii = crate::phase::log_grid(0.05, 6.0, 23);
        for &r in &radii {
            for &s in &radii {
                let sym = |a: Real, b: Real| (k.eval(a, b) * ScaledC::exp(Cplx::new(-0.5 * (a * a - b * b), 0.0))).to_complex();
                let (x, y) = (sym(r, s), sym(s, r));
                assert!((x - y).norm() <= 1e-10 * x.norm(), "ell {ell}: ({r}, {s}) {x} vs {y}");
            }
        }
    }
}

#[test]
fn green_residual_recovers_random_smooth_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (ell, omega) in [(0, 100.0), (4, 1000.0), (12, 300.0), (35, 2000.0)] {
        let op = ResolventOperator::new(kernel(ell, omega));
        for _ in 0..3 {
            let c = rng.gen_range(0.6..2.5);
            let w = rng.gen_range(0.3..0.9);
            let f = bump(c, w, Cplx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let pts = crate::phase::log_grid((c - 0.8 * w).max(0.05), c + 0.8 * w, 9);
            let res = green_residual(&op, &f, &pts);
            assert!(res <= 1e-4, "ell {ell} omega {omega}: residual {res:e}");
        }
    }
}

#[test]
fn solution_refines_data_narrower_than_the_panels() {
    let op = ResolventOperator::new(kernel(4, 100.0));
    // the bump's shoulders vary far faster than the kernel at this frequency
    let f = bump(1.7, 0.12, Cplx::new(0.4, -0.9));
    let pts = crate::phase::log_grid(1.7 - 0.1, 1.7 + 0.1, 11);
    let res = green_residual(&op, &f, &pts);
    assert!(res <= 1e-5, "residual {res:e}");

    // on resolved data the refined and nodal paths agree
    let g = |r: Real| Cplx::new((-r * r).exp(), 0.0);
    let nodal: Vec<Cplx> = op.nodes().iter().map(|&r| g(r)).collect();
    let direct = op.apply_reduced_resolvent(&nodal);
    let sol = op.solve(g);
    for (j, &r) in op.nodes().iter().enumerate().step_by(97) {
        assert!((sol.eval(r) - direct[j]).norm() <= 1e-9 * direct[j].norm().max(1e-30), "r {r}");
    }
}

#[test]
fn bound_certificate_is_populated_and_uniform() {
    let sups: Vec<Real> = [100.0, 1000.0, 10000.0]
        .iter()
        .map(|&omega| {
            let k = kernel(0, omega);
            let cert = verify_kernel_bound(&k, &bound_grid(&k, 80));
            assert!(cert.populated(), "omega {omega}: {:?}", cert.breakdown);
            assert!(cert.measured_sup.is_finite() && cert.measured_sup > 0.0);
            assert_eq!(cert.formula, BOUND_FORMULA_TAG);
            cert.measured_sup
        })
        .collect();
    for pair in sups.windows(2) {
        let ratio = pair[1] / pair[0];
        assert!((0.5..2.0).contains(&ratio), "{sups:?}");
    }
}

const BOUND_FORMULA_TAG: &str = "omega^-1/2 <omega^-1/2 r_<>^(-1/2+b/2) <omega^-1/2 r_>>^(-1/2-b/2)";

#[test]
fn large_ell_branch_satisfies_the_same_bound() {
    let k = kernel(50, 1000.0);
    assert_eq!(k.branch, Branch::LargeEll);
    let cert = verify_kernel_bound(&k, &bound_grid(&k, 60));
    assert!(cert.measured_sup.is_finite() && cert.measured_sup < 10.0, "{}", cert.measured_sup);
}

#[test]
fn weber_weber_ratio_decays_off_the_diagonal() {
    let k = kernel(0, 1000.0);
    let p = k.spectral;
    for r in [1.5, 2.5, 4.0] {
        let ratios: Vec<Real> =
            (1..12).map(|j| r + 0.4 * j as Real).map(|s| k.eval(r, s).abs() / kernel_bound(p.omega, p.b, r, s)).collect();
        assert!(ratios.windows(2).all(|w| w[1] < w[0]), "r = {r}: {ratios:?}");
    }
}

#[test]
fn cell_kinds_follow_the_regime_split() {
    assert_eq!(CellKind::of(0.3, 0.1, 0.2), CellKind::BesselBessel);
    assert_eq!(CellKind::of(0.3, 0.5, 0.1), CellKind::BesselHankel);
    assert_eq!(CellKind::of(0.3, 0.1, 2.0), CellKind::BesselWeber);
    assert_eq!(CellKind::of(0.3, 0.5, 0.9), CellKind::HankelHankel);
    assert_eq!(CellKind::of(0.3, 3.0, 0.9), CellKind::HankelWeber);
    assert_eq!(CellKind::of(0.3, 3.0, 1.0), CellKind::WeberWeber);
    // without a Hankel regime everything below 1 is Bessel
    assert_eq!(CellKind::of(2.0, 0.5, 0.9), CellKind::BesselBessel);
}

#[test]
fn branches_agree_on_the_overlap_band() {
    for ell in [10, 20, 30] {
        let small = kernel_with(ell, 1000.0, RadialPotential::zero(), Some(Branch::SmallEll));
        let large = kernel_with(ell, 1000.0, RadialPotential::zero(), Some(Branch::LargeEll));
        let radii = crate::phase::log_grid(0.05, 6.0, 25);
        for &r in &radii {
            for &s in &radii {
                let (a, b) = (small.eval(r, s), large.eval(r, s));
                assert!((a - b).abs() <= 1e-4 * b.abs(), "ell {ell} ({r}, {s}): {a:?} vs {b:?}");
            }
        }
        let opts = PowerOptions::default();
        let ns = ResolventOperator::new(small).norm_estimate(&opts).unwrap().norm;
        let nl = ResolventOperator::new(large).norm_estimate(&opts).unwrap().norm;
        assert!((ns - nl).abs() <= 0.01 * nl, "ell {ell}: {ns} vs {nl}");
    }
}

#[test]
fn small_ell_wronskian_settles_as_omega_grows() {
    let w: Vec<Cplx> = [400.0, 1600.0, 6400.0].iter().map(|&o| kernel(0, o).normalized_wronskian()).collect();
    let (d1, d2) = ((w[1] - w[0]).norm(), (w[2] - w[1]).norm());
    assert!(w[2].norm() > 0.1);
    assert!(d1 < 0.01 * w[1].norm() && d2 < 0.6 * d1, "{w:?}");
}

#[test]
fn large_ell_wronskian_tends_to_one() {
    for ell in [20, 50] {
        for omega in [100.0, 1600.0, 25600.0] {
            let k = kernel_with(ell, omega, RadialPotential::zero(), Some(Branch::LargeEll));
            let scale = omega.powf(-0.5) + 1.0 / k.spectral.nu;
            let defect = (k.normalized_wronskian() - 1.0).norm();
            assert!(defect <= 0.5 * scale, "ell {ell} omega {omega}: {defect:e}");
        }
    }
}

#[test]
fn wronskian_is_constant_across_the_glued_solution() {
    for (ell, omega, v) in [(0, 100.0, RadialPotential::zero()), (7, 2000.0, RadialPotential::bump(0.8)), (40, 500.0, RadialPotential::inverse_square(0.5))] {
        let k = kernel_with(ell, omega, v, None);
        assert!(k.wronskian_drift < 1e-6, "ell {ell}: drift {:e}", k.wronskian_drift);
    }
}

#[test]
fn large_ell_branch_needs_nu_at_least_one() {
    let o = SolverOptions::default();
    let p = point(0, 100.0);
    let grid = RadialGrid::for_point(&p, o.c, o.r_min, o.r_max, 40, 40).unwrap();
    let err = build_green_kernel(&p, &RadialPotential::zero(), &grid, &o, Some(Branch::LargeEll)).unwrap_err();
    assert_eq!(err, ResolventError::BranchUnavailable(0.5));
}

#[test]
fn scaling_identity_holds() {
    let op = ResolventOperator::new(kernel(1, 1000.0));
    let check = op.scaling_check(4.0, &PowerOptions::default()).unwrap();
    assert!(check.relative_difference < 1e-6, "{check:?}");
}

#[test]
fn scan_rows_are_ordered_and_finite() {
    let cfg = ScanConfig {
        omegas: vec![400.0, 100.0],
        ells: vec![3, 0],
        bound_points: 20,
        residual_points: 3,
        ..ScanConfig::default()
    };
    let report = scan(&cfg);
    let keys: Vec<(Real, u32)> = report.rows.iter().map(|r| (r.omega, r.ell)).collect();
    assert_eq!(keys, vec![(100.0, 0), (100.0, 3), (400.0, 0), (400.0, 3)]);
    assert!(report.rows.iter().all(ScanRow::is_finite), "{report:?}");
    assert!(!report.any_degenerate());
}

#[test]
fn scan_is_independent_of_the_pool_size() {
    let cfg = ScanConfig { omegas: vec![200.0], ells: vec![0, 1, 2], bound_points: 10, residual_points: 2, ..ScanConfig::default() };
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| scan(&cfg));
    let parallel = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(|| scan(&cfg));
    assert_eq!(serial.to_csv_string(), parallel.to_csv_string());
}

#[test]
fn empty_scan_is_empty() {
    let cfg = ScanConfig { omegas: vec![], ..ScanConfig::default() };
    assert!(scan(&cfg).rows.is_empty());
}

#[test]
fn low_frequencies_are_refused_unless_allowed() {
    let cfg = ScanConfig { omegas: vec![50.0], ells: vec![0], bound_points: 0, residual_points: 0, ..ScanConfig::default() };
    let row = &scan(&cfg).rows[0];
    assert!(row.error.as_deref().unwrap().contains("floor"));
    assert!(!row.degenerate_flag);
    let allowed = ScanConfig { allow_low_omega: true, ..cfg };
    assert!(scan(&allowed).rows[0].error.is_none());
}

#[test]
fn csv_has_frozen_header() {
    let cfg = ScanConfig { omegas: vec![100.0], ells: vec![0], bound_points: 0, residual_points: 0, ..ScanConfig::default() };
    let csv = scan(&cfg).to_csv_string();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# schema=ou-resolvent-scan/1"));
    assert_eq!(
        lines.next(),
        Some("omega,ell,b,norm_estimate,bound_ratio_sup,wronskian_drift,residual_max,envelope_weber,envelope_bessel,degenerate_flag")
    );
    assert_eq!(lines.count(), 1);
}

#[test]
fn zero_amplitude_bump_matches_the_free_scan() {
    let base = ScanConfig { omegas: vec![150.0], ells: vec![0, 4], bound_points: 10, residual_points: 2, ..ScanConfig::default() };
    let bumped = ScanConfig { potential: RadialPotential::bump(0.0), ..base.clone() };
    assert_eq!(scan(&base).to_csv_string(), scan(&bumped).to_csv_string());
}

#[test]
fn small_potential_stays_close_to_the_free_norms() {
    let base = ScanConfig { omegas: vec![300.0], ells: vec![0, 6, 25], bound_points: 0, residual_points: 0, ..ScanConfig::default() };
    let perturbed = ScanConfig { potential: RadialPotential::inverse_square(0.1), ..base.clone() };
    for (a, b) in scan(&base).rows.iter().zip(&scan(&perturbed).rows) {
        assert!((a.norm_estimate - b.norm_estimate).abs() <= 0.2 * a.norm_estimate, "{a:?} vs {b:?}");
    }
}
