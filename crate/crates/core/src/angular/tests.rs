use super::*;
use crate::fundsys::{RadialGrid, RadialPotential, SolverOptions};
use crate::phase::SpectralPoint;
use crate::resolvent::{build_green_kernel, split_panels, Branch, OPERATOR_KAPPA};
use crate::semigroup::{fourier_panels, free_resolvent_fourier_grid};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn radial_panels() -> PanelSet {
    PanelSet::from_edges(vec![0.0, 1.0, 2.0, 3.0, 4.5, 6.0])
}

fn gaussian_off_centre(x: [Real; 3]) -> Cplx {
    let c = [0.4, -0.3, 0.2];
    let d2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2);
    Cplx::new((-d2).exp(), 0.3 * (-2.0 * d2).exp())
}

fn max_abs(v: &[Cplx]) -> Real {
    v.iter().map(|z| z.norm()).fold(0.0, Real::max)
}

#[test]
fn index_admissibility() {
    assert!(AngularIndex::new(3, -3).is_ok());
    assert_eq!(AngularIndex::new(2, 3), Err(AngularError::InvalidIndex { ell: 2, m: 3 }));
    assert_eq!(AngularIndex::all_up_to(4).len(), 25);
}

#[test]
fn low_order_harmonics_match_closed_forms() {
    let c1 = (3.0 / (4.0 * PI)).sqrt();
    let c2 = (5.0 / (16.0 * PI)).sqrt();
    for (x, phi) in [(0.3, 0.7), (-0.8, 2.9), (0.99, 5.5)] {
        let s = (1.0 - x * x as Real).sqrt();
        let y = |l, m| real_spherical_harmonic(AngularIndex::new(l, m).unwrap(), x, phi);
        assert!((y(0, 0) - 0.5 / PI.sqrt()).abs() < 1e-15);
        assert!((y(1, 0) - c1 * x).abs() < 1e-15);
        assert!((y(1, 1).abs() - c1 * s * phi.cos().abs()).abs() < 1e-15);
        assert!((y(1, -1).abs() - c1 * s * phi.sin().abs()).abs() < 1e-15);
        assert!((y(2, 0) - c2 * (3.0 * x * x - 1.0)).abs() < 1e-14);
    }
}

#[test]
fn gram_matrix_is_identity() {
    let q = SphereQuadrature::new(12);
    let g = q.gram_matrix();
    for (i, row) in g.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-10, "G[{i}][{j}] = {v}");
        }
    }
}

#[test]
fn gram_at_default_degree_on_extreme_orders() {
    let q = SphereQuadrature::new(DEFAULT_ELL_MAX);
    let idx: Vec<AngularIndex> = AngularIndex::all_up_to(DEFAULT_ELL_MAX)
        .into_iter()
        .filter(|i| [0, 1, 25, 49, 50].contains(&i.ell()) && (i.m().abs() < 3 || i.m().unsigned_abs() + 2 > i.ell()))
        .collect();
    let ys: Vec<Vec<Real>> = idx.iter().map(|&i| q.harmonic(i).unwrap()).collect();
    let mut worst: Real = 0.0;
    for (i, a) in ys.iter().enumerate() {
        for (j, b) in ys.iter().enumerate() {
            let v: Real = a.iter().zip(b).zip(&q.weights).map(|((x, y), w)| x * y * w).sum();
            worst = worst.max((v - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    assert!(worst < 1e-10, "worst Gram deviation {worst:e}");
}

#[test]
fn sphere_rule_integrates_harmonics_exactly() {
    let q = SphereQuadrature::new(20);
    for idx in AngularIndex::all_up_to(20) {
        let s: Real = q.harmonic(idx).unwrap().iter().zip(&q.weights).map(|(y, w)| y * w).sum();
        let want = if idx.ell() == 0 { (4.0 * PI).sqrt() } else { 0.0 };
        assert!((s - want).abs() < 1e-12, "{idx:?}: {s}");
    }
}

#[test]
fn projection_recovers_channel_and_annihilates_others() {
    let q = SphereQuadrature::new(8);
    let idx = AngularIndex::new(3, -2).unwrap();
    let g = RadialFunction::from_fn(radial_panels(), |r| Cplx::new(r * (-r * r).exp(), r.sin()));
    let f = embed(&g, idx, &q).unwrap();
    let back = project(&f, idx).unwrap();
    assert!(back.relative_difference(&g) < 1e-12);
    for other in AngularIndex::all_up_to(8).into_iter().filter(|&i| i != idx) {
        assert!(max_abs(&project(&f, other).unwrap().values) < 1e-12 * max_abs(&g.values));
    }
}

#[test]
fn index_beyond_quadrature_is_refused() {
    let q = SphereQuadrature::new(4);
    let f = GridFunction3D::zeros(radial_panels(), q);
    let idx = AngularIndex::new(5, 0).unwrap();
    assert_eq!(project(&f, idx).unwrap_err(), AngularError::IndexBeyondQuadrature { ell: 5, ell_max: 4 });
}

#[test]
fn parseval_on_a_smooth_function() {
    let q = SphereQuadrature::new(24);
    let f = GridFunction3D::from_fn(radial_panels(), q.clone(), gaussian_off_centre);
    let total: Real = AngularIndex::all_up_to(24).into_iter().map(|i| project(&f, i).unwrap().norm(3).powi(2)).sum();
    let rel = (total - f.norm().powi(2)).abs() / f.norm().powi(2);
    assert!(rel < 1e-10, "Parseval defect {rel:e}");
}

#[test]
fn projection_is_a_contraction_and_embedding_an_isometry() {
    let q = SphereQuadrature::new(10);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let c = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let w = rng.gen_range(0.5..2.0);
        let f = GridFunction3D::from_fn(radial_panels(), q.clone(), |x| {
            let d2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2);
            Cplx::new((-d2 / w).exp(), x[0] * (-d2).exp())
        });
        for idx in [AngularIndex::new(0, 0).unwrap(), AngularIndex::new(2, 1).unwrap(), AngularIndex::new(7, -5).unwrap()] {
            let p = project(&f, idx).unwrap();
            assert!(p.norm(3) <= f.norm() * (1.0 + 1e-12));
            let e = embed(&p, idx, &q).unwrap();
            assert!((e.norm() - p.norm(3)).abs() <= 1e-12 * p.norm(3).max(1e-300));
            // (Q P)^2 = Q P
            let twice = embed(&project(&e, idx).unwrap(), idx, &q).unwrap();
            assert!(twice.sub(&e).norm() <= 1e-12 * e.norm().max(1e-300));
        }
    }
}

#[test]
fn assembly_takes_the_supremum() {
    let mut m = BTreeMap::new();
    assert_eq!(assemble_norm_bound(&m), Err(AngularError::EmptyScan));
    m.insert(0, 3.2);
    assert_eq!(assemble_norm_bound(&m), Ok(3.2));
    m.insert(4, 1.0);
    m.insert(7, 5.5);
    assert_eq!(assemble_norm_bound(&m), Ok(5.5));
}

#[test]
fn block_diagonal_norm_is_bounded_by_the_largest_block() {
    let opts = SolverOptions::default();
    let kernels: Vec<_> = (0..4)
        .map(|ell| {
            let p = SpectralPoint::new(3, ell, 1.0, 100.0).unwrap();
            let grid = RadialGrid::for_point(&p, opts.c, opts.r_min, opts.r_max, 60, 60).unwrap();
            build_green_kernel(&p, &RadialPotential::zero(), &grid, &opts, Some(Branch::SmallEll)).unwrap()
        })
        .collect();
    let mut breaks: Vec<Real> = kernels.iter().flat_map(|k| k.breakpoints()).collect();
    breaks.sort_by(Real::total_cmp);
    breaks.dedup();
    let ps: Vec<SpectralPoint> = kernels.iter().map(|k| k.spectral).collect();
    let panels = split_panels(opts.r_min, opts.r_max, &breaks, OPERATOR_KAPPA, |r| {
        ps.iter().map(|p| crate::fundsys::resolution_scale(p, r)).fold(60.0, Real::max)
    });
    let ops: Vec<ResolventOperator> = kernels.into_iter().map(|k| ResolventOperator::with_panels(k, panels.clone())).collect();
    let check = block_diagonal_check(&ops, &SphereQuadrature::new(4), &PowerOptions::default()).unwrap();
    assert_eq!(check.per_ell.len(), 4);
    assert!(check.holds(1e-6), "{check:?}");
    // the blocks are orthogonal, so the bound is attained
    assert!(check.full.norm >= check.sup_blocks * (1.0 - 1e-6), "{check:?}");
}

#[test]
fn block_check_rejects_mismatched_panels() {
    let opts = SolverOptions::default();
    let ops: Vec<ResolventOperator> = [0, 1]
        .iter()
        .map(|&ell| {
            let p = SpectralPoint::new(3, ell, 1.0, 100.0).unwrap();
            let grid = RadialGrid::for_point(&p, opts.c, opts.r_min, opts.r_max, 40, 40).unwrap();
            ResolventOperator::with_kappa(build_green_kernel(&p, &RadialPotential::zero(), &grid, &opts, None).unwrap(), 2.0 + ell as Real)
        })
        .collect();
    let err = block_diagonal_check(&ops, &SphereQuadrature::new(2), &PowerOptions::default()).unwrap_err();
    assert_eq!(err, AngularError::MismatchedPanels);
    assert_eq!(block_diagonal_check(&[], &SphereQuadrature::new(2), &PowerOptions::default()).unwrap_err(), AngularError::EmptyScan);
}

#[test]
fn angular_projection_commutes_with_the_free_fourier_resolvent() {
    let q = SphereQuadrature::new(8);
    let f = GridFunction3D::from_fn(fourier_panels(7.0, 0.5), q.clone(), gaussian_off_centre);
    let rf = free_resolvent_fourier_grid(&f);
    for idx in [AngularIndex::new(0, 0).unwrap(), AngularIndex::new(3, 2).unwrap(), AngularIndex::new(6, -4).unwrap()] {
        let qp = |g: &GridFunction3D| embed(&project(g, idx).unwrap(), idx, &q).unwrap();
        let a = free_resolvent_fourier_grid(&qp(&f));
        let b = qp(&rf);
        let gap = a.sub(&b).norm() / rf.norm();
        assert!(gap <= 1e-12, "{idx:?}: {gap:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn project_after_embed_is_identity(ell in 0u32..=10, mfrac in 0.0f64..1.0, a in -2.0f64..2.0, w in 0.3f64..3.0) {
        let m = ((2 * ell + 1) as f64 * mfrac).floor() as i32 - ell as i32;
        let idx = AngularIndex::new(ell, m.clamp(-(ell as i32), ell as i32)).unwrap();
        let q = SphereQuadrature::new(10);
        let g = RadialFunction::from_fn(radial_panels(), |r| Cplx::new(a * (-(r / w).powi(2)).exp(), r * (-r).exp()));
        let back = project(&embed(&g, idx, &q).unwrap(), idx).unwrap();
        prop_assert!(back.relative_difference(&g) < 1e-12);
    }

    #[test]
    fn indices_beyond_ell_are_rejected(ell in 0u32..60, excess in 1i32..5, neg in proptest::bool::ANY) {
        let m = (ell as i32 + excess) * if neg { -1 } else { 1 };
        prop_assert!(AngularIndex::new(ell, m).is_err());
    }
}
