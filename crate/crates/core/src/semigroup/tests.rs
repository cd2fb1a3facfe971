use super::*;
use crate::angular::SphereQuadrature;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn panels(hi: Real, n: usize) -> PanelSet {
    PanelSet::from_edges((0..=n).map(|k| hi * k as Real / n as Real).collect())
}

fn rel_sup(a: &[Cplx], b: &[Cplx]) -> Real {
    let scale = b.iter().map(|z| z.norm()).fold(0.0, Real::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, Real::max) / scale
}

/// Twenty channel functions: sums of random Gaussian shells in `ell <= 3`.
fn panel_functions() -> Vec<(u32, RadialFunction)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..20)
        .map(|i| {
            let ell = (i % 4) as u32;
            let bumps: Vec<(Real, Real, Cplx)> = (0..3)
                .map(|_| {
                    (
                        rng.gen_range(0.0..3.0),
                        rng.gen_range(0.3..1.5),
                        Cplx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    )
                })
                .collect();
            let g = RadialFunction::from_fn(panels(8.0, 8), |r| {
                bumps.iter().map(|(c, w, a)| a * (-((r - c) / w).powi(2)).exp()).sum::<Cplx>() * r.powi(ell as i32)
            });
            (ell, g)
        })
        .collect()
}

#[test]
fn params_validate_time_and_dimension() {
    let p = OUKernelParams::new(0.25, 3).unwrap();
    assert!((p.alpha_t - (1.0 - (-1.0 as Real).exp())).abs() < 1e-15);
    assert!(p.alpha_t > 0.0 && p.alpha_t < 1.0);
    assert!(OUKernelParams::new(1e-9, 3).unwrap().alpha_t > 0.0);
    assert_eq!(OUKernelParams::new(0.0, 3), Err(SemigroupError::InvalidTime(0.0)));
    assert_eq!(OUKernelParams::new(1.0, 4), Err(SemigroupError::UnsupportedDimension(4)));
}

#[test]
fn gaussian_maps_to_the_closed_form_gaussian() {
    // S0(t) e^{-a|x|^2} = (1 + a alpha)^{-d/2} e^{-a e^{-4t} |x|^2 / (1 + a alpha)}
    for d in [3, 5] {
        for a in [0.5, 2.0] {
            for t in [0.1, 0.5, 1.0, 2.0] {
                let p = OUKernelParams::new(t, d).unwrap();
                let g = RadialFunction::from_fn(panels(8.0, 8), |r| Cplx::new((-a * r * r).exp(), 0.0));
                let targets: Vec<Real> = (0..26).map(|k| 0.2 * k as Real).collect();
                let got = ou_apply_channel_at(&p, 0, &g, &targets).unwrap();
                let q = 1.0 + a * p.alpha_t;
                let want: Vec<Cplx> = targets
                    .iter()
                    .map(|r| Cplx::new(q.powf(-0.5 * d as Real) * (-a * (-4.0 * t).exp() * r * r / q).exp(), 0.0))
                    .collect();
                let err = rel_sup(&got, &want);
                assert!(err < 1e-10, "d={d} a={a} t={t}: {err:e}");
            }
        }
    }
}

#[test]
fn channel_kernel_matches_three_dimensional_quadrature() {
    let q = SphereQuadrature::new(32);
    let p = OUKernelParams::new(0.5, 3).unwrap();
    let radial = panels(7.0, 7);
    for (ell, m) in [(0u32, 0i32), (1, -1), (3, 2)] {
        let idx = AngularIndex::new(ell, m).unwrap();
        let g = RadialFunction::from_fn(radial.clone(), |r| Cplx::new((-(r - 1.0).powi(2)).exp(), 0.2 * r * (-r * r).exp()));
        let f = embed(&g, idx, &q).unwrap();
        let pts: Vec<[Real; 3]> = vec![[0.3, 0.1, -0.2], [1.0, -0.5, 0.7], [-1.5, 1.2, 0.4], [0.0, 0.0, 2.5], [2.0, 2.0, -1.0]];
        let direct = ou_apply_direct(&p, &f, &pts);
        let channel: Vec<Cplx> = pts
            .iter()
            .map(|x| {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                let v = ou_apply_channel_at(&p, ell, &g, &[r]).unwrap()[0];
                v * crate::angular::real_spherical_harmonic(idx, x[2] / r, x[1].atan2(x[0]))
            })
            .collect();
        let err = rel_sup(&channel, &direct);
        assert!(err < 1e-8, "ell={ell}: {err:e}");
    }
}

#[test]
fn grid_form_agrees_with_channel_form() {
    let q = SphereQuadrature::new(4);
    let p = OUKernelParams::new(0.3, 3).unwrap();
    let idx = AngularIndex::new(2, 1).unwrap();
    let g = RadialFunction::from_fn(panels(6.0, 6), |r| Cplx::new(r * r * (-r * r).exp(), 0.0));
    let out = ou_apply_grid(&p, &embed(&g, idx, &q).unwrap()).unwrap();
    let want = embed(&ou_apply_channel(&p, 2, &g, &g.panels).unwrap(), idx, &q).unwrap();
    assert!(out.sub(&want).norm() <= 1e-12 * want.norm());
}

#[test]
fn short_time_limit_is_the_identity() {
    let p = OUKernelParams::new(1e-4, 3).unwrap();
    for ell in 0..3u32 {
        let g = RadialFunction::from_fn(panels(8.0, 8), |r| Cplx::new(r.powi(ell as i32) * (-r * r).exp(), 0.0));
        let out = ou_apply_channel(&p, ell, &g, &g.panels).unwrap();
        let err = out.sub_norm(&g, 3) / g.norm(3);
        assert!(err < 1e-3, "ell={ell}: {err:e}");
    }
}

#[test]
fn short_time_difference_quotient_is_the_generator() {
    // (S0(t) g - g) / t -> g'' + (2/r - 2r) g' - l(l+1)/r^2 g for smooth g
    let t = 1e-5;
    let p = OUKernelParams::new(t, 3).unwrap();
    for ell in 0..4u32 {
        let gf = |r: Real| r.powi(ell as i32) * (-r * r).exp();
        let g = RadialFunction::from_fn(panels(8.0, 8), |r| Cplx::new(gf(r), 0.0));
        let targets = [0.4, 0.9, 1.5, 2.3];
        let out = ou_apply_channel_at(&p, ell, &g, &targets).unwrap();
        for (&r, s) in targets.iter().zip(out) {
            let h = 1e-3;
            let d1 = (gf(r + h) - gf(r - h)) / (2.0 * h);
            let d2 = (gf(r + h) - 2.0 * gf(r) + gf(r - h)) / (h * h);
            let lg = d2 + (2.0 / r - 2.0 * r) * d1 - (ell * (ell + 1)) as Real / (r * r) * gf(r);
            let quotient = (s.re - gf(r)) / t;
            assert!((quotient - lg).abs() < 1e-2 * lg.abs().max(1.0), "ell={ell} r={r}: {quotient} vs {lg}");
        }
    }
}

#[test]
fn growth_bound_holds_on_the_panel() {
    let mut worst: Real = 0.0;
    for t in [0.1, 0.5, 1.0, 2.0] {
        let p = OUKernelParams::new(t, 3).unwrap();
        for (ell, g) in panel_functions() {
            let out = ou_apply_channel(&p, ell, &g, &spread_panels(&p, &g)).unwrap();
            worst = worst.max(out.norm(3) / g.norm(3) / (3.0 * t).exp());
        }
    }
    eprintln!("max ||S0(t) f|| e^(-dt) / ||f|| = {worst}");
    assert!(worst <= 1.0 + 1e-6);
}

#[test]
fn semigroup_law() {
    for (t, s) in [(0.3, 0.5), (0.1, 1.0)] {
        for (ell, g) in panel_functions().into_iter().take(3) {
            let ps = OUKernelParams::new(s, 3).unwrap();
            let pt = OUKernelParams::new(t, 3).unwrap();
            let pts = OUKernelParams::new(t + s, 3).unwrap();
            let mid = ou_apply_channel(&ps, ell, &g, &spread_panels(&ps, &g)).unwrap();
            let fin = spread_panels(&pts, &g);
            let two = ou_apply_channel(&pt, ell, &mid, &fin).unwrap();
            let one = ou_apply_channel(&pts, ell, &g, &fin).unwrap();
            let err = two.sub_norm(&one, 3) / one.norm(3);
            assert!(err < 1e-4, "t={t} s={s} ell={ell}: {err:e}");
        }
    }
}

#[test]
fn laplace_transform_matches_the_resolvent() {
    let opts = LaplaceOptions::default();
    for ell in 0..=5u32 {
        let p = SpectralPoint::new(3, ell, 2.0, 100.0).unwrap();
        let f = RadialFunction::from_fn(panels(7.0, 2), |r| Cplx::new(r.powi(ell as i32) * (-r * r).exp(), 0.0));
        let t = laplace_horizon(&p, opts.tol);
        let check = laplace_crosscheck(&p, &f, t, &opts).unwrap();
        eprintln!("ell={ell} T={t:.3} discrepancy={:e} nodes={}", check.discrepancy, check.time_nodes);
        assert!(check.discrepancy < 1e-3);
    }
}

#[test]
fn laplace_zero_data_and_horizon_checks() {
    let p = SpectralPoint::new(3, 0, 2.0, 100.0).unwrap();
    let opts = LaplaceOptions::default();
    let zero = RadialFunction::from_fn(panels(7.0, 2), |_| Cplx::new(0.0, 0.0));
    assert_eq!(laplace_crosscheck(&p, &zero, laplace_horizon(&p, opts.tol), &opts).unwrap().discrepancy, 0.0);
    assert!(matches!(laplace_crosscheck(&p, &zero, 0.5, &opts), Err(SemigroupError::HorizonTooShort { .. })));

    let f = RadialFunction::from_fn(panels(7.0, 2), |r| Cplx::new((-r * r).exp(), 0.0));
    let loose = LaplaceOptions { enforce_horizon: false, ..opts };
    let errs: Vec<Real> =
        [0.05, 0.2, 0.8].iter().map(|&t| laplace_crosscheck(&p, &f, t, &loose).unwrap().discrepancy).collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}

#[test]
fn fourier_kernel_support_and_bound() {
    for d in [3, 5] {
        assert_eq!(fourier_kernel(d, 2.0, 1.0), 0.0);
        assert!(fourier_kernel(d, 1.0, 2.0) > 0.0);
        let radii = crate::phase::log_grid(1e-3, 20.0, 200);
        let sup = fourier_kernel_ratio_sup(d, &radii);
        assert!(sup.is_finite() && sup <= 0.5 + 1e-12, "d={d}: {sup}");
    }
}

#[test]
fn inverse_transform_of_a_gaussian() {
    // F^{-1}[e^{-k^2}](r) = (4 pi)^{-3/2} e^{-r^2/4}
    let g = RadialFunction::from_fn(fourier_panels(8.0, 0.25), |k| Cplx::new((-k * k).exp(), 0.0));
    for r in [0.1, 0.7, 2.0, 4.5] {
        let got = inverse_radial_fourier(&g, 3, r).unwrap();
        let want = (4.0 * PI).powf(-1.5) * (-r * r / 4.0).exp();
        assert!((got.re - want).abs() < 1e-12 * want.max(1e-3), "r={r}");
    }
}

#[test]
fn fourier_resolvent_solves_the_defining_equation() {
    for d in [3, 5] {
        let f_hat = RadialFunction::from_fn(fourier_panels(8.0, 0.25), |k| Cplx::new((-k * k).exp(), 0.0));
        let points: Vec<Real> = (1..=8).map(|k| 0.5 * k as Real).collect();
        let res = fourier_residual(&f_hat, d, &points, 1e-2).unwrap();
        eprintln!("d={d} Fourier residual {res:e}");
        assert!(res < 1e-3);
        let sol = free_resolvent_fourier(&f_hat, d).unwrap();
        assert!(sol.kernel_ratio_sup <= 0.5 + 1e-12);
        // |xi|^2 u^ - 2 |xi| du^/d|xi| = f^ at interior nodes
        let u = &sol.u_hat;
        for k in [0.3, 1.0, 2.2] {
            let h = 1e-4;
            let du = (u.eval(k + h) - u.eval(k - h)) / (2.0 * h);
            let lhs = k * k * u.eval(k) - 2.0 * k * du;
            assert!((lhs - f_hat.eval(k)).norm() < 1e-6, "k={k}: {:e}", (lhs - f_hat.eval(k)).norm());
        }
    }
}

fn far_grid() -> RadialGrid {
    RadialGrid::new(1e-3, 60.0, 20, 240, &[]).unwrap()
}

#[test]
fn appendix_b_slopes_follow_the_exponent_formula() {
    let opts = AppendixBOptions::default();
    for v in [RadialPotential::zero(), RadialPotential::bump(1.0)] {
        for lambda in [Cplx::new(0.0, 0.0), Cplx::new(1.0, 0.0), Cplx::new(2.0, 0.0), Cplx::new(1.0, 3.0)] {
            let s = appendix_b_slopes(3, lambda, &v, &far_grid(), &opts).unwrap();
            let (e0, e1) = AppendixBSlopes::expected(3, lambda);
            eprintln!("{:?} lambda={lambda}: slope1 {} (want {e1}), slope0 {} (want {e0})", v.kind, s.slope1, s.slope0);
            assert!((s.slope1 - e1).abs() < 0.05);
            assert!((s.slope0 - e0).abs() < 0.05);
            assert!(s.l2_far.is_finite() && s.l2_far > 0.0);
        }
    }
}

#[test]
fn appendix_b_rejects_the_right_half_plane_and_bad_fits() {
    let opts = AppendixBOptions::default();
    let v = RadialPotential::zero();
    assert!(matches!(
        appendix_b_slopes(3, Cplx::new(3.5, 0.0), &v, &far_grid(), &opts),
        Err(SemigroupError::SpectralOutOfRange { .. })
    ));
    let strict = AppendixBOptions { fit_threshold: 1e-14, ..opts };
    assert!(matches!(
        appendix_b_slopes(3, Cplx::new(1.0, 3.0), &v, &far_grid(), &strict),
        Err(SemigroupError::FitQualityLow { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn alpha_stays_in_the_unit_interval(t in 1e-8f64..20.0) {
        let p = OUKernelParams::new(t, 3).unwrap();
        prop_assert!(p.alpha_t > 0.0 && p.alpha_t <= 1.0);
    }

    #[test]
    fn channel_kernel_is_nonnegative(t in 0.01f64..3.0, ell in 0u32..6, r in 0.0f64..6.0, rho in 1e-3f64..6.0) {
        let p = OUKernelParams::new(t, 3).unwrap();
        prop_assert!(channel_kernel(&p, ell, r, rho).unwrap() >= 0.0);
    }
}

