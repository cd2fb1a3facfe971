use super::*;

fn panel() -> Vec<SpectralPoint> {
    let mut out = Vec::new();
    for omega in [1e2, 1e3, 1e4] {
        for ell in [0, 1, 10, 50] {
            out.push(SpectralPoint::new(3, ell, 1.0, omega).unwrap());
        }
    }
    out
}

#[test]
fn spectral_point_consistency() {
    let p = SpectralPoint::new(3, 4, 1.0, 100.0).unwrap();
    assert_eq!(p.nu, 4.5);
    assert_eq!(p.lambda, Cplx::new(4.0, 100.0));
    let a = p.alpha.unwrap();
    assert!((a * p.nu - principal_sqrt(p.mu).unwrap()).norm() < 1e-14);
    assert!(SpectralPoint::new(3, 0, 1.0, 100.0).unwrap().alpha.is_none());
    assert!(matches!(SpectralPoint::new(4, 0, 1.0, 1e2), Err(PhaseError::UnsupportedDimension(4))));
    assert!(matches!(SpectralPoint::new(3, 0, -1.0, 1e2), Err(PhaseError::UnsupportedDamping(_))));
}

#[test]
fn xi_vanishes_at_one() {
    for p in panel() {
        assert_eq!(xi_phase(&p, 1.0, 1e-12).unwrap().xi, Cplx::new(0.0, 0.0));
    }
}

#[test]
fn xi_real_test_mode_closed_form() {
    let p = SpectralPoint::real_test(0.0, 1.0);
    let exact = 5f64.sqrt() + 2f64.asinh() / 2.0 - 2f64.sqrt() / 2.0 - 1f64.asinh() / 2.0;
    let v = xi_phase(&p, 2.0, 1e-13).unwrap();
    assert!((v.xi.re - exact).abs() < 1e-12 && v.xi.im.abs() < 1e-15);
    assert!((v.xi_prime.re - 5f64.sqrt()).abs() < 1e-14);
}

#[test]
fn xi_against_direct_quadrature_of_definition() {
    let p = SpectralPoint::new(3, 3, 1.0, 300.0).unwrap();
    let m = p.mu;
    for r in [0.2, 0.7, 3.0, 11.0] {
        let direct = adaptive_quad(
            |s: f64| sqrt_off_cut(1.0 + s * s / m + p.nu * p.nu / (m * s * s)),
            1.0,
            r,
            1e-13,
        )
        .unwrap()
        .value
            / p.sqrt_mu();
        let v = xi_phase(&p, r, 1e-13).unwrap();
        assert!((v.xi - direct).norm() < 1e-11 * (1.0 + direct.norm()), "r={r}");
    }
}

#[test]
fn decomposition_and_derivative_identities() {
    for p in panel() {
        for r in [0.1, 0.5, 2.0, 20.0] {
            let v = xi_phase(&p, r, 1e-12).unwrap();
            let recon = 0.5 * r * r + v.log_weight + v.phi;
            assert!((v.mu_xi(&p).re - recon).abs() <= 1e-10 * (1.0 + recon.abs()));
            let y2 = r * r / p.mu;
            let rhs = 1.0 + y2 + (p.nu / p.mu).powi(2) / y2;
            assert!((v.xi_prime * v.xi_prime - rhs).norm() < 1e-12 * rhs.norm());
        }
    }
}

#[test]
fn profile_matches_pointwise() {
    let p = SpectralPoint::new(3, 10, 1.0, 1e3).unwrap();
    let rs = [3.0, 0.1, 1.0, 0.5, 40.0];
    let prof = xi_profile(&p, &rs, 1e-12).unwrap();
    for (v, &r) in prof.iter().zip(&rs) {
        let w = xi_phase(&p, r, 1e-12).unwrap();
        assert!((v.xi - w.xi).norm() < 1e-12 * (1.0 + w.xi.norm()));
    }
}

#[test]
fn phi_is_nondecreasing() {
    let rs: Vec<f64> = (0..2000).map(|i| 0.1 + (50.0 - 0.1) * i as f64 / 1999.0).collect();
    for omega in [1e3] {
        for ell in [0, 10] {
            let p = SpectralPoint::new(3, ell, 1.0, omega).unwrap();
            let phi: Vec<f64> = xi_profile(&p, &rs, 1e-12).unwrap().iter().map(|v| v.phi).collect();
            assert!(min_increment(&phi) >= -1e-9, "ell={ell}");
        }
    }
}

#[test]
fn q_examples() {
    let p = SpectralPoint::real_test(0.0, 1.0);
    assert!((lg_potential_Q(&p, 1.0) - Cplx::new(-1.0 / 16.0, 0.0)).norm() < 1e-15);
    let y = 1e5;
    assert!((lg_potential_Q(&p, y).re * y * y + 0.75).abs() < 1e-8);
}

#[test]
fn q_is_minus_schwarzian_of_momentum() {
    // mu^{-1} Q = -(3/4 (p'/p)^2 - 1/2 p''/p) for p = sqrt(mu + r^2 + nu^2/r^2)
    let p = SpectralPoint::new(3, 2, 1.0, 200.0).unwrap();
    for r in [0.3, 1.0, 4.0] {
        let f = p.mu + r * r + p.nu * p.nu / (r * r);
        let f1 = 2.0 * r - 2.0 * p.nu * p.nu / r.powi(3);
        let f2 = 2.0 + 6.0 * p.nu * p.nu / r.powi(4);
        // p'/p = f'/(2f), p''/p = f''/(2f) - f'^2/(4f^2)
        let l1 = f1 / (2.0 * f);
        let l2 = f2 / (2.0 * f) - f1 * f1 / (4.0 * f * f);
        let sigma = 0.75 * l1 * l1 - 0.5 * l2;
        assert!((lg_potential_Q(&p, r) + sigma).norm() < 1e-12 * sigma.norm());
    }
}

#[test]
fn q_bounds_stable_across_omega() {
    let rs = log_grid(1e-2, 1e2, 400);
    for ell in [0, 1, 10, 100] {
        let sups: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&w| {
                let p = SpectralPoint::new(3, ell, 1.0, w).unwrap();
                rs.iter().map(|&r| estq_ratio(&p, r)).fold(0.0, f64::max)
            })
            .collect();
        assert!(sups.iter().all(|s| s.is_finite()));
        for w in sups.windows(2) {
            assert!(w[1] / w[0] < 2.0 && w[0] / w[1] < 2.0, "ell={ell} {sups:?}");
        }
    }
}

#[test]
fn zeta_examples_and_monotonicity() {
    let p = SpectralPoint::new(3, 20, 1.0, 1e3).unwrap();
    let (z, _) = zeta_phase(&p, 1.0).unwrap();
    assert!(z.norm() < 1e-15);
    let t = SpectralPoint::real_test(1.0, 1.0);
    let (_, zp) = zeta_phase(&t, 1.0).unwrap();
    assert!((zp.re - 2f64.sqrt()).abs() < 1e-15);
    let rs = log_grid(1e-3, 1e2, 2000);
    let re: Vec<f64> = rs.iter().map(|&r| zeta_phase(&p, r).unwrap().0.re).collect();
    assert!(min_increment(&re) >= -1e-9);
    // zeta'(x) = sqrt(1 + 1/x^2) against a centred difference in r
    let r = 0.8;
    let h = 1e-5;
    let fd = (zeta_phase(&p, r + h).unwrap().0 - zeta_phase(&p, r - h).unwrap().0) / (2.0 * h);
    let a = p.alpha.unwrap();
    assert!((fd - a * zeta_phase(&p, r).unwrap().1).norm() < 1e-7 * fd.norm());
}

#[test]
fn qtilde_examples() {
    let p = SpectralPoint::new(3, 5, 1.0, 1e3).unwrap();
    let a = p.alpha.unwrap();
    assert!((bessel_potential_qtilde(&p, 0.0).unwrap() - a * a).norm() < 1e-15);
    let t = SpectralPoint::real_test(1.0, 1.0);
    assert_eq!(bessel_potential_qtilde(&t, 2.0).unwrap(), Cplx::new(0.0, 0.0));
    assert!(matches!(
        bessel_potential_qtilde(&SpectralPoint::new(3, 0, 1.0, 1e2).unwrap(), 1.0),
        Err(PhaseError::AlphaUndefined(_))
    ));
}

#[test]
fn qtilde_bound_stable() {
    let rs = log_grid(1e-3, 1e2, 400);
    for ell in [1, 10, 50] {
        let sups: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&w| {
                let p = SpectralPoint::new(3, ell, 1.0, w).unwrap();
                rs.iter().map(|&r| tildeq_ratio(&p, r).unwrap()).fold(0.0, f64::max)
            })
            .collect();
        for w in sups.windows(2) {
            assert!(w[1] / w[0] < 2.0 && w[0] / w[1] < 2.0, "ell={ell} {sups:?}");
        }
    }
}
