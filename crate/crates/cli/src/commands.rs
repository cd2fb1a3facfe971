//! Subcommand bodies. Each returns whether its invariants held; the binary
//! maps that to the exit status.

use std::io::Write;

use ou_resolvent::angular::RadialFunction;
use ou_resolvent::fundsys::{PanelSet, RadialGrid};
use ou_resolvent::phase::{log_grid, xi_profile, SpectralPoint};
use ou_resolvent::resolvent::{bound_grid, build_green_kernel, kernel_bound, scan, CellKind, ScanReport};
use ou_resolvent::semigroup::{
    laplace_crosscheck, laplace_horizon, ou_apply_channel, spread_panels, LaplaceOptions, OUKernelParams,
};
use ou_resolvent::{Cplx, Real};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::RunConfig;

pub fn cmd_scan(cfg: &RunConfig) -> ScanReport {
    scan(&cfg.scan_config())
}

/// Zero iff no cell failed, none is degenerate and every bound ratio is finite.
pub fn scan_passed(report: &ScanReport) -> bool {
    report.rows.iter().all(|r| r.error.is_none() && !r.degenerate_flag && r.bound_ratio_sup.is_finite())
}

/// Failed cells as `error,omega,ell,message` lines.
pub fn write_scan_errors<W: Write>(report: &ScanReport, out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().from_writer(out);
    for row in report.rows.iter().filter(|r| r.error.is_some()) {
        w.write_record(["error", &row.omega.to_string(), &row.ell.to_string(), row.error.as_deref().unwrap_or("")])?;
    }
    w.flush()?;
    Ok(())
}

pub const SEMIGROUP_SCHEMA: &str = "schema=ou-resolvent-semigroup/1";
/// `check` is `growth`, `law` or `laplace`; `t` is the time (for `law` the
/// total time `t + s`, for `laplace` the horizon); rows are sorted by `t`.
pub const SEMIGROUP_COLUMNS: [&str; 6] = ["t", "check", "ell", "measured", "limit", "pass"];

#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupRow {
    pub t: Real,
    pub check: &'static str,
    /// `None` for rows aggregated over the whole function panel.
    pub ell: Option<u32>,
    pub measured: Real,
    pub limit: Real,
}

impl SemigroupRow {
    pub fn pass(&self) -> bool {
        self.measured <= self.limit
    }
}

fn shell_panels() -> PanelSet {
    PanelSet::from_edges((0..=8).map(|k| k as Real).collect())
}

/// Twenty channel functions: sums of three random Gaussian shells times
/// `r^ell`, `ell = i mod 4`.
pub fn function_panel() -> Vec<(u32, RadialFunction)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..20)
        .map(|i| {
            let ell = (i % 4) as u32;
            let bumps: Vec<(Real, Real, Cplx)> = (0..3)
                .map(|_| {
                    let c = rng.gen_range(0.0..3.0);
                    let w = rng.gen_range(0.3..1.5);
                    (c, w, Cplx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                })
                .collect();
            let g = RadialFunction::from_fn(shell_panels(), |r| {
                bumps.iter().map(|(c, w, a)| a * (-((r - c) / w).powi(2)).exp()).sum::<Cplx>() * r.powi(ell as i32)
            });
            (ell, g)
        })
        .collect()
}

pub fn cmd_semigroup(cfg: &RunConfig) -> anyhow::Result<Vec<SemigroupRow>> {
    let d = cfg.d;
    let panel = function_panel();
    let mut rows = vec![];
    for t in [0.1, 0.5, 1.0, 2.0] {
        let p = OUKernelParams::new(t, d)?;
        let ratios: Vec<anyhow::Result<Real>> = panel
            .par_iter()
            .map(|(ell, g)| {
                let out = ou_apply_channel(&p, *ell, g, &spread_panels(&p, g))?;
                Ok(out.norm(d) / g.norm(d) / (d as Real * t).exp())
            })
            .collect();
        let mut worst: Real = 0.0;
        for r in ratios {
            worst = worst.max(r?);
        }
        rows.push(SemigroupRow { t, check: "growth", ell: None, measured: worst, limit: 1.0 + 1e-6 });
    }
    for (t, s) in [(0.3, 0.5), (0.1, 1.0)] {
        let (pt, ps, pts) = (OUKernelParams::new(t, d)?, OUKernelParams::new(s, d)?, OUKernelParams::new(t + s, d)?);
        let mut worst: Real = 0.0;
        for (ell, g) in panel.iter().take(4) {
            let mid = ou_apply_channel(&ps, *ell, g, &spread_panels(&ps, g))?;
            let fin = spread_panels(&pts, g);
            let two = ou_apply_channel(&pt, *ell, &mid, &fin)?;
            let one = ou_apply_channel(&pts, *ell, g, &fin)?;
            worst = worst.max(two.sub_norm(&one, d) / one.norm(d));
        }
        rows.push(SemigroupRow { t: t + s, check: "law", ell: None, measured: worst, limit: 1e-4 });
    }
    let opts = LaplaceOptions::default();
    let data_panels = PanelSet::from_edges(vec![0.0, 3.5, 7.0]);
    for ell in 0..=cfg.ell_max.min(5) {
        let p = SpectralPoint::new(d, ell, cfg.b, cfg.omega_min)?;
        let f = RadialFunction::from_fn(data_panels.clone(), |r| Cplx::new(r.powi(ell as i32) * (-r * r).exp(), 0.0));
        let horizon = laplace_horizon(&p, opts.tol);
        let check = laplace_crosscheck(&p, &f, horizon, &opts)?;
        rows.push(SemigroupRow { t: horizon, check: "laplace", ell: Some(ell), measured: check.discrepancy, limit: 1e-3 });
    }
    rows.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(rows)
}

pub fn write_semigroup_csv<W: Write>(rows: &[SemigroupRow], mut out: W) -> Result<(), csv::Error> {
    writeln!(out, "# {SEMIGROUP_SCHEMA}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SEMIGROUP_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            r.check.to_string(),
            r.ell.map(|l| l.to_string()).unwrap_or_else(|| "all".into()),
            r.measured.to_string(),
            r.limit.to_string(),
            u8::from(r.pass()).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const PHASE_SCHEMA: &str = "schema=ou-resolvent-phase/1";
pub const PHASE_COLUMNS: [&str; 7] = ["r", "xi_re", "xi_im", "xi_prime_re", "xi_prime_im", "phi", "log_weight"];

/// Phase functions at `omega.min` and `ell` on 400 log-spaced radii in `[1e-3, r_max]`.
pub fn cmd_phase_dump<W: Write>(cfg: &RunConfig, ell: u32, mut out: W) -> anyhow::Result<()> {
    let p = SpectralPoint::new(cfg.d, ell, cfg.b, cfg.omega_min)?;
    let rs = log_grid(1e-3, cfg.r_max, 400);
    let values = xi_profile(&p, &rs, cfg.tol_quad)?;
    writeln!(out, "# {PHASE_SCHEMA} d={} ell={ell} b={} omega={}", cfg.d, cfg.b, cfg.omega_min)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PHASE_COLUMNS)?;
    for v in values {
        w.write_record(
            [v.r, v.xi.re, v.xi.im, v.xi_prime.re, v.xi_prime.im, v.phi, v.log_weight].map(|x| x.to_string()),
        )?;
    }
    w.flush()?;
    Ok(())
}

pub const KERNEL_SCHEMA: &str = "schema=ou-resolvent-kernel/1";
pub const KERNEL_COLUMNS: [&str; 6] = ["r", "s", "abs_g", "bound", "ratio", "cell"];

/// `|G(r, s)|` against the uniform bound at `omega.min` and `ell` on a
/// `points x points` grid.
pub fn cmd_kernel_dump<W: Write>(cfg: &RunConfig, ell: u32, points: usize, mut out: W) -> anyhow::Result<()> {
    let p = SpectralPoint::new(cfg.d, ell, cfg.b, cfg.omega_min)?;
    let s = cfg.solver();
    let grid = RadialGrid::for_point(&p, s.c, s.r_min, s.r_max, cfg.n_inner, cfg.n_outer)?;
    let k = build_green_kernel(&p, &cfg.potential, &grid, &s, None)?;
    writeln!(
        out,
        "# {KERNEL_SCHEMA} d={} ell={ell} b={} omega={} branch={}",
        cfg.d,
        cfg.b,
        cfg.omega_min,
        k.branch.name()
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(KERNEL_COLUMNS)?;
    let radii = bound_grid(&k, points);
    for &r in &radii {
        for &sr in &radii {
            let g = k.eval(r, sr).abs();
            let bound = kernel_bound(p.omega, p.b, r, sr);
            w.write_record([
                r.to_string(),
                sr.to_string(),
                g.to_string(),
                bound.to_string(),
                (g / bound).to_string(),
                CellKind::of(k.split, r, sr).name().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
