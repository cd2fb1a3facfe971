//! Parameter scans over `(omega, ell)` cells with a deterministic ordered merge.

use std::io::Write;

use rayon::prelude::*;

use crate::fundsys::{RadialGrid, RadialPotential, SolverOptions};
use crate::phase::SpectralPoint;
use crate::{Cplx, Real};

use super::{
    bound_grid, build_green_kernel, green_residual, verify_kernel_bound, PowerOptions, ResolventError,
    ResolventOperator,
};

/// Frozen column order of the scan CSV.
pub const CSV_COLUMNS: [&str; 10] = [
    "omega",
    "ell",
    "b",
    "norm_estimate",
    "bound_ratio_sup",
    "wronskian_drift",
    "residual_max",
    "envelope_weber",
    "envelope_bessel",
    "degenerate_flag",
];

/// Written as the first line of every scan CSV, after a `#`.
pub const CSV_SCHEMA: &str = "schema=ou-resolvent-scan/1";

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub d: u32,
    pub b: Real,
    pub omegas: Vec<Real>,
    pub ells: Vec<u32>,
    pub potential: RadialPotential,
    pub n_inner: usize,
    pub n_outer: usize,
    pub solver: SolverOptions,
    pub power: PowerOptions,
    /// Radii per axis of the kernel bound grid.
    pub bound_points: usize,
    /// Radii at which the Green residual is sampled; zero disables it.
    pub residual_points: usize,
    /// Accept frequencies below `solver.omega0`.
    pub allow_low_omega: bool,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            d: 3,
            b: 1.0,
            omegas: log_spaced(1e2, 1e4, 7),
            ells: (0..=50).collect(),
            potential: RadialPotential::zero(),
            n_inner: 200,
            n_outer: 200,
            solver: SolverOptions::default(),
            power: PowerOptions::default(),
            bound_points: 200,
            residual_points: 12,
            allow_low_omega: false,
        }
    }
}

/// `n` log-spaced values from `a` to `b` (just `a` when `n == 1`).
pub fn log_spaced(a: Real, b: Real, n: usize) -> Vec<Real> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => {
            let mut w = crate::phase::log_grid(a, b, n);
            w[0] = a;
            w[n - 1] = b;
            w
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub omega: Real,
    pub ell: u32,
    pub b: Real,
    pub norm_estimate: Real,
    pub bound_ratio_sup: Real,
    pub wronskian_drift: Real,
    pub residual_max: Real,
    pub envelope_weber: Real,
    pub envelope_bessel: Real,
    pub degenerate_flag: bool,
    /// Per-cell failure, if any; numeric fields are then NaN.
    pub error: Option<String>,
}

impl ScanRow {
    fn failed(omega: Real, ell: u32, b: Real, err: &ResolventError) -> Self {
        Self {
            omega,
            ell,
            b,
            norm_estimate: Real::NAN,
            bound_ratio_sup: Real::NAN,
            wronskian_drift: Real::NAN,
            residual_max: Real::NAN,
            envelope_weber: Real::NAN,
            envelope_bessel: Real::NAN,
            degenerate_flag: err.is_degenerate(),
            error: Some(err.to_string()),
        }
    }

    fn fields(&self) -> [String; 10] {
        [
            self.omega.to_string(),
            self.ell.to_string(),
            self.b.to_string(),
            self.norm_estimate.to_string(),
            self.bound_ratio_sup.to_string(),
            self.wronskian_drift.to_string(),
            self.residual_max.to_string(),
            self.envelope_weber.to_string(),
            self.envelope_bessel.to_string(),
            u8::from(self.degenerate_flag).to_string(),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.error.is_none()
            && [
                self.norm_estimate,
                self.bound_ratio_sup,
                self.wronskian_drift,
                self.residual_max,
                self.envelope_weber,
                self.envelope_bessel,
            ]
            .iter()
            .all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
}

impl ScanReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), csv::Error> {
        writeln!(out, "# {CSV_SCHEMA}")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_COLUMNS)?;
        for row in &self.rows {
            w.write_record(row.fields())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    pub fn any_degenerate(&self) -> bool {
        self.rows.iter().any(|r| r.degenerate_flag)
    }

    /// Largest finite norm estimate.
    pub fn sup_norm(&self) -> Real {
        self.rows.iter().map(|r| r.norm_estimate).filter(|x| x.is_finite()).fold(0.0, Real::max)
    }
}

/// Smooth bump supported on `(0.5, 2.5)` used for the residual column.
fn residual_probe(r: Real) -> Cplx {
    let x = r - 1.5;
    if x.abs() >= 1.0 {
        Cplx::new(0.0, 0.0)
    } else {
        Cplx::new(1.0, 0.5 * x) * (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

fn run_cell(cfg: &ScanConfig, omega: Real, ell: u32) -> Result<ScanRow, ResolventError> {
    if omega < cfg.solver.omega0 && !cfg.allow_low_omega {
        return Err(ResolventError::OmegaBelowFloor { omega, omega0: cfg.solver.omega0 });
    }
    let p = SpectralPoint::new(cfg.d, ell, cfg.b, omega)?;
    let o = &cfg.solver;
    let grid = RadialGrid::for_point(&p, o.c, o.r_min, o.r_max, cfg.n_inner, cfg.n_outer)?;
    let kernel = build_green_kernel(&p, &cfg.potential, &grid, o, None)?;
    let bound_ratio_sup = if cfg.bound_points > 1 {
        verify_kernel_bound(&kernel, &bound_grid(&kernel, cfg.bound_points)).measured_sup
    } else {
        Real::NAN
    };
    let (wronskian_drift, envelope_weber, envelope_bessel) =
        (kernel.wronskian_drift, kernel.envelope_weber, kernel.envelope_bessel);
    let op = ResolventOperator::new(kernel);
    let norm_estimate = op.norm_estimate(&cfg.power)?.norm;
    let residual_max = if cfg.residual_points > 0 {
        let pts = crate::phase::log_grid(0.6, 2.4, cfg.residual_points);
        green_residual(&op, residual_probe, &pts)
    } else {
        0.0
    };
    Ok(ScanRow {
        omega,
        ell,
        b: cfg.b,
        norm_estimate,
        bound_ratio_sup,
        wronskian_drift,
        residual_max,
        envelope_weber,
        envelope_bessel,
        degenerate_flag: false,
        error: None,
    })
}

/// One scan cell; failures are recorded in the row.
pub fn scan_cell(cfg: &ScanConfig, omega: Real, ell: u32) -> ScanRow {
    run_cell(cfg, omega, ell).unwrap_or_else(|e| ScanRow::failed(omega, ell, cfg.b, &e))
}

/// All cells of `omegas x ells`, ordered by `(omega, ell)` whatever the pool size.
pub fn scan(cfg: &ScanConfig) -> ScanReport {
    let mut omegas = cfg.omegas.clone();
    omegas.sort_by(Real::total_cmp);
    let mut ells = cfg.ells.clone();
    ells.sort_unstable();
    let cells: Vec<(Real, u32)> = omegas.iter().flat_map(|&w| ells.iter().map(move |&l| (w, l))).collect();
    let rows = cells.par_iter().map(|&(w, l)| scan_cell(cfg, w, l)).collect();
    ScanReport { rows }
}
