//! Adaptive Dormand-Prince 5(4) integration of `v'' = q v` in the gauge
//! `v = L h`, where the state `(h, h')` obeys `h'' = P h - 2 (L'/L) h'` and
//! never carries the exponential growth of `L`.

use crate::{Cplx, Real, ScaledC};

use super::leading::LeadingOrder;
use super::{FundsysError, GridFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OdeDirection {
    Inward,
    Outward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: Real,
    pub atol: Real,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14, max_steps: 2_000_000 }
    }
}

/// Initial data `v(r0)`, `v'(r0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    pub r0: Real,
    pub value: ScaledC,
    pub derivative: ScaledC,
}

type State = [Cplx; 2];

const C: [Real; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[Real; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [Real; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [Real; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate in the gauge of `lead` with perturbation `pert` (normally
/// `lead.perturbation`), reporting `(v, v')` at `points` beyond `seed.r0`.
pub fn direct_integrate_gauge<F: Fn(Real) -> Cplx>(
    lead: &dyn LeadingOrder,
    pert: F,
    seed: Seed,
    direction: OdeDirection,
    points: &[Real],
    opts: &OdeOptions,
) -> Result<GridFunction, FundsysError> {
    let mut targets: Vec<Real> = points
        .iter()
        .copied()
        .filter(|&r| match direction {
            OdeDirection::Outward => r >= seed.r0,
            OdeDirection::Inward => r <= seed.r0,
        })
        .collect();
    targets.sort_by(Real::total_cmp);
    if direction == OdeDirection::Inward {
        targets.reverse();
    }
    let l0 = lead.value(seed.r0);
    let g0 = lead.log_derivative(seed.r0);
    let h0 = (seed.value / l0).to_complex();
    let dh0 = (seed.derivative / l0).to_complex() - g0 * h0;
    let rhs = |r: Real, y: &State| -> State { [y[1], pert(r) * y[0] - 2.0 * lead.log_derivative(r) * y[1]] };

    let sgn = if direction == OdeDirection::Outward { 1.0 } else { -1.0 };
    let mut r = seed.r0;
    let mut y: State = [h0, dh0];
    let mut step = 1e-3 * sgn * r.max(1e-3);
    let mut steps = 0usize;
    let mut out = Vec::with_capacity(targets.len());
    let mut k1 = rhs(r, &y);
    for &target in &targets {
        while (target - r) * sgn > 0.0 {
            steps += 1;
            if steps > opts.max_steps {
                return Err(FundsysError::StepSizeUnderflow { r });
            }
            let mut dt = step;
            if (r + dt - target) * sgn > 0.0 {
                dt = target - r;
            }
            let mut k = [k1, [Cplx::new(0.0, 0.0); 2], [Cplx::new(0.0, 0.0); 2], [Cplx::new(0.0, 0.0); 2], [Cplx::new(0.0, 0.0); 2], [Cplx::new(0.0, 0.0); 2], [Cplx::new(0.0, 0.0); 2]];
            for s in 1..7 {
                let mut ys = y;
                for (m, ks) in k.iter().enumerate().take(s) {
                    let a = A[s][m];
                    if a != 0.0 {
                        ys[0] += ks[0] * (a * dt);
                        ys[1] += ks[1] * (a * dt);
                    }
                }
                k[s] = rhs(r + C[s] * dt, &ys);
            }
            let mut y5 = y;
            let mut err = 0.0_f64;
            for comp in 0..2 {
                let mut e = Cplx::new(0.0, 0.0);
                for s in 0..7 {
                    y5[comp] += k[s][comp] * (B5[s] * dt);
                    e += k[s][comp] * ((B5[s] - B4[s]) * dt);
                }
                let sc = opts.atol + opts.rtol * y[comp].norm().max(y5[comp].norm()).max(y[0].norm());
                err = err.max(e.norm() / sc);
            }
            if err <= 1.0 || dt.abs() <= 1e-14 * r.abs().max(1e-14) {
                if dt.abs() <= 1e-14 * r.abs().max(1e-14) && err > 1.0 {
                    return Err(FundsysError::StepSizeUnderflow { r });
                }
                r += dt;
                y = y5;
                k1 = k[6];
                if (r - target).abs() <= 1e-15 * target.abs() {
                    r = target;
                }
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            // keep the nominal step when only clipped to hit a target
            if dt == step || err > 1.0 {
                step = dt * factor;
            }
        }
        let l = lead.value(target);
        let g = lead.log_derivative(target);
        out.push((target, l * y[0], l * (g * y[0] + y[1])));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(GridFunction {
        r: out.iter().map(|x| x.0).collect(),
        value: out.iter().map(|x| x.1).collect(),
        deriv: out.iter().map(|x| x.2).collect(),
    })
}

/// Integrate `v'' = q v` for the spectral point and potential carried by
/// `gauge`, which also supplies the logarithmic gauge.
pub fn direct_integrate(
    gauge: &dyn LeadingOrder,
    seed: Seed,
    direction: OdeDirection,
    points: &[Real],
    opts: &OdeOptions,
) -> Result<GridFunction, FundsysError> {
    direct_integrate_gauge(gauge, |r| gauge.perturbation(r), seed, direction, points, opts)
}
