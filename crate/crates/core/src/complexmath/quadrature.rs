//! Fixed Gauss-Legendre rules, an adaptive Gauss-Kronrod integrator for
//! complex integrands, and the spectral panel rule used by the Volterra and
//! Green-function solvers.

use num_complex::Complex;
use num_traits::Float;

use super::MathError;

/// A fixed interpolatory rule on a finite interval.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
    pub domain: (T, T),
    /// Polynomials up to this degree are integrated exactly.
    pub degree: usize,
}

impl<T: Float> QuadratureRule<T> {
    /// `n`-point Gauss-Legendre rule on `[a, b]`, exact to degree `2n - 1`.
    pub fn gauss_legendre(n: usize, a: T, b: T) -> Self {
        let (t, w) = gauss_legendre_reference(n);
        let two = T::one() + T::one();
        let half = (b - a) / two;
        let mid = (a + b) / two;
        Self {
            nodes: t.iter().map(|&x| mid + half * x).collect(),
            weights: w.iter().map(|&x| half * x).collect(),
            domain: (a, b),
            degree: 2 * n - 1,
        }
    }

    pub fn integrate<F: FnMut(T) -> Complex<T>>(&self, mut f: F) -> Complex<T> {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (&x, &w)| acc + f(x) * w)
    }
}

/// Gauss-Legendre nodes (ascending) and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre_reference<T: Float>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1, "a Gauss rule needs at least one node");
    let nf = T::from(n).unwrap();
    let one = T::one();
    let two = one + one;
    let pi = T::from(std::f64::consts::PI).unwrap();
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    for i in 0..n.div_ceil(2) {
        let fi = T::from(i).unwrap();
        let mut x = (pi * (fi + T::from(0.75).unwrap()) / (nf + T::from(0.5).unwrap())).cos();
        let mut dp = one;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x = x - dx;
            if dx.abs() <= T::epsilon() * two {
                dp = legendre_with_derivative(n, x).1;
                break;
            }
        }
        let w = two / ((one - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative<T: Float>(n: usize, x: T) -> (T, T) {
    let one = T::one();
    let mut p0 = one;
    let mut p1 = x;
    if n == 0 {
        return (one, T::zero());
    }
    for k in 2..=n {
        let kf = T::from(k).unwrap();
        let p2 = ((kf + kf - one) * x * p1 - (kf - one) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::from(n).unwrap();
    let d = nf * (x * p1 - p0) / (x * x - one);
    (p1, d)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T> {
    pub value: Complex<T>,
    pub error: T,
    pub evaluations: usize,
}

/// Default bisection depth for [`adaptive_quad`].
pub const DEFAULT_MAX_DEPTH: usize = 48;

fn gk15<T: Float, F: FnMut(T) -> Complex<T>>(f: &mut F, a: T, b: T) -> (Complex<T>, T) {
    let two = T::one() + T::one();
    let c = (a + b) / two;
    let h = (b - a) / two;
    let zero = Complex::new(T::zero(), T::zero());
    let fc = f(c);
    let mut k = fc * T::from(WGK[7]).unwrap();
    let mut g = fc * T::from(WG[3]).unwrap();
    for j in 0..7 {
        let x = T::from(XGK[j]).unwrap() * h;
        let s = f(c - x) + f(c + x);
        k = k + s * T::from(WGK[j]).unwrap();
        if j % 2 == 1 {
            g = g + s * T::from(WG[j / 2]).unwrap();
        }
    }
    let _ = zero;
    (k * h, ((k - g) * h).norm())
}

/// Adaptive 7/15-point Gauss-Kronrod integration of a complex integrand on
/// `[a, b]` with absolute tolerance `tol`.
///
/// Subintervals are processed in a fixed depth-first order, so results are
/// reproducible bit for bit.
pub fn adaptive_quad<T: Float, F: FnMut(T) -> Complex<T>>(
    f: F,
    a: T,
    b: T,
    tol: T,
) -> Result<QuadResult<T>, MathError> {
    adaptive_quad_depth(f, a, b, tol, DEFAULT_MAX_DEPTH)
}

/// [`adaptive_quad`] with an explicit bisection depth limit.
pub fn adaptive_quad_depth<T: Float, F: FnMut(T) -> Complex<T>>(
    mut f: F,
    a: T,
    b: T,
    tol: T,
    max_depth: usize,
) -> Result<QuadResult<T>, MathError> {
    let zero = Complex::new(T::zero(), T::zero());
    if a == b {
        return Ok(QuadResult { value: zero, error: T::zero(), evaluations: 0 });
    }
    let total = (b - a).abs();
    let mut value = zero;
    let mut error = T::zero();
    let mut evaluations = 0usize;
    let mut stack = vec![(a, b, 0usize)];
    let mut worst = T::zero();
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, e) = gk15(&mut f, lo, hi);
        evaluations += 15;
        let local_tol = tol * (hi - lo).abs() / total;
        if e <= local_tol || depth >= max_depth {
            if e > local_tol {
                worst = worst.max(e);
            }
            value = value + v;
            error = error + e;
            continue;
        }
        let two = T::one() + T::one();
        let mid = (lo + hi) / two;
        stack.push((mid, hi, depth + 1));
        stack.push((lo, mid, depth + 1));
    }
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(MathError::NonFinite("adaptive_quad value"));
    }
    if worst > T::zero() && error > tol {
        return Err(MathError::NonConvergence {
            tol: tol.to_f64().unwrap_or(f64::NAN),
            error: error.to_f64().unwrap_or(f64::NAN),
            depth: max_depth,
        });
    }
    Ok(QuadResult { value, error, evaluations })
}

/// Integral over `[a, inf)` after the substitution `s = a + t/(1-t)`.
pub fn adaptive_quad_semi_infinite<T: Float, F: FnMut(T) -> Complex<T>>(
    mut f: F,
    a: T,
    tol: T,
) -> Result<QuadResult<T>, MathError> {
    let one = T::one();
    adaptive_quad(
        |t: T| {
            let u = one - t;
            f(a + t / u) / (u * u)
        },
        T::zero(),
        one,
        tol,
    )
}

/// Gauss-Legendre panel of fixed size with barycentric interpolation and
/// spectral integration matrices on the reference interval `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussPanel {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    bary: Vec<f64>,
    /// `left[i][j] = int_{-1}^{t_i} l_j`.
    pub left: Vec<Vec<f64>>,
    /// `right[i][j] = int_{t_i}^{1} l_j`.
    pub right: Vec<Vec<f64>>,
}

impl GaussPanel {
    pub fn new(m: usize) -> Self {
        let (nodes, weights): (Vec<f64>, Vec<f64>) = gauss_legendre_reference(m);
        let bary: Vec<f64> = (0..m)
            .map(|j| {
                let p: f64 = (0..m).filter(|&k| k != j).map(|k| nodes[j] - nodes[k]).product();
                1.0 / p
            })
            .collect();
        let mut panel = Self { nodes, weights, bary, left: vec![], right: vec![] };
        let (tq, wq): (Vec<f64>, Vec<f64>) = gauss_legendre_reference(m);
        let mut left = vec![vec![0.0; m]; m];
        let mut right = vec![vec![0.0; m]; m];
        for i in 0..m {
            let ti = panel.nodes[i];
            for (q, &t) in tq.iter().enumerate() {
                let xl = -1.0 + (ti + 1.0) * (t + 1.0) / 2.0;
                let wl = wq[q] * (ti + 1.0) / 2.0;
                let xr = ti + (1.0 - ti) * (t + 1.0) / 2.0;
                let wr = wq[q] * (1.0 - ti) / 2.0;
                let bl = panel.basis(xl);
                let br = panel.basis(xr);
                for j in 0..m {
                    left[i][j] += wl * bl[j];
                    right[i][j] += wr * br[j];
                }
            }
        }
        panel.left = left;
        panel.right = right;
        panel
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Values of all Lagrange basis polynomials at reference point `t`.
    pub fn basis(&self, t: f64) -> Vec<f64> {
        let m = self.nodes.len();
        if let Some(k) = self.nodes.iter().position(|&x| x == t) {
            let mut b = vec![0.0; m];
            b[k] = 1.0;
            return b;
        }
        let terms: Vec<f64> = (0..m).map(|j| self.bary[j] / (t - self.nodes[j])).collect();
        let s: f64 = terms.iter().sum();
        terms.into_iter().map(|x| x / s).collect()
    }

    /// `(int_{-1}^t l_j, int_t^1 l_j)` for every basis polynomial.
    pub fn partial_weights(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let m = self.nodes.len();
        let mut left = vec![0.0; m];
        let mut right = vec![0.0; m];
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let bl = self.basis(-1.0 + (t + 1.0) * (x + 1.0) / 2.0);
            let br = self.basis(t + (1.0 - t) * (x + 1.0) / 2.0);
            for j in 0..m {
                left[j] += w * (t + 1.0) / 2.0 * bl[j];
                right[j] += w * (1.0 - t) / 2.0 * br[j];
            }
        }
        (left, right)
    }

    /// Barycentric interpolation of nodal values at reference point `t`.
    pub fn interpolate(&self, values: &[Complex<f64>], t: f64) -> Complex<f64> {
        let mut num = Complex::new(0.0, 0.0);
        let mut den = 0.0;
        for j in 0..self.nodes.len() {
            let d = t - self.nodes[j];
            if d == 0.0 {
                return values[j];
            }
            let c = self.bary[j] / d;
            num += values[j] * c;
            den += c;
        }
        num / den
    }

    /// Derivative (with respect to `t`) of the interpolant at `t`.
    pub fn interpolate_derivative(&self, values: &[Complex<f64>], t: f64) -> Complex<f64> {
        let m = self.nodes.len();
        let p = self.interpolate(values, t);
        if let Some(k) = self.nodes.iter().position(|&x| x == t) {
            let mut acc = Complex::new(0.0, 0.0);
            for j in 0..m {
                if j != k {
                    let dkj = self.bary[j] / self.bary[k] / (t - self.nodes[j]);
                    acc += (values[j] - values[k]) * dkj;
                }
            }
            return acc;
        }
        let mut num = Complex::new(0.0, 0.0);
        let mut den = 0.0;
        for j in 0..m {
            let d = t - self.nodes[j];
            let c = self.bary[j] / d;
            num += (p - values[j]) * (c / d);
            den += c;
        }
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_to_declared_degree() {
        let rule = QuadratureRule::gauss_legendre(8, 0.0_f64, 2.0);
        for k in 0..=rule.degree {
            let v = rule.integrate(|x| Complex::new(x.powi(k as i32), 0.0)).re;
            let exact = 2.0_f64.powi(k as i32 + 1) / (k as f64 + 1.0);
            assert!((v - exact).abs() <= 1e-12 * exact, "degree {k}");
        }
        assert!(rule.weights.iter().all(|&w| w > 0.0));
        assert!(rule.nodes.windows(2).all(|p| p[0] < p[1]));
        assert!(rule.nodes[0] > 0.0 && *rule.nodes.last().unwrap() < 2.0);
    }

    #[test]
    fn adaptive_examples() {
        let one = adaptive_quad(|_x: f64| Complex::new(1.0, 0.0), 0.0, 1.0, 1e-12).unwrap();
        assert!((one.value.re - 1.0).abs() < 1e-14);

        let exact = 5f64.sqrt() + 2f64.asinh() / 2.0 - 2f64.sqrt() / 2.0 - 1f64.asinh() / 2.0;
        let v = adaptive_quad(|s: f64| Complex::new((1.0 + s * s).sqrt(), 0.0), 1.0, 2.0, 1e-13)
            .unwrap();
        assert!((v.value.re - exact).abs() < 1e-12);
        assert!((exact - 1.81009).abs() < 1e-5);

        let g = adaptive_quad_semi_infinite(|s: f64| Complex::new((-s * s).exp(), 0.0), 0.0, 1e-12)
            .unwrap();
        assert!((g.value.re - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-11);
    }

    #[test]
    fn depth_limit_reports_nonconvergence() {
        let r = adaptive_quad_depth(|x: f64| Complex::new(1.0 / x.abs().sqrt(), 0.0), -1.0, 1.0, 1e-14, 3);
        assert!(matches!(r, Err(MathError::NonConvergence { .. })));
    }

    #[test]
    fn panel_integration_matrices_are_spectral() {
        let p = GaussPanel::new(16);
        let f: Vec<Complex<f64>> = p.nodes.iter().map(|&t| Complex::new(t.exp(), 0.0)).collect();
        for i in 0..16 {
            let t = p.nodes[i];
            let l: Complex<f64> = (0..16).map(|j| f[j] * p.left[i][j]).sum();
            let r: Complex<f64> = (0..16).map(|j| f[j] * p.right[i][j]).sum();
            assert!((l.re - (t.exp() - (-1f64).exp())).abs() < 1e-14);
            assert!((r.re - (1f64.exp() - t.exp())).abs() < 1e-14);
        }
        let x = 0.3183;
        assert!((p.interpolate(&f, x).re - x.exp()).abs() < 1e-14);
        assert!((p.interpolate_derivative(&f, x).re - x.exp()).abs() < 1e-12);
        assert!((p.interpolate_derivative(&f, p.nodes[4]).re - p.nodes[4].exp()).abs() < 1e-12);
    }
}
