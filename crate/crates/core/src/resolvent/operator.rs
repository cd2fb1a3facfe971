//! Product integration of separable kernels `x(r) y(s)` (one pair for
//! `r <= s`, one for `r >= s`) with panel-local scaling, so that application
//! and its exact discrete adjoint cost `O(N)` and never overflow.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fundsys::{reference_panel, resolution_scale, PanelSet, PANEL_NODES};
use crate::{Cplx, Real, ScaledC};

use super::{GreenKernel, ResolventError};

fn zero() -> Cplx {
    Cplx::new(0.0, 0.0)
}

/// One factor pair split into per-node mantissas and per-panel references.
#[derive(Debug, Clone)]
struct Factor {
    mant: Vec<Cplx>,
    refs: Vec<ScaledC>,
}

impl Factor {
    fn new(panels: &PanelSet, values: &[ScaledC]) -> Self {
        let mut mant = Vec::with_capacity(values.len());
        let mut refs = Vec::with_capacity(panels.panel_count());
        for k in 0..panels.panel_count() {
            let vals = panels.panel(values, k);
            let best = vals.iter().copied().max_by(|a, b| a.ln_abs().total_cmp(&b.ln_abs())).unwrap();
            let r = if best.is_zero() { ScaledC::one() } else { best };
            refs.push(r);
            mant.extend(vals.iter().map(|v| (*v / r).to_complex()));
        }
        Self { mant, refs }
    }
}

/// Discretised integral operator with kernel `a(r) b(s)` for `r <= s` and
/// `c(r) d(s)` for `r >= s` on a composite Gauss panel set.
#[derive(Debug, Clone)]
pub struct SeparableOperator {
    pub panels: PanelSet,
    a: Factor,
    b: Factor,
    c: Factor,
    d: Factor,
    /// `A_k B_k`, `A_k B_{k+1}`, `A_k / A_{k+1}`, `B_{k+1} / B_k`.
    up_diag: Vec<Cplx>,
    up_cross: Vec<Cplx>,
    up_ra: Vec<Cplx>,
    up_rb: Vec<Cplx>,
    /// `C_k D_k`, `C_{k+1} D_k`, `C_{k+1} / C_k`, `D_k / D_{k+1}`.
    lo_diag: Vec<Cplx>,
    lo_cross: Vec<Cplx>,
    lo_rc: Vec<Cplx>,
    lo_rd: Vec<Cplx>,
    sqrt_w: Vec<Real>,
}

impl SeparableOperator {
    pub fn from_factors(panels: PanelSet, a: &[ScaledC], b: &[ScaledC], c: &[ScaledC], d: &[ScaledC]) -> Self {
        let n = panels.len();
        assert!(a.len() == n && b.len() == n && c.len() == n && d.len() == n);
        let (a, b, c, d) = (Factor::new(&panels, a), Factor::new(&panels, b), Factor::new(&panels, c), Factor::new(&panels, d));
        let np = panels.panel_count();
        let pairs = |f: &dyn Fn(usize) -> ScaledC| (0..np.saturating_sub(1)).map(|k| f(k).to_complex()).collect::<Vec<_>>();
        let up_diag = (0..np).map(|k| (a.refs[k] * b.refs[k]).to_complex()).collect();
        let lo_diag = (0..np).map(|k| (c.refs[k] * d.refs[k]).to_complex()).collect();
        let up_cross = pairs(&|k| a.refs[k] * b.refs[k + 1]);
        let up_ra = pairs(&|k| a.refs[k] / a.refs[k + 1]);
        let up_rb = pairs(&|k| b.refs[k + 1] / b.refs[k]);
        let lo_cross = pairs(&|k| c.refs[k + 1] * d.refs[k]);
        let lo_rc = pairs(&|k| c.refs[k + 1] / c.refs[k]);
        let lo_rd = pairs(&|k| d.refs[k] / d.refs[k + 1]);
        let sqrt_w = panels.weights.iter().map(|w| w.sqrt()).collect();
        Self { panels, a, b, c, d, up_diag, up_cross, up_ra, up_rb, lo_diag, lo_cross, lo_rc, lo_rd, sqrt_w }
    }

    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }

    /// `(K f)(r_i) = int K(r_i, s) f(s) ds`.
    pub fn apply(&self, f: &[Cplx]) -> Vec<Cplx> {
        let gp = reference_panel();
        let np = self.panels.panel_count();
        let m = PANEL_NODES;
        let w = &self.panels.weights;
        let panel_sum = |fac: &Factor, k: usize| -> Cplx {
            (k * m..(k + 1) * m).map(|j| w[j] * fac.mant[j] * f[j]).sum()
        };
        let mut sigma = vec![zero(); np];
        for k in (0..np.saturating_sub(1)).rev() {
            sigma[k] = self.up_cross[k] * panel_sum(&self.b, k + 1) + self.up_ra[k] * sigma[k + 1];
        }
        let mut lambda = vec![zero(); np];
        for k in 0..np.saturating_sub(1) {
            lambda[k + 1] = self.lo_cross[k] * panel_sum(&self.d, k) + self.lo_rc[k] * lambda[k];
        }
        let mut out = vec![zero(); self.len()];
        let mut bf = [zero(); PANEL_NODES];
        let mut df = [zero(); PANEL_NODES];
        for k in 0..np {
            let hw = self.panels.half_width(k);
            for j in 0..m {
                bf[j] = self.b.mant[k * m + j] * f[k * m + j];
                df[j] = self.d.mant[k * m + j] * f[k * m + j];
            }
            for i in 0..m {
                let gi = k * m + i;
                let (mut up, mut lo) = (zero(), zero());
                for j in 0..m {
                    up += bf[j] * gp.right[i][j];
                    lo += df[j] * gp.left[i][j];
                }
                out[gi] = self.a.mant[gi] * (self.up_diag[k] * hw * up + sigma[k])
                    + self.c.mant[gi] * (self.lo_diag[k] * hw * lo + lambda[k]);
            }
        }
        out
    }

    /// Conjugate transpose of the matrix applied by [`Self::apply`].
    pub fn apply_adjoint(&self, g: &[Cplx]) -> Vec<Cplx> {
        let gp = reference_panel();
        let np = self.panels.panel_count();
        let m = PANEL_NODES;
        let w = &self.panels.weights;
        let panel_sum = |fac: &Factor, k: usize| -> Cplx {
            (k * m..(k + 1) * m).map(|i| fac.mant[i].conj() * g[i]).sum()
        };
        let mut tau_up = vec![zero(); np];
        for k in 0..np.saturating_sub(1) {
            tau_up[k + 1] = self.up_cross[k].conj() * panel_sum(&self.a, k) + self.up_rb[k].conj() * tau_up[k];
        }
        let mut tau_lo = vec![zero(); np];
        for k in (0..np.saturating_sub(1)).rev() {
            tau_lo[k] = self.lo_cross[k].conj() * panel_sum(&self.c, k + 1) + self.lo_rd[k].conj() * tau_lo[k + 1];
        }
        let mut out = vec![zero(); self.len()];
        let mut ag = [zero(); PANEL_NODES];
        let mut cg = [zero(); PANEL_NODES];
        for k in 0..np {
            let hw = self.panels.half_width(k);
            for i in 0..m {
                ag[i] = self.a.mant[k * m + i].conj() * g[k * m + i];
                cg[i] = self.c.mant[k * m + i].conj() * g[k * m + i];
            }
            for j in 0..m {
                let gj = k * m + j;
                let (mut up, mut lo) = (zero(), zero());
                for i in 0..m {
                    up += ag[i] * gp.right[i][j];
                    lo += cg[i] * gp.left[i][j];
                }
                out[gj] = self.b.mant[gj].conj() * (self.up_diag[k].conj() * hw * up + w[gj] * tau_up[k])
                    + self.d.mant[gj].conj() * (self.lo_diag[k].conj() * hw * lo + w[gj] * tau_lo[k]);
            }
        }
        out
    }

    /// Weighted `L^2` norm of nodal values.
    pub fn l2_norm(&self, f: &[Cplx]) -> Real {
        f.iter().zip(&self.panels.weights).map(|(x, w)| x.norm_sqr() * w).sum::<Real>().sqrt()
    }

    /// `M x` with `M = D P D^{-1}`, `D = diag(sqrt w)`, the matrix whose
    /// Euclidean norm is the weighted `L^2` operator norm.
    pub fn apply_balanced(&self, x: &[Cplx]) -> Vec<Cplx> {
        let f: Vec<Cplx> = x.iter().zip(&self.sqrt_w).map(|(z, s)| z / s).collect();
        let mut y = self.apply(&f);
        y.iter_mut().zip(&self.sqrt_w).for_each(|(z, s)| *z *= s);
        y
    }

    /// `M^* y`, the conjugate transpose of [`Self::apply_balanced`].
    pub fn apply_balanced_adjoint(&self, y: &[Cplx]) -> Vec<Cplx> {
        let g: Vec<Cplx> = y.iter().zip(&self.sqrt_w).map(|(z, s)| z * s).collect();
        let mut z = self.apply_adjoint(&g);
        z.iter_mut().zip(&self.sqrt_w).for_each(|(v, s)| *v /= s);
        z
    }

    /// Largest singular value of the discretised operator by Lanczos on
    /// `M^* M` with full reorthogonalisation.
    pub fn norm_estimate(&self, opts: &PowerOptions) -> Result<NormEstimate, ResolventError> {
        lanczos_norm(self.len(), |x| self.apply_balanced_adjoint(&self.apply_balanced(x)), opts)
    }
}

/// `sqrt` of the largest eigenvalue of the Hermitian positive semidefinite
/// map `gram` on `C^n`, by Lanczos with full reorthogonalisation.
pub fn lanczos_norm<G: Fn(&[Cplx]) -> Vec<Cplx>>(
    n: usize,
    gram: G,
    opts: &PowerOptions,
) -> Result<NormEstimate, ResolventError> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut q: Vec<Cplx> = (0..n).map(|_| Cplx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let nq = norm2(&q);
    if nq == 0.0 {
        return Ok(NormEstimate { norm: 0.0, iterations: 0, change: 0.0 });
    }
    q.iter_mut().for_each(|z| *z /= nq);
    let mut basis: Vec<Vec<Cplx>> = vec![];
    let (mut alpha, mut beta) = (vec![], vec![]);
    let mut prev = 0.0;
    let mut change = Real::INFINITY;
    for it in 1..=opts.max_iter.min(n) {
        let mut w = gram(&q);
        alpha.push(dot(&q, &w).re);
        basis.push(q);
        // two Gram-Schmidt passes keep the Krylov basis orthonormal
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
        }
        let est = tridiagonal_max_eigenvalue(&alpha, &beta);
        change = (est - prev).abs() / est.max(Real::MIN_POSITIVE);
        let b = norm2(&w);
        if change < opts.tol || b <= 1e-14 * est.max(Real::MIN_POSITIVE) || it == n {
            return Ok(NormEstimate { norm: est.max(0.0).sqrt(), iterations: it, change });
        }
        prev = est;
        beta.push(b);
        q = w.into_iter().map(|z| z / b).collect();
    }
    Err(ResolventError::PowerIterationStall { iterations: opts.max_iter, change })
}

fn dot(a: &[Cplx], b: &[Cplx]) -> Cplx {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm2(a: &[Cplx]) -> Real {
    a.iter().map(|z| z.norm_sqr()).sum::<Real>().sqrt()
}

/// Number of eigenvalues below `x` of the symmetric tridiagonal matrix with
/// diagonal `a` and off-diagonal `b` (Sturm sequence).
fn sturm_count(a: &[Real], b: &[Real], x: Real) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..a.len() {
        let off = if i == 0 { 0.0 } else { b[i - 1] * b[i - 1] };
        d = a[i] - x - if off == 0.0 { 0.0 } else { off / d };
        if d == 0.0 {
            d = -Real::EPSILON * (a[i].abs() + x.abs()).max(Real::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Largest eigenvalue of a symmetric tridiagonal matrix by bisection.
fn tridiagonal_max_eigenvalue(a: &[Real], b: &[Real]) -> Real {
    let n = a.len();
    let radius = |i: usize| {
        (if i > 0 { b[i - 1].abs() } else { 0.0 }) + (if i + 1 < n { b[i].abs() } else { 0.0 })
    };
    let mut lo = (0..n).map(|i| a[i] - radius(i)).fold(Real::INFINITY, Real::min);
    let mut hi = (0..n).map(|i| a[i] + radius(i)).fold(Real::NEG_INFINITY, Real::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(a, b, mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    pub tol: Real,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 500, seed: 0x5eed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub norm: Real,
    pub iterations: usize,
    /// Relative change of the top Ritz value of `M^* M` in the final step.
    pub change: Real,
}

/// Panel width limit used for operator grids, relative to [`resolution_scale`].
pub const OPERATOR_KAPPA: Real = 5.0;

/// Lower bound on the operator's resolution scale, so that data varying on
/// unit length scales is resolved even where the kernel is smooth.
pub const DATA_SCALE_FLOOR: Real = 60.0;

/// Composite panels on `[lo, hi]` with edges at every breakpoint inside.
pub fn split_panels(lo: Real, hi: Real, breaks: &[Real], kappa: Real, scale: impl Fn(Real) -> Real) -> PanelSet {
    let mut cuts = vec![lo];
    cuts.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
    cuts.push(hi);
    let mut edges = vec![lo];
    for seg in cuts.windows(2) {
        let part = PanelSet::adapted(seg[0], seg[1], kappa, &scale);
        edges.extend_from_slice(&part.edges[1..]);
    }
    PanelSet::from_edges(edges)
}

/// Factor values `e^{r^2/2} v0 / W`, `e^{-s^2/2} v_-`, `e^{r^2/2} v_- / W`,
/// `e^{-s^2/2} v0` at physical radii, each multiplied by `pre`.
fn kernel_factors(k: &GreenKernel, radii: &[Real], pre: Real) -> [Vec<ScaledC>; 4] {
    let inv_w = k.wronskian.recip();
    let mut out: [Vec<ScaledC>; 4] = Default::default();
    for &r in radii {
        let grow = ScaledC::exp(Cplx::new(0.5 * r * r, 0.0));
        let decay = ScaledC::exp(Cplx::new(-0.5 * r * r, 0.0));
        let v0 = k.v0.eval(r).0;
        let vm = k.v_minus.eval(r).0;
        out[0].push(grow * v0 * inv_w * Cplx::new(pre, 0.0));
        out[1].push(decay * vm);
        out[2].push(grow * vm * inv_w * Cplx::new(pre, 0.0));
        out[3].push(decay * v0);
    }
    out
}

/// `R~` discretised on `[r_min, r_max]` with the reduced resolvent's weights.
#[derive(Debug, Clone)]
pub struct ResolventOperator {
    pub kernel: GreenKernel,
    pub op: SeparableOperator,
}

impl ResolventOperator {
    pub fn new(kernel: GreenKernel) -> Self {
        Self::with_kappa(kernel, OPERATOR_KAPPA)
    }

    pub fn with_kappa(kernel: GreenKernel, kappa: Real) -> Self {
        let p = kernel.spectral;
        let panels = split_panels(kernel.r_min, kernel.r_max, &kernel.breakpoints(), kappa, |r| {
            resolution_scale(&p, r).max(DATA_SCALE_FLOOR)
        });
        Self::with_panels(kernel, panels)
    }

    /// The operator on a caller-supplied panel set, e.g. one shared by
    /// several angular momenta. Panel edges should include the kernel's
    /// breakpoints, where `G` has a derivative jump.
    pub fn with_panels(kernel: GreenKernel, panels: PanelSet) -> Self {
        let [a, b, c, d] = kernel_factors(&kernel, &panels.nodes, 1.0);
        let op = SeparableOperator::from_factors(panels, &a, &b, &c, &d);
        Self { kernel, op }
    }

    pub fn nodes(&self) -> &[Real] {
        &self.op.panels.nodes
    }

    fn weight_power(&self) -> Real {
        0.5 * (self.kernel.spectral.d as Real - 1.0)
    }

    /// Reduced resolvent `u = r^{-k} R~(s^k f)` at the nodes for nodal data `f`.
    pub fn apply_reduced_resolvent(&self, f: &[Cplx]) -> Vec<Cplx> {
        let k = self.weight_power();
        let ft: Vec<Cplx> = f.iter().zip(self.nodes()).map(|(v, r)| v * r.powf(k)).collect();
        self.op.apply(&ft).into_iter().zip(self.nodes()).map(|(v, r)| v * r.powf(-k)).collect()
    }

    /// Reduced resolvent of `f` with evaluation at arbitrary radii.
    pub fn solve<F: Fn(Real) -> Cplx>(&self, f: F) -> ResolventSolution<'_> {
        ResolventSolution::new(self, f)
    }

    /// `||R~||` on `L^2(r_min, r_max)`.
    pub fn norm_estimate(&self, opts: &PowerOptions) -> Result<NormEstimate, ResolventError> {
        self.op.norm_estimate(opts)
    }
}

/// The same operator written in `rho = omega^{-1/2} r` with kernel
/// `omega^{1/2} G(omega^{1/2} rho, omega^{1/2} sigma)` on its own panel set.
pub fn scaled_operator(kernel: &GreenKernel, kappa: Real) -> SeparableOperator {
    let p = kernel.spectral;
    let sw = p.omega.sqrt();
    let breaks: Vec<Real> = kernel.breakpoints().iter().map(|b| b / sw).collect();
    let panels = split_panels(kernel.r_min / sw, kernel.r_max / sw, &breaks, kappa, |rho| {
        sw * resolution_scale(&p, sw * rho)
    });
    let radii: Vec<Real> = panels.nodes.iter().map(|rho| rho * sw).collect();
    let [a, b, c, d] = kernel_factors(kernel, &radii, sw);
    SeparableOperator::from_factors(panels, &a, &b, &c, &d)
}

/// Outcome of comparing `||R~||` with the norm of its rescaled form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingCheck {
    pub direct: Real,
    pub scaled: Real,
    pub relative_difference: Real,
}

impl ResolventOperator {
    /// Norm of the rescaled operator on an independent panel set; the
    /// dilation is unitary, so the two norms agree up to quadrature error.
    pub fn scaling_check(&self, kappa: Real, opts: &PowerOptions) -> Result<ScalingCheck, ResolventError> {
        let direct = self.norm_estimate(opts)?.norm;
        let scaled = scaled_operator(&self.kernel, kappa).norm_estimate(opts)?.norm;
        Ok(ScalingCheck { direct, scaled, relative_difference: (direct - scaled).abs() / direct })
    }
}

/// Largest number of sub-panels a data-refined panel is split into.
const MAX_SUBPANELS: usize = 64;
/// Interpolation defect, relative to `max |s^k f|`, below which a panel
/// resolves the data.
const DATA_RESOLUTION_TOL: Real = 1e-11;

/// Panel integrals of one factor against the data on a subdivided panel.
#[derive(Debug, Clone)]
struct RefinedPanel {
    sub: usize,
    /// `b(s) s^k f(s)` and `d(s) s^k f(s)` (mantissas) at the sub-panel nodes.
    bf: Vec<Cplx>,
    df: Vec<Cplx>,
}

impl RefinedPanel {
    /// Reference integrals `(int_{-1}^t, int_t^1)` of the sampled products.
    fn partial(&self, t: Real) -> (Cplx, Cplx) {
        let q = reference_panel();
        let m = PANEL_NODES;
        let h = 2.0 / self.sub as Real;
        let i = (((t + 1.0) / h) as usize).min(self.sub - 1);
        let local = (2.0 * (t + 1.0 - i as Real * h) / h - 1.0).clamp(-1.0, 1.0);
        let full = |v: &[Cplx], j: usize| -> Cplx { (0..m).map(|n| q.weights[n] * v[j * m + n]).sum() };
        let (wl, wr) = q.partial_weights(local);
        let (mut lo, mut up) = (zero(), zero());
        for j in 0..i {
            lo += full(&self.df, j);
        }
        for j in i + 1..self.sub {
            up += full(&self.bf, j);
        }
        for n in 0..m {
            lo += wl[n] * self.df[i * m + n];
            up += wr[n] * self.bf[i * m + n];
        }
        let scale = 1.0 / self.sub as Real;
        (lo * scale, up * scale)
    }
}

/// Whether the degree `PANEL_NODES - 1` interpolant of `g` on each of `sub`
/// equal parts of the reference panel reproduces `g` to `tol`.
fn resolves(g: &dyn Fn(Real) -> Cplx, sub: usize, tol: Real) -> bool {
    let q = reference_panel();
    let m = PANEL_NODES;
    let h = 2.0 / sub as Real;
    (0..sub).all(|i| {
        let map = |t: Real| -1.0 + h * (i as Real + 0.5 * (t + 1.0));
        let vals: Vec<Cplx> = q.nodes.iter().map(|&t| g(map(t))).collect();
        (0..=m).all(|j| {
            let lo = if j == 0 { -1.0 } else { q.nodes[j - 1] };
            let hi = if j == m { 1.0 } else { q.nodes[j] };
            let t = 0.5 * (lo + hi);
            (q.interpolate(&vals, t) - g(map(t))).norm() <= tol
        })
    })
}

/// `u = R f` with per-panel tail sums, evaluable anywhere in `[r_min, r_max]`.
///
/// The panels are sized for the kernel. Where they under-resolve the data,
/// the panel is split and `f` is sampled on the finer nodes, with the kernel
/// factors interpolated there.
#[derive(Debug, Clone)]
pub struct ResolventSolution<'a> {
    op: &'a ResolventOperator,
    /// `s^k f(s)` at the nodes.
    ft: Vec<Cplx>,
    refined: Vec<Option<RefinedPanel>>,
    /// `int_{panel k+1 start}^{r_max} e^{-s^2/2} v_- s^k f`.
    upper_tail: Vec<ScaledC>,
    /// `int_{r_min}^{panel k start} e^{-s^2/2} v0 s^k f`.
    lower_tail: Vec<ScaledC>,
}

impl<'a> ResolventSolution<'a> {
    fn new<F: Fn(Real) -> Cplx>(op: &'a ResolventOperator, f: F) -> Self {
        let k = op.weight_power();
        let ft: Vec<Cplx> = op.nodes().iter().map(|&r| f(r) * r.powf(k)).collect();
        let s = &op.op;
        let q = reference_panel();
        let np = s.panels.panel_count();
        let m = PANEL_NODES;
        let tol = DATA_RESOLUTION_TOL * ft.iter().map(|v| v.norm()).fold(0.0, Real::max);
        let refined: Vec<Option<RefinedPanel>> = (0..np)
            .map(|kk| {
                let (a, hw) = (s.panels.edges[kk], s.panels.half_width(kk));
                let radius = |t: Real| a + hw * (t + 1.0);
                let g = |t: Real| {
                    let r = radius(t);
                    f(r) * r.powf(k)
                };
                let sub = std::iter::successors(Some(1), |n| Some(n * 2))
                    .take_while(|&n| n <= MAX_SUBPANELS)
                    .find(|&n| resolves(&g, n, tol))
                    .unwrap_or(MAX_SUBPANELS);
                (sub > 1).then(|| {
                    let h = 2.0 / sub as Real;
                    let (bm, dm) = (&s.b.mant[kk * m..(kk + 1) * m], &s.d.mant[kk * m..(kk + 1) * m]);
                    let mut bf = Vec::with_capacity(sub * m);
                    let mut df = Vec::with_capacity(sub * m);
                    for i in 0..sub {
                        for &t in &q.nodes {
                            let t = -1.0 + h * (i as Real + 0.5 * (t + 1.0));
                            let gv = g(t);
                            bf.push(q.interpolate(bm, t) * gv);
                            df.push(q.interpolate(dm, t) * gv);
                        }
                    }
                    RefinedPanel { sub, bf, df }
                })
            })
            .collect();
        let total = |fac: &Factor, kk: usize, upper: bool| -> ScaledC {
            let sum: Cplx = match &refined[kk] {
                Some(rp) if upper => rp.partial(-1.0).1 * s.panels.half_width(kk),
                Some(rp) => rp.partial(1.0).0 * s.panels.half_width(kk),
                None => (kk * m..(kk + 1) * m).map(|j| s.panels.weights[j] * fac.mant[j] * ft[j]).sum(),
            };
            fac.refs[kk] * sum
        };
        let mut upper_tail = vec![ScaledC::zero(); np];
        for kk in (0..np.saturating_sub(1)).rev() {
            upper_tail[kk] = upper_tail[kk + 1] + total(&s.b, kk + 1, true);
        }
        let mut lower_tail = vec![ScaledC::zero(); np];
        for kk in 0..np.saturating_sub(1) {
            lower_tail[kk + 1] = lower_tail[kk] + total(&s.d, kk, false);
        }
        Self { op, ft, refined, upper_tail, lower_tail }
    }

    /// `u(r)`.
    pub fn eval(&self, r: Real) -> Cplx {
        let s = &self.op.op;
        let kern = &self.op.kernel;
        let (kk, t) = s.panels.locate(r);
        let hw = s.panels.half_width(kk);
        let (lo, up) = match &self.refined[kk] {
            Some(rp) => rp.partial(t),
            None => {
                let (wl, wr) = reference_panel().partial_weights(t);
                let (mut up, mut lo) = (zero(), zero());
                for j in 0..PANEL_NODES {
                    let gj = kk * PANEL_NODES + j;
                    up += wr[j] * s.b.mant[gj] * self.ft[gj];
                    lo += wl[j] * s.d.mant[gj] * self.ft[gj];
                }
                (lo, up)
            }
        };
        let upper = s.b.refs[kk] * (up * hw) + self.upper_tail[kk];
        let lower = s.d.refs[kk] * (lo * hw) + self.lower_tail[kk];
        let grow = ScaledC::exp(Cplx::new(0.5 * r * r, 0.0));
        let v = (grow * kern.v0.eval(r).0 * upper + grow * kern.v_minus.eval(r).0 * lower) / kern.wronskian;
        v.to_complex() * r.powf(-self.op.weight_power())
    }
}

/// Largest `|L u + f| / max |f|` over `points`, where `L` is the radial
/// operator `u'' + ((d-1)/r - 2r) u' - ell(ell+d-2)/r^2 u + V u - lambda u`
/// applied by five-point differences.
pub fn green_residual<F: Fn(Real) -> Cplx>(op: &ResolventOperator, f: F, points: &[Real]) -> Real {
    let sol = op.solve(&f);
    let p = op.kernel.spectral;
    let v = op.kernel.potential;
    let d = p.d as Real;
    let ell = p.ell as Real;
    let fmax = op.nodes().iter().map(|&r| f(r).norm()).fold(0.0, Real::max);
    let mut worst: Real = 0.0;
    for &r in points {
        let h = 0.05 / resolution_scale(&p, r);
        let u: Vec<Cplx> = [-2.0, -1.0, 0.0, 1.0, 2.0].iter().map(|j| sol.eval(r + j * h)).collect();
        let d1 = (u[0] - 8.0 * u[1] + 8.0 * u[3] - u[4]) / (12.0 * h);
        let d2 = (-u[0] + 16.0 * u[1] - 30.0 * u[2] + 16.0 * u[3] - u[4]) / (12.0 * h * h);
        let lu = d2 + ((d - 1.0) / r - 2.0 * r) * d1 - ell * (ell + d - 2.0) / (r * r) * u[2] + v.eval(r) * u[2]
            - p.lambda * u[2];
        worst = worst.max((lu + f(r)).norm() / fmax);
    }
    worst
}
