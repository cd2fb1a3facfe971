use std::sync::OnceLock;

use crate::complexmath::GaussPanel;
use crate::phase::SpectralPoint;
use crate::{Cplx, Real};

use super::FundsysError;

/// Nodes per panel.
pub const PANEL_NODES: usize = 16;

/// Shared 16-node Gauss-Legendre panel.
pub fn reference_panel() -> &'static GaussPanel {
    static PANEL: OnceLock<GaussPanel> = OnceLock::new();
    PANEL.get_or_init(|| GaussPanel::new(PANEL_NODES))
}

/// Sampling grid: geometric on `(r_min, 1]`, uniform on `[1, r_max]`, with the
/// regime split points inserted.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub points: Vec<Real>,
    pub r_min: Real,
    pub r_max: Real,
    pub regime_boundaries: Vec<Real>,
}

impl RadialGrid {
    pub fn new(
        r_min: Real,
        r_max: Real,
        n_inner: usize,
        n_outer: usize,
        boundaries: &[Real],
    ) -> Result<Self, FundsysError> {
        if !(r_min > 0.0 && r_min < 1.0 && r_max >= 1.0 && n_inner >= 2 && n_outer >= 2) {
            return Err(FundsysError::InvalidGrid(format!(
                "need 0 < r_min < 1 <= r_max and at least two points per part (r_min={r_min}, r_max={r_max})"
            )));
        }
        let mut points: Vec<Real> = crate::phase::log_grid(r_min, 1.0, n_inner);
        points.extend((1..n_outer).map(|i| 1.0 + (r_max - 1.0) * i as Real / (n_outer - 1) as Real));
        let mut regime_boundaries: Vec<Real> =
            boundaries.iter().copied().filter(|&b| b > r_min && b <= r_max).collect();
        regime_boundaries.sort_by(Real::total_cmp);
        regime_boundaries.dedup();
        points.extend(&regime_boundaries);
        points.sort_by(Real::total_cmp);
        points.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
        *points.last_mut().unwrap() = r_max;
        Ok(Self { points, r_min, r_max, regime_boundaries })
    }

    /// Grid for a spectral point with the Bessel/Hankel split at `c omega^{-1/2}` and 1.
    pub fn for_point(
        p: &SpectralPoint,
        c: Real,
        r_min: Real,
        r_max: Real,
        n_inner: usize,
        n_outer: usize,
    ) -> Result<Self, FundsysError> {
        let split = c / p.omega.sqrt();
        let bounds: Vec<Real> = if split < 1.0 { vec![split, 1.0] } else { vec![1.0] };
        Self::new(r_min, r_max, n_inner, n_outer, &bounds)
    }

    /// Points inside `[lo, hi]`.
    pub fn points_in(&self, lo: Real, hi: Real) -> Vec<Real> {
        self.points.iter().copied().filter(|&r| r >= lo && r <= hi).collect()
    }
}

/// Local resolution scale: panels have width at most `kappa / scale(r)`.
pub fn resolution_scale(p: &SpectralPoint, r: Real) -> Real {
    p.mu.norm().sqrt() + r + (p.nu + 2.5) / r
}

/// Composite Gauss-Legendre discretisation of an interval.
#[derive(Debug, Clone)]
pub struct PanelSet {
    /// Panel end points, increasing; panel `k` is `[edges[k], edges[k+1]]`.
    pub edges: Vec<Real>,
    /// All nodes, panel by panel.
    pub nodes: Vec<Real>,
    /// Composite quadrature weights.
    pub weights: Vec<Real>,
}

impl PanelSet {
    pub fn from_edges(edges: Vec<Real>) -> Self {
        let gp = reference_panel();
        let mut nodes = Vec::with_capacity((edges.len() - 1) * PANEL_NODES);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for e in edges.windows(2) {
            let half = 0.5 * (e[1] - e[0]);
            for (t, w) in gp.nodes.iter().zip(&gp.weights) {
                nodes.push(e[0] + half * (t + 1.0));
                weights.push(half * w);
            }
        }
        Self { edges, nodes, weights }
    }

    /// Panels on `[lo, hi]` of width at most `kappa / scale(r)` on each panel.
    pub fn adapted<F: Fn(Real) -> Real>(lo: Real, hi: Real, kappa: Real, scale: F) -> Self {
        assert!(hi > lo);
        let mut edges = vec![lo];
        let mut a = lo;
        while a < hi {
            let mut w = kappa / scale(a);
            // scale is convex, so its maximum over [a, a+w] sits at an end point
            for _ in 0..4 {
                w = kappa / scale(a).max(scale((a + w).min(hi)));
            }
            let b = if a + w >= hi - 0.25 * w { hi } else { a + w };
            edges.push(b);
            a = b;
        }
        Self::from_edges(edges)
    }

    pub fn panel_count(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn lo(&self) -> Real {
        self.edges[0]
    }

    pub fn hi(&self) -> Real {
        *self.edges.last().unwrap()
    }

    /// Half width of panel `k`.
    pub fn half_width(&self, k: usize) -> Real {
        0.5 * (self.edges[k + 1] - self.edges[k])
    }

    /// Panel index and reference coordinate of `r` (clamped to the interval).
    pub fn locate(&self, r: Real) -> (usize, Real) {
        let n = self.panel_count();
        let k = match self.edges.binary_search_by(|e| e.total_cmp(&r)) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        };
        let t = (2.0 * (r - self.edges[k]) / (self.edges[k + 1] - self.edges[k]) - 1.0).clamp(-1.0, 1.0);
        (k, t)
    }

    /// Nodal values of panel `k`.
    pub fn panel<'a, T>(&self, values: &'a [T], k: usize) -> &'a [T] {
        &values[k * PANEL_NODES..(k + 1) * PANEL_NODES]
    }

    /// Barycentric interpolation of nodal values at `r`.
    pub fn interpolate(&self, values: &[Cplx], r: Real) -> Cplx {
        let (k, t) = self.locate(r);
        reference_panel().interpolate(self.panel(values, k), t)
    }
}
