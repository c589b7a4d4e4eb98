//! Coordinate tensor algebra on charts.
//!
//! Index 0 is always the geodesic direction `t`. Flat storage layouts:
//!
//! * metric `g[i*n + j]`
//! * first partials `dg[(k*n + i)*n + j] = ∂_k g_ij`
//! * second partials `ddg[((k*n + l)*n + i)*n + j] = ∂_k ∂_l g_ij`
//! * Christoffel symbols `gamma[(k*n + i)*n + j] = Γ^k_ij`
//! * curvature `r[((i*n + j)*n + k)*n + s] = R_ijks = g(R(∂_i, ∂_j)∂_k, ∂_s)`
//!
//! with `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z`, so that the sectional
//! curvature of a plane is `R(X,Y,Y,X) / |X∧Y|²`.

pub mod charts;
pub mod conformal;

use nalgebra::DMatrix;

use crate::error::{GeometryError, Result};

pub use charts::{EuclideanChart, HyperbolicPlaneChart, QuadraticChart};
pub use conformal::{
    conformal_christoffel, conformal_curvature, conformal_sectional, QuadraticField, ScalarField, ScalarJet,
};

/// Metric components with their first and second partial derivatives at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricJet {
    dim: usize,
    pub g: Vec<f64>,
    pub dg: Vec<f64>,
    pub ddg: Vec<f64>,
}

impl MetricJet {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            g: vec![0.0; dim * dim],
            dg: vec![0.0; dim * dim * dim],
            ddg: vec![0.0; dim * dim * dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut jet = Self::zeros(dim);
        for i in 0..dim {
            jet.g[i * dim + i] = 1.0;
        }
        jet
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn g(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.dim + j]
    }

    #[inline]
    pub fn dg(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.dim;
        self.dg[(k * n + i) * n + j]
    }

    #[inline]
    pub fn ddg(&self, k: usize, l: usize, i: usize, j: usize) -> f64 {
        let n = self.dim;
        self.ddg[((k * n + l) * n + i) * n + j]
    }

    /// `g(X, Y)` at this point.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.g[i * n + j] * y[j];
            }
            acc += x[i] * row;
        }
        acc
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = DMatrix::from_row_slice(self.dim, self.dim, &self.g);
        m.symmetric_eigenvalues().min()
    }

    /// Inverse metric `g^{ij}`, failing when the metric is not positive definite.
    pub fn inverse(&self, point: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim;
        let m = DMatrix::from_row_slice(n, n, &self.g);
        match m.clone().cholesky() {
            Some(chol) => {
                let inv = chol.inverse();
                let mut out = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        out[i * n + j] = inv[(i, j)];
                    }
                }
                Ok(out)
            }
            None => Err(GeometryError::DegenerateMetric {
                point: point.to_vec(),
                min_eigenvalue: m.symmetric_eigenvalues().min(),
            }),
        }
    }

    /// Largest violation of the index symmetries of `g`, `∂g` and `∂²g`.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.g(i, j) - self.g(j, i)).abs());
                for k in 0..n {
                    worst = worst.max((self.dg(k, i, j) - self.dg(k, j, i)).abs());
                    for l in 0..n {
                        worst = worst.max((self.ddg(k, l, i, j) - self.ddg(k, l, j, i)).abs());
                        worst = worst.max((self.ddg(k, l, i, j) - self.ddg(l, k, i, j)).abs());
                    }
                }
            }
        }
        worst
    }
}

/// A coordinate chart carrying metric components with closed-form partials.
pub trait MetricChart: Send + Sync {
    fn dim(&self) -> usize;

    /// Metric components and their exact first and second partials at `p`.
    fn jet(&self, p: &[f64]) -> MetricJet;

    /// Metric components only.
    fn metric(&self, p: &[f64]) -> Vec<f64> {
        self.jet(p).g
    }

    /// Half-width of the transverse coordinate box `(−ε₀, ε₀)^{n−1}`, if bounded.
    fn tube_radius(&self) -> Option<f64> {
        None
    }
}

impl<C: MetricChart + ?Sized> MetricChart for &C {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn jet(&self, p: &[f64]) -> MetricJet {
        (**self).jet(p)
    }
    fn metric(&self, p: &[f64]) -> Vec<f64> {
        (**self).metric(p)
    }
    fn tube_radius(&self) -> Option<f64> {
        (**self).tube_radius()
    }
}

impl<C: MetricChart + ?Sized> MetricChart for Box<C> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn jet(&self, p: &[f64]) -> MetricJet {
        (**self).jet(p)
    }
    fn metric(&self, p: &[f64]) -> Vec<f64> {
        (**self).metric(p)
    }
    fn tube_radius(&self) -> Option<f64> {
        (**self).tube_radius()
    }
}

impl<C: MetricChart + ?Sized> MetricChart for std::sync::Arc<C> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn jet(&self, p: &[f64]) -> MetricJet {
        (**self).jet(p)
    }
    fn metric(&self, p: &[f64]) -> Vec<f64> {
        (**self).metric(p)
    }
    fn tube_radius(&self) -> Option<f64> {
        (**self).tube_radius()
    }
}

/// Christoffel symbols of the second kind, `Γ^k_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelField {
    dim: usize,
    pub values: Vec<f64>,
}

impl ChristoffelField {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            values: vec![0.0; dim * dim * dim],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.dim;
        self.values[(k * n + i) * n + j]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, value: f64) {
        let n = self.dim;
        self.values[(k * n + i) * n + j] = value;
    }

    /// `Γ(X, Y)^k = Γ^k_ij X^i Y^j`.
    pub fn contract(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let n = self.dim;
        for (k, o) in out.iter_mut().enumerate().take(n) {
            let block = &self.values[k * n * n..(k + 1) * n * n];
            let mut acc = 0.0;
            for i in 0..n {
                let mut row = 0.0;
                for j in 0..n {
                    row += block[i * n + j] * y[j];
                }
                acc += x[i] * row;
            }
            *o = acc;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn lower_symmetry_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((self.get(k, i, j) - self.get(k, j, i)).abs());
                }
            }
        }
        worst
    }
}

/// Fully lowered curvature tensor `R_ijks`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTensor {
    dim: usize,
    pub values: Vec<f64>,
}

/// Largest violations of the algebraic curvature identities.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CurvatureSymmetryResiduals {
    pub antisym_first: f64,
    pub antisym_last: f64,
    pub pair: f64,
    pub bianchi: f64,
    pub scale: f64,
}

impl CurvatureSymmetryResiduals {
    pub fn max_relative(&self) -> f64 {
        let worst = self
            .antisym_first
            .max(self.antisym_last)
            .max(self.pair)
            .max(self.bianchi);
        worst / self.scale.max(1.0)
    }
}

impl CurvatureTensor {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            values: vec![0.0; dim * dim * dim * dim],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, s: usize) -> f64 {
        let n = self.dim;
        self.values[((i * n + j) * n + k) * n + s]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, s: usize, value: f64) {
        let n = self.dim;
        self.values[((i * n + j) * n + k) * n + s] = value;
    }

    /// `R(X, Y, Z, W) = g(R(X,Y)Z, W)`.
    pub fn eval(&self, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let xy = x[i] * y[j];
                if xy == 0.0 {
                    continue;
                }
                let base = (i * n + j) * n * n;
                let mut inner = 0.0;
                for k in 0..n {
                    let row = &self.values[base + k * n..base + (k + 1) * n];
                    let mut rw = 0.0;
                    for s in 0..n {
                        rw += row[s] * w[s];
                    }
                    inner += z[k] * rw;
                }
                acc += xy * inner;
            }
        }
        acc
    }

    /// `T_is = R_ijks v^j v^k`, the lowered Jacobi operator `g(R(·, v)v, ·)`.
    pub fn jacobi_form(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if v[j] == 0.0 {
                    continue;
                }
                for k in 0..n {
                    let c = v[j] * v[k];
                    if c == 0.0 {
                        continue;
                    }
                    let base = ((i * n + j) * n + k) * n;
                    for s in 0..n {
                        out[i * n + s] += c * self.values[base + s];
                    }
                }
            }
        }
        out
    }

    /// `R(X,Y)Z` as a contravariant vector, raised with `ginv`.
    pub fn apply(&self, ginv: &[f64], x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut lowered = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let c = x[i] * y[j] * z[k];
                    if c == 0.0 {
                        continue;
                    }
                    let base = ((i * n + j) * n + k) * n;
                    for (s, l) in lowered.iter_mut().enumerate() {
                        *l += c * self.values[base + s];
                    }
                }
            }
        }
        raise(ginv, &lowered)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn symmetry_residuals(&self) -> CurvatureSymmetryResiduals {
        let n = self.dim;
        let mut res = CurvatureSymmetryResiduals {
            antisym_first: 0.0,
            antisym_last: 0.0,
            pair: 0.0,
            bianchi: 0.0,
            scale: self.max_abs(),
        };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for s in 0..n {
                        let r = self.get(i, j, k, s);
                        res.antisym_first = res.antisym_first.max((r + self.get(j, i, k, s)).abs());
                        res.antisym_last = res.antisym_last.max((r + self.get(i, j, s, k)).abs());
                        res.pair = res.pair.max((r - self.get(k, s, i, j)).abs());
                        let cyclic = r + self.get(j, k, i, s) + self.get(k, i, j, s);
                        res.bianchi = res.bianchi.max(cyclic.abs());
                    }
                }
            }
        }
        res
    }
}

/// Raise an index: `v^i = g^{ij} w_j`.
pub fn raise(ginv: &[f64], lowered: &[f64]) -> Vec<f64> {
    let n = lowered.len();
    (0..n)
        .map(|i| (0..n).map(|j| ginv[i * n + j] * lowered[j]).sum())
        .collect()
}

/// Metric, inverse and Christoffel symbols evaluated together at one point.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub jet: MetricJet,
    pub ginv: Vec<f64>,
    pub christoffel: ChristoffelField,
    /// Christoffel symbols of the first kind, `[m*n*n + i*n + j] = Γ_{m,ij}`.
    first_kind: Vec<f64>,
}

impl PointGeometry {
    pub fn new(jet: MetricJet, point: &[f64]) -> Result<Self> {
        let n = jet.dim();
        let ginv = jet.inverse(point)?;
        let mut first_kind = vec![0.0; n * n * n];
        for m in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v = 0.5 * (jet.dg(i, m, j) + jet.dg(j, m, i) - jet.dg(m, i, j));
                    first_kind[(m * n + i) * n + j] = v;
                    first_kind[(m * n + j) * n + i] = v;
                }
            }
        }
        let mut christoffel = ChristoffelField::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut acc = 0.0;
                    for m in 0..n {
                        acc += ginv[k * n + m] * first_kind[(m * n + i) * n + j];
                    }
                    christoffel.set(k, i, j, acc);
                    christoffel.set(k, j, i, acc);
                }
            }
        }
        Ok(Self {
            jet,
            ginv,
            christoffel,
            first_kind,
        })
    }

    pub fn at<C: MetricChart + ?Sized>(chart: &C, p: &[f64]) -> Result<Self> {
        Self::new(chart.jet(p), p)
    }

    pub fn dim(&self) -> usize {
        self.jet.dim()
    }

    /// Coordinate curvature tensor
    /// `R_ijks = ½(∂_ik g_js + ∂_js g_ik − ∂_is g_jk − ∂_jk g_is) + g_mn(Γ^m_ik Γ^n_js − Γ^m_is Γ^n_jk)`.
    pub fn curvature(&self) -> CurvatureTensor {
        let n = self.dim();
        let jet = &self.jet;
        let gam = &self.christoffel;
        let fk = &self.first_kind;
        let mut r = CurvatureTensor::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                for k in 0..n {
                    for s in 0..n {
                        if k == s {
                            continue;
                        }
                        let second = 0.5
                            * (jet.ddg(i, k, j, s) + jet.ddg(j, s, i, k)
                                - jet.ddg(i, s, j, k)
                                - jet.ddg(j, k, i, s));
                        let mut quad = 0.0;
                        for m in 0..n {
                            quad += gam.get(m, i, k) * fk[(m * n + j) * n + s]
                                - gam.get(m, i, s) * fk[(m * n + j) * n + k];
                        }
                        r.set(i, j, k, s, second + quad);
                    }
                }
            }
        }
        r
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.jet.inner(x, y)
    }
}

/// Christoffel symbols of the chart at `p`.
pub fn christoffel_at<C: MetricChart + ?Sized>(chart: &C, p: &[f64]) -> Result<ChristoffelField> {
    Ok(PointGeometry::at(chart, p)?.christoffel)
}

/// Lowered curvature tensor of the chart at `p`.
pub fn curvature_at<C: MetricChart + ?Sized>(chart: &C, p: &[f64]) -> Result<CurvatureTensor> {
    Ok(PointGeometry::at(chart, p)?.curvature())
}

/// Relative tolerance under which `|X∧Y|²` counts as a degenerate plane.
pub const PLANE_TOLERANCE: f64 = 1e-12;

/// Sectional curvature `K(X,Y) = R(X,Y,Y,X) / |X∧Y|²`.
pub fn sectional_at(r: &CurvatureTensor, jet: &MetricJet, x: &[f64], y: &[f64]) -> Result<f64> {
    let xx = jet.inner(x, x);
    let yy = jet.inner(y, y);
    let xy = jet.inner(x, y);
    let wedge_sq = xx * yy - xy * xy;
    if wedge_sq <= PLANE_TOLERANCE * xx * yy || wedge_sq <= 0.0 {
        return Err(GeometryError::DegeneratePlane { wedge_sq });
    }
    Ok(r.eval(x, y, y, x) / wedge_sq)
}

/// Residuals of the two metric-derivative identities:
/// `∂_s g^{ik} g_kj = −g^{ik} ∂_s g_kj` and `∂_p g_ms = g_ns Γ^n_pm + g_nm Γ^n_ps`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MetricIdentityResiduals {
    pub inverse_derivative: f64,
    pub christoffel_compatibility: f64,
}

/// Step used for the finite-difference derivative of the inverse metric.
const INVERSE_FD_STEP: f64 = 1e-4;

/// Evaluate both metric-derivative identities at `p`.
///
/// The derivative of the inverse metric is taken by a fourth-order central
/// difference of the chart's inverse, so the first identity is a genuine
/// cross-check of the supplied `∂g` rather than a restatement of it.
pub fn metric_identity_checks<C: MetricChart + ?Sized>(
    chart: &C,
    p: &[f64],
) -> Result<MetricIdentityResiduals> {
    metric_identity_checks_with_step(chart, p, INVERSE_FD_STEP)
}

/// [`metric_identity_checks`] with an explicit difference step, for metrics
/// varying on scales shorter than the default step resolves.
pub fn metric_identity_checks_with_step<C: MetricChart + ?Sized>(
    chart: &C,
    p: &[f64],
    h: f64,
) -> Result<MetricIdentityResiduals> {
    let geo = PointGeometry::at(chart, p)?;
    let n = geo.dim();
    let jet = &geo.jet;

    let inverse_at = |q: &[f64]| -> Result<Vec<f64>> {
        let g = chart.metric(q);
        let mut j = MetricJet::zeros(n);
        j.g = g;
        j.inverse(q)
    };

    let mut inverse_derivative: f64 = 0.0;
    for s in 0..n {
        let mut offsets = Vec::with_capacity(4);
        for m in [-2.0, -1.0, 1.0, 2.0] {
            let mut q = p.to_vec();
            q[s] += m * h;
            offsets.push(inverse_at(&q)?);
        }
        // (f(-2h) - 8 f(-h) + 8 f(h) - f(2h)) / 12h
        let d_inv: Vec<f64> = (0..n * n)
            .map(|idx| {
                (offsets[0][idx] - 8.0 * offsets[1][idx] + 8.0 * offsets[2][idx] - offsets[3][idx])
                    / (12.0 * h)
            })
            .collect();
        for i in 0..n {
            for j in 0..n {
                let mut lhs = 0.0;
                let mut rhs = 0.0;
                for k in 0..n {
                    lhs += d_inv[i * n + k] * jet.g(k, j);
                    rhs -= geo.ginv[i * n + k] * jet.dg(s, k, j);
                }
                inverse_derivative = inverse_derivative.max((lhs - rhs).abs());
            }
        }
    }

    let gam = &geo.christoffel;
    let mut christoffel_compatibility: f64 = 0.0;
    for pp in 0..n {
        for m in 0..n {
            for s in 0..n {
                let mut rhs = 0.0;
                for k in 0..n {
                    rhs += jet.g(k, s) * gam.get(k, pp, m) + jet.g(k, m) * gam.get(k, pp, s);
                }
                christoffel_compatibility =
                    christoffel_compatibility.max((jet.dg(pp, m, s) - rhs).abs());
            }
        }
    }

    Ok(MetricIdentityResiduals {
        inverse_derivative,
        christoffel_compatibility,
    })
}

/// Fourth-order central finite differences of the chart's metric components.
///
/// Oracle only: never used on the evaluation path.
pub fn finite_difference_jet<C: MetricChart + ?Sized>(chart: &C, p: &[f64], h: f64) -> MetricJet {
    let n = chart.dim();
    let mut jet = MetricJet::zeros(n);
    jet.g = chart.metric(p);
    let shifted = |d: &[(usize, f64)]| -> Vec<f64> {
        let mut q = p.to_vec();
        for &(axis, amount) in d {
            q[axis] += amount;
        }
        chart.metric(&q)
    };
    let stencil = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
    for k in 0..n {
        let mut acc = vec![0.0; n * n];
        for &(m, w) in &stencil {
            let g = shifted(&[(k, m * h)]);
            for idx in 0..n * n {
                acc[idx] += w * g[idx];
            }
        }
        for idx in 0..n * n {
            jet.dg[k * n * n + idx] = acc[idx] / (12.0 * h);
        }
    }
    for k in 0..n {
        for l in 0..n {
            let mut acc = vec![0.0; n * n];
            if k == l {
                // (-f(-2h) + 16 f(-h) - 30 f(0) + 16 f(h) - f(2h)) / 12h²
                let weights = [(-2.0, -1.0), (-1.0, 16.0), (0.0, -30.0), (1.0, 16.0), (2.0, -1.0)];
                for &(m, w) in &weights {
                    let g = shifted(&[(k, m * h)]);
                    for idx in 0..n * n {
                        acc[idx] += w * g[idx];
                    }
                }
                for a in acc.iter_mut() {
                    *a /= 12.0 * h * h;
                }
            } else {
                for &(mk, wk) in &stencil {
                    for &(ml, wl) in &stencil {
                        let g = shifted(&[(k, mk * h), (l, ml * h)]);
                        for idx in 0..n * n {
                            acc[idx] += wk * wl * g[idx];
                        }
                    }
                }
                for a in acc.iter_mut() {
                    *a /= 144.0 * h * h;
                }
            }
            let base = (k * n + l) * n * n;
            jet.ddg[base..base + n * n].copy_from_slice(&acc);
        }
    }
    jet
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_has_flat_connection_and_curvature() {
        let chart = EuclideanChart::new(4);
        let p = [0.3, -0.1, 0.2, 0.05];
        assert_eq!(christoffel_at(&chart, &p).unwrap().max_abs(), 0.0);
        let r = curvature_at(&chart, &p).unwrap();
        assert_eq!(r.max_abs(), 0.0);
        let jet = chart.jet(&p);
        let k = sectional_at(&r, &jet, &[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(k, 0.0);
    }

    #[test]
    fn euclidean_identity_residuals_vanish() {
        let chart = EuclideanChart::new(3);
        let res = metric_identity_checks(&chart, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(res.inverse_derivative, 0.0);
        assert_eq!(res.christoffel_compatibility, 0.0);
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let mut jet = MetricJet::identity(3);
        jet.g[4] = 0.0;
        let err = PointGeometry::new(jet, &[0.0; 3]).unwrap_err();
        assert!(matches!(err, GeometryError::DegenerateMetric { .. }));
    }

    #[test]
    fn parallel_vectors_form_degenerate_plane() {
        let chart = EuclideanChart::new(3);
        let p = [0.0; 3];
        let r = curvature_at(&chart, &p).unwrap();
        let jet = chart.jet(&p);
        let err = sectional_at(&r, &jet, &[1.0, 2.0, 0.0], &[2.0, 4.0, 0.0]).unwrap_err();
        assert!(matches!(err, GeometryError::DegeneratePlane { .. }));
    }

    #[test]
    fn hyperbolic_plane_has_curvature_minus_one_off_axis() {
        let chart = HyperbolicPlaneChart;
        for &x in &[-0.7, -0.2, 0.0, 0.4, 1.1] {
            let p = [0.3, x];
            let geo = PointGeometry::at(&chart, &p).unwrap();
            let r = geo.curvature();
            let k = sectional_at(&r, &geo.jet, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
            assert!((k + 1.0).abs() < 1e-13, "x = {x}: K = {k}");
        }
    }
}
