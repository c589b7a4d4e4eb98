//! Elementary charts used as backgrounds and as oracles.

use rand::Rng;

use super::{MetricChart, MetricJet};

/// Flat metric `δ_ij` everywhere.
#[derive(Debug, Clone, Copy)]
pub struct EuclideanChart {
    dim: usize,
}

impl EuclideanChart {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl MetricChart for EuclideanChart {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet(&self, _p: &[f64]) -> MetricJet {
        MetricJet::identity(self.dim)
    }
}

/// The hyperbolic plane in Fermi coordinates about a geodesic:
/// `g = cosh²(x) dt² + dx²` with `p = (t, x)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct HyperbolicPlaneChart;

impl MetricChart for HyperbolicPlaneChart {
    fn dim(&self) -> usize {
        2
    }

    fn jet(&self, p: &[f64]) -> MetricJet {
        let x = p[1];
        let mut jet = MetricJet::zeros(2);
        let c = x.cosh();
        jet.g = vec![c * c, 0.0, 0.0, 1.0];
        // d/dx cosh² = sinh 2x, d²/dx² cosh² = 2 cosh 2x
        jet.dg[4] = (2.0 * x).sinh();
        jet.ddg[12] = 2.0 * (2.0 * x).cosh();
        jet
    }
}

/// Metric with components `g_ij(p) = a_ij + b_ijk p^k + ½ c_ijkl p^k p^l`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticChart {
    dim: usize,
    constant: Vec<f64>,
    linear: Vec<f64>,
    quadratic: Vec<f64>,
    tube_radius: Option<f64>,
}

impl QuadraticChart {
    /// Build from coefficient arrays laid out as `a[i*n+j]`, `b[(i*n+j)*n+k]`,
    /// `c[((i*n+j)*n+k)*n+l]`. Coefficients are symmetrized in `(i,j)` and in `(k,l)`.
    pub fn new(dim: usize, constant: Vec<f64>, linear: Vec<f64>, quadratic: Vec<f64>) -> Self {
        let n = dim;
        assert_eq!(constant.len(), n * n);
        assert_eq!(linear.len(), n * n * n);
        assert_eq!(quadratic.len(), n * n * n * n);
        let mut a = vec![0.0; n * n];
        let mut b = vec![0.0; n * n * n];
        let mut c = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = 0.5 * (constant[i * n + j] + constant[j * n + i]);
                for k in 0..n {
                    b[(i * n + j) * n + k] =
                        0.5 * (linear[(i * n + j) * n + k] + linear[(j * n + i) * n + k]);
                    for l in 0..n {
                        let idx = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
                        c[idx(i, j, k, l)] = 0.25
                            * (quadratic[idx(i, j, k, l)]
                                + quadratic[idx(j, i, k, l)]
                                + quadratic[idx(i, j, l, k)]
                                + quadratic[idx(j, i, l, k)]);
                    }
                }
            }
        }
        Self {
            dim,
            constant: a,
            linear: b,
            quadratic: c,
            tube_radius: None,
        }
    }

    pub fn with_tube_radius(mut self, radius: f64) -> Self {
        self.tube_radius = Some(radius);
        self
    }

    /// A random chart near the identity, positive definite on the unit box
    /// whenever `scale ≤ 0.1`.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R, scale: f64) -> Self {
        let n = dim;
        let mut sample = |len: usize| -> Vec<f64> {
            (0..len).map(|_| scale * rng.random_range(-1.0..1.0)).collect()
        };
        let mut a = sample(n * n);
        for i in 0..n {
            a[i * n + i] += 1.0;
        }
        let b = sample(n * n * n);
        let c = sample(n * n * n * n);
        Self::new(dim, a, b, c)
    }

    #[inline]
    fn c(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.dim;
        self.quadratic[((i * n + j) * n + k) * n + l]
    }
}

impl MetricChart for QuadraticChart {
    fn dim(&self) -> usize {
        self.dim
    }

    fn jet(&self, p: &[f64]) -> MetricJet {
        let n = self.dim;
        let mut jet = MetricJet::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let ij = i * n + j;
                let mut g = self.constant[ij];
                for k in 0..n {
                    let mut dk = self.linear[ij * n + k];
                    g += self.linear[ij * n + k] * p[k];
                    for l in 0..n {
                        let c = self.c(i, j, k, l);
                        g += 0.5 * c * p[k] * p[l];
                        // ∂_k of ½ c_ijab p^a p^b, with c symmetric in (a,b)
                        dk += c * p[l];
                        jet.ddg[((k * n + l) * n + i) * n + j] = c;
                    }
                    jet.dg[(k * n + i) * n + j] = dk;
                }
                jet.g[ij] = g;
            }
        }
        jet
    }

    fn tube_radius(&self) -> Option<f64> {
        self.tube_radius
    }
}
