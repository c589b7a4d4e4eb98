//! Complex-hyperbolic background: curvature operator, the A/B splitting of `v^⊥`
//! and the second-order Fermi chart around the central geodesic.

use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::tensor::{CurvatureTensor, MetricChart, MetricJet, QuadraticChart};

/// Dimensions and tube parameters of the background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Real dimension `n = 2m`.
    pub n: usize,
    /// Dimension of `A`; 1 for the Kähler model.
    pub r: usize,
    /// Index of the deformed direction.
    pub s: usize,
    /// Period of the central geodesic.
    pub period: f64,
    /// Radius `ε₀` of the Fermi tube.
    pub tube_radius: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            n: 4,
            r: 1,
            s: 3,
            period: 2.0 * std::f64::consts::PI,
            tube_radius: 0.5,
        }
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(GeometryError::InvalidSpec(msg));
        if self.n < 4 || !self.n.is_multiple_of(2) {
            return bad(format!("n = {} must be even and at least 4", self.n));
        }
        if self.r != 1 {
            return bad(format!("r = {} but the Kähler model has r = 1", self.r));
        }
        if self.s < self.r + 1 || self.s > self.n - 1 {
            return bad(format!("s = {} outside {}..={}", self.s, self.r + 1, self.n - 1));
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return bad(format!("period = {} must be positive", self.period));
        }
        if !(self.tube_radius > 0.0 && self.tube_radius.is_finite()) {
            return bad(format!("tube radius = {} must be positive", self.tube_radius));
        }
        Ok(())
    }
}

/// Complex hyperbolic space form with holomorphic curvature −1, written in an
/// orthonormal basis with `J e_{2a} = e_{2a+1}`. In particular `J e_0 = e_1`.
#[derive(Debug, Clone)]
pub struct KahlerModel {
    spec: ModelSpec,
    tensor: CurvatureTensor,
}

impl KahlerModel {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.n;
        let mut tensor = CurvatureTensor::zeros(n);
        let basis = |i: usize| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = Self::apply_operator(&basis(i), &basis(j), &basis(k));
                    for (s, &value) in v.iter().enumerate() {
                        tensor.set(i, j, k, s, value);
                    }
                }
            }
        }
        Ok(Self { spec, tensor })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.n
    }

    /// Lowered tensor `R_ijks` in the orthonormal basis.
    pub fn tensor(&self) -> &CurvatureTensor {
        &self.tensor
    }

    pub fn complex_structure(x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for a in 0..x.len() / 2 {
            out[2 * a + 1] = x[2 * a];
            out[2 * a] = -x[2 * a + 1];
        }
        out
    }

    fn apply_operator(x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        let jx = Self::complex_structure(x);
        let jy = Self::complex_structure(y);
        let jz = Self::complex_structure(z);
        let (yz, xz) = (dot(y, z), dot(x, z));
        let (jyz, jxz, xjy) = (dot(&jy, z), dot(&jx, z), dot(x, &jy));
        (0..x.len())
            .map(|l| -0.25 * (yz * x[l] - xz * y[l] + jyz * jx[l] - jxz * jy[l] + 2.0 * xjy * jz[l]))
            .collect()
    }

    /// `R(X,Y)Z` for the model.
    pub fn curvature(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        Self::apply_operator(x, y, z)
    }

    /// Matrix of `X ↦ R(X,v)v`, row-major.
    pub fn jacobi_operator(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut m = vec![0.0; n * n];
        for a in 0..n {
            let mut e = vec![0.0; n];
            e[a] = 1.0;
            let col = self.curvature(&e, v, v);
            for b in 0..n {
                m[b * n + a] = col[b];
            }
        }
        m
    }

    /// `(w_A, w_B)` with `w_A` the component along `Jv`.
    pub fn split_ab(&self, v: &[f64], w: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        let vv = dot(v, v);
        let wv = dot(w, v);
        let scale = (vv * dot(w, w)).sqrt().max(f64::MIN_POSITIVE);
        if wv.abs() > 1e-10 * scale.max(1.0) {
            return Err(GeometryError::ContractViolation(format!(
                "split_ab needs w ⊥ v (g(w,v) = {wv:e})"
            )));
        }
        let jv = Self::complex_structure(v);
        let c = dot(w, &jv) / vv;
        let wa: Vec<f64> = jv.iter().map(|x| c * x).collect();
        let wb: Vec<f64> = w.iter().zip(&wa).map(|(a, b)| a - b).collect();
        Ok((wa, wb))
    }
}

/// Quadratic Fermi chart of the model around `γ(t) = (t, 0)`:
///
/// `g_00 = 1 − R(e_k,e_0,e_0,e_l) x^k x^l`,
/// `g_0i = −⅔ R(e_k,e_0,e_i,e_l) x^k x^l`,
/// `g_ij = δ_ij − ⅓ R(e_k,e_i,e_j,e_l) x^k x^l`, with `k, l ≥ 1`.
///
/// The components do not depend on `t`, so the chart is periodic with any period.
#[derive(Debug, Clone)]
pub struct FermiChart {
    model: KahlerModel,
    inner: QuadraticChart,
    max_radius: f64,
}

impl FermiChart {
    pub fn new(model: KahlerModel) -> Result<Self> {
        let n = model.dim();
        let r = model.tensor();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 1.0;
        }
        let b = vec![0.0; n * n * n];
        let mut c = vec![0.0; n * n * n * n];
        let idx = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
        for k in 1..n {
            for l in 1..n {
                // the chart stores ½ c_ijkl x^k x^l
                c[idx(0, 0, k, l)] = -2.0 * r.get(k, 0, 0, l);
                for i in 1..n {
                    let mixed = -2.0 * (2.0 / 3.0) * r.get(k, 0, i, l);
                    c[idx(0, i, k, l)] = mixed;
                    c[idx(i, 0, k, l)] = mixed;
                    for j in 1..n {
                        c[idx(i, j, k, l)] = -2.0 / 3.0 * r.get(k, i, j, l);
                    }
                }
            }
        }
        let inner = QuadraticChart::new(n, a, b, c);
        let max_radius = admissible_radius(&inner, n);
        let requested = model.spec().tube_radius;
        if requested >= max_radius {
            return Err(GeometryError::TubeTooLarge {
                requested,
                max_admissible: max_radius,
            });
        }
        Ok(Self {
            model,
            inner: inner.with_tube_radius(requested),
            max_radius,
        })
    }

    pub fn from_spec(spec: ModelSpec) -> Result<Self> {
        Self::new(KahlerModel::new(spec)?)
    }

    pub fn model(&self) -> &KahlerModel {
        &self.model
    }

    pub fn spec(&self) -> &ModelSpec {
        self.model.spec()
    }

    /// Largest box radius on which the chart stays positive definite.
    pub fn max_admissible_radius(&self) -> f64 {
        self.max_radius
    }
}

impl MetricChart for FermiChart {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn jet(&self, p: &[f64]) -> MetricJet {
        self.inner.jet(p)
    }

    fn tube_radius(&self) -> Option<f64> {
        Some(self.spec().tube_radius)
    }
}

/// `g(x) = I + Q(x)` with `Q` homogeneous quadratic, so `g(ρu) = I + ρ²Q(u)` and
/// positivity on the box of radius `ρ` holds iff `ρ² · max_u(−λ_min Q(u)) < 1` over
/// the unit box. The maximum sits on the boundary; it is sampled on the faces and
/// then refined by bisection on the radius against the sampled points.
fn admissible_radius(chart: &QuadraticChart, n: usize) -> f64 {
    const RES: usize = 24;
    let m = n - 1;
    let mut worst = 0.0_f64;
    let mut u = vec![0.0; m];
    let total = (RES + 1).pow(m as u32);
    let mut p = vec![0.0; n];
    for code in 0..total {
        let mut c = code;
        let mut on_face = false;
        for ui in u.iter_mut() {
            let k = c % (RES + 1);
            c /= RES + 1;
            *ui = -1.0 + 2.0 * k as f64 / RES as f64;
            on_face |= k == 0 || k == RES;
        }
        if !on_face {
            continue;
        }
        p[1..].copy_from_slice(&u);
        let jet = chart.jet(&p);
        // λ_min(I + Q(u)) = 1 + λ_min(Q(u))
        worst = worst.max(1.0 - jet.min_eigenvalue());
    }
    if worst <= 0.0 {
        f64::INFINITY
    } else {
        // keep a margin for the sampling gaps between face points
        0.95 / worst.sqrt()
    }
}

/// Orthonormal frame `e_0 = γ'`, `e_1..e_{n−1}` along an orbit, sampled at the
/// orbit's time nodes. Frames are stored column-major: `frames[k][a*n + i]` is
/// coordinate `i` of `e_a` at `times[k]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParallelFrame {
    pub dim: usize,
    pub times: Vec<f64>,
    pub frames: Vec<Vec<f64>>,
}

impl ParallelFrame {
    pub fn vector(&self, k: usize, a: usize) -> &[f64] {
        let n = self.dim;
        &self.frames[k][a * n..(a + 1) * n]
    }

    /// Largest deviation of the Gram matrix from the identity along the orbit.
    pub fn orthonormality_defect<C: MetricChart + ?Sized>(&self, chart: &C, positions: &[Vec<f64>]) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for (k, p) in positions.iter().enumerate() {
            let jet = chart.jet(p);
            for a in 0..n {
                for b in 0..n {
                    let gab = jet.inner(self.vector(k, a), self.vector(k, b));
                    let target = if a == b { 1.0 } else { 0.0 };
                    worst = worst.max((gab - target).abs());
                }
            }
        }
        worst
    }
}

/// Extract the parallel frame carried by an integrated orbit.
pub fn parallel_frame_along<C: MetricChart + ?Sized>(
    chart: &C,
    orbit: &crate::flow::Orbit,
) -> Result<ParallelFrame> {
    if let Some(t) = orbit.exit_time {
        return Err(GeometryError::DomainExit(t));
    }
    let n = chart.dim();
    let frames = orbit
        .states
        .iter()
        .map(|s| {
            let mut f = Vec::with_capacity(n * n);
            f.extend_from_slice(&s.vel);
            f.extend_from_slice(&s.frame);
            f
        })
        .collect();
    Ok(ParallelFrame {
        dim: n,
        times: orbit.times.clone(),
        frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{christoffel_at, curvature_at, sectional_at};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / norm).collect()
    }

    #[test]
    fn spec_validation() {
        assert!(ModelSpec::default().validate().is_ok());
        for bad in [
            ModelSpec { n: 5, ..Default::default() },
            ModelSpec { s: 1, ..Default::default() },
            ModelSpec { s: 4, ..Default::default() },
            ModelSpec { r: 2, ..Default::default() },
            ModelSpec { period: 0.0, ..Default::default() },
        ] {
            assert!(matches!(bad.validate(), Err(GeometryError::InvalidSpec(_))));
        }
    }

    #[test]
    fn jacobi_operator_on_a_and_b() {
        let model = KahlerModel::new(ModelSpec { n: 6, s: 4, ..Default::default() }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let v = random_unit(&mut rng, 6);
            let raw = random_unit(&mut rng, 6);
            let vx: f64 = raw.iter().zip(&v).map(|(a, b)| a * b).sum();
            let x: Vec<f64> = raw.iter().zip(&v).map(|(a, b)| a - vx * b).collect();
            let (xa, xb) = model.split_ab(&v, &x).unwrap();
            let rx = model.curvature(&x, &v, &v);
            let res: f64 = (0..6)
                .map(|i| (rx[i] + xa[i] + 0.25 * xb[i]).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res < 1e-12, "{res}");
        }
        let v = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(model.curvature(&v, &v, &v), vec![0.0; 6]);
        let jv = KahlerModel::complex_structure(&v);
        assert_eq!(jv, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let rjv = model.curvature(&jv, &v, &v);
        assert!((rjv[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn split_recombines_and_rejects_non_orthogonal() {
        let model = KahlerModel::new(ModelSpec::default()).unwrap();
        let v = [1.0, 0.0, 0.0, 0.0];
        let (a, b) = model.split_ab(&v, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!((a, b), (vec![0.0, 1.0, 0.0, 0.0], vec![0.0; 4]));
        let (a, b) = model.split_ab(&v, &[0.0, 0.0, 0.3, 0.4]).unwrap();
        assert_eq!(a, vec![0.0; 4]);
        assert_eq!(b, vec![0.0, 0.0, 0.3, 0.4]);
        assert!(model.split_ab(&v, &[1.0, 1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn model_tensor_symmetries() {
        let model = KahlerModel::new(ModelSpec::default()).unwrap();
        assert!(model.tensor().symmetry_residuals().max_relative() < 1e-15);
    }

    #[test]
    fn fermi_chart_reproduces_model_on_axis() {
        let chart = FermiChart::from_spec(ModelSpec::default()).unwrap();
        for t in [0.0, 1.3, 4.0] {
            let p = [t, 0.0, 0.0, 0.0];
            let jet = chart.jet(&p);
            assert_eq!(jet.g, MetricJet::identity(4).g);
            assert_eq!(christoffel_at(&chart, &p).unwrap().max_abs(), 0.0);
            let r = curvature_at(&chart, &p).unwrap();
            for (a, b) in r.values.iter().zip(&chart.model().tensor().values) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
            let e = |i: usize| {
                let mut v = vec![0.0; 4];
                v[i] = 1.0;
                v
            };
            assert!((sectional_at(&r, &jet, &e(1), &e(0)).unwrap() + 1.0).abs() < 1e-12);
            assert!((sectional_at(&r, &jet, &e(2), &e(0)).unwrap() + 0.25).abs() < 1e-12);
            assert!((sectional_at(&r, &jet, &e(3), &e(0)).unwrap() + 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn g00_matches_hyperbolic_plane_to_second_order() {
        // along e_1 the model restricts to a totally geodesic plane of curvature −1
        let chart = FermiChart::from_spec(ModelSpec::default()).unwrap();
        for x in [0.01, 0.02, -0.03] {
            let g00 = chart.jet(&[0.0, x, 0.0, 0.0]).g[0];
            let exact = x.cosh().powi(2);
            assert!((g00 - exact).abs() < 2.0 * x.abs().powi(4), "{g00} vs {exact}");
        }
    }

    #[test]
    fn oversized_tube_is_rejected_with_radius() {
        let ok = FermiChart::from_spec(ModelSpec::default()).unwrap();
        let max = ok.max_admissible_radius();
        assert!(max > 0.5);
        let err = FermiChart::from_spec(ModelSpec { tube_radius: 2.0 * max, ..Default::default() }).unwrap_err();
        match err {
            GeometryError::TubeTooLarge { max_admissible, .. } => assert_eq!(max_admissible, max),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fermi_chart_positive_inside_admissible_radius() {
        let chart = FermiChart::from_spec(ModelSpec::default()).unwrap();
        let rho = chart.max_admissible_radius();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let p: Vec<f64> = (0..4).map(|i| if i == 0 { 0.0 } else { rho * rng.random_range(-1.0..1.0) }).collect();
            assert!(chart.jet(&p).min_eigenvalue() > 0.0);
        }
    }
}
