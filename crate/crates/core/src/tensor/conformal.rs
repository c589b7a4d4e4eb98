//! Closed-form transformation laws for a conformal change `g̃ = e^h g`.

use crate::error::{GeometryError, Result};

use super::{raise, ChristoffelField, CurvatureTensor, PointGeometry};

/// Value, gradient and coordinate Hessian of a scalar function at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarJet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl ScalarJet {
    pub fn zero(dim: usize) -> Self {
        Self {
            value: 0.0,
            grad: vec![0.0; dim],
            hess: vec![0.0; dim * dim],
        }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Self {
            value,
            ..Self::zero(dim)
        }
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    /// True when value and all partials vanish exactly.
    pub fn is_zero(&self) -> bool {
        self.value == 0.0 && self.grad.iter().all(|&g| g == 0.0) && self.hess.iter().all(|&h| h == 0.0)
    }

    #[inline]
    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }
}

/// A scalar function on a chart with closed-form partials up to second order.
pub trait ScalarField: Send + Sync {
    fn jet(&self, p: &[f64]) -> ScalarJet;

    fn value(&self, p: &[f64]) -> f64 {
        self.jet(p).value
    }
}

/// `h(p) = c + b·p + ½ pᵀAp`, used as a generic test field.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticField {
    pub constant: f64,
    pub linear: Vec<f64>,
    /// Symmetric, row-major.
    pub quadratic: Vec<f64>,
}

impl QuadraticField {
    pub fn random<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R, scale: f64) -> Self {
        let constant = scale * rng.random_range(-1.0..1.0);
        let linear = (0..dim).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        let mut quadratic = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = scale * rng.random_range(-1.0..1.0);
                quadratic[i * dim + j] = v;
                quadratic[j * dim + i] = v;
            }
        }
        Self { constant, linear, quadratic }
    }
}

impl ScalarField for QuadraticField {
    fn jet(&self, p: &[f64]) -> ScalarJet {
        let n = self.linear.len();
        let mut jet = ScalarJet::zero(n);
        jet.value = self.constant;
        for i in 0..n {
            let row: f64 = (0..n).map(|j| self.quadratic[i * n + j] * p[j]).sum();
            jet.value += self.linear[i] * p[i] + 0.5 * p[i] * row;
            jet.grad[i] = self.linear[i] + row;
        }
        jet.hess.copy_from_slice(&self.quadratic);
        jet
    }
}

/// Gradient and Riemannian Hessian of `h` with respect to the base metric.
struct ConformalTerms {
    dh: Vec<f64>,
    grad: Vec<f64>,
    grad_sq: f64,
    /// `Hess(h)_ij = ∂_ij h − Γ^k_ij ∂_k h`
    hess: Vec<f64>,
}

impl ConformalTerms {
    fn new(geo: &PointGeometry, h: &ScalarJet) -> Self {
        let n = geo.dim();
        let grad = raise(&geo.ginv, &h.grad);
        let grad_sq: f64 = grad.iter().zip(&h.grad).map(|(a, b)| a * b).sum();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut v = h.hess(i, j);
                for k in 0..n {
                    v -= geo.christoffel.get(k, i, j) * h.grad[k];
                }
                hess[i * n + j] = v;
            }
        }
        Self {
            dh: h.grad.clone(),
            grad,
            grad_sq,
            hess,
        }
    }

    fn hess_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += x[i] * self.hess[i * n + j] * y[j];
            }
        }
        acc
    }

    /// `∇_X ∇h = g^{lm} Hess_mi X^i`
    fn covariant_grad(&self, geo: &PointGeometry, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let lowered: Vec<f64> = (0..n)
            .map(|m| (0..n).map(|i| self.hess[m * n + i] * x[i]).sum())
            .collect();
        raise(&geo.ginv, &lowered)
    }

    fn directional(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.dh).map(|(a, b)| a * b).sum()
    }
}

/// `Γ̃^k_ij = Γ^k_ij + ½(∂_i h δ^k_j + ∂_j h δ^k_i − g^{kl} ∂_l h g_ij)`.
pub fn conformal_christoffel(
    base: &ChristoffelField,
    h: &ScalarJet,
    g: &[f64],
    ginv: &[f64],
) -> ChristoffelField {
    let n = base.dim();
    let grad = raise(ginv, &h.grad);
    let mut out = base.clone();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut delta = -grad[k] * g[i * n + j];
                if k == j {
                    delta += h.grad[i];
                }
                if k == i {
                    delta += h.grad[j];
                }
                out.set(k, i, j, base.get(k, i, j) + 0.5 * delta);
            }
        }
    }
    out
}

/// `R̃(X,Y)Z` for `g̃ = e^h g`, expressed as a contravariant vector.
///
/// Expands the base curvature with the Hessian terms
/// `½{g(∇_X∇h,Z)Y − g(∇_Y∇h,Z)X + g(X,Z)∇_Y∇h − g(Y,Z)∇_X∇h}` and the gradient terms
/// `¼{((Yh)(Zh) − g(Y,Z)|∇h|²)X − ((Xh)(Zh) − g(X,Z)|∇h|²)Y + ((Xh)g(Y,Z) − (Yh)g(X,Z))∇h}`.
pub fn conformal_curvature(
    geo: &PointGeometry,
    base: &CurvatureTensor,
    h: &ScalarJet,
    x: &[f64],
    y: &[f64],
    z: &[f64],
) -> Vec<f64> {
    let terms = ConformalTerms::new(geo, h);
    let mut out = base.apply(&geo.ginv, x, y, z);

    let hxz = terms.hess_form(x, z);
    let hyz = terms.hess_form(y, z);
    let gxz = geo.inner(x, z);
    let gyz = geo.inner(y, z);
    let nabla_x = terms.covariant_grad(geo, x);
    let nabla_y = terms.covariant_grad(geo, y);
    let (xh, yh, zh) = (terms.directional(x), terms.directional(y), terms.directional(z));
    let g2 = terms.grad_sq;

    for l in 0..out.len() {
        let hessian_part =
            hxz * y[l] - hyz * x[l] + gxz * nabla_y[l] - gyz * nabla_x[l];
        let gradient_part = (yh * zh - gyz * g2) * x[l] - (xh * zh - gxz * g2) * y[l]
            + (xh * gyz - yh * gxz) * terms.grad[l];
        out[l] += 0.5 * hessian_part + 0.25 * gradient_part;
    }
    out
}

/// Orthonormality tolerance for [`conformal_sectional`].
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-9;

/// `φ K̃(X,Y) = K − ½(Hess h(X,X) + Hess h(Y,Y)) − ¼(|∇h|² − (Xh)² − (Yh)²)`
/// for a `g`-orthonormal pair, with `φ = e^h`.
pub fn conformal_sectional(
    geo: &PointGeometry,
    base_sectional: f64,
    h: &ScalarJet,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    let gxx = geo.inner(x, x);
    let gyy = geo.inner(y, y);
    let gxy = geo.inner(x, y);
    let off = (gxx - 1.0).abs().max((gyy - 1.0).abs()).max(gxy.abs());
    if off > ORTHONORMAL_TOLERANCE {
        return Err(GeometryError::ContractViolation(format!(
            "conformal sectional curvature needs a g-orthonormal pair (deviation {off:e})"
        )));
    }
    let terms = ConformalTerms::new(geo, h);
    let xh = terms.directional(x);
    let yh = terms.directional(y);
    Ok(base_sectional
        - 0.5 * (terms.hess_form(x, x) + terms.hess_form(y, y))
        - 0.25 * (terms.grad_sq - xh * xh - yh * yh))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{sectional_at, EuclideanChart, MetricChart};

    #[test]
    fn constant_factor_leaves_connection_and_curvature_unchanged() {
        let chart = EuclideanChart::new(3);
        let p = [0.1, 0.2, -0.3];
        let geo = PointGeometry::at(&chart, &p).unwrap();
        let h = ScalarJet::constant(3, 0.7);
        let gamma = conformal_christoffel(&geo.christoffel, &h, &geo.jet.g, &geo.ginv);
        assert_eq!(gamma, geo.christoffel);
        let r = geo.curvature();
        let x = [1.0, 0.5, 0.0];
        let y = [0.0, 1.0, 2.0];
        let z = [0.3, 0.0, 1.0];
        assert_eq!(conformal_curvature(&geo, &r, &h, &x, &y, &z), r.apply(&geo.ginv, &x, &y, &z));
    }

    #[test]
    fn zero_profile_keeps_sectional_curvature() {
        let chart = EuclideanChart::new(3);
        let geo = PointGeometry::at(&chart, &[0.0; 3]).unwrap();
        let r = geo.curvature();
        let (x, y) = ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        let k = sectional_at(&r, &geo.jet, &x, &y).unwrap();
        let phik = conformal_sectional(&geo, k, &ScalarJet::zero(3), &x, &y).unwrap();
        assert_eq!(phik, k);
    }

    #[test]
    fn transformation_laws_match_direct_recomputation() {
        use crate::deformation::ConformalChart;
        use crate::tensor::{christoffel_at, curvature_at, QuadraticChart};
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let base = QuadraticChart::random(4, &mut rng, 0.1);
            let field = QuadraticField::random(4, &mut rng, 0.5);
            let p: Vec<f64> = (0..4).map(|_| rand::Rng::random_range(&mut rng, -0.5..0.5)).collect();
            let deformed = ConformalChart::with_field(base.clone(), field.clone());
            let geo = PointGeometry::at(&base, &p).unwrap();
            let h = field.jet(&p);
            let gamma = conformal_christoffel(&geo.christoffel, &h, &geo.jet.g, &geo.ginv);
            let direct = christoffel_at(&deformed, &p).unwrap();
            for (a, b) in gamma.values.iter().zip(&direct.values) {
                assert!((a - b).abs() < 1e-12);
            }
            let r = geo.curvature();
            let rt = curvature_at(&deformed, &p).unwrap();
            let tgeo = PointGeometry::at(&deformed, &p).unwrap();
            let x = [0.3, -1.0, 0.5, 0.2];
            let y = [1.0, 0.1, -0.4, 0.7];
            let z = [-0.2, 0.6, 0.9, -1.0];
            let law = conformal_curvature(&geo, &r, &h, &x, &y, &z);
            let want = rt.apply(&tgeo.ginv, &x, &y, &z);
            for (a, b) in law.iter().zip(&want) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn non_orthonormal_pair_is_rejected() {
        let chart = EuclideanChart::new(3);
        let geo = PointGeometry::new(chart.jet(&[0.0; 3]), &[0.0; 3]).unwrap();
        let err = conformal_sectional(&geo, 0.0, &ScalarJet::zero(3), &[1.0, 0.0, 0.0], &[1.0, 1.0, 0.0])
            .unwrap_err();
        assert!(matches!(err, GeometryError::ContractViolation(_)));
    }
}
