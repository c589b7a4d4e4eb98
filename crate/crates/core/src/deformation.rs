//! Bump profiles and the two deformations of the Fermi chart: the conformal
//! change `e^h g` and the change of `g_00` alone.

use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::tensor::{MetricChart, MetricJet, ScalarField, ScalarJet};

/// `scale · y^a (y−1)^N (y+1)^N`, evaluated through Leibniz on the factors so
/// that values at `y = ±1` are exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactoredPoly {
    pub scale: f64,
    pub monomial: u32,
    pub power: u32,
}

fn falling(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64)
}

fn binom(n: u32, k: u32) -> f64 {
    falling(n, k) / falling(k, k)
}

impl FactoredPoly {
    fn factor(power: u32, root: f64, order: u32, y: f64) -> f64 {
        if order > power {
            0.0
        } else {
            falling(power, order) * (y - root).powi((power - order) as i32)
        }
    }

    /// `d^order/dy^order` at `y`.
    pub fn eval(&self, order: u32, y: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..=order {
            let a = Self::factor(self.monomial, 0.0, i, y);
            if a == 0.0 {
                continue;
            }
            for j in 0..=(order - i) {
                let k = order - i - j;
                let b = Self::factor(self.power, 1.0, j, y);
                let c = Self::factor(self.power, -1.0, k, y);
                acc += binom(order, i) * binom(order - i, j) * a * b * c;
            }
        }
        self.scale * acc
    }
}

/// `φ(u) = exp(1 − 1/(1−u²))` on `(−1,1)`, zero elsewhere. `φ(0) = 1`.
pub fn unit_bump(order: u32, u: f64) -> Result<f64> {
    if order > 2 {
        return Err(GeometryError::ContractViolation(format!(
            "bump derivatives are available up to order 2, got {order}"
        )));
    }
    if u.abs() >= 1.0 {
        return Ok(0.0);
    }
    let q = 1.0 - u * u;
    let phi = (1.0 - 1.0 / q).exp();
    let d1 = -2.0 * u / (q * q);
    Ok(match order {
        0 => phi,
        1 => d1 * phi,
        _ => {
            let d2 = -2.0 / (q * q) - 8.0 * u * u / (q * q * q);
            (d2 + d1 * d1) * phi
        }
    })
}

/// `s_k(y) = ⅛(y²−1)^{2k}`, `r_k(y) = y² s_k(y)` on `[−1,1]` and
/// `f_k(x) = x² s_k(x/ε²) = ε⁴ r_k(x/ε²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpFamily {
    pub k: u32,
    pub eps: f64,
    s: FactoredPoly,
    r: FactoredPoly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BumpFn {
    S,
    R,
    F,
    Phi,
}

impl BumpFamily {
    pub fn new(k: u32, eps: f64) -> Result<Self> {
        if k < 2 {
            return Err(GeometryError::InvalidSpec(format!("smoothness order k₀ = {k} must be at least 2")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(GeometryError::InvalidSpec(format!("ε = {eps} must lie in (0,1)")));
        }
        let power = 2 * k;
        Ok(Self {
            k,
            eps,
            s: FactoredPoly { scale: 0.125, monomial: 0, power },
            r: FactoredPoly { scale: 0.125, monomial: 2, power },
        })
    }

    /// Differentiability class at the seams `±1` (resp. `±ε²`).
    pub fn seam_smoothness(&self) -> u32 {
        2 * self.k - 1
    }

    pub fn s(&self, order: u32, y: f64) -> f64 {
        if y.abs() > 1.0 { 0.0 } else { self.s.eval(order, y) }
    }

    pub fn r(&self, order: u32, y: f64) -> f64 {
        if y.abs() > 1.0 { 0.0 } else { self.r.eval(order, y) }
    }

    /// Inner one-sided value of `r^{(order)}` at `y` (the polynomial branch).
    pub fn r_inner(&self, order: u32, y: f64) -> f64 {
        self.r.eval(order, y)
    }

    pub fn f(&self, order: u32, x: f64) -> f64 {
        let e2 = self.eps * self.eps;
        self.r(order, x / e2) * e2.powi(2 - order as i32)
    }

    /// `φ(x/ε)` and its derivatives in `x`.
    pub fn phi_scaled(&self, order: u32, x: f64) -> f64 {
        unit_bump(order, x / self.eps).expect("order ≤ 2") / self.eps.powi(order as i32)
    }

    /// `p(x) = f''(x) + x f'(x)` and its first two derivatives.
    pub fn p(&self, order: u32, x: f64) -> f64 {
        let e2 = self.eps * self.eps;
        let y = x / e2;
        // x f'(x) = ε⁴ y r'(y); d/dx = ε⁻² d/dy
        let yr = |o: u32| match o {
            0 => y * self.r(1, y),
            1 => self.r(1, y) + y * self.r(2, y),
            _ => 2.0 * self.r(2, y) + y * self.r(3, y),
        };
        (self.r(order + 2, y) + e2 * e2 * yr(order)) / e2.powi(order as i32)
    }
}

/// Scalar evaluator for the individual bump functions. `Phi` is the unit bump `φ`.
pub fn bump_eval(family: &BumpFamily, which: BumpFn, order: u32, x: f64) -> Result<f64> {
    let max = match which {
        BumpFn::Phi => 2,
        _ => 2 * family.k + 2,
    };
    if order > max {
        return Err(GeometryError::ContractViolation(format!(
            "{which:?} derivatives are available up to order {max}, got {order}"
        )));
    }
    Ok(match which {
        BumpFn::S => family.s(order, x),
        BumpFn::R => family.r(order, x),
        BumpFn::F => family.f(order, x),
        BumpFn::Phi => unit_bump(order, x)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeformationKind {
    /// `g̃ = e^h g`
    Conformal,
    /// `g̃_00 = e^h g_00`, other components unchanged
    G00,
}

/// `h(x) = a · f_k(x_s) · Π_{j≠s} φ(x_j/ε)` with `a = −2` by default.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationProfile {
    pub family: BumpFamily,
    pub kind: DeformationKind,
    pub dim: usize,
    pub s: usize,
    pub amplitude: f64,
}

impl DeformationProfile {
    pub fn new(kind: DeformationKind, dim: usize, s: usize, k: u32, eps: f64) -> Result<Self> {
        if s == 0 || s >= dim {
            return Err(GeometryError::InvalidSpec(format!("s = {s} outside 1..{}", dim - 1)));
        }
        Ok(Self {
            family: BumpFamily::new(k, eps)?,
            kind,
            dim,
            s,
            amplitude: -2.0,
        })
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn eps(&self) -> f64 {
        self.family.eps
    }

    /// True when `x` lies outside the open support.
    pub fn outside_support(&self, p: &[f64]) -> bool {
        let eps = self.eps();
        (1..self.dim).any(|j| {
            let bound = if j == self.s { eps * eps } else { eps };
            p[j].abs() >= bound
        })
    }

    /// Value of the `j`-th one-dimensional factor and its derivatives.
    fn factor(&self, j: usize, order: u32, x: f64) -> f64 {
        if j == self.s {
            self.amplitude * self.family.f(order, x)
        } else {
            self.family.phi_scaled(order, x)
        }
    }

    /// `∂^α h(x)` for a multi-index given as a list of coordinate indices
    /// (empty for the value). Index 0 is `t`; `h` does not depend on it.
    pub fn partial(&self, p: &[f64], indices: &[usize]) -> Result<f64> {
        if indices.len() > 2 {
            return Err(GeometryError::ContractViolation(format!(
                "profile partials are available up to order 2, got {}",
                indices.len()
            )));
        }
        if indices.contains(&0) || self.outside_support(p) {
            return Ok(0.0);
        }
        let mut value = 1.0;
        for j in 1..self.dim {
            let order = indices.iter().filter(|&&i| i == j).count() as u32;
            value *= self.factor(j, order, p[j]);
        }
        Ok(value)
    }
}

impl ScalarField for DeformationProfile {
    fn value(&self, p: &[f64]) -> f64 {
        self.partial(p, &[]).expect("order 0")
    }

    fn jet(&self, p: &[f64]) -> ScalarJet {
        let n = self.dim;
        if self.outside_support(p) {
            return ScalarJet::zero(n);
        }
        let m = n - 1;
        let mut f = [[0.0; 3]; 16];
        assert!(m <= 16, "profile supports up to 16 transverse directions");
        for j in 1..n {
            for o in 0..3 {
                f[j - 1][o] = self.factor(j, o as u32, p[j]);
            }
        }
        let prod_except = |skip: &[usize]| -> f64 {
            (0..m).filter(|a| !skip.contains(a)).map(|a| f[a][0]).product()
        };
        let mut jet = ScalarJet::zero(n);
        jet.value = prod_except(&[]);
        for a in 0..m {
            jet.grad[a + 1] = f[a][1] * prod_except(&[a]);
            for b in 0..m {
                let v = if a == b {
                    f[a][2] * prod_except(&[a])
                } else {
                    f[a][1] * f[b][1] * prod_except(&[a, b])
                };
                jet.hess[(a + 1) * n + b + 1] = v;
            }
        }
        jet
    }
}

/// `∂^α h` (free-function form).
pub fn profile_partials(profile: &DeformationProfile, p: &[f64], indices: &[usize]) -> Result<f64> {
    profile.partial(p, indices)
}

/// `g̃ = e^h g`.
#[derive(Debug, Clone)]
pub struct ConformalChart<C, F = DeformationProfile> {
    pub base: C,
    pub profile: F,
}

impl<C: MetricChart, F: ScalarField> ConformalChart<C, F> {
    /// Conformal chart for an arbitrary scalar field (no support checks).
    pub fn with_field(base: C, field: F) -> Self {
        Self { base, profile: field }
    }
}

/// `g̃_00 = e^h g_00`, the rest of `g` unchanged.
#[derive(Debug, Clone)]
pub struct G00Chart<C> {
    pub base: C,
    pub profile: DeformationProfile,
}

fn check_profile<C: MetricChart>(base: &C, profile: &DeformationProfile, kind: DeformationKind) -> Result<()> {
    if profile.kind != kind {
        return Err(GeometryError::ContractViolation(format!(
            "profile of kind {:?} used for a {kind:?} deformation",
            profile.kind
        )));
    }
    if profile.dim != base.dim() {
        return Err(GeometryError::ContractViolation(format!(
            "profile dimension {} differs from chart dimension {}",
            profile.dim,
            base.dim()
        )));
    }
    if let Some(radius) = base.tube_radius() {
        if profile.eps() >= radius {
            return Err(GeometryError::ContractViolation(format!(
                "profile support ε = {} is not inside the tube of radius {radius}",
                profile.eps()
            )));
        }
    }
    Ok(())
}

pub fn deform_conformal<C: MetricChart>(base: C, profile: DeformationProfile) -> Result<ConformalChart<C>> {
    check_profile(&base, &profile, DeformationKind::Conformal)?;
    Ok(ConformalChart { base, profile })
}

pub fn deform_g00<C: MetricChart>(base: C, profile: DeformationProfile) -> Result<G00Chart<C>> {
    check_profile(&base, &profile, DeformationKind::G00)?;
    Ok(G00Chart { base, profile })
}

/// Components `(g̃, ∂g̃, ∂²g̃)` of `e^h g_ij` for a single `(i,j)`.
fn scaled_component(base: &MetricJet, h: &ScalarJet, eh: f64, i: usize, j: usize, out: &mut MetricJet) {
    let n = base.dim();
    let g = base.g(i, j);
    out.g[i * n + j] = eh * g;
    for k in 0..n {
        out.dg[(k * n + i) * n + j] = eh * (h.grad[k] * g + base.dg(k, i, j));
        for l in 0..n {
            out.ddg[((k * n + l) * n + i) * n + j] = eh
                * ((h.hess(k, l) + h.grad[k] * h.grad[l]) * g
                    + h.grad[k] * base.dg(l, i, j)
                    + h.grad[l] * base.dg(k, i, j)
                    + base.ddg(k, l, i, j));
        }
    }
}

impl<C: MetricChart, F: ScalarField> MetricChart for ConformalChart<C, F> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn jet(&self, p: &[f64]) -> MetricJet {
        let base = self.base.jet(p);
        let h = self.profile.jet(p);
        if h.is_zero() {
            return base;
        }
        let eh = h.value.exp();
        let n = base.dim();
        let mut out = base.clone();
        for i in 0..n {
            for j in 0..n {
                scaled_component(&base, &h, eh, i, j, &mut out);
            }
        }
        out
    }

    fn metric(&self, p: &[f64]) -> Vec<f64> {
        let mut g = self.base.metric(p);
        let h = self.profile.value(p);
        if h != 0.0 {
            let eh = h.exp();
            g.iter_mut().for_each(|x| *x *= eh);
        }
        g
    }

    fn tube_radius(&self) -> Option<f64> {
        self.base.tube_radius()
    }
}

impl<C: MetricChart> MetricChart for G00Chart<C> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn jet(&self, p: &[f64]) -> MetricJet {
        let base = self.base.jet(p);
        let h = self.profile.jet(p);
        if h.is_zero() {
            return base;
        }
        let mut out = base.clone();
        scaled_component(&base, &h, h.value.exp(), 0, 0, &mut out);
        out
    }

    fn metric(&self, p: &[f64]) -> Vec<f64> {
        let mut g = self.base.metric(p);
        let h = self.profile.partial(p, &[]).expect("order 0");
        if h != 0.0 {
            g[0] *= h.exp();
        }
        g
    }

    fn tube_radius(&self) -> Option<f64> {
        self.base.tube_radius()
    }
}

/// One inequality of the derivative estimates for `h`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub index: usize,
    pub name: String,
    pub measured: f64,
    pub limit: f64,
    pub passed: bool,
    pub witness: Vec<f64>,
}

/// Measured derivative bounds for a profile on a grid covering its support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateCertificate {
    pub eps: f64,
    pub k: u32,
    pub bounds: Vec<BoundCheck>,
    /// `sup |φ'|`, compared against 2.
    pub phi_d1_sup: f64,
    /// `M = sup |φ''|`.
    pub phi_d2_sup: f64,
    /// `sup |∂²_ii h| / ε²` over `i ≠ s`.
    pub m_measured: f64,
    /// `sup |r_k|`, compared against 1/100.
    pub r_sup: f64,
    pub passed: bool,
}

impl EstimateCertificate {
    pub fn failures(&self) -> impl Iterator<Item = &BoundCheck> {
        self.bounds.iter().filter(|b| !b.passed)
    }
}

/// Grid resolution for [`verify_estimates`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateGrid {
    /// Points across `[−ε², ε²]` in the `s` direction.
    pub s_points: usize,
    /// Points across `[−ε, ε]` in every other direction.
    pub other_points: usize,
}

impl Default for EstimateGrid {
    fn default() -> Self {
        Self { s_points: 201, other_points: 41 }
    }
}

fn sup_on_unit_interval(f: impl Fn(f64) -> f64, samples: usize) -> f64 {
    (0..=samples)
        .map(|i| f(-1.0 + 2.0 * i as f64 / samples as f64).abs())
        .fold(0.0, f64::max)
}

pub fn verify_estimates(profile: &DeformationProfile, grid: &EstimateGrid) -> Result<EstimateCertificate> {
    let eps = profile.eps();
    let e2 = eps * eps;
    if grid.s_points < 2 || grid.other_points < 2 {
        return Err(GeometryError::ContractViolation("estimate grid needs at least two points per axis".into()));
    }
    let ds = 2.0 * e2 / (grid.s_points - 1) as f64;
    if ds > e2 / 50.0 * (1.0 + 1e-12) {
        return Err(GeometryError::ContractViolation(format!(
            "s-direction resolution {ds:e} is coarser than ε²/50 = {:e}",
            e2 / 50.0
        )));
    }
    let n = profile.dim;
    let s = profile.s;
    let others: Vec<usize> = (1..n).filter(|&j| j != s).collect();
    let phi_d1_sup = sup_on_unit_interval(|u| unit_bump(1, u).unwrap(), 200_000);
    let phi_d2_sup = sup_on_unit_interval(|u| unit_bump(2, u).unwrap(), 200_000);
    let r_sup = sup_on_unit_interval(|y| profile.family.r(0, y), 200_000);

    #[derive(Clone)]
    struct Track {
        max: f64,
        at: Vec<f64>,
    }
    let mut tracks = vec![Track { max: 0.0, at: vec![0.0; n] }; 7];
    let mut bump = |b: usize, v: f64, p: &[f64]| {
        if v.abs() > tracks[b].max {
            tracks[b].max = v.abs();
            tracks[b].at = p.to_vec();
        }
    };

    let axis = |k: usize, count: usize, half: f64| -half + 2.0 * half * k as f64 / (count - 1) as f64;
    let total_other = grid.other_points.pow(others.len() as u32);
    let mut p = vec![0.0; n];
    for ks in 0..grid.s_points {
        p[s] = axis(ks, grid.s_points, e2);
        for code in 0..total_other {
            let mut c = code;
            for &j in &others {
                p[j] = axis(c % grid.other_points, grid.other_points, eps);
                c /= grid.other_points;
            }
            let jet = profile.jet(&p);
            bump(0, jet.value, &p);
            bump(2, jet.grad[s], &p);
            bump(6, jet.hess(s, s), &p);
            for &j in &others {
                bump(1, jet.grad[j], &p);
                bump(4, jet.hess(s, j), &p);
                bump(5, jet.hess(j, j), &p);
                for &i in &others {
                    if i != j {
                        bump(3, jet.hess(i, j), &p);
                    }
                }
            }
        }
    }

    let limits = [
        ("|h| ≤ ε⁴", e2 * e2),
        ("|∂_j h| ≤ 2ε³ (j ≠ s)", 2.0 * eps * e2),
        ("|∂_s h| ≤ ε²", e2),
        ("|∂²_ij h| ≤ 4ε² (i ≠ j, both ≠ s)", 4.0 * e2),
        ("|∂²_sj h| ≤ 2ε (j ≠ s)", 2.0 * eps),
        ("|∂²_ii h| ≤ Mε² (i ≠ s)", phi_d2_sup * e2),
        ("|∂²_ss h| ≤ ½", 0.5),
    ];
    let bounds: Vec<BoundCheck> = limits
        .iter()
        .zip(&tracks)
        .enumerate()
        .map(|(i, ((name, limit), t))| BoundCheck {
            index: i + 1,
            name: name.to_string(),
            measured: t.max,
            limit: *limit,
            passed: t.max <= *limit,
            witness: t.at.clone(),
        })
        .collect();
    let passed = bounds.iter().all(|b| b.passed);
    Ok(EstimateCertificate {
        eps,
        k: profile.family.k,
        m_measured: tracks[5].max / e2,
        bounds,
        phi_d1_sup,
        phi_d2_sup,
        r_sup,
        passed,
    })
}

/// Largest mismatch between inner one-sided derivatives of `f_k` at `±ε²` and
/// the zero outer branch, over orders `0..=max_order`.
pub fn seam_mismatch(family: &BumpFamily, max_order: u32) -> f64 {
    let e2 = family.eps * family.eps;
    let mut worst = 0.0_f64;
    for order in 0..=max_order {
        for y in [-1.0, 1.0] {
            let inner = family.r_inner(order, y) * e2.powi(2 - order as i32);
            worst = worst.max(inner.abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FermiChart, ModelSpec};
    use crate::tensor::{christoffel_at, finite_difference_jet};

    fn profile(kind: DeformationKind) -> DeformationProfile {
        DeformationProfile::new(kind, 4, 3, 3, 0.05).unwrap()
    }

    #[test]
    fn factored_polynomial_matches_expansion() {
        // r_2(y) = ⅛ y² (y²−1)⁴ ; r_2'' from the expanded form
        let fam = BumpFamily::new(2, 0.1).unwrap();
        for y in [-0.9, -0.3, 0.0, 0.2, 0.7] {
            let expanded = 0.25 * (y * y - 1.0_f64).powi(2) * (1.0 - 22.0 * y * y + 45.0 * y.powi(4));
            assert!((fam.r(2, y) - expanded).abs() < 1e-14);
        }
        assert_eq!(fam.r(2, 0.0), 0.25);
        assert_eq!(fam.r(0, 0.0), 0.0);
        assert_eq!(fam.r(1, 0.0), 0.0);
    }

    #[test]
    fn bump_support_and_values() {
        let fam = BumpFamily::new(3, 0.05).unwrap();
        assert_eq!(fam.s(0, 1.0), 0.0);
        assert_eq!(fam.s(0, -1.0), 0.0);
        assert_eq!(fam.s(0, 1.5), 0.0);
        assert_eq!(fam.f(0, 0.0026), 0.0);
        assert_eq!(unit_bump(0, 0.0).unwrap(), 1.0);
        assert_eq!(unit_bump(2, 1.0).unwrap(), 0.0);
        assert!(bump_eval(&fam, BumpFn::Phi, 3, 0.0).is_err());
        assert!(fam.f(0, 0.001) <= fam.eps.powi(4));
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let fam = BumpFamily::new(3, 0.2).unwrap();
        let h = 1e-5;
        for u in [-0.7, -0.2, 0.1, 0.5] {
            let fd1 = (unit_bump(0, u + h).unwrap() - unit_bump(0, u - h).unwrap()) / (2.0 * h);
            let fd2 = (unit_bump(1, u + h).unwrap() - unit_bump(1, u - h).unwrap()) / (2.0 * h);
            assert!((fd1 - unit_bump(1, u).unwrap()).abs() < 1e-8);
            assert!((fd2 - unit_bump(2, u).unwrap()).abs() < 1e-8);
        }
        let x = 0.01;
        let h = 1e-7;
        for order in 0..4 {
            let fd = (fam.f(order, x + h) - fam.f(order, x - h)) / (2.0 * h);
            let exact = fam.f(order + 1, x);
            assert!((fd - exact).abs() < 1e-6 * exact.abs().max(1.0), "order {order}");
        }
    }

    #[test]
    fn profile_properties_at_origin() {
        let pr = profile(DeformationKind::Conformal);
        let jet = pr.jet(&[0.7, 0.0, 0.0, 0.0]);
        assert_eq!(jet.value, 0.0);
        assert!(jet.grad.iter().all(|g| *g == 0.0));
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == 3 && j == 3 { -0.5 } else { 0.0 };
                assert_eq!(jet.hess(i, j), expected);
            }
        }
        assert_eq!(pr.partial(&[0.0; 4], &[3, 3]).unwrap(), -0.5);
        assert!(pr.partial(&[0.0; 4], &[1, 2, 3]).is_err());
        assert!(pr.jet(&[0.0, 0.06, 0.0, 0.0]).is_zero());
    }

    #[test]
    fn profile_jet_matches_finite_differences() {
        let pr = profile(DeformationKind::Conformal);
        let p = [0.0, 0.011, -0.02, 0.0013];
        let jet = pr.jet(&p);
        let h = 1e-7;
        for k in 1..4 {
            let mut a = p;
            let mut b = p;
            a[k] += h;
            b[k] -= h;
            let (ja, jb) = (pr.jet(&a), pr.jet(&b));
            let fd = (ja.value - jb.value) / (2.0 * h);
            assert!((fd - jet.grad[k]).abs() < 1e-9, "grad {k}");
            for l in 1..4 {
                let fd = (ja.grad[l] - jb.grad[l]) / (2.0 * h);
                assert!((fd - jet.hess(k, l)).abs() < 1e-5 * jet.hess(k, l).abs().max(1e-3), "hess {k}{l}");
            }
        }
    }

    #[test]
    fn deformed_charts_partials_match_finite_differences() {
        let base = FermiChart::from_spec(ModelSpec::default()).unwrap();
        let a = deform_conformal(base.clone(), profile(DeformationKind::Conformal)).unwrap();
        let b = deform_g00(base, profile(DeformationKind::G00)).unwrap();
        let p = [0.2, 0.01, -0.015, 0.0009];
        for jet_pair in [(a.jet(&p), finite_difference_jet(&a, &p, 1e-5)), (b.jet(&p), finite_difference_jet(&b, &p, 1e-5))] {
            for (x, y) in jet_pair.0.dg.iter().zip(&jet_pair.1.dg) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn deformations_fix_the_axis_and_agree_outside_support() {
        let base = FermiChart::from_spec(ModelSpec::default()).unwrap();
        let a = deform_conformal(base.clone(), profile(DeformationKind::Conformal)).unwrap();
        let b = deform_g00(base.clone(), profile(DeformationKind::G00)).unwrap();
        let p = [1.0, 0.0, 0.0, 0.0];
        assert_eq!(a.jet(&p).g, MetricJet::identity(4).g);
        assert_eq!(christoffel_at(&a, &p).unwrap().max_abs(), 0.0);
        assert_eq!(christoffel_at(&b, &p).unwrap().max_abs(), 0.0);
        let q = [0.4, 0.01, 0.2, 0.003];
        assert_eq!(a.jet(&q), base.jet(&q));
        assert_eq!(b.jet(&q), base.jet(&q));
        assert!(deform_g00(base, profile(DeformationKind::Conformal)).is_err());
    }

    #[test]
    fn g00_chart_obeys_derivative_identities() {
        let base = FermiChart::from_spec(ModelSpec::default()).unwrap();
        let pr = profile(DeformationKind::G00);
        let b = deform_g00(base.clone(), pr.clone()).unwrap();
        let p = [0.0, 0.0, 0.0, 0.001];
        let (jb, j0, h) = (b.jet(&p), base.jet(&p), pr.jet(&p));
        let eh = h.value.exp();
        for i in 0..4 {
            let expect = h.grad[i] * jb.g[0] + eh * j0.dg(i, 0, 0);
            assert!((jb.dg(i, 0, 0) - expect).abs() < 1e-15);
            for j in 0..4 {
                let expect = h.hess(i, j) * jb.g[0]
                    + h.grad[i] * h.grad[j] * jb.g[0]
                    + eh * h.grad[i] * j0.dg(j, 0, 0)
                    + eh * h.grad[j] * j0.dg(i, 0, 0)
                    + eh * j0.ddg(i, j, 0, 0);
                assert!((jb.ddg(i, j, 0, 0) - expect).abs() < 1e-14);
            }
        }
        // with g_0i = 0 the inverse satisfies g̃^00 = e^{-h} g^00
        let ginv = jb.inverse(&p).unwrap();
        let ginv0 = j0.inverse(&p).unwrap();
        assert!(j0.g[1..4].iter().all(|x| *x == 0.0));
        assert!((ginv[0] - (-h.value).exp() * ginv0[0]).abs() < 1e-15);
    }

    #[test]
    fn seams_are_smooth_to_order_four_for_default_k() {
        for eps in [0.2, 0.1, 0.05] {
            let fam = BumpFamily::new(3, eps).unwrap();
            assert!(seam_mismatch(&fam, 4) < 1e-9);
        }
        let fam = BumpFamily::new(2, 0.05).unwrap();
        assert!(seam_mismatch(&fam, 3) < 1e-9);
        assert!(seam_mismatch(&fam, 4) > 1.0);
    }

    #[test]
    fn estimates_hold_and_zero_profile_passes() {
        for eps in [0.2, 0.1, 0.05] {
            let pr = DeformationProfile::new(DeformationKind::Conformal, 4, 3, 3, eps).unwrap();
            let cert = verify_estimates(&pr, &EstimateGrid { s_points: 101, other_points: 21 }).unwrap();
            assert!(cert.passed, "{:?}", cert.failures().collect::<Vec<_>>());
            assert!(cert.bounds[6].measured == 0.5);
        }
        let zero = profile(DeformationKind::Conformal).with_amplitude(0.0);
        let cert = verify_estimates(&zero, &EstimateGrid { s_points: 101, other_points: 11 }).unwrap();
        assert!(cert.passed && cert.bounds.iter().all(|b| b.measured == 0.0));
        assert!(verify_estimates(&zero, &EstimateGrid { s_points: 50, other_points: 11 }).is_err());
    }

    #[test]
    fn p_at_origin() {
        for k in [2, 3] {
            let fam = BumpFamily::new(k, 0.05).unwrap();
            assert_eq!(fam.p(0, 0.0), 0.25);
            assert_eq!(fam.p(1, 0.0), 0.0);
            let expected = 0.5 - 6.0 * k as f64 / 0.05_f64.powi(4);
            assert!((fam.p(2, 0.0) - expected).abs() < 1e-9 * expected.abs());
        }
    }
}
