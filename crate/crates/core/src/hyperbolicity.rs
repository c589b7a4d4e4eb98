//! Cone families on the contact structure, the angle functional Θ, cone
//! invariance scans, Lyapunov spectra and the flat parallel field witness.
//!
//! Everything is written in parallel-frame coordinates: a Jacobi state is
//! `ζ = (ξ, η) ∈ R^{2m}`, `m = n − 1`, and the Sasaki metric is Euclidean there.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::flow::{
    integrate_geodesic, IntegrationOptions, JacobiPath, JacobiState, LinearizedFlow, Orbit, OrbitState,
    PhaseState, SymmetricFlow,
};
use crate::model::{KahlerModel, ModelSpec};
use crate::sampling::{dot, job_rng, norm, orthonormalize, unit_vector};
use crate::tensor::{christoffel_at, curvature_at, sectional_at, MetricChart, PointGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeCenter {
    /// `{(w, w) : w ∈ A}`
    AUnstable,
    /// `{(w, −w) : w ∈ A}`
    AStable,
    /// `{(w, ½w) : w ∈ B}`
    BUnstable,
    /// `{(w, −½w) : w ∈ B}`
    BStable,
}

/// `{ζ : Θ(ζ) ≥ c}` around a center subbundle, with `Θ` the squared cosine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeFamily {
    pub center: ConeCenter,
    pub opening: f64,
}

impl ConeFamily {
    pub fn new(center: ConeCenter, opening: f64) -> Result<Self> {
        if !(opening > 0.0 && opening < 1.0) {
            return Err(GeometryError::ContractViolation(format!("cone opening {opening} outside (0,1)")));
        }
        Ok(Self { center, opening })
    }

    /// Unstable cones are forward invariant when `dΘ/dt > 0` on the boundary,
    /// stable ones when `dΘ/dt < 0`.
    pub fn orientation(&self) -> f64 {
        match self.center {
            ConeCenter::AUnstable | ConeCenter::BUnstable => 1.0,
            ConeCenter::AStable | ConeCenter::BStable => -1.0,
        }
    }

    /// Orthonormal basis of the center in `R^{2m}`, given the unit `A` direction `a`.
    pub fn center_basis(&self, a: &[f64]) -> Vec<Vec<f64>> {
        let m = a.len();
        let pair = |w: &[f64], c: f64| -> Vec<f64> {
            let scale = 1.0 / (1.0 + c * c).sqrt();
            w.iter().map(|x| x * scale).chain(w.iter().map(|x| x * c * scale)).collect()
        };
        match self.center {
            ConeCenter::AUnstable => vec![pair(a, 1.0)],
            ConeCenter::AStable => vec![pair(a, -1.0)],
            ConeCenter::BUnstable | ConeCenter::BStable => {
                let c = if self.center == ConeCenter::BUnstable { 0.5 } else { -0.5 };
                let mut basis: Vec<Vec<f64>> = vec![a.to_vec()];
                for i in 0..m {
                    let mut e = vec![0.0; m];
                    e[i] = 1.0;
                    if let Some(v) = orthonormalize(e, &basis) {
                        basis.push(v);
                    }
                    if basis.len() == m {
                        break;
                    }
                }
                basis[1..].iter().map(|w| pair(w, c)).collect()
            }
        }
    }
}

/// `Θ_E(ζ) = |Pr_E ζ|² / |ζ|²` for an orthonormal basis of `E`.
pub fn theta(basis: &[Vec<f64>], zeta: &[f64]) -> Result<f64> {
    let zz = dot(zeta, zeta);
    if zz == 0.0 || !zz.is_finite() {
        return Err(GeometryError::ContractViolation("Θ of the zero vector".into()));
    }
    let proj: f64 = basis.iter().map(|b| dot(b, zeta).powi(2)).sum();
    Ok(proj / zz)
}

fn split_a(v: &[f64], a: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let c = dot(v, a);
    let va: Vec<f64> = a.iter().map(|x| c * x).collect();
    let vb: Vec<f64> = v.iter().zip(&va).map(|(x, y)| x - y).collect();
    (va, vb)
}

/// Closed-form `dΘ/dt` for an `A` cone in the symmetric model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticRate {
    pub value: f64,
    /// `ξ_A ± η_A` vanishes, so the multiplier is zero.
    pub degenerate: bool,
}

/// For `P_A^u`: `dΘ/dt = (M/2)(N − ⟨ξ,η⟩ − ¼⟨ξ_B,η_B⟩ − ⟨ξ_A,η_A⟩)` with
/// `N = |ξ|² + |η|²`, `M = 2|ξ_A+η_A|²/N²`. For `P_A^s` the sign pattern flips.
pub fn analytic_rate_symmetric(cone: &ConeFamily, j: &JacobiState, a: &[f64]) -> Result<AnalyticRate> {
    let sign = match cone.center {
        ConeCenter::AUnstable => 1.0,
        ConeCenter::AStable => -1.0,
        _ => {
            return Err(GeometryError::ContractViolation(
                "closed-form rate is only available for A cones".into(),
            ))
        }
    };
    let (xa, xb) = split_a(&j.xi, a);
    let (ea, eb) = split_a(&j.eta, a);
    let n = dot(&j.xi, &j.xi) + dot(&j.eta, &j.eta);
    let center: Vec<f64> = xa.iter().zip(&ea).map(|(x, y)| x + sign * y).collect();
    let c2 = dot(&center, &center);
    let m = 2.0 * c2 / (n * n);
    let bracket = n - sign * (dot(&j.xi, &j.eta) + 0.25 * dot(&xb, &eb) + dot(&xa, &ea));
    Ok(AnalyticRate {
        value: sign * 0.5 * m * bracket,
        degenerate: c2 <= 1e-24 * n,
    })
}

/// `f(0) = Σ(ξ_i² + η_i²) − Σ ξ_iη_i − ¼Σ_B ξ_iη_i − Σ_A ξ_iη_i − ½ξ_sη_s`.
pub fn f_zero_expanded(spec: &ModelSpec, xi: &[f64], eta: &[f64]) -> f64 {
    let mut acc = dot(xi, xi) + dot(eta, eta) - dot(xi, eta);
    for (a, (x, y)) in xi.iter().zip(eta).enumerate() {
        let dir = a + 1;
        acc -= if dir <= spec.r { x * y } else { 0.25 * x * y };
        if dir == spec.s {
            acc -= 0.5 * x * y;
        }
    }
    acc
}

/// The same quantity as a sum of squares.
pub fn f_zero_sum_of_squares(spec: &ModelSpec, xi: &[f64], eta: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (a, (x, y)) in xi.iter().zip(eta).enumerate() {
        let dir = a + 1;
        acc += if dir <= spec.r {
            (x - y).powi(2)
        } else if dir == spec.s {
            (x - 0.875 * y).powi(2) + 15.0 / 64.0 * y * y
        } else {
            (x - 0.625 * y).powi(2) + 39.0 / 64.0 * y * y
        };
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaRateSample {
    pub t: f64,
    pub theta: f64,
    /// Central difference of Θ over the dense path.
    pub numeric: f64,
    pub analytic: Option<f64>,
    pub degenerate: bool,
}

/// Sampled `dΘ/dt` along a Jacobi path. `a_dirs[k]` is the unit `A` direction in
/// frame coordinates at node `k`. The closed form is attached when `symmetric`
/// is set and the cone is an `A` cone.
pub fn theta_derivative(
    path: &JacobiPath,
    a_dirs: &[Vec<f64>],
    cone: &ConeFamily,
    symmetric: bool,
) -> Result<Vec<ThetaRateSample>> {
    if a_dirs.len() != path.states.len() {
        return Err(GeometryError::ContractViolation("one A direction per path node is required".into()));
    }
    let thetas: Vec<f64> = path
        .states
        .iter()
        .zip(a_dirs)
        .map(|(s, a)| theta(&cone.center_basis(a), &s.as_vec()))
        .collect::<Result<_>>()?;
    let analytic_ok = symmetric && matches!(cone.center, ConeCenter::AUnstable | ConeCenter::AStable);
    (1..path.states.len().saturating_sub(1))
        .map(|k| {
            let dt = path.times[k + 1] - path.times[k - 1];
            let numeric = (thetas[k + 1] - thetas[k - 1]) / dt;
            let (analytic, degenerate) = if analytic_ok {
                let r = analytic_rate_symmetric(cone, &path.states[k], &a_dirs[k])?;
                (Some(r.value), r.degenerate)
            } else {
                (None, false)
            };
            Ok(ThetaRateSample {
                t: path.times[k],
                theta: thetas[k],
                numeric,
                analytic,
                degenerate,
            })
        })
        .collect()
}

/// Dense Jacobi path of a constant-operator flow, one node per step.
pub fn symmetric_jacobi_path(flow: &SymmetricFlow, j0: &JacobiState, horizon: f64) -> Result<JacobiPath> {
    if j0.dim() != flow.m {
        return Err(GeometryError::ContractViolation(format!(
            "Jacobi state of dimension {} for a flow on {} directions",
            j0.dim(),
            flow.m
        )));
    }
    let steps = (horizon / flow.step).round().max(1.0) as usize;
    let h = horizon / steps as f64;
    let mut times = vec![0.0];
    let mut states = vec![j0.clone()];
    let mut base = 0.0;
    let mut col = [j0.clone()];
    for i in 1..=steps {
        flow.advance(&mut base, &mut col, h)?;
        times.push(i as f64 * h);
        states.push(col[0].clone());
    }
    Ok(JacobiPath { times, states })
}

/// Instantaneous `dΘ/dt` at `ζ` for `ζ' = Lζ`, `L = [[0, I], [−K, 0]]`, with the
/// center basis `u_i` moving at rate `du_i`.
pub fn instantaneous_rate(basis: &[Vec<f64>], dbasis: &[Vec<f64>], kmat: &[f64], zeta: &[f64]) -> f64 {
    let m = zeta.len() / 2;
    let mut lz = vec![0.0; 2 * m];
    for a in 0..m {
        lz[a] = zeta[m + a];
        lz[m + a] = -(0..m).map(|b| kmat[a * m + b] * zeta[b]).sum::<f64>();
    }
    let zz = dot(zeta, zeta);
    let mut proj = 0.0;
    let mut dproj = 0.0;
    for (u, du) in basis.iter().zip(dbasis) {
        let c = dot(u, zeta);
        proj += c * c;
        // d/dt (u·ζ)² = 2(u·ζ)(u'·ζ + u·Lζ)
        dproj += 2.0 * c * (dot(du, zeta) + dot(u, &lz));
    }
    dproj / zz - proj * 2.0 * dot(zeta, &lz) / (zz * zz)
}

/// Unit `A` direction at a chart state in frame coordinates: the `g`-unit
/// projection of `J₀v` onto `v^⊥`, expanded in `e_1..e_{n−1}`.
pub fn splitting_direction<C: MetricChart + ?Sized>(chart: &C, state: &OrbitState) -> Vec<f64> {
    let n = state.pos.len();
    let mut jet = crate::tensor::MetricJet::zeros(n);
    jet.g = chart.metric(&state.pos);
    let jv = KahlerModel::complex_structure(&state.vel);
    let coords: Vec<f64> = (0..n - 1).map(|a| jet.inner(&jv, state.frame_vector(a))).collect();
    let len = norm(&coords);
    coords.into_iter().map(|x| x / len).collect()
}

/// Jacobi operator `K_ab = R(e_a, v, v, e_b)` at a chart state.
pub fn frame_operator<C: MetricChart + ?Sized>(chart: &C, state: &OrbitState) -> Result<Vec<f64>> {
    let geo = PointGeometry::at(chart, &state.pos)?;
    let r = geo.curvature();
    let m = state.pos.len() - 1;
    let mut k = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            k[a * m + b] = r.eval(state.frame_vector(a), &state.vel, &state.vel, state.frame_vector(b));
        }
    }
    Ok(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedClass {
    Parallel,
    AlmostParallel,
    Transversal,
}

/// Seeds and sampling density for [`cone_invariance_scan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplePlan {
    pub parallel_seeds: usize,
    pub almost_parallel_seeds: usize,
    pub transversal_seeds: usize,
    pub boundary_directions: usize,
    /// Almost-parallel threshold on `|v^s|`.
    pub theta: f64,
    pub horizon: f64,
    pub step: f64,
    /// Evaluate the boundary every this many integration steps.
    pub sample_every: usize,
}

impl Default for SamplePlan {
    fn default() -> Self {
        Self {
            parallel_seeds: 64,
            almost_parallel_seeds: 64,
            transversal_seeds: 64,
            boundary_directions: 32,
            theta: 0.1,
            horizon: 2.0 * std::f64::consts::PI,
            step: 1e-3,
            sample_every: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedResult {
    pub id: usize,
    pub class: SeedClass,
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
    /// Boundary evaluations performed (parallel classes).
    pub boundary_samples: usize,
    /// `min orientation · dΘ/dt` over the boundary samples.
    pub min_margin: Option<f64>,
    pub worst_time: Option<f64>,
    /// Time spent in `U(ε)` along the full chord (transversal class).
    pub residence_time: Option<f64>,
    pub residence_bound: Option<f64>,
    /// The orbit left `U(ε)` before the horizon.
    pub exited: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeScanReport {
    pub cone: ConeFamily,
    pub eps: f64,
    pub plan: SamplePlan,
    pub seeds: Vec<SeedResult>,
    pub min_margin_parallel: f64,
    pub min_margin_almost_parallel: f64,
    pub max_residence_ratio: f64,
    pub degenerate_excluded: usize,
    pub passed: bool,
}

fn seed_state<C: MetricChart>(chart: &C, class: SeedClass, id: usize, eps: f64, theta: f64, s: usize, seed: u64) -> PhaseState {
    use rand::Rng;
    let n = chart.dim();
    let mut rng = job_rng(seed, id as u64);
    let e2 = eps * eps;
    loop {
        let mut pos = vec![0.0; n];
        pos[0] = rng.random_range(0.0..1.0);
        for (j, p) in pos.iter_mut().enumerate().skip(1) {
            // parallel classes sit on the deformed slab |x_s| < ε²
            *p = if j == s && class != SeedClass::Transversal {
                rng.random_range(-1.5 * e2..1.5 * e2)
            } else {
                rng.random_range(-0.5 * eps..0.5 * eps)
            };
        }
        let mut vel = vec![0.0; n];
        vel[0] = 1.0;
        match class {
            SeedClass::Parallel => {}
            SeedClass::AlmostParallel => {
                for (j, v) in vel.iter_mut().enumerate().skip(1) {
                    *v = rng.random_range(-theta..theta);
                    if j == s {
                        *v *= 0.95;
                    }
                }
            }
            SeedClass::Transversal => {
                for (j, v) in vel.iter_mut().enumerate().skip(1) {
                    *v = if j == s {
                        let mag = rng.random_range(theta..3.0 * theta);
                        if rng.random::<bool>() { mag } else { -mag }
                    } else {
                        rng.random_range(-theta..theta)
                    };
                }
            }
        }
        let state = PhaseState::new(pos, vel).normalized(chart);
        let vs = state.vel[s].abs();
        let ok = match class {
            SeedClass::Parallel => true,
            SeedClass::AlmostParallel => vs < theta,
            SeedClass::Transversal => vs >= theta,
        };
        if ok {
            return state;
        }
    }
}

fn scan_boundary<C: MetricChart>(
    chart: &C,
    orbit: &Orbit,
    cone: &ConeFamily,
    directions: usize,
    sample_every: usize,
    rng: &mut impl rand::Rng,
) -> Result<(usize, f64, f64)> {
    let len = orbit.states.len();
    let m = orbit.dim - 1;
    let c = cone.opening;
    let mut count = 0;
    let mut worst = f64::INFINITY;
    let mut worst_t = 0.0;
    let mut k = 1;
    while k + 1 < len {
        let a = splitting_direction(chart, &orbit.states[k]);
        let ap = splitting_direction(chart, &orbit.states[k + 1]);
        let am = splitting_direction(chart, &orbit.states[k - 1]);
        let dt = orbit.times[k + 1] - orbit.times[k - 1];
        let basis = cone.center_basis(&a);
        let bp = cone.center_basis(&ap);
        let bm = cone.center_basis(&am);
        let dbasis: Vec<Vec<f64>> = bp
            .iter()
            .zip(&bm)
            .map(|(p, q)| p.iter().zip(q).map(|(x, y)| (x - y) / dt).collect())
            .collect();
        let kmat = frame_operator(chart, &orbit.states[k])?;
        for _ in 0..directions {
            // unit u in the center, unit w orthogonal to it: Θ(√c u + √(1−c) w) = c
            let coeffs = unit_vector(rng, basis.len());
            let mut u = vec![0.0; 2 * m];
            for (b, w) in basis.iter().zip(&coeffs) {
                u.iter_mut().zip(b).for_each(|(x, y)| *x += w * y);
            }
            let w = loop {
                if let Some(w) = orthonormalize(unit_vector(rng, 2 * m), &basis) {
                    break w;
                }
            };
            let zeta: Vec<f64> = u.iter().zip(&w).map(|(x, y)| c.sqrt() * x + (1.0 - c).sqrt() * y).collect();
            let rate = cone.orientation() * instantaneous_rate(&basis, &dbasis, &kmat, &zeta);
            count += 1;
            if rate < worst {
                worst = rate;
                worst_t = orbit.times[k];
            }
        }
        k += sample_every.max(1);
    }
    Ok((count, worst, worst_t))
}

/// Scan cone invariance over parallel, almost-parallel and transversal seeds in
/// the tube `U(ε)`. Seeds are independent jobs; results are sorted by id.
pub fn cone_invariance_scan<C: MetricChart>(
    chart: &C,
    s: usize,
    eps: f64,
    cone: &ConeFamily,
    plan: &SamplePlan,
    seed: u64,
) -> Result<ConeScanReport> {
    if eps / plan.theta > chart.tube_radius().unwrap_or(f64::INFINITY) {
        return Err(GeometryError::ContractViolation(format!(
            "ε/θ = {} exceeds the tube radius",
            eps / plan.theta
        )));
    }
    let mut jobs = Vec::new();
    let counts = [
        (SeedClass::Parallel, plan.parallel_seeds),
        (SeedClass::AlmostParallel, plan.almost_parallel_seeds),
        (SeedClass::Transversal, plan.transversal_seeds),
    ];
    for (class, count) in counts {
        for _ in 0..count {
            jobs.push((jobs.len(), class));
        }
    }
    let bound = 2.0 * eps / plan.theta * (1.0 + 10.0 * eps);
    let mut seeds: Vec<SeedResult> = jobs
        .par_iter()
        .map(|&(id, class)| -> Result<SeedResult> {
            let state = seed_state(chart, class, id, eps, plan.theta, s, seed);
            let mut rng = job_rng(seed ^ 0x9e37_79b9_7f4a_7c15, id as u64);
            let mut result = SeedResult {
                id,
                class,
                x0: state.pos.clone(),
                v0: state.vel.clone(),
                boundary_samples: 0,
                min_margin: None,
                worst_time: None,
                residence_time: None,
                residence_bound: None,
                exited: false,
                passed: true,
            };
            match class {
                SeedClass::Parallel | SeedClass::AlmostParallel => {
                    let opts = IntegrationOptions::new(plan.step, plan.horizon).with_exit_radius(eps);
                    let orbit = integrate_geodesic(chart, &state, &opts)?;
                    let (count, worst, t) =
                        scan_boundary(chart, &orbit, cone, plan.boundary_directions, plan.sample_every, &mut rng)?;
                    result.exited = orbit.exit_time.is_some();
                    result.boundary_samples = count;
                    if count > 0 {
                        result.min_margin = Some(worst);
                        result.worst_time = Some(t);
                        result.passed = worst > 0.0;
                    }
                }
                SeedClass::Transversal => {
                    let horizon = 10.0 * bound;
                    let opts = IntegrationOptions::new(plan.step, horizon).with_exit_radius(eps);
                    let fwd = integrate_geodesic(chart, &state, &opts)?;
                    let back_state = PhaseState::new(state.pos.clone(), state.vel.iter().map(|v| -v).collect());
                    let bwd = integrate_geodesic(chart, &back_state, &opts)?;
                    match (fwd.exit_time, bwd.exit_time) {
                        (Some(a), Some(b)) => {
                            result.residence_time = Some(a + b);
                            result.passed = a + b <= bound;
                        }
                        _ => result.passed = false,
                    }
                    result.exited = true;
                    result.residence_bound = Some(bound);
                }
            }
            Ok(result)
        })
        .collect::<Result<_>>()?;
    seeds.sort_by_key(|r| r.id);
    let min_of = |class: SeedClass| {
        seeds
            .iter()
            .filter(|r| r.class == class)
            .filter_map(|r| r.min_margin)
            .fold(f64::INFINITY, f64::min)
    };
    let max_residence_ratio = seeds
        .iter()
        .filter_map(|r| Some(r.residence_time? / r.residence_bound?))
        .fold(0.0, f64::max);
    let passed = seeds.iter().all(|r| r.passed);
    Ok(ConeScanReport {
        cone: *cone,
        eps,
        plan: plan.clone(),
        min_margin_parallel: min_of(SeedClass::Parallel),
        min_margin_almost_parallel: min_of(SeedClass::AlmostParallel),
        max_residence_ratio,
        degenerate_excluded: 0,
        seeds,
        passed,
    })
}

/// Exponents of the linearized flow on the contact structure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub label: String,
    pub horizon: f64,
    pub window: f64,
    /// Windowed-QR exponents from the second half of the horizon, descending.
    pub qr_exponents: Vec<f64>,
    /// `ln|μ|/τ` for the eigenvalues `μ` of the monodromy over the period `τ`.
    pub floquet_exponents: Option<Vec<f64>>,
    /// Floquet exponents when available, QR otherwise.
    pub exponents: Vec<f64>,
    pub source: String,
    /// `max_i |λ_i + λ_{2m−1−i}|`
    pub pairing_residual: f64,
    pub exponent_sum: f64,
    /// Cluster means (descending) after merging exponents within 0.05.
    pub clusters: Vec<f64>,
    /// Gaps between consecutive clusters.
    pub gaps: Vec<f64>,
    /// The base orbit left the chart before the horizon.
    pub partial: bool,
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    v
}

fn clusters(ex: &[f64], merge: f64) -> Vec<f64> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for &x in ex {
        match out.last_mut() {
            Some(c) if (c[c.len() - 1] - x).abs() <= merge => c.push(x),
            _ => out.push(vec![x]),
        }
    }
    out.iter().map(|c| c.iter().sum::<f64>() / c.len() as f64).collect()
}

pub const CLUSTER_MERGE: f64 = 0.05;

pub fn lyapunov_spectrum<F: LinearizedFlow>(flow: &F, label: &str, horizon: f64, window: f64) -> Result<SpectrumReport> {
    if !(horizon > 0.0 && window > 0.0 && window <= horizon) {
        return Err(GeometryError::ContractViolation(format!(
            "horizon {horizon} and window {window} must satisfy 0 < window ≤ horizon"
        )));
    }
    let m = flow.transverse_dim();
    let dim = 2 * m;
    let windows = (horizon / window).round() as usize;
    let mut cols = JacobiState::basis(m);
    let mut base = flow.start();
    let mut sums = vec![0.0; dim];
    let mut counted = 0usize;
    let mut partial = false;
    for w in 0..windows {
        match flow.advance(&mut base, &mut cols, window) {
            Ok(()) => {}
            Err(GeometryError::DomainExit(_)) => {
                partial = true;
                break;
            }
            Err(e) => return Err(e),
        }
        let mat = DMatrix::from_fn(dim, dim, |i, j| cols[j].as_vec()[i]);
        let qr = mat.qr();
        let r = qr.r();
        let q = qr.q();
        if w >= windows / 2 {
            for i in 0..dim {
                sums[i] += r[(i, i)].abs().ln();
            }
            counted += 1;
        }
        for (j, col) in cols.iter_mut().enumerate() {
            let v: Vec<f64> = q.column(j).iter().copied().collect();
            *col = JacobiState::from_slice(&v);
        }
    }
    let span = counted as f64 * window;
    let qr_exponents = if counted > 0 {
        sorted_desc(sums.iter().map(|s| s / span).collect())
    } else {
        vec![f64::NAN; dim]
    };
    let floquet_exponents = match flow.period() {
        Some(tau) if !partial => {
            let mono = crate::flow::monodromy(flow, tau)?;
            let eig = mono.complex_eigenvalues();
            Some(sorted_desc(eig.iter().map(|z| z.norm().ln() / tau).collect()))
        }
        _ => None,
    };
    let (exponents, source) = match &floquet_exponents {
        Some(f) => (f.clone(), "floquet".to_string()),
        None => (qr_exponents.clone(), "qr".to_string()),
    };
    let pairing_residual = (0..dim)
        .map(|i| (exponents[i] + exponents[dim - 1 - i]).abs())
        .fold(0.0, f64::max);
    let exponent_sum = exponents.iter().sum();
    let clusters = clusters(&exponents, CLUSTER_MERGE);
    let gaps = clusters.windows(2).map(|w| w[0] - w[1]).collect();
    Ok(SpectrumReport {
        label: label.to_string(),
        horizon,
        window,
        qr_exponents,
        floquet_exponents,
        exponents,
        source,
        pairing_residual,
        exponent_sum,
        clusters,
        gaps,
        partial,
    })
}

/// Flat parallel field along the central geodesic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessRecord {
    /// `max_t |K̃(e_s, γ')(t, 0)|`
    pub max_curvature: f64,
    /// `max_t ‖D̃_t e_s‖ = max_t ‖Γ̃^k_{0s}(t, 0)‖`
    pub max_transport: f64,
    pub curvature_tolerance: f64,
    pub transport_tolerance: f64,
    pub samples: usize,
    pub passed: bool,
}

pub fn anosov_obstruction_witness<C: MetricChart>(chart: &C, spec: &ModelSpec, samples: usize) -> Result<WitnessRecord> {
    let n = chart.dim();
    let mut es = vec![0.0; n];
    es[spec.s] = 1.0;
    let mut e0 = vec![0.0; n];
    e0[0] = 1.0;
    let mut max_curvature = 0.0_f64;
    let mut max_transport = 0.0_f64;
    for k in 0..samples.max(1) {
        let t = spec.period * k as f64 / samples.max(1) as f64;
        let mut p = vec![0.0; n];
        p[0] = t;
        let r = curvature_at(chart, &p)?;
        let jet = chart.jet(&p);
        max_curvature = max_curvature.max(sectional_at(&r, &jet, &es, &e0)?.abs());
        let gamma = christoffel_at(chart, &p)?;
        let transport = (0..n).map(|k| gamma.get(k, 0, spec.s).powi(2)).sum::<f64>().sqrt();
        max_transport = max_transport.max(transport);
    }
    let (ct, tt) = (1e-9, 1e-10);
    Ok(WitnessRecord {
        max_curvature,
        max_transport,
        curvature_tolerance: ct,
        transport_tolerance: tt,
        samples: samples.max(1),
        passed: max_curvature < ct && max_transport < tt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::job_rng;

    #[test]
    fn theta_basic_values() {
        let e = vec![vec![1.0, 0.0, 0.0]];
        assert_eq!(theta(&e, &[2.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(theta(&e, &[0.0, 3.0, 1.0]).unwrap(), 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((theta(&e, &[h, h, 0.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(theta(&e, &[0.0; 3]).is_err());
    }

    #[test]
    fn centers_are_orthonormal_and_transverse() {
        let a = [0.6, 0.8, 0.0];
        let mut all = Vec::new();
        for c in [ConeCenter::AUnstable, ConeCenter::AStable, ConeCenter::BUnstable, ConeCenter::BStable] {
            let basis = ConeFamily::new(c, 0.9).unwrap().center_basis(&a);
            for (i, u) in basis.iter().enumerate() {
                for (j, w) in basis.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot(u, w) - want).abs() < 1e-14);
                }
            }
            all.extend(basis);
        }
        // together they span R^6
        let mat = DMatrix::from_fn(6, 6, |i, j| all[j][i]);
        assert!(mat.determinant().abs() > 1e-3);
    }

    #[test]
    fn f_zero_identity_and_positivity() {
        let spec = ModelSpec::default();
        let mut rng = job_rng(4, 0);
        for _ in 0..200 {
            let xi = unit_vector(&mut rng, 3);
            let eta = unit_vector(&mut rng, 3);
            let a = f_zero_expanded(&spec, &xi, &eta);
            let b = f_zero_sum_of_squares(&spec, &xi, &eta);
            assert!((a - b).abs() < 1e-12);
            assert!(a > 0.0);
        }
        assert_eq!(f_zero_expanded(&spec, &[0.0; 3], &[0.0; 3]), 0.0);
    }

    #[test]
    fn instantaneous_rate_matches_closed_form_in_symmetric_model() {
        // K = diag(−1, −¼, −¼), A = e_1
        let k = [-1.0, 0.0, 0.0, 0.0, -0.25, 0.0, 0.0, 0.0, -0.25];
        let a = [1.0, 0.0, 0.0];
        let cone = ConeFamily::new(ConeCenter::AUnstable, 0.9).unwrap();
        let basis = cone.center_basis(&a);
        let zero = vec![vec![0.0; 6]];
        let mut rng = job_rng(8, 0);
        for _ in 0..50 {
            let z = unit_vector(&mut rng, 6);
            let j = JacobiState::from_slice(&z);
            let closed = analytic_rate_symmetric(&cone, &j, &a).unwrap().value;
            let inst = instantaneous_rate(&basis, &zero, &k, &z);
            assert!((closed - inst).abs() < 1e-13, "{closed} vs {inst}");
        }
    }
}
