//! Experiment configuration and one check function per acceptance criterion.
//! Shared by the acceptance test target and the command-line driver.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::curvature_scan::{
    central_curvature_table, p_profile, scan_sectional, truncation_fit, CentralTable, CurvatureReport, PProfile,
    PlaneSampler, ScanGrid, TruncationFit,
};
use crate::deformation::{
    deform_conformal, deform_g00, seam_mismatch, verify_estimates, DeformationKind, DeformationProfile,
    EstimateCertificate, EstimateGrid,
};
use crate::error::{GeometryError, Result};
use crate::flow::{
    adapted_frame, integrate_geodesic, integrate_jacobi, central_jacobi_closed_form, ChartFlow, ChartLinearization,
    IntegrationOptions, JacobiState, OrbitState, PhaseState, SymmetricFlow,
};
use crate::hyperbolicity::{
    anosov_obstruction_witness, cone_invariance_scan, lyapunov_spectrum, splitting_direction,
    symmetric_jacobi_path, theta, theta_derivative, ConeCenter, ConeFamily, ConeScanReport, SamplePlan,
    SpectrumReport, WitnessRecord,
};
use crate::model::{FermiChart, KahlerModel, ModelSpec};
use crate::sampling::{dot, job_rng, orthonormalize, random_complement, unit_vector};
use crate::tensor::{
    conformal_christoffel, conformal_curvature, conformal_sectional, finite_difference_jet, metric_identity_checks_with_step,
    sectional_at, MetricChart, PointGeometry,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformationConfig {
    /// Deformations exercised by the central-orbit checks.
    pub kinds: Vec<DeformationKind>,
    pub eps: f64,
    pub k0: u32,
    pub amplitude: f64,
    /// Tube sizes for the estimate certificates and the positive-curvature sweep.
    pub eps_sweep: Vec<f64>,
    pub estimate_grid: EstimateGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationConfig {
    pub step: f64,
    pub jacobi_horizon: f64,
    pub lyapunov_horizon: f64,
    pub lyapunov_window: f64,
    /// Random directions for the constant-operator spectra.
    pub symmetric_orbits: usize,
    pub table_samples: usize,
    pub witness_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub points: usize,
    /// Coarser grid used for the refinement comparison.
    pub coarse_points: usize,
    pub t_samples: usize,
    pub s_refine: usize,
    pub random_planes: usize,
    /// `t` samples for the truncation fit (the chart does not depend on `t`).
    pub fit_t_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeConfig {
    pub opening: f64,
    pub centers: Vec<ConeCenter>,
    pub plan: SamplePlan,
    /// Random samples for the undeformed angle-derivative identity.
    pub angle_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub points: usize,
    /// Step of the finite-difference jet, in units of `ε²`.
    pub fd_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub deformation: DeformationConfig,
    pub integration: IntegrationConfig,
    pub scan: ScanConfig,
    pub cones: ConeConfig,
    pub oracles: OracleConfig,
    pub output_dir: Option<String>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelSpec::default(),
            deformation: DeformationConfig {
                kinds: vec![DeformationKind::Conformal, DeformationKind::G00],
                eps: 0.05,
                k0: 3,
                amplitude: -2.0,
                eps_sweep: vec![0.2, 0.1, 0.05],
                estimate_grid: EstimateGrid::default(),
            },
            integration: IntegrationConfig {
                step: 1e-3,
                jacobi_horizon: 10.0,
                lyapunov_horizon: 20.0,
                lyapunov_window: 0.5,
                symmetric_orbits: 3,
                table_samples: 64,
                witness_samples: 64,
            },
            scan: ScanConfig {
                points: 41,
                coarse_points: 21,
                t_samples: 16,
                s_refine: 21,
                random_planes: 32,
                fit_t_samples: 2,
            },
            cones: ConeConfig {
                opening: 0.9,
                centers: vec![ConeCenter::AUnstable, ConeCenter::AStable],
                plan: SamplePlan::default(),
                angle_samples: 200,
            },
            oracles: OracleConfig { points: 100, fd_step: 0.01 },
            output_dir: None,
            seed: 20_240_601,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(GeometryError::InvalidSpec(msg));
        self.model.validate()?;
        let radius = self.model.tube_radius;
        let d = &self.deformation;
        for &eps in std::iter::once(&d.eps).chain(&d.eps_sweep) {
            if !(eps > 0.0 && eps < radius) {
                return bad(format!("deformation.eps = {eps} must lie in (0, ε₀ = {radius})"));
            }
        }
        if d.k0 < 2 {
            return bad(format!("deformation.k0 = {} must be at least 2", d.k0));
        }
        if d.kinds.is_empty() || d.eps_sweep.is_empty() {
            return bad("deformation.kinds and deformation.eps_sweep must be non-empty".into());
        }
        let theta = self.cones.plan.theta;
        if theta.is_nan() || theta <= 0.0 || d.eps / theta > radius {
            return bad(format!("ε/θ = {} exceeds ε₀ = {radius}", d.eps / theta));
        }
        let i = &self.integration;
        if !(i.step > 0.0 && i.jacobi_horizon > 0.0 && i.lyapunov_window > 0.0 && i.lyapunov_horizon >= i.lyapunov_window) {
            return bad("integration step, horizons and window must be positive with window ≤ horizon".into());
        }
        let counts = [
            ("integration.table_samples", i.table_samples),
            ("integration.witness_samples", i.witness_samples),
            ("scan.t_samples", self.scan.t_samples),
            ("scan.fit_t_samples", self.scan.fit_t_samples),
            ("cones.plan.boundary_directions", self.cones.plan.boundary_directions),
            ("cones.plan.sample_every", self.cones.plan.sample_every),
            ("cones.angle_samples", self.cones.angle_samples),
            ("oracles.points", self.oracles.points),
        ];
        for (name, value) in counts {
            if value == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        for (name, value) in [("scan.points", self.scan.points), ("scan.coarse_points", self.scan.coarse_points)] {
            if value < 3 || value % 2 == 0 {
                return bad(format!("{name} = {value} must be odd and at least 3"));
            }
        }
        if !(self.cones.opening > 0.0 && self.cones.opening < 1.0) {
            return bad(format!("cones.opening = {} must lie in (0,1)", self.cones.opening));
        }
        Ok(())
    }

    pub fn profile(&self, kind: DeformationKind, eps: f64) -> Result<DeformationProfile> {
        Ok(DeformationProfile::new(kind, self.model.n, self.model.s, self.deformation.k0, eps)?
            .with_amplitude(self.deformation.amplitude))
    }

    pub fn base_chart(&self) -> Result<FermiChart> {
        FermiChart::from_spec(self.model.clone())
    }

    pub fn deformed_chart(&self, kind: DeformationKind, eps: f64) -> Result<Box<dyn MetricChart>> {
        let base = self.base_chart()?;
        let profile = self.profile(kind, eps)?;
        Ok(match kind {
            DeformationKind::Conformal => Box::new(deform_conformal(base, profile)?),
            DeformationKind::G00 => Box::new(deform_g00(base, profile)?),
        })
    }

    fn grid(&self, eps: f64, points: usize, t_samples: usize) -> ScanGrid {
        ScanGrid {
            points,
            t_samples,
            s_refine: self.scan.s_refine,
            ..ScanGrid::for_tube(&self.model, eps)
        }
    }

    fn planes(&self, salt: u64) -> PlaneSampler {
        PlaneSampler {
            coordinate: true,
            random: self.scan.random_planes,
            seed: self.seed ^ salt,
        }
    }
}

pub fn kind_label(kind: DeformationKind) -> &'static str {
    match kind {
        DeformationKind::Conformal => "A",
        DeformationKind::G00 => "B",
    }
}

/// One measured quantity against its limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub relation: String,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), measured, relation: "<=".into(), limit, passed: measured <= limit }
    }

    pub fn below(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), measured, relation: "<".into(), limit, passed: measured < limit }
    }

    pub fn above(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), measured, relation: ">".into(), limit, passed: measured > limit }
    }

    pub fn equals(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), measured, relation: "==".into(), limit, passed: measured == limit }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub criterion: u8,
    pub title: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl Outcome {
    fn new(criterion: u8, title: &str, checks: Vec<Check>, notes: Vec<String>) -> Self {
        let passed = !checks.is_empty() && checks.iter().all(|c| c.passed);
        Self { criterion, title: title.to_string(), passed, checks, notes }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// One-line verdict.
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let detail = match self.failures().next() {
            Some(c) => format!("{} = {:.3e} (need {} {:.3e})", c.name, c.measured, c.relation, c.limit),
            None => format!("{} checks", self.checks.len()),
        };
        format!("criterion {:>2} [{status}] {}: {detail}", self.criterion, self.title)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Labeled<T> {
    pub label: String,
    pub value: T,
}

fn labeled<T>(label: impl Into<String>, value: T) -> Labeled<T> {
    Labeled { label: label.into(), value }
}

fn central_state<C: MetricChart + ?Sized>(chart: &C) -> Result<OrbitState> {
    let phase = PhaseState::central(chart.dim(), 0.0);
    Ok(OrbitState {
        frame: adapted_frame(chart, &phase)?,
        pos: phase.pos,
        vel: phase.vel,
    })
}

/// Expected exponents in descending order: `±1` on `A`, `±½` on `B`, and
/// zeros for `s` when deformed.
pub fn expected_exponents(spec: &ModelSpec, deformed: bool) -> Vec<f64> {
    let m = spec.n - 1;
    let mut pos: Vec<f64> = (1..=m)
        .map(|k| if k <= spec.r { 1.0 } else if deformed && k == spec.s { 0.0 } else { 0.5 })
        .collect();
    pos.extend(pos.clone().iter().map(|x| -x));
    pos.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    pos
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralTables {
    pub outcome: Outcome,
    pub tables: Vec<Labeled<CentralTable>>,
}

/// Criterion 1.
pub fn central_table_check(cfg: &ExperimentConfig) -> Result<CentralTables> {
    let spec = &cfg.model;
    let n = spec.n;
    let deformed_row: Vec<f64> = (1..n)
        .map(|k| if k <= spec.r { -1.0 } else if k == spec.s { 0.0 } else { -0.25 })
        .collect();
    let undeformed_row: Vec<f64> = (1..n).map(|k| if k <= spec.r { -1.0 } else { -0.25 }).collect();
    let mut checks = Vec::new();
    let mut tables = Vec::new();
    for &kind in &cfg.deformation.kinds {
        let chart = cfg.deformed_chart(kind, cfg.deformation.eps)?;
        let table = central_curvature_table(&chart, spec.period, cfg.integration.table_samples)?;
        let l = kind_label(kind);
        checks.push(Check::at_most(format!("{l}: max |K̃ − expected|"), table.max_deviation(&deformed_row), 1e-9));
        checks.push(Check::at_most(format!("{l}: t-variation"), table.t_variation, 1e-10));
        tables.push(labeled(l, table));
    }
    let base = cfg.base_chart()?;
    let table = central_curvature_table(&base, spec.period, cfg.integration.table_samples)?;
    checks.push(Check::at_most("undeformed: max |K − expected|", table.max_deviation(&undeformed_row), 1e-9));
    tables.push(labeled("undeformed", table));
    Ok(CentralTables {
        outcome: Outcome::new(1, "central curvature table", checks, Vec::new()),
        tables,
    })
}

/// Criterion 2.
pub fn jacobi_oracle_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = &cfg.model;
    let m = spec.n - 1;
    let horizon = cfg.integration.jacobi_horizon;
    let mut initial = Vec::new();
    for a in 0..m {
        let comp = a + 1;
        let rate = if comp <= spec.r { 1.0 } else if comp == spec.s { 0.0 } else { 0.5 };
        let mut e = vec![0.0; m];
        e[a] = 1.0;
        initial.push(JacobiState::new(e.clone(), vec![0.0; m]));
        initial.push(JacobiState::new(vec![0.0; m], e.clone()));
        if rate > 0.0 {
            initial.push(JacobiState::new(e.clone(), e.iter().map(|x| -rate * x).collect()));
        }
    }
    let mut checks = Vec::new();
    for &kind in &cfg.deformation.kinds {
        let chart = cfg.deformed_chart(kind, cfg.deformation.eps)?;
        let opts = IntegrationOptions::new(cfg.integration.step, horizon);
        let orbit = integrate_geodesic(&chart, &PhaseState::central(spec.n, 0.0), &opts)?;
        let paths = integrate_jacobi(&chart, &orbit, &initial, horizon)?;
        let mut worst_rel = 0.0_f64;
        let mut worst_zero = 0.0_f64;
        for (j0, path) in initial.iter().zip(&paths) {
            for (t, state) in path.times.iter().zip(&path.states) {
                let scale = state.as_vec().iter().fold(0.0_f64, |m, x| m.max(x.abs()));
                for a in 0..m {
                    let (j, dj) = central_jacobi_closed_form(spec, a + 1, j0.xi[a], j0.eta[a], *t)?;
                    for (num, exact) in [(state.xi[a], j), (state.eta[a], dj)] {
                        if exact == 0.0 {
                            worst_zero = worst_zero.max(num.abs() / scale.max(1.0));
                        } else {
                            worst_rel = worst_rel.max((num - exact).abs() / exact.abs());
                        }
                    }
                }
            }
        }
        let l = kind_label(kind);
        checks.push(Check::at_most(format!("{l}: max relative error"), worst_rel, 1e-6));
        checks.push(Check::at_most(format!("{l}: max spurious component"), worst_zero, 1e-6));
    }
    Ok(Outcome::new(2, "Jacobi closed forms on the central orbit", checks, Vec::new()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectra {
    pub outcome: Outcome,
    pub spectra: Vec<SpectrumReport>,
}

/// Criterion 3.
pub fn spectrum_check(cfg: &ExperimentConfig) -> Result<Spectra> {
    let spec = &cfg.model;
    let i = &cfg.integration;
    let mut checks = Vec::new();
    let mut spectra = Vec::new();
    let mut judge = |report: SpectrumReport, expected: &[f64], checks: &mut Vec<Check>| {
        let l = report.label.clone();
        checks.push(Check::at_most(format!("{l}: max |λ − expected|"), max_diff(&report.exponents, expected), 1e-2));
        checks.push(Check::at_most(format!("{l}: QR max |λ − expected|"), max_diff(&report.qr_exponents, expected), 1e-2));
        checks.push(Check::at_most(format!("{l}: pairing residual"), report.pairing_residual, 2e-2));
        checks.push(Check::equals(format!("{l}: partial"), report.partial as u8 as f64, 0.0));
        spectra.push(report);
    };

    let undeformed = expected_exponents(spec, false);
    let base = cfg.base_chart()?;
    let lin = ChartLinearization {
        start: central_state(&base)?,
        flow: ChartFlow::new(&base),
        step: i.step,
        period: Some(spec.period),
    };
    judge(lyapunov_spectrum(&lin, "undeformed central", i.lyapunov_horizon, i.lyapunov_window)?, &undeformed, &mut checks);

    let model = KahlerModel::new(spec.clone())?;
    for k in 0..i.symmetric_orbits {
        let mut rng = job_rng(cfg.seed ^ 0x5bec, k as u64);
        let v = unit_vector(&mut rng, spec.n);
        let frame = random_complement(&mut rng, spec.n, std::slice::from_ref(&v));
        let flow = SymmetricFlow::new(&model, &v, &frame, i.step);
        let label = format!("undeformed random direction {k}");
        judge(lyapunov_spectrum(&flow, &label, i.lyapunov_horizon, i.lyapunov_window)?, &undeformed, &mut checks);
    }

    let deformed = expected_exponents(spec, true);
    for &kind in &cfg.deformation.kinds {
        let chart = cfg.deformed_chart(kind, cfg.deformation.eps)?;
        let lin = ChartLinearization {
            start: central_state(&chart)?,
            flow: ChartFlow::new(&chart),
            step: i.step,
            period: Some(spec.period),
        };
        let label = format!("{} central", kind_label(kind));
        judge(lyapunov_spectrum(&lin, &label, i.lyapunov_horizon, i.lyapunov_window)?, &deformed, &mut checks);
    }
    Ok(Spectra {
        outcome: Outcome::new(3, "Lyapunov spectra", checks, Vec::new()),
        spectra,
    })
}

/// Criterion 4.
pub fn angle_identity_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = &cfg.model;
    let n = spec.n;
    let m = n - 1;
    let model = KahlerModel::new(spec.clone())?;
    let cone = ConeFamily::new(ConeCenter::AUnstable, cfg.cones.opening)?;
    let mut worst_rel = 0.0_f64;
    let mut min_analytic = f64::INFINITY;
    let mut min_numeric = f64::INFINITY;
    let mut degenerate = 0usize;
    for k in 0..cfg.cones.angle_samples {
        let mut rng = job_rng(cfg.seed ^ 0xa4e1, k as u64);
        let v = unit_vector(&mut rng, n);
        let frame = random_complement(&mut rng, n, std::slice::from_ref(&v));
        let jv = KahlerModel::complex_structure(&v);
        let a: Vec<f64> = frame.iter().map(|e| dot(e, &jv)).collect();
        let flow = SymmetricFlow::new(&model, &v, &frame, 1e-4);
        let j0 = JacobiState::from_slice(&unit_vector(&mut rng, 2 * m));
        let horizon = rng.random_range(0.01..0.5);
        let path = symmetric_jacobi_path(&flow, &j0, horizon)?;
        let dirs = vec![a.clone(); path.states.len()];
        let samples = theta_derivative(&path, &dirs, &cone, true)?;
        let sample = samples[samples.len() / 2];
        let analytic = sample.analytic.expect("A cone in the symmetric model");
        if sample.degenerate {
            degenerate += 1;
            continue;
        }
        worst_rel = worst_rel.max((sample.numeric - analytic).abs() / analytic.abs());
        min_analytic = min_analytic.min(analytic);
        min_numeric = min_numeric.min(sample.numeric);
    }
    let checks = vec![
        Check::at_most("max relative |numeric − analytic|", worst_rel, 1e-5),
        Check::above("min analytic dΘ/dt", min_analytic, 0.0),
        Check::above("min numeric dΘ/dt", min_numeric, 0.0),
    ];
    let notes = vec![format!("{degenerate} degenerate samples excluded")];
    Ok(Outcome::new(4, "undeformed angle-derivative identity", checks, notes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeChecks {
    pub outcome: Outcome,
    pub scans: Vec<ConeScanReport>,
}

/// Criterion 5.
pub fn cone_check(cfg: &ExperimentConfig) -> Result<ConeChecks> {
    let spec = &cfg.model;
    let eps = cfg.deformation.eps;
    let chart = cfg.deformed_chart(DeformationKind::Conformal, eps)?;
    let mut checks = Vec::new();
    let mut scans = Vec::new();
    for &center in &cfg.cones.centers {
        let cone = ConeFamily::new(center, cfg.cones.opening)?;
        let report = cone_invariance_scan(&chart, spec.s, eps, &cone, &cfg.cones.plan, cfg.seed)?;
        let l = format!("{center:?}");
        checks.push(Check::above(format!("{l}: min margin, parallel"), report.min_margin_parallel, 0.0));
        checks.push(Check::above(format!("{l}: min margin, almost parallel"), report.min_margin_almost_parallel, 0.0));
        checks.push(Check::at_most(format!("{l}: max residence / bound"), report.max_residence_ratio, 1.0));
        let failed = report.seeds.iter().filter(|s| !s.passed).count();
        checks.push(Check::equals(format!("{l}: failed seeds"), failed as f64, 0.0));
        scans.push(report);
    }

    // Boundary vectors with no s-part along the central orbit.
    let m = spec.n - 1;
    let horizon = 5.0;
    let opts = IntegrationOptions::new(cfg.integration.step, horizon);
    let orbit = integrate_geodesic(&chart, &PhaseState::central(spec.n, 0.0), &opts)?;
    let dirs: Vec<Vec<f64>> = orbit.states.iter().map(|s| splitting_direction(&chart, s)).collect();
    let cone = ConeFamily::new(ConeCenter::AUnstable, cfg.cones.opening)?;
    let basis = cone.center_basis(&dirs[0]);
    let c = cfg.cones.opening;
    let mut rng = job_rng(cfg.seed ^ 0xc0e5, 0);
    let mut initial = Vec::new();
    while initial.len() < cfg.cones.plan.boundary_directions {
        let mut w = unit_vector(&mut rng, 2 * m);
        w[spec.s - 1] = 0.0;
        w[m + spec.s - 1] = 0.0;
        if let Some(w) = orthonormalize(w, &basis) {
            let z: Vec<f64> = basis[0].iter().zip(&w).map(|(u, w)| c.sqrt() * u + (1.0 - c).sqrt() * w).collect();
            initial.push(JacobiState::from_slice(&z));
        }
    }
    let paths = integrate_jacobi(&chart, &orbit, &initial, horizon)?;
    let mut min_rate_start = f64::INFINITY;
    let mut min_rate = f64::INFINITY;
    let mut max_drop = 0.0_f64;
    for path in &paths {
        let rates = theta_derivative(path, &dirs, &cone, false)?;
        min_rate_start = min_rate_start.min(rates[0].numeric);
        min_rate = min_rate.min(rates.iter().map(|r| r.numeric).fold(f64::INFINITY, f64::min));
        let thetas: Vec<f64> = path
            .states
            .iter()
            .zip(&dirs)
            .map(|(s, a)| theta(&cone.center_basis(a), &s.as_vec()))
            .collect::<Result<_>>()?;
        for w in thetas.windows(2) {
            max_drop = max_drop.max(w[0] - w[1]);
        }
    }
    checks.push(Check::above("central boundary dΘ/dt at start", min_rate_start, 0.0));
    checks.push(Check::above("central boundary min dΘ/dt", min_rate, 0.0));
    checks.push(Check::at_most("central Θ largest decrease", max_drop, 0.0));
    Ok(ConeChecks {
        outcome: Outcome::new(5, "cone invariance, deformation A", checks, Vec::new()),
        scans,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BumpCertificates {
    pub outcome: Outcome,
    pub certificates: Vec<EstimateCertificate>,
}

/// Criterion 6.
pub fn bump_certificate_check(cfg: &ExperimentConfig) -> Result<BumpCertificates> {
    let mut checks = Vec::new();
    let mut certificates = Vec::new();
    for &eps in &cfg.deformation.eps_sweep {
        let profile = cfg.profile(DeformationKind::Conformal, eps)?;
        checks.push(Check::equals(format!("ε={eps}: r''(0)"), profile.family.r(2, 0.0), 0.25));
        let cert = verify_estimates(&profile, &cfg.deformation.estimate_grid)?;
        for b in &cert.bounds {
            checks.push(Check::at_most(format!("ε={eps}: bound {} {}", b.index, b.name), b.measured, b.limit));
        }
        checks.push(Check::at_most(format!("ε={eps}: seam mismatch to order 4"), seam_mismatch(&profile.family, 4), 1e-9));
        certificates.push(cert);
    }
    Ok(BumpCertificates {
        outcome: Outcome::new(6, "bump estimate certificates", checks, Vec::new()),
        certificates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Nonpositivity {
    pub outcome: Outcome,
    pub truncation: TruncationFit,
    pub report: CurvatureReport,
    pub profiles: Vec<PProfile>,
}

/// Criterion 7.
pub fn nonpositivity_check(cfg: &ExperimentConfig) -> Result<Nonpositivity> {
    let eps = cfg.deformation.eps;
    let base = cfg.base_chart()?;
    let fit = truncation_fit(
        &base,
        &cfg.grid(eps, cfg.scan.points, cfg.scan.fit_t_samples),
        &cfg.planes(0x7a),
        (-1.0, -0.25),
    )?;
    let chart = cfg.deformed_chart(DeformationKind::G00, eps)?;
    let grid = cfg.grid(eps, cfg.scan.points, cfg.scan.t_samples);
    let report = scan_sectional(&chart, &grid, &cfg.planes(0xb), 10.0 * fit.tau)?;
    let mut checks = vec![
        Check::below("max off-axis K̃", report.max_off_axis, 0.0),
        Check::below("max |K̃(X_s, X_0)| on the axis", report.central_plane_on_axis, 1e-9),
        Check::equals("near-zero values outside the one-cell central band", report.near_zero_outside as f64, 0.0),
    ];
    let mut profiles = Vec::new();
    for k in [2, cfg.deformation.k0] {
        let p = p_profile(eps, k)?;
        if k == 2 {
            let rel = (p.p2 - p.p2_expected).abs() / p.p2_expected.abs();
            checks.push(Check::at_most("k₀=2: relative |p''(0) − (−12/ε⁴ + ½)|", rel, 1e-12));
        }
        checks.push(Check::equals(format!("k₀={k}: global max of p"), p.global_max, 0.25));
        checks.push(Check::equals(format!("k₀={k}: argmax of p"), p.argmax, 0.0));
        profiles.push(p);
    }
    let away = profiles.iter().map(|p| format!("k₀={}: {:.4}", p.k, p.max_abs_away_from_zero)).collect::<Vec<_>>();
    let default_profile = profiles.last().expect("two profiles");
    checks.push(Check::below(
        format!("k₀={}: max |p| away from 0", default_profile.k),
        default_profile.max_abs_away_from_zero,
        0.25,
    ));
    let notes = vec![
        format!(
            "τ_trunc = {:.3e} (C = {:.3}, fitted exponent {:.2}); zero band 10τ = {:.3e}",
            fit.tau,
            fit.constant,
            fit.slope,
            10.0 * fit.tau
        ),
        format!(
            "{} near-zero values, {} off the central plane, farthest {:.1} cells from the axis",
            report.near_zero_count, report.near_zero_off_plane, report.near_zero_radius_cells
        ),
        format!("{} sectional curvatures sampled", report.evaluations),
        format!("max |p| away from 0: {}", away.join(", ")),
    ];
    Ok(Nonpositivity {
        outcome: Outcome::new(7, "deformation B nonpositivity", checks, notes),
        truncation: fit,
        report,
        profiles,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositiveBoundRow {
    pub eps: f64,
    pub points: usize,
    pub max_k: f64,
    /// `max(K̃_max, 0)/ε`
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositiveBound {
    pub outcome: Outcome,
    pub rows: Vec<PositiveBoundRow>,
}

/// Slack for comparing curvature maxima that sit at rounding level.
pub const ROUNDING_SLACK: f64 = 1e-12;

/// Criterion 8.
pub fn positive_bound_check(cfg: &ExperimentConfig) -> Result<PositiveBound> {
    let mut sweep = cfg.deformation.eps_sweep.clone();
    sweep.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut previous: Option<f64> = None;
    for &eps in &sweep {
        let chart = cfg.deformed_chart(DeformationKind::Conformal, eps)?;
        let mut ms = Vec::new();
        for points in [cfg.scan.coarse_points, cfg.scan.points] {
            let report = scan_sectional(&chart, &cfg.grid(eps, points, cfg.scan.t_samples), &cfg.planes(0xa), 0.0)?;
            let m = report.max_k.max(0.0) / eps;
            rows.push(PositiveBoundRow { eps, points, max_k: report.max_k, m });
            ms.push((report.max_k, m));
        }
        let (coarse, fine) = (ms[0].1, ms[1].1);
        checks.push(Check::at_most(
            format!("ε={eps}: |M_fine − M_coarse|"),
            (fine - coarse).abs(),
            0.1 * fine + ROUNDING_SLACK / eps,
        ));
        let top = ms[1].0.max(0.0);
        if let Some(prev) = previous {
            checks.push(Check::at_most(format!("ε={eps}: max K̃⁺ minus previous ε"), top - prev, ROUNDING_SLACK));
        }
        previous = Some(top);
    }
    Ok(PositiveBound {
        outcome: Outcome::new(8, "deformation A positive-curvature bound", checks, Vec::new()),
        rows,
    })
}

/// Criterion 9.
pub fn oracle_suite_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = &cfg.model;
    let n = spec.n;
    let eps = cfg.deformation.eps;
    let base = cfg.base_chart()?;
    let conformal_profile = cfg.profile(DeformationKind::Conformal, eps)?;
    let conformal = deform_conformal(base.clone(), conformal_profile.clone())?;
    let g00 = deform_g00(base.clone(), cfg.profile(DeformationKind::G00, eps)?)?;
    let charts: [(&str, &dyn MetricChart); 3] = [("A", &conformal), ("B", &g00), ("undeformed", &base)];

    let mut eq1 = 0.0_f64;
    let mut eq3 = 0.0_f64;
    let mut eq4 = 0.0_f64;
    let mut identities = [0.0_f64; 3];
    let mut symmetries = [0.0_f64; 3];
    let mut fd = [0.0_f64; 3];
    let fd_step = cfg.oracles.fd_step * eps * eps;
    for k in 0..cfg.oracles.points {
        let mut rng = job_rng(cfg.seed ^ 0x0dac, k as u64);
        let p: Vec<f64> = (0..n)
            .map(|j| match j {
                0 => rng.random_range(0.0..spec.period),
                j if j == spec.s => rng.random_range(-0.95..0.95) * eps * eps,
                _ => rng.random_range(-0.95..0.95) * eps,
            })
            .collect();

        let bgeo = PointGeometry::at(&base, &p)?;
        let br = bgeo.curvature();
        let h = crate::tensor::ScalarField::jet(&conformal_profile, &p);
        let dgeo = PointGeometry::at(&conformal, &p)?;
        let dr = dgeo.curvature();

        let gamma = conformal_christoffel(&bgeo.christoffel, &h, &bgeo.jet.g, &bgeo.ginv);
        let scale = dgeo.christoffel.max_abs().max(1.0);
        for a in 0..n {
            for i in 0..n {
                for j in 0..n {
                    eq1 = eq1.max((gamma.get(a, i, j) - dgeo.christoffel.get(a, i, j)).abs() / scale);
                }
            }
        }

        let x = unit_vector(&mut rng, n);
        let y = unit_vector(&mut rng, n);
        let z = unit_vector(&mut rng, n);
        let law = conformal_curvature(&bgeo, &br, &h, &x, &y, &z);
        let direct = dr.apply(&dgeo.ginv, &x, &y, &z);
        let scale = direct.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        for (u, v) in law.iter().zip(&direct) {
            eq3 = eq3.max((u - v).abs() / scale);
        }

        // g-orthonormal pair for the base metric
        let xx = bgeo.inner(&x, &x).sqrt();
        let e1: Vec<f64> = x.iter().map(|v| v / xx).collect();
        let c = bgeo.inner(&y, &e1);
        let mut e2: Vec<f64> = y.iter().zip(&e1).map(|(a, b)| a - c * b).collect();
        let yy = bgeo.inner(&e2, &e2).sqrt();
        e2.iter_mut().for_each(|v| *v /= yy);
        let law = conformal_sectional(&bgeo, sectional_at(&br, &bgeo.jet, &e1, &e2)?, &h, &e1, &e2)?;
        let direct = h.value.exp() * sectional_at(&dr, &dgeo.jet, &e1, &e2)?;
        eq4 = eq4.max((law - direct).abs() / direct.abs().max(1.0));

        for (idx, (_, chart)) in charts.iter().enumerate() {
            let res = metric_identity_checks_with_step(*chart, &p, fd_step)?;
            identities[idx] = identities[idx].max(res.inverse_derivative.max(res.christoffel_compatibility));
            let geo = PointGeometry::at(*chart, &p)?;
            symmetries[idx] = symmetries[idx].max(geo.curvature().symmetry_residuals().max_relative());
            let exact = &geo.jet;
            let approx = finite_difference_jet(*chart, &p, fd_step);
            let dscale = exact.dg.iter().chain(&exact.ddg).fold(1.0_f64, |m, v| m.max(v.abs()));
            let diff = exact
                .dg
                .iter()
                .zip(&approx.dg)
                .chain(exact.ddg.iter().zip(&approx.ddg))
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            fd[idx] = fd[idx].max(diff / dscale);
        }
    }
    let mut checks = vec![
        Check::at_most("Christoffel transformation law", eq1, 1e-7),
        Check::at_most("curvature transformation law", eq3, 1e-7),
        Check::at_most("sectional curvature transformation law", eq4, 1e-7),
    ];
    for (idx, (label, _)) in charts.iter().enumerate() {
        checks.push(Check::at_most(format!("{label}: metric-derivative identities"), identities[idx], 1e-8));
        checks.push(Check::at_most(format!("{label}: curvature symmetries and Bianchi"), symmetries[idx], 1e-8));
        checks.push(Check::at_most(format!("{label}: finite-difference jet"), fd[idx], 1e-5));
    }
    Ok(Outcome::new(9, "oracle suite", checks, Vec::new()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witnesses {
    pub outcome: Outcome,
    pub records: Vec<Labeled<WitnessRecord>>,
}

/// Criterion 10. The undeformed chart is the forced-failure fixture.
pub fn witness_check(cfg: &ExperimentConfig) -> Result<Witnesses> {
    let spec = &cfg.model;
    let samples = cfg.integration.witness_samples;
    let mut checks = Vec::new();
    let mut records = Vec::new();
    for &kind in &cfg.deformation.kinds {
        let chart = cfg.deformed_chart(kind, cfg.deformation.eps)?;
        let rec = anosov_obstruction_witness(&chart, spec, samples)?;
        let l = kind_label(kind);
        checks.push(Check::below(format!("{l}: max ‖D̃_t e_s‖"), rec.max_transport, 1e-10));
        checks.push(Check::below(format!("{l}: max |K̃(e_s, γ')|"), rec.max_curvature, 1e-9));
        records.push(labeled(l, rec));
    }
    let rec = anosov_obstruction_witness(&cfg.base_chart()?, spec, samples)?;
    checks.push(Check::at_most("undeformed: |K(e_s, γ')| − ¼", (rec.max_curvature - 0.25).abs(), 1e-9));
    checks.push(Check::equals("undeformed: witness accepted", rec.passed as u8 as f64, 0.0));
    records.push(labeled("undeformed", rec));
    Ok(Witnesses {
        outcome: Outcome::new(10, "flat parallel field witness", checks, Vec::new()),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.deformation.eps = 0.6;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.cones.plan.theta = 0.01;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.scan.points = 40;
        assert!(cfg.validate().is_err());
        assert!(serde_json::from_str::<ExperimentConfig>("{}").is_err());
    }

    #[test]
    fn expected_exponents_for_default_model() {
        let spec = ModelSpec::default();
        assert_eq!(expected_exponents(&spec, false), vec![1.0, 0.5, 0.5, -0.5, -0.5, -1.0]);
        assert_eq!(expected_exponents(&spec, true), vec![1.0, 0.5, 0.0, -0.0, -0.5, -1.0]);
    }

    #[test]
    fn outcome_line_reports_first_failure() {
        let o = Outcome::new(3, "x", vec![Check::at_most("a", 1.0, 2.0), Check::below("b", 3.0, 1.0)], Vec::new());
        assert!(!o.passed);
        assert!(o.line().contains("[FAIL]") && o.line().contains("b = "));
    }
}
