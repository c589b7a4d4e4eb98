//! Fixed-step RK4 integration of geodesics, parallel frames and Jacobi fields on a
//! chart, plus the constant-operator flow of the symmetric model.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{GeometryError, Result};
use crate::model::{KahlerModel, ModelSpec};
use crate::tensor::{MetricChart, MetricJet, PointGeometry};

/// Point and velocity on the chart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseState {
    pub pos: Vec<f64>,
    pub vel: Vec<f64>,
}

impl PhaseState {
    pub fn new(pos: Vec<f64>, vel: Vec<f64>) -> Self {
        assert_eq!(pos.len(), vel.len());
        Self { pos, vel }
    }

    /// `(t₀, 0; ∂_t)`.
    pub fn central(dim: usize, t0: f64) -> Self {
        let mut pos = vec![0.0; dim];
        pos[0] = t0;
        let mut vel = vec![0.0; dim];
        vel[0] = 1.0;
        Self { pos, vel }
    }

    pub fn dim(&self) -> usize {
        self.pos.len()
    }

    /// Rescale the velocity to unit length for the chart metric.
    pub fn normalized<C: MetricChart + ?Sized>(mut self, chart: &C) -> Self {
        let jet = chart.metric_jet_only(&self.pos);
        let norm = jet.inner(&self.vel, &self.vel).sqrt();
        self.vel.iter_mut().for_each(|v| *v /= norm);
        self
    }
}

trait MetricOnly {
    fn metric_jet_only(&self, p: &[f64]) -> MetricJet;
}

impl<C: MetricChart + ?Sized> MetricOnly for C {
    fn metric_jet_only(&self, p: &[f64]) -> MetricJet {
        let mut jet = MetricJet::zeros(self.dim());
        jet.g = self.metric(p);
        jet
    }
}

/// Jacobi data `(ξ, η) = (J, J')` in the coordinates of the parallel frame `e_1..e_{n−1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiState {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

impl JacobiState {
    pub fn new(xi: Vec<f64>, eta: Vec<f64>) -> Self {
        assert_eq!(xi.len(), eta.len());
        Self { xi, eta }
    }

    pub fn zeros(m: usize) -> Self {
        Self::new(vec![0.0; m], vec![0.0; m])
    }

    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    /// The standard basis of `R^{2m}` as Jacobi states.
    pub fn basis(m: usize) -> Vec<Self> {
        (0..2 * m)
            .map(|c| {
                let mut s = Self::zeros(m);
                if c < m {
                    s.xi[c] = 1.0;
                } else {
                    s.eta[c - m] = 1.0;
                }
                s
            })
            .collect()
    }

    pub fn as_vec(&self) -> Vec<f64> {
        let mut v = self.xi.clone();
        v.extend_from_slice(&self.eta);
        v
    }

    pub fn from_slice(z: &[f64]) -> Self {
        let m = z.len() / 2;
        Self::new(z[..m].to_vec(), z[m..].to_vec())
    }

    /// `ω = ⟨ξ₁,η₂⟩ − ⟨η₁,ξ₂⟩`, the frame being orthonormal.
    pub fn symplectic(&self, other: &Self) -> f64 {
        let a: f64 = self.xi.iter().zip(&other.eta).map(|(x, y)| x * y).sum();
        let b: f64 = self.eta.iter().zip(&other.xi).map(|(x, y)| x * y).sum();
        a - b
    }
}

/// Geodesic with its parallel frame. `frame` holds `e_1..e_{n−1}` contiguously.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitState {
    pub pos: Vec<f64>,
    pub vel: Vec<f64>,
    pub frame: Vec<f64>,
}

impl OrbitState {
    pub fn frame_vector(&self, a: usize) -> &[f64] {
        let n = self.pos.len();
        &self.frame[a * n..(a + 1) * n]
    }

    pub fn phase(&self) -> PhaseState {
        PhaseState::new(self.pos.clone(), self.vel.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationOptions {
    pub step: f64,
    pub horizon: f64,
    /// Stop once some `|x_i|`, `i ≥ 1`, exceeds this radius.
    pub exit_radius: Option<f64>,
    /// Record every `stride`-th step (the final state is always kept).
    pub stride: usize,
}

impl IntegrationOptions {
    pub fn new(step: f64, horizon: f64) -> Self {
        Self {
            step,
            horizon,
            exit_radius: None,
            stride: 1,
        }
    }

    pub fn with_exit_radius(mut self, r: f64) -> Self {
        self.exit_radius = Some(r);
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.horizon >= 0.0) {
            return Err(GeometryError::ContractViolation(format!(
                "step {} must be positive and horizon {} nonnegative",
                self.step, self.horizon
            )));
        }
        Ok(())
    }
}

/// Dense orbit output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Orbit {
    pub dim: usize,
    pub step: f64,
    pub stride: usize,
    pub times: Vec<f64>,
    pub states: Vec<OrbitState>,
    /// Time at which the orbit left the requested box, if it did.
    pub exit_time: Option<f64>,
    /// Largest `|g(v,v) − 1|` seen before the per-step renormalization.
    pub max_speed_drift: f64,
}

impl Orbit {
    pub fn positions(&self) -> Vec<Vec<f64>> {
        self.states.iter().map(|s| s.pos.clone()).collect()
    }

    pub fn last(&self) -> &OrbitState {
        self.states.last().expect("orbit has at least its initial state")
    }

    pub fn duration(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }
}

/// Jacobi states sampled on the orbit's recorded nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiPath {
    pub times: Vec<f64>,
    pub states: Vec<JacobiState>,
}

/// Frame adapted to the splitting at a point: `e_1` is the unit projection of
/// `J₀v` onto `v^⊥`, followed by Gram–Schmidt of the coordinate axes.
pub fn adapted_frame<C: MetricChart + ?Sized>(chart: &C, state: &PhaseState) -> Result<Vec<f64>> {
    let n = chart.dim();
    let jet = chart.metric_jet_only(&state.pos);
    let v = &state.vel;
    let mut basis: Vec<Vec<f64>> = vec![v.clone()];
    let mut candidates = vec![KahlerModel::complex_structure(v)];
    for i in (1..n).chain(std::iter::once(0)) {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        candidates.push(e);
    }
    for mut c in candidates {
        if basis.len() == n {
            break;
        }
        for b in &basis {
            let coef = jet.inner(&c, b) / jet.inner(b, b);
            c.iter_mut().zip(b).for_each(|(x, y)| *x -= coef * y);
        }
        let norm = jet.inner(&c, &c).sqrt();
        if norm > 1e-6 {
            c.iter_mut().for_each(|x| *x /= norm);
            basis.push(c);
        }
    }
    if basis.len() != n {
        return Err(GeometryError::DegenerateMetric {
            point: state.pos.clone(),
            min_eigenvalue: jet.min_eigenvalue(),
        });
    }
    Ok(basis[1..].concat())
}

/// Geodesic flow of a chart with its linearization in a parallel frame.
pub struct ChartFlow<C> {
    chart: C,
}

impl<C: MetricChart> ChartFlow<C> {
    pub fn new(chart: C) -> Self {
        Self { chart }
    }

    pub fn chart(&self) -> &C {
        &self.chart
    }

    /// RHS of the combined system. Layout: `[x, v, e_1..e_{n−1}, (ξ,η)_1..(ξ,η)_m]`.
    fn rhs(&self, y: &[f64], cols: usize, out: &mut [f64]) -> Result<()> {
        let n = self.chart.dim();
        let m = n - 1;
        let x = &y[..n];
        let v = &y[n..2 * n];
        let geo = PointGeometry::at(&self.chart, x)?;
        out[..n].copy_from_slice(v);
        let mut acc = vec![0.0; n];
        geo.christoffel.contract(v, v, &mut acc);
        for k in 0..n {
            out[n + k] = -acc[k];
        }
        let fbase = 2 * n;
        for a in 0..m {
            let e = &y[fbase + a * n..fbase + (a + 1) * n];
            geo.christoffel.contract(v, e, &mut acc);
            for k in 0..n {
                out[fbase + a * n + k] = -acc[k];
            }
        }
        if cols == 0 {
            return Ok(());
        }
        let r = geo.curvature();
        // K_ab = R(e_a, v, v, e_b)
        let mut kmat = vec![0.0; m * m];
        for a in 0..m {
            let ea = &y[fbase + a * n..fbase + (a + 1) * n];
            for b in a..m {
                let eb = &y[fbase + b * n..fbase + (b + 1) * n];
                let val = r.eval(ea, v, v, eb);
                kmat[a * m + b] = val;
                kmat[b * m + a] = val;
            }
        }
        let jbase = fbase + m * n;
        for c in 0..cols {
            let off = jbase + c * 2 * m;
            for a in 0..m {
                out[off + a] = y[off + m + a];
                let mut s = 0.0;
                for b in 0..m {
                    s += kmat[a * m + b] * y[off + b];
                }
                out[off + m + a] = -s;
            }
        }
        Ok(())
    }

    fn rk4_step(&self, y: &mut [f64], cols: usize, h: f64, work: &mut [Vec<f64>; 5]) -> Result<()> {
        let len = y.len();
        let [k1, k2, k3, k4, tmp] = work;
        self.rhs(y, cols, k1)?;
        for i in 0..len {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        self.rhs(tmp, cols, k2)?;
        for i in 0..len {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        self.rhs(tmp, cols, k3)?;
        for i in 0..len {
            tmp[i] = y[i] + h * k3[i];
        }
        self.rhs(tmp, cols, k4)?;
        for i in 0..len {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        Ok(())
    }

    /// Renormalize the velocity; returns `|g(v,v) − 1|` before rescaling.
    fn renormalize(&self, y: &mut [f64]) -> f64 {
        let n = self.chart.dim();
        let g = self.chart.metric(&y[..n]);
        let v = &y[n..2 * n];
        let mut vv = 0.0;
        for i in 0..n {
            for j in 0..n {
                vv += v[i] * g[i * n + j] * v[j];
            }
        }
        let norm = vv.sqrt();
        y[n..2 * n].iter_mut().for_each(|c| *c /= norm);
        (vv - 1.0).abs()
    }

    /// Integrate the orbit, its frame and `jacobi` columns together.
    pub fn integrate(
        &self,
        start: &OrbitState,
        jacobi: &[JacobiState],
        opts: &IntegrationOptions,
    ) -> Result<(Orbit, Vec<JacobiPath>)> {
        opts.validate()?;
        let n = self.chart.dim();
        let m = n - 1;
        let cols = jacobi.len();
        let mut y = Vec::with_capacity(2 * n + m * n + cols * 2 * m);
        y.extend_from_slice(&start.pos);
        y.extend_from_slice(&start.vel);
        y.extend_from_slice(&start.frame);
        for j in jacobi {
            y.extend_from_slice(&j.xi);
            y.extend_from_slice(&j.eta);
        }
        let len = y.len();
        let mut work: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; len]);

        let steps = (opts.horizon / opts.step).round() as usize;
        let h = if steps > 0 { opts.horizon / steps as f64 } else { opts.step };
        let split = |y: &[f64]| -> (OrbitState, Vec<JacobiState>) {
            let state = OrbitState {
                pos: y[..n].to_vec(),
                vel: y[n..2 * n].to_vec(),
                frame: y[2 * n..2 * n + m * n].to_vec(),
            };
            let base = 2 * n + m * n;
            let js = (0..cols)
                .map(|c| JacobiState::from_slice(&y[base + c * 2 * m..base + (c + 1) * 2 * m]))
                .collect();
            (state, js)
        };
        let outside = |y: &[f64]| -> f64 {
            y[1..n].iter().fold(0.0_f64, |a, x| a.max(x.abs()))
        };

        let mut times = vec![0.0];
        let (s0, j0) = split(&y);
        let mut states = vec![s0];
        let mut jpaths: Vec<JacobiPath> = j0
            .into_iter()
            .map(|j| JacobiPath { times: vec![0.0], states: vec![j] })
            .collect();
        let mut exit_time = None;
        let mut drift = 0.0_f64;
        let mut prev = y.clone();

        for k in 1..=steps {
            prev.copy_from_slice(&y);
            self.rk4_step(&mut y, cols, h, &mut work)?;
            drift = drift.max(self.renormalize(&mut y));
            let t = k as f64 * h;
            if let Some(radius) = opts.exit_radius {
                let (a, b) = (outside(&prev), outside(&y));
                if b > radius {
                    let frac = if b > a { ((radius - a) / (b - a)).clamp(0.0, 1.0) } else { 1.0 };
                    exit_time = Some(t - h + frac * h);
                    let (s, js) = split(&y);
                    times.push(t);
                    states.push(s);
                    for (p, j) in jpaths.iter_mut().zip(js) {
                        p.times.push(t);
                        p.states.push(j);
                    }
                    break;
                }
            }
            if k % opts.stride == 0 || k == steps {
                let (s, js) = split(&y);
                times.push(t);
                states.push(s);
                for (p, j) in jpaths.iter_mut().zip(js) {
                    p.times.push(t);
                    p.states.push(j);
                }
            }
        }
        Ok((
            Orbit {
                dim: n,
                step: h,
                stride: opts.stride,
                times,
                states,
                exit_time,
                max_speed_drift: drift,
            },
            jpaths,
        ))
    }

    /// Advance a bare state without recording (used by windowed estimators).
    fn advance_raw(&self, y: &mut [f64], cols: usize, duration: f64, step: f64) -> Result<()> {
        let steps = (duration / step).round().max(1.0) as usize;
        let h = duration / steps as f64;
        let mut work: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; y.len()]);
        for _ in 0..steps {
            self.rk4_step(y, cols, h, &mut work)?;
            self.renormalize(y);
        }
        Ok(())
    }
}

/// Integrate a geodesic with an adapted parallel frame.
pub fn integrate_geodesic<C: MetricChart>(
    chart: &C,
    state: &PhaseState,
    opts: &IntegrationOptions,
) -> Result<Orbit> {
    let start = OrbitState {
        pos: state.pos.clone(),
        vel: state.vel.clone(),
        frame: adapted_frame(chart, state)?,
    };
    Ok(ChartFlow::new(chart).integrate(&start, &[], opts)?.0)
}

/// Integrate Jacobi fields along an orbit produced by [`integrate_geodesic`] on
/// the same chart. The orbit is re-integrated with identical steps, so its nodes
/// coincide with the returned path's.
pub fn integrate_jacobi<C: MetricChart>(
    chart: &C,
    orbit: &Orbit,
    j0: &[JacobiState],
    horizon: f64,
) -> Result<Vec<JacobiPath>> {
    if let Some(t) = orbit.exit_time {
        if horizon > t {
            return Err(GeometryError::DomainExit(t));
        }
    }
    let horizon = horizon.min(orbit.duration());
    let opts = IntegrationOptions::new(orbit.step, horizon).with_stride(orbit.stride);
    Ok(ChartFlow::new(chart).integrate(&orbit.states[0], j0, &opts)?.1)
}

/// Closed-form Jacobi component along the central orbit of a deformed chart:
/// rate 1 on `A`, rate ½ on `B` except the flat direction `s`, affine on `s`.
pub fn central_jacobi_closed_form(spec: &ModelSpec, component: usize, j0: f64, dj0: f64, t: f64) -> Result<(f64, f64)> {
    if component == 0 || component >= spec.n {
        return Err(GeometryError::ContractViolation(format!(
            "component {component} outside 1..{}",
            spec.n - 1
        )));
    }
    if component == spec.s {
        return Ok((j0 + dj0 * t, dj0));
    }
    let rate = if component <= spec.r { 1.0 } else { 0.5 };
    let plus = 0.5 * (j0 + dj0 / rate);
    let minus = 0.5 * (j0 - dj0 / rate);
    let (ep, em) = ((rate * t).exp(), (-rate * t).exp());
    Ok((plus * ep + minus * em, rate * (plus * ep - minus * em)))
}

/// Tangent vector `(w₁, w₂)` to the tangent bundle at a base state, split in
/// horizontal and vertical parts.
#[derive(Debug, Clone, PartialEq)]
pub struct SasakiVector {
    pub base: PhaseState,
    pub horizontal: Vec<f64>,
    pub vertical: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SasakiProducts {
    pub inner: f64,
    /// `α(ξ̂) = g(w₁, v)`
    pub contact: f64,
    /// `ω(ξ̂, η̂) = g(w₁, z₂) − g(w₂, z₁)`
    pub symplectic: f64,
}

pub fn sasaki_products<C: MetricChart + ?Sized>(
    chart: &C,
    xi: &SasakiVector,
    eta: &SasakiVector,
) -> Result<SasakiProducts> {
    if xi.base != eta.base {
        return Err(GeometryError::ContractViolation(
            "Sasaki products need vectors at the same base point".into(),
        ));
    }
    let jet = chart.metric_jet_only(&xi.base.pos);
    let g = |a: &[f64], b: &[f64]| jet.inner(a, b);
    Ok(SasakiProducts {
        inner: g(&xi.horizontal, &eta.horizontal) + g(&xi.vertical, &eta.vertical),
        contact: g(&xi.horizontal, &xi.base.vel),
        symplectic: g(&xi.horizontal, &eta.vertical) - g(&xi.vertical, &eta.horizontal),
    })
}

/// A linearized flow on the contact structure, in parallel-frame coordinates.
pub trait LinearizedFlow: Sync {
    type Base: Clone + Send;

    fn transverse_dim(&self) -> usize;
    fn start(&self) -> Self::Base;
    /// Advance the base and the Jacobi columns by `duration`.
    fn advance(&self, base: &mut Self::Base, cols: &mut [JacobiState], duration: f64) -> Result<()>;
    /// Period of the base orbit when it is closed.
    fn period(&self) -> Option<f64>;
}

/// [`ChartFlow`] started at a fixed orbit state.
pub struct ChartLinearization<C> {
    pub flow: ChartFlow<C>,
    pub start: OrbitState,
    pub step: f64,
    pub period: Option<f64>,
}

impl<C: MetricChart> LinearizedFlow for ChartLinearization<C> {
    type Base = OrbitState;

    fn transverse_dim(&self) -> usize {
        self.flow.chart.dim() - 1
    }

    fn start(&self) -> OrbitState {
        self.start.clone()
    }

    fn advance(&self, base: &mut OrbitState, cols: &mut [JacobiState], duration: f64) -> Result<()> {
        let n = self.flow.chart.dim();
        let m = n - 1;
        let mut y = Vec::new();
        y.extend_from_slice(&base.pos);
        y.extend_from_slice(&base.vel);
        y.extend_from_slice(&base.frame);
        for c in cols.iter() {
            y.extend_from_slice(&c.xi);
            y.extend_from_slice(&c.eta);
        }
        self.flow.advance_raw(&mut y, cols.len(), duration, self.step)?;
        if let Some(r) = self.flow.chart.tube_radius() {
            if y[1..n].iter().any(|x| x.abs() >= r) {
                return Err(GeometryError::DomainExit(duration));
            }
        }
        base.pos.copy_from_slice(&y[..n]);
        base.vel.copy_from_slice(&y[n..2 * n]);
        base.frame.copy_from_slice(&y[2 * n..2 * n + m * n]);
        let jb = 2 * n + m * n;
        for (c, col) in cols.iter_mut().enumerate() {
            *col = JacobiState::from_slice(&y[jb + c * 2 * m..jb + (c + 1) * 2 * m]);
        }
        Ok(())
    }

    fn period(&self) -> Option<f64> {
        self.period
    }
}

/// Jacobi flow of a locally symmetric space: in a parallel frame the operator
/// `K_ab = R(e_a, v, v, e_b)` is constant, for every geodesic.
#[derive(Debug, Clone)]
pub struct SymmetricFlow {
    /// `K`, row-major `m × m`.
    pub operator: Vec<f64>,
    pub m: usize,
    pub step: f64,
    /// The operator is constant, so any window serves as a Floquet period.
    pub window: f64,
}

impl SymmetricFlow {
    /// Operator for unit `v` and an orthonormal frame `e_1..e_{n−1}` of `v^⊥`,
    /// all in the model's orthonormal basis.
    pub fn new(model: &KahlerModel, v: &[f64], frame: &[Vec<f64>], step: f64) -> Self {
        let m = frame.len();
        let r = model.tensor();
        let mut operator = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..m {
                operator[a * m + b] = r.eval(&frame[a], v, v, &frame[b]);
            }
        }
        Self { operator, m, step, window: 5.0 }
    }

    fn rhs(&self, z: &[f64], out: &mut [f64]) {
        let m = self.m;
        for a in 0..m {
            out[a] = z[m + a];
            out[m + a] = -(0..m).map(|b| self.operator[a * m + b] * z[b]).sum::<f64>();
        }
    }
}

impl LinearizedFlow for SymmetricFlow {
    type Base = f64;

    fn transverse_dim(&self) -> usize {
        self.m
    }

    fn start(&self) -> f64 {
        0.0
    }

    fn advance(&self, base: &mut f64, cols: &mut [JacobiState], duration: f64) -> Result<()> {
        let steps = (duration / self.step).round().max(1.0) as usize;
        let h = duration / steps as f64;
        let len = 2 * self.m;
        let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
            (vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]);
        for col in cols.iter_mut() {
            let mut z = col.as_vec();
            for _ in 0..steps {
                self.rhs(&z, &mut k1);
                (0..len).for_each(|i| tmp[i] = z[i] + 0.5 * h * k1[i]);
                self.rhs(&tmp, &mut k2);
                (0..len).for_each(|i| tmp[i] = z[i] + 0.5 * h * k2[i]);
                self.rhs(&tmp, &mut k3);
                (0..len).for_each(|i| tmp[i] = z[i] + h * k3[i]);
                self.rhs(&tmp, &mut k4);
                (0..len).for_each(|i| z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
            }
            *col = JacobiState::from_slice(&z);
        }
        *base += duration;
        Ok(())
    }

    fn period(&self) -> Option<f64> {
        Some(self.window)
    }
}

/// Fundamental matrix of a linearized flow over `duration` (columns are images
/// of the standard basis).
pub fn monodromy<F: LinearizedFlow>(flow: &F, duration: f64) -> Result<DMatrix<f64>> {
    let m = flow.transverse_dim();
    let mut cols = JacobiState::basis(m);
    let mut base = flow.start();
    flow.advance(&mut base, &mut cols, duration)?;
    Ok(DMatrix::from_fn(2 * m, 2 * m, |i, j| cols[j].as_vec()[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FermiChart;

    #[test]
    fn central_orbit_stays_on_axis() {
        let chart = FermiChart::from_spec(ModelSpec::default()).unwrap();
        let orbit = integrate_geodesic(&chart, &PhaseState::central(4, 0.3), &IntegrationOptions::new(1e-3, 2.0)).unwrap();
        for (t, s) in orbit.times.iter().zip(&orbit.states) {
            assert!((s.pos[0] - 0.3 - t).abs() < 1e-12);
            assert!(s.pos[1..].iter().all(|x| *x == 0.0));
            assert_eq!(s.frame, vec![0., 1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1.]);
        }
    }

    #[test]
    fn transversal_orbit_exits_with_time() {
        let chart = FermiChart::from_spec(ModelSpec::default()).unwrap();
        let state = PhaseState::new(vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.2]).normalized(&chart);
        let opts = IntegrationOptions::new(1e-3, 5.0).with_exit_radius(0.05);
        let orbit = integrate_geodesic(&chart, &state, &opts).unwrap();
        let t = orbit.exit_time.unwrap();
        let vs = state.vel[3];
        assert!((t - 0.05 / vs).abs() < 0.01 * t, "{t}");
    }

    #[test]
    fn closed_form_matches_initial_conditions_and_examples() {
        let spec = ModelSpec::default();
        let (j, dj) = central_jacobi_closed_form(&spec, 1, 1.0, 1.0, 1.0).unwrap();
        assert!((j - std::f64::consts::E).abs() < 1e-15 && (dj - std::f64::consts::E).abs() < 1e-15);
        assert_eq!(central_jacobi_closed_form(&spec, 3, 2.0, 0.5, 4.0).unwrap(), (4.0, 0.5));
        assert_eq!(central_jacobi_closed_form(&spec, 2, 1.0, 0.0, 0.0).unwrap(), (1.0, 0.0));
        assert!(central_jacobi_closed_form(&spec, 0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn zero_jacobi_field_stays_zero() {
        let chart = FermiChart::from_spec(ModelSpec::default()).unwrap();
        let orbit = integrate_geodesic(&chart, &PhaseState::central(4, 0.0), &IntegrationOptions::new(1e-2, 1.0)).unwrap();
        let paths = integrate_jacobi(&chart, &orbit, &[JacobiState::zeros(3)], 1.0).unwrap();
        assert!(paths[0].states.iter().all(|s| s.xi.iter().chain(&s.eta).all(|x| *x == 0.0)));
    }

    #[test]
    fn sasaki_basics() {
        let chart = FermiChart::from_spec(ModelSpec::default()).unwrap();
        let base = PhaseState::central(4, 0.0);
        let g = SasakiVector { base: base.clone(), horizontal: base.vel.clone(), vertical: vec![0.0; 4] };
        let other = SasakiVector { base: base.clone(), horizontal: vec![0.0, 1.0, 2.0, 0.0], vertical: vec![0.5, 0.0, 1.0, 3.0] };
        let p = sasaki_products(&chart, &g, &g).unwrap();
        assert_eq!(p.contact, 1.0);
        assert_eq!(sasaki_products(&chart, &other, &other).unwrap().symplectic, 0.0);
        let moved = SasakiVector { base: PhaseState::central(4, 1.0), ..other };
        assert!(sasaki_products(&chart, &g, &moved).is_err());
    }
}
