//! Sectional curvature over the tube: the table along the central geodesic,
//! the profile `p(x) = f''(x) + x f'(x)`, grid scans with sampled planes and
//! the truncation band of the Fermi chart.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deformation::BumpFamily;
use crate::error::{GeometryError, Result};
use crate::model::ModelSpec;
use crate::sampling::{job_rng, unit_vector};
use crate::tensor::{sectional_at, MetricChart, PointGeometry};

fn basis(n: usize, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[k] = 1.0;
    e
}

/// `K̃(e_k, γ')(t, 0)` for `k = 1..n−1` at sampled `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralTable {
    pub times: Vec<f64>,
    /// `values[i][k−1]` at `times[i]`.
    pub values: Vec<Vec<f64>>,
    /// Largest spread over `t` of any column.
    pub t_variation: f64,
}

impl CentralTable {
    pub fn row(&self) -> &[f64] {
        &self.values[0]
    }

    pub fn max_deviation(&self, expected: &[f64]) -> f64 {
        self.values
            .iter()
            .flat_map(|row| row.iter().zip(expected).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

pub fn central_curvature_table<C: MetricChart + ?Sized>(chart: &C, period: f64, samples: usize) -> Result<CentralTable> {
    let n = chart.dim();
    let samples = samples.max(1);
    let e0 = basis(n, 0);
    let mut times = Vec::with_capacity(samples);
    let mut values = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = period * i as f64 / samples as f64;
        let mut p = vec![0.0; n];
        p[0] = t;
        let geo = PointGeometry::at(chart, &p)?;
        let r = geo.curvature();
        let row = (1..n)
            .map(|k| sectional_at(&r, &geo.jet, &basis(n, k), &e0))
            .collect::<Result<Vec<_>>>()?;
        times.push(t);
        values.push(row);
    }
    let t_variation = (0..n - 1)
        .map(|k| {
            let (lo, hi) = values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), row| (lo.min(row[k]), hi.max(row[k])));
            hi - lo
        })
        .fold(0.0, f64::max);
    Ok(CentralTable { times, values, t_variation })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PProfile {
    pub eps: f64,
    pub k: u32,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    /// `½ − 6k/ε⁴`
    pub p2_expected: f64,
    pub global_max: f64,
    pub argmax: f64,
    /// Critical points of `p` inside `(−ε², ε²)` found by bisection of `p'`.
    pub critical_points: Vec<f64>,
    /// `max |p|` over the support excluding a neighbourhood of 0 of one grid cell.
    pub max_abs_away_from_zero: f64,
    pub grid_points: usize,
}

pub fn p_profile(eps: f64, k: u32) -> Result<PProfile> {
    let fam = BumpFamily::new(k, eps)?;
    let e2 = eps * eps;
    let grid_points = 20_001;
    let xs: Vec<f64> = (0..grid_points)
        .map(|i| -e2 + 2.0 * e2 * i as f64 / (grid_points - 1) as f64)
        .collect();
    let dp: Vec<f64> = xs.iter().map(|&x| fam.p(1, x)).collect();
    let mut critical_points = Vec::new();
    for i in 0..grid_points - 1 {
        if dp[i] == 0.0 {
            critical_points.push(xs[i]);
        } else if dp[i] * dp[i + 1] < 0.0 {
            let (mut lo, mut hi) = (xs[i], xs[i + 1]);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if fam.p(1, lo) * fam.p(1, mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= f64::EPSILON * e2 {
                    break;
                }
            }
            critical_points.push(0.5 * (lo + hi));
        }
    }
    let mut global_max = f64::NEG_INFINITY;
    let mut argmax = 0.0;
    for &x in xs.iter().chain(&critical_points) {
        let v = fam.p(0, x);
        if v > global_max {
            global_max = v;
            argmax = x;
        }
    }
    let cell = 2.0 * e2 / (grid_points - 1) as f64;
    let max_abs_away_from_zero = xs
        .iter()
        .chain(&critical_points)
        .filter(|x| x.abs() > cell)
        .map(|&x| fam.p(0, x).abs())
        .fold(0.0, f64::max);
    Ok(PProfile {
        eps,
        k,
        p0: fam.p(0, 0.0),
        p1: fam.p(1, 0.0),
        p2: fam.p(2, 0.0),
        p2_expected: 0.5 - 6.0 * k as f64 / e2.powi(2),
        global_max,
        argmax,
        critical_points,
        max_abs_away_from_zero,
        grid_points,
    })
}

/// Orthonormal pair spanning `{X_s, X_0}`: `X_s/‖X_s‖` and `Y = α̃X_0 + β̃X_s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrthonormalPair {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    /// `g_ss / (g_00 g_ss − g_s0²)` without the square root.
    pub alpha_unrooted: f64,
    /// `|g(Y, Y) − 1|` if the unrooted factor were used.
    pub unrooted_defect: f64,
    /// Largest deviation of the Gram matrix of the pair from the identity.
    pub gram_defect: f64,
}

pub fn gram_schmidt_plane<C: MetricChart + ?Sized>(chart: &C, p: &[f64], xs: &[f64], x0: &[f64]) -> Result<OrthonormalPair> {
    let mut jet = crate::tensor::MetricJet::zeros(chart.dim());
    jet.g = chart.metric(p);
    let gss = jet.inner(xs, xs);
    let g00 = jet.inner(x0, x0);
    let gs0 = jet.inner(xs, x0);
    let d = g00 * gss - gs0 * gs0;
    if d <= crate::tensor::PLANE_TOLERANCE * g00 * gss || d <= 0.0 {
        return Err(GeometryError::DegeneratePlane { wedge_sq: d });
    }
    let alpha = (gss / d).sqrt();
    let beta = -alpha * gs0 / gss;
    let first: Vec<f64> = xs.iter().map(|v| v / gss.sqrt()).collect();
    let combine = |a: f64| -> Vec<f64> {
        let b = -a * gs0 / gss;
        x0.iter().zip(xs).map(|(u, v)| a * u + b * v).collect()
    };
    let second = combine(alpha);
    let alpha_unrooted = gss / d;
    let yu = combine(alpha_unrooted);
    let unrooted_defect = (jet.inner(&yu, &yu) - 1.0).abs();
    let gram_defect = [
        (jet.inner(&first, &first) - 1.0).abs(),
        (jet.inner(&second, &second) - 1.0).abs(),
        jet.inner(&first, &second).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok(OrthonormalPair {
        first,
        second,
        alpha,
        beta,
        alpha_unrooted,
        unrooted_defect,
        gram_defect,
    })
}

/// Tube grid: `points` per transverse axis on `[−half_width, half_width]`, plus
/// `s_refine` extra points on `[−ε², ε²]` along the flat direction `s`, times
/// `t_samples` values of `t` over one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanGrid {
    pub points: usize,
    pub t_samples: usize,
    pub half_width: f64,
    pub s_refine: usize,
    pub s_half_width: f64,
    pub period: f64,
    pub s: usize,
}

impl ScanGrid {
    /// Defaults for a tube of half-width `eps` around the central geodesic.
    pub fn for_tube(spec: &ModelSpec, eps: f64) -> Self {
        Self {
            points: 41,
            t_samples: 16,
            half_width: eps,
            s_refine: 21,
            s_half_width: eps * eps,
            period: spec.period,
            s: spec.s,
        }
    }

    pub fn with_points(mut self, points: usize) -> Self {
        self.points = points;
        self
    }

    pub fn cell(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    fn axis(&self) -> Vec<f64> {
        let w = self.half_width;
        (0..self.points)
            .map(|i| if 2 * i + 1 == self.points { 0.0 } else { -w + self.cell() * i as f64 })
            .collect()
    }

    fn s_axis(&self) -> Vec<f64> {
        let mut axis = self.axis();
        if self.s_refine > 1 {
            let w = self.s_half_width;
            axis.extend((0..self.s_refine).map(|i| -w + 2.0 * w * i as f64 / (self.s_refine - 1) as f64));
        }
        axis.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
        axis.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        axis
    }

    /// Transverse grid points `(x_1, …, x_{n−1})`.
    pub fn transverse_points(&self, n: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (1..n).map(|j| if j == self.s { self.s_axis() } else { self.axis() }).collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |&x| {
                        let mut p = prefix.clone();
                        p.push(x);
                        p
                    })
                })
                .collect();
        }
        out
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.t_samples.max(1))
            .map(|i| self.period * i as f64 / self.t_samples.max(1) as f64)
            .collect()
    }
}

/// Planes sampled at each grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneSampler {
    pub coordinate: bool,
    pub random: usize,
    pub seed: u64,
}

impl Default for PlaneSampler {
    fn default() -> Self {
        Self { coordinate: true, random: 32, seed: 0 }
    }
}

/// Plane identifier: coordinate plane `(i, j)` or random plane index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneId {
    Coordinate(usize, usize),
    Random(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureWitness {
    pub t: f64,
    pub x: Vec<f64>,
    pub plane: PlaneId,
    pub value: f64,
}

/// Extremes over `t` and planes at one transverse grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub x: Vec<f64>,
    /// Euclidean coordinate distance to the central geodesic.
    pub distance: f64,
    pub min_k: f64,
    pub max_k: f64,
    /// `K̃(X_s, X_0)`, maximum over `t`.
    pub central_plane: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub grid: ScanGrid,
    pub planes: PlaneSampler,
    pub points: Vec<PointRecord>,
    pub evaluations: usize,
    pub min_k: f64,
    pub max_k: f64,
    pub max_witness: Option<CurvatureWitness>,
    /// Largest sampled value at points off the central geodesic.
    pub max_off_axis: f64,
    pub max_off_axis_witness: Option<CurvatureWitness>,
    /// `max |K̃(X_s, X_0)|` on the central geodesic.
    pub central_plane_on_axis: f64,
    /// Half-width used for the near-zero classification.
    pub zero_band: f64,
    pub near_zero_count: usize,
    /// Near-zero values away from the central plane or farther than one cell from 0.
    pub near_zero_outside: usize,
    /// Of those, values on planes other than `span{X_s, X_0}`.
    pub near_zero_off_plane: usize,
    /// Largest distance to the axis, in grid cells (sup norm), of a near-zero value.
    pub near_zero_radius_cells: f64,
    pub near_zero_outside_witness: Option<CurvatureWitness>,
}

struct PointScan {
    record: PointRecord,
    max_witness: Option<CurvatureWitness>,
    central_on_axis: f64,
    near_zero: usize,
    near_zero_outside: usize,
    near_zero_off_plane: usize,
    near_zero_radius: f64,
    outside_witness: Option<CurvatureWitness>,
    evaluations: usize,
}

fn random_planes(n: usize, count: usize, seed: u64, id: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = job_rng(seed, id);
    (0..count).map(|_| (unit_vector(&mut rng, n), unit_vector(&mut rng, n))).collect()
}

/// Scan sampled sectional curvatures over the grid. `zero_band` classifies
/// `|K̃| ≤ zero_band` as near zero.
pub fn scan_sectional<C: MetricChart + ?Sized>(
    chart: &C,
    grid: &ScanGrid,
    planes: &PlaneSampler,
    zero_band: f64,
) -> Result<CurvatureReport> {
    let n = chart.dim();
    if let Some(radius) = chart.tube_radius() {
        if grid.half_width >= radius {
            return Err(GeometryError::TubeTooLarge {
                requested: grid.half_width,
                max_admissible: radius,
            });
        }
    }
    if grid.points < 2 || grid.points.is_multiple_of(2) {
        return Err(GeometryError::ContractViolation(format!(
            "grid needs an odd number of points ≥ 3, got {}",
            grid.points
        )));
    }
    let s = grid.s;
    let cell = grid.cell();
    let times = grid.times();
    let coordinate: Vec<(usize, usize)> = if planes.coordinate {
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    } else {
        Vec::new()
    };
    let transverse = grid.transverse_points(n);
    let scans: Vec<PointScan> = transverse
        .par_iter()
        .enumerate()
        .map(|(id, xt)| -> Result<PointScan> {
            let random = random_planes(n, planes.random, planes.seed, id as u64);
            let distance = xt.iter().map(|x| x * x).sum::<f64>().sqrt();
            let on_axis = distance == 0.0;
            let sup_norm = xt.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            let near_axis = sup_norm <= cell * (1.0 + 1e-9);
            let mut scan = PointScan {
                record: PointRecord {
                    x: xt.clone(),
                    distance,
                    min_k: f64::INFINITY,
                    max_k: f64::NEG_INFINITY,
                    central_plane: f64::NEG_INFINITY,
                },
                max_witness: None,
                central_on_axis: 0.0,
                near_zero: 0,
                near_zero_outside: 0,
                near_zero_off_plane: 0,
                near_zero_radius: 0.0,
                outside_witness: None,
                evaluations: 0,
            };
            for &t in &times {
                let mut p = Vec::with_capacity(n);
                p.push(t);
                p.extend_from_slice(xt);
                let geo = PointGeometry::at(chart, &p)?;
                let r = geo.curvature();
                let mut visit = |plane: PlaneId, x: &[f64], y: &[f64]| -> Result<()> {
                    let k = match sectional_at(&r, &geo.jet, x, y) {
                        Ok(k) => k,
                        Err(GeometryError::DegeneratePlane { .. }) if matches!(plane, PlaneId::Random(_)) => return Ok(()),
                        Err(e) => return Err(e),
                    };
                    if !k.is_finite() {
                        return Err(GeometryError::ContractViolation(format!("non-finite curvature at {p:?}")));
                    }
                    scan.evaluations += 1;
                    let rec = &mut scan.record;
                    rec.min_k = rec.min_k.min(k);
                    if k > rec.max_k {
                        rec.max_k = k;
                        scan.max_witness = Some(CurvatureWitness { t, x: xt.clone(), plane, value: k });
                    }
                    let central = plane == PlaneId::Coordinate(0, s);
                    if central {
                        rec.central_plane = rec.central_plane.max(k);
                        if on_axis {
                            scan.central_on_axis = scan.central_on_axis.max(k.abs());
                        }
                    }
                    if k.abs() <= zero_band {
                        scan.near_zero += 1;
                        scan.near_zero_radius = scan.near_zero_radius.max(sup_norm / cell);
                        if !central {
                            scan.near_zero_off_plane += 1;
                        }
                        if !(central && near_axis) {
                            scan.near_zero_outside += 1;
                            if scan.outside_witness.as_ref().is_none_or(|w| k > w.value) {
                                scan.outside_witness = Some(CurvatureWitness { t, x: xt.clone(), plane, value: k });
                            }
                        }
                    }
                    Ok(())
                };
                for &(i, j) in &coordinate {
                    visit(PlaneId::Coordinate(i, j), &basis(n, i), &basis(n, j))?;
                }
                for (idx, (x, y)) in random.iter().enumerate() {
                    visit(PlaneId::Random(idx), x, y)?;
                }
            }
            Ok(scan)
        })
        .collect::<Result<_>>()?;

    let mut report = CurvatureReport {
        grid: grid.clone(),
        planes: planes.clone(),
        points: Vec::with_capacity(scans.len()),
        evaluations: 0,
        min_k: f64::INFINITY,
        max_k: f64::NEG_INFINITY,
        max_witness: None,
        max_off_axis: f64::NEG_INFINITY,
        max_off_axis_witness: None,
        central_plane_on_axis: 0.0,
        zero_band,
        near_zero_count: 0,
        near_zero_outside: 0,
        near_zero_off_plane: 0,
        near_zero_radius_cells: 0.0,
        near_zero_outside_witness: None,
    };
    for scan in scans {
        report.evaluations += scan.evaluations;
        report.min_k = report.min_k.min(scan.record.min_k);
        if scan.record.max_k > report.max_k {
            report.max_k = scan.record.max_k;
            report.max_witness = scan.max_witness.clone();
        }
        if scan.record.distance > 0.0 && scan.record.max_k > report.max_off_axis {
            report.max_off_axis = scan.record.max_k;
            report.max_off_axis_witness = scan.max_witness.clone();
        }
        report.central_plane_on_axis = report.central_plane_on_axis.max(scan.central_on_axis);
        report.near_zero_count += scan.near_zero;
        report.near_zero_outside += scan.near_zero_outside;
        report.near_zero_off_plane += scan.near_zero_off_plane;
        report.near_zero_radius_cells = report.near_zero_radius_cells.max(scan.near_zero_radius);
        if report.near_zero_outside_witness.is_none() {
            report.near_zero_outside_witness = scan.outside_witness;
        }
        report.points.push(scan.record);
    }
    Ok(report)
}

/// Truncation band of a Fermi chart: the largest excursion of sampled sectional
/// curvatures outside `[k_min, k_max]` at two tube sizes, with `τ = C·ε³`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationFit {
    pub eps: [f64; 2],
    pub excursion: [f64; 2],
    /// Fitted exponent `p` in `excursion ∝ ε^p`.
    pub slope: f64,
    /// `C = excursion(ε)/ε³`
    pub constant: f64,
    pub tau: f64,
}

pub fn truncation_fit<C: MetricChart + ?Sized>(
    chart: &C,
    grid: &ScanGrid,
    planes: &PlaneSampler,
    pinching: (f64, f64),
) -> Result<TruncationFit> {
    let eps = grid.half_width;
    let excursion = |w: f64| -> Result<f64> {
        let g = ScanGrid {
            half_width: w,
            s_half_width: grid.s_half_width * w / eps,
            ..grid.clone()
        };
        let report = scan_sectional(chart, &g, planes, 0.0)?;
        Ok((pinching.0 - report.min_k).max(report.max_k - pinching.1).max(0.0))
    };
    let e1 = excursion(eps)?;
    let e2 = excursion(0.5 * eps)?;
    let slope = if e1 > 0.0 && e2 > 0.0 { (e1 / e2).ln() / 2f64.ln() } else { f64::NAN };
    let constant = e1 / eps.powi(3);
    Ok(TruncationFit {
        eps: [eps, 0.5 * eps],
        excursion: [e1, e2],
        slope,
        constant,
        tau: constant * eps.powi(3),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformation::{deform_g00, DeformationKind, DeformationProfile};
    use crate::model::FermiChart;
    use crate::tensor::EuclideanChart;

    #[test]
    fn p_profile_fixed_points() {
        let p = p_profile(0.05, 2).unwrap();
        assert_eq!(p.p0, 0.25);
        assert_eq!(p.p1, 0.0);
        assert!((p.p2 - (-12.0 / 0.05f64.powi(4) + 0.5)).abs() <= 1e-9 * p.p2.abs());
        assert_eq!(p.argmax, 0.0);
        assert_eq!(p.global_max, 0.25);
        // the minimum of p dips below −¼ for k₀ = 2
        assert!(p.max_abs_away_from_zero > 0.25);
        assert!(p_profile(0.05, 3).unwrap().max_abs_away_from_zero < 0.25);
    }

    #[test]
    fn gram_schmidt_identity_and_degenerate() {
        let chart = EuclideanChart::new(3);
        let pair = gram_schmidt_plane(&chart, &[0.0; 3], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!((pair.alpha, pair.beta), (1.0, 0.0));
        assert_eq!(pair.second, vec![1.0, 0.0, 0.0]);
        assert!(gram_schmidt_plane(&chart, &[0.0; 3], &[1.0, 0.0, 0.0], &[2.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn gram_schmidt_off_axis_is_orthonormal() {
        let spec = ModelSpec::default();
        let base = FermiChart::from_spec(spec).unwrap();
        let chart = deform_g00(base, DeformationProfile::new(DeformationKind::G00, 4, 3, 3, 0.05).unwrap()).unwrap();
        let mut rng = job_rng(3, 0);
        use rand::Rng;
        for _ in 0..50 {
            let p: Vec<f64> = (0..4).map(|i| if i == 3 { rng.random_range(-0.002..0.002) } else { rng.random_range(-0.04..0.04) }).collect();
            let pair = gram_schmidt_plane(&chart, &p, &basis(4, 3), &basis(4, 0)).unwrap();
            assert!(pair.gram_defect < 1e-12, "{}", pair.gram_defect);
        }
    }

    #[test]
    fn grid_contains_axis_and_refined_s_points() {
        let grid = ScanGrid::for_tube(&ModelSpec::default(), 0.05).with_points(5);
        let pts = grid.transverse_points(4);
        assert!(pts.iter().any(|p| p.iter().all(|x| *x == 0.0)));
        let s_values: std::collections::BTreeSet<u64> = pts.iter().map(|p| p[2].to_bits()).collect();
        assert_eq!(s_values.len(), 5 + 21 - 1);
    }
}
