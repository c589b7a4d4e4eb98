use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use tubeflow::curvature_scan::{scan_sectional, PlaneSampler, ScanGrid};
use tubeflow::deformation::{deform_conformal, deform_g00, DeformationKind, DeformationProfile};
use tubeflow::flow::{integrate_geodesic, IntegrationOptions, PhaseState, SymmetricFlow};
use tubeflow::hyperbolicity::lyapunov_spectrum;
use tubeflow::model::{FermiChart, KahlerModel, ModelSpec};
use tubeflow::tensor::{curvature_at, MetricChart};

fn charts() -> (FermiChart, DeformationProfile, DeformationProfile) {
    let base = FermiChart::from_spec(ModelSpec::default()).unwrap();
    let a = DeformationProfile::new(DeformationKind::Conformal, 4, 3, 3, 0.05).unwrap();
    let b = DeformationProfile::new(DeformationKind::G00, 4, 3, 3, 0.05).unwrap();
    (base, a, b)
}

fn tensor(c: &mut Criterion) {
    let (base, a, _) = charts();
    let chart = deform_conformal(base.clone(), a).unwrap();
    let p = [0.3, 0.01, -0.02, 0.001];
    c.bench_function("jet/conformal", |b| b.iter(|| chart.jet(black_box(&p))));
    c.bench_function("curvature/fermi", |b| b.iter(|| curvature_at(&base, black_box(&p)).unwrap()));
    c.bench_function("curvature/conformal", |b| b.iter(|| curvature_at(&chart, black_box(&p)).unwrap()));
}

fn flow(c: &mut Criterion) {
    let (base, _, b) = charts();
    let chart = deform_g00(base, b).unwrap();
    let state = PhaseState::new(vec![0.0, 0.01, 0.0, 0.0], vec![1.0, 0.0, 0.0, 0.05]).normalized(&chart);
    let opts = IntegrationOptions::new(1e-3, 1.0);
    c.bench_function("geodesic/deformed 1000 steps", |bch| {
        bch.iter(|| integrate_geodesic(&chart, black_box(&state), &opts).unwrap())
    });
    let model = KahlerModel::new(ModelSpec::default()).unwrap();
    let v = [1.0, 0.0, 0.0, 0.0];
    let frame: Vec<Vec<f64>> = (1..4).map(|k| (0..4).map(|i| if i == k { 1.0 } else { 0.0 }).collect()).collect();
    let sym = SymmetricFlow::new(&model, &v, &frame, 1e-3);
    c.bench_function("lyapunov/symmetric horizon 20", |bch| {
        bch.iter(|| lyapunov_spectrum(&sym, "bench", 20.0, 0.5).unwrap())
    });
}

fn scan(c: &mut Criterion) {
    let (base, _, b) = charts();
    let chart = deform_g00(base, b).unwrap();
    let grid = ScanGrid { t_samples: 1, s_refine: 0, ..ScanGrid::for_tube(&ModelSpec::default(), 0.05).with_points(7) };
    let planes = PlaneSampler { random: 8, ..PlaneSampler::default() };
    let mut group = c.benchmark_group("scan");
    group.sample_size(10);
    group.bench_function("sectional 7^3 x 14 planes", |bch| {
        bch.iter(|| scan_sectional(&chart, &grid, &planes, 0.0).unwrap())
    });
    group.finish();
}

criterion_group!(benches, tensor, flow, scan);
criterion_main!(benches);
