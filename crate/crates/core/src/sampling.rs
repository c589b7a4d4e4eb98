//! Deterministic random sampling helpers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Independent stream for job `id` derived from a master seed.
pub fn job_rng(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Uniform point on the unit sphere of `R^n`.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let len = norm(&v);
        if len > 1e-8 {
            return v.into_iter().map(|x| x / len).collect();
        }
    }
}

/// Remove the components along the orthonormal vectors `against` and normalize.
/// Returns `None` when the remainder is too small.
pub fn orthonormalize(mut v: Vec<f64>, against: &[Vec<f64>]) -> Option<Vec<f64>> {
    for b in against {
        let c = dot(&v, b);
        v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
    }
    let len = norm(&v);
    (len > 1e-8).then(|| v.into_iter().map(|x| x / len).collect())
}

/// Haar-random orthonormal basis of the complement of the orthonormal set `fixed`.
pub fn random_complement<R: Rng + ?Sized>(rng: &mut R, n: usize, fixed: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut all: Vec<Vec<f64>> = fixed.to_vec();
    let mut out = Vec::new();
    while all.len() < n {
        if let Some(v) = orthonormalize(unit_vector(rng, n), &all) {
            all.push(v.clone());
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_is_orthonormal() {
        let mut rng = job_rng(1, 2);
        let v = unit_vector(&mut rng, 5);
        let rest = random_complement(&mut rng, 5, std::slice::from_ref(&v));
        assert_eq!(rest.len(), 4);
        for (i, a) in rest.iter().enumerate() {
            assert!(dot(a, &v).abs() < 1e-14);
            for (j, b) in rest.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot(a, b) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: f64 = job_rng(9, 1).random();
        let b: f64 = job_rng(9, 1).random();
        let c: f64 = job_rng(9, 2).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
