//! Seeded random inputs.
//!
//! The generator is xoshiro256++ seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`). A uniform double is
//! `(next_u64 >> 11)·2⁻⁵³`, mapped affinely onto `[lo, hi)`. Complex draws take
//! the real part first, then the imaginary part. Any implementation following
//! these rules reproduces the same inputs for the same seed.

use rand::{Rng as _, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::tensor::{c64, C64, ComplexTensor};

pub type Rng = Xoshiro256PlusPlus;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Independent stream for sub-task `index` of a run seeded with `seed`.
pub fn derived(seed: u64, index: u64) -> Rng {
    seeded(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.gen();
    lo + (hi - lo) * u
}

/// Real and imaginary parts each uniform on `[lo, hi)`.
pub fn complex_uniform(rng: &mut Rng, lo: f64, hi: f64) -> C64 {
    let re = uniform(rng, lo, hi);
    let im = uniform(rng, lo, hi);
    c64(re, im)
}

pub fn complex_vec(rng: &mut Rng, n: usize) -> Vec<C64> {
    (0..n).map(|_| complex_uniform(rng, -1.0, 1.0)).collect()
}

pub fn real_vec(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| uniform(rng, -1.0, 1.0)).collect()
}

pub fn complex_vector(rng: &mut Rng, n: usize) -> ComplexTensor {
    ComplexTensor::vector(complex_vec(rng, n))
}

pub fn real_vector(rng: &mut Rng, n: usize) -> ComplexTensor {
    ComplexTensor::real_vector(real_vec(rng, n))
}

pub fn complex_scalar(rng: &mut Rng) -> ComplexTensor {
    ComplexTensor::scalar(complex_uniform(rng, -1.0, 1.0))
}

pub fn complex_matrix(rng: &mut Rng, rows: usize, cols: usize) -> ComplexTensor {
    ComplexTensor::matrix(rows, cols, complex_vec(rng, rows * cols)).expect("extents match data length")
}

pub fn real_matrix(rng: &mut Rng, rows: usize, cols: usize) -> ComplexTensor {
    ComplexTensor::real(vec![rows, cols], real_vec(rng, rows * cols)).expect("extents match data length")
}

/// `(M + M†)/2` for a random complex `M`.
pub fn hermitian(rng: &mut Rng, n: usize) -> ComplexTensor {
    let m = complex_matrix(rng, n, n);
    m.add(&m.dagger()).expect("square").scale(c64(0.5, 0.0))
}

/// `(M + Mᵀ)/2` for a random real `M`, tagged real.
pub fn real_symmetric(rng: &mut Rng, n: usize) -> ComplexTensor {
    let m = real_matrix(rng, n, n);
    m.add(&m.transpose()).expect("square").map(|z| z * 0.5)
}

/// Fisher–Yates shuffle of `0..n`, swap index `⌊u·(i+1)⌋` for `i = n−1, …, 1`.
pub fn permutation(rng: &mut Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = ((uniform(rng, 0.0, 1.0) * (i + 1) as f64) as usize).min(i);
        p.swap(i, j);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<C64> = complex_vec(&mut seeded(7), 5);
        let b: Vec<C64> = complex_vec(&mut seeded(7), 5);
        assert_eq!(a, b);
        assert_ne!(a, complex_vec(&mut seeded(8), 5));
    }

    #[test]
    fn uniform_stays_in_range() {
        let mut rng = seeded(1);
        for _ in 0..1000 {
            let x = uniform(&mut rng, -2.0, 3.0);
            assert!((-2.0..3.0).contains(&x));
        }
    }

    #[test]
    fn permutation_is_bijection() {
        let mut rng = seeded(3);
        for n in 0..20 {
            let mut p = permutation(&mut rng, n);
            p.sort_unstable();
            assert_eq!(p, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn hermitian_is_self_adjoint() {
        let h = hermitian(&mut seeded(4), 5);
        assert_eq!(h.rel_err(&h.dagger()).unwrap(), 0.0);
        assert!(real_symmetric(&mut seeded(4), 3).is_real());
    }
}
