//! Seeded random instances: states, Hermitian matrices, unitaries,
//! contractions.
//!
//! States are `G G† / tr(G G†)` with complex Gaussian `G`. Unitaries come from
//! the QR decomposition of a Gaussian matrix with the phases of `diag(R)`
//! divided out. Contractions clip singular values at one.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::modular::DensityMatrix;
use crate::numkit::{c, real, CMatrix, CVector, HermitianMatrix, C64};

pub type TrialRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for `(master seed, tag, trial index)`.
pub fn stream(seed: u64, tag: u64, trial: u64) -> TrialRng {
    let mut h = splitmix(seed ^ 0x6d6f_6465_6e74);
    h = splitmix(h ^ tag);
    h = splitmix(h ^ trial);
    ChaCha8Rng::seed_from_u64(h)
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit tag for a property name.
pub fn tag(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325_u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c(normal(rng), normal(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn uniform<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    rng.random_range(lo..hi)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    DMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    CVector::from_fn(n, |_, _| complex_normal(rng))
}

pub fn unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    let v = gaussian_vector(n, rng);
    let norm = v.norm();
    v / real(norm)
}

/// GUE-like Hermitian matrix with entries of unit scale.
pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianMatrix {
    HermitianMatrix::symmetrized(gaussian_matrix(n, n, rng))
}

/// Hermitian matrix rescaled to spectral norm `scale`.
pub fn hermitian_with_norm<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> HermitianMatrix {
    let h = hermitian(n, rng);
    let norm = h.eig().map(|e| e.max_abs()).unwrap_or(1.0);
    if norm == 0.0 {
        h
    } else {
        h.scale(scale / norm)
    }
}

/// Diagonal Hermitian matrix with Gaussian entries.
pub fn diagonal_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianMatrix {
    let d: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
    HermitianMatrix::from_real_diagonal(&d)
}

/// Positive semidefinite `G G†` with `G` of size `n × rank`.
pub fn psd<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> HermitianMatrix {
    let g = gaussian_matrix(n, rank, rng);
    HermitianMatrix::symmetrized(&g * g.adjoint())
}

/// Full-rank random density matrix.
pub fn density<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DensityMatrix {
    density_with_rank(n, n, rng)
}

pub fn density_with_rank<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let p = psd(n, rank, rng);
    let t = p.trace();
    DensityMatrix::new(p.scale(1.0 / t).into_matrix()).expect("normalized PSD matrix is a density")
}

/// Random density diagonal in the computational basis.
pub fn diagonal_density<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DensityMatrix {
    let w: Vec<f64> = (0..n).map(|_| uniform(0.05, 1.0, rng)).collect();
    let s: f64 = w.iter().sum();
    let p: Vec<f64> = w.iter().map(|x| x / s).collect();
    DensityMatrix::new(HermitianMatrix::from_real_diagonal(&p).into_matrix()).unwrap()
}

/// Random probability vector with strictly positive entries.
pub fn probability<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| uniform(0.01, 1.0, rng)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

pub fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = gaussian_matrix(n, n, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / real(d.norm()) } else { real(1.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Isometry `C^cols → C^rows` (`rows >= cols`): first columns of a unitary.
pub fn isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    unitary(rows, rng).columns(0, cols).into_owned()
}

/// Random matrix with singular values clipped at one.
pub fn contraction<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = gaussian_matrix(n, n, rng);
    let svd = g.svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let s = CMatrix::from_fn(n, n, |i, j| if i == j { real(svd.singular_values[i].min(1.0)) } else { real(0.0) });
    u * s * vt
}
