//! Small dense complex matrices for the qubit and qubit ⊗ ancilla spaces.
//!
//! Everything here works on square `nalgebra` matrices of dimension 2, 4 or 8.
//! Tensor products are ordered ancilla ⊗ qubit, so a basis index on the joint
//! space is `ancilla * 2 + qubit`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;

pub const QUBIT_DIM: usize = 2;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Largest entry modulus.
pub fn max_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn unitarity_residual(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

/// `‖P² − P‖` for a candidate projector.
pub fn idempotence_residual(p: &CMatrix) -> f64 {
    max_abs_diff(&(p * p), p)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Traces out the first (ancilla) factor of an operator on `ancilla ⊗ qubit`.
pub fn partial_trace_ancilla(m: &CMatrix, ancilla_dim: usize) -> CMatrix {
    let q = QUBIT_DIM;
    assert_eq!(m.nrows(), ancilla_dim * q);
    assert_eq!(m.ncols(), ancilla_dim * q);
    CMatrix::from_fn(q, q, |i, j| {
        (0..ancilla_dim).map(|a| m[(a * q + i, a * q + j)]).sum()
    })
}

/// `Tr_A[(ρ_A ⊗ I) P]`: the qubit operator a joint-space operator induces for
/// a given ancilla state.
pub fn reduce_with_ancilla(ancilla_state: &CMatrix, p: &CMatrix) -> CMatrix {
    let n = ancilla_state.nrows();
    let lifted = kron(ancilla_state, &identity(QUBIT_DIM));
    partial_trace_ancilla(&(lifted * p), n)
}

/// Projector `|i⟩⟨i|` on an `n`-dimensional space.
pub fn basis_projector(n: usize, i: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(i, i)] = c(1.0, 0.0);
    m
}

/// Outer product `|ψ⟩⟨ψ|` of a column vector.
pub fn outer(psi: &[Complex64]) -> CMatrix {
    let n = psi.len();
    CMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj())
}

fn gaussian_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-ish random unitary by Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = gaussian_matrix(dim, rng);
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut v: Vec<Complex64> = g.column(j).iter().copied().collect();
        // two passes keep the columns orthonormal to ~1e-16
        for _ in 0..2 {
            for u in &cols {
                let proj: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for vi in &mut v {
            *vi /= norm;
        }
        cols.push(v);
    }
    CMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}

/// Random mixed density matrix `G G† / Tr(G G†)`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = gaussian_matrix(dim, rng);
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    rho / tr
}

/// Random orthogonal projector of the given rank.
pub fn random_projector<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> CMatrix {
    let u = random_unitary(dim, rng);
    let mut p = CMatrix::zeros(dim, dim);
    for k in 0..rank.min(dim) {
        let col: Vec<Complex64> = u.column(k).iter().copied().collect();
        p += outer(&col);
    }
    p
}
