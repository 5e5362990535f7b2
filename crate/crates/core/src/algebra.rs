//! Unital *-subalgebras of `Mat(n)` given by a Hilbert–Schmidt orthonormal
//! basis of their span.

use rand::Rng;

use crate::error::{Error, Result};
use crate::modular::DensityMatrix;
use crate::numkit::{
    frobenius, hs_inner, identity, range_projection, real, tol, unvec, vec, CMatrix, CVector,
    HermitianMatrix,
};
use crate::random;

/// Norm below which a Gram–Schmidt residual is treated as dependent.
const DROP_TOL: f64 = 1e-10;
/// Largest principal angle accepted as "same subspace".
pub const ANGLE_TOL: f64 = 1e-8;
/// Singular values below this (relative to the largest) span a null space.
const NULL_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct StarAlgebra {
    n: usize,
    basis: Vec<CMatrix>,
}

impl StarAlgebra {
    /// Orthonormalizes `mats` and checks the algebra invariants.
    pub fn from_spanning_set(n: usize, mats: &[CMatrix]) -> Result<Self> {
        for m in mats {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: m.nrows() });
            }
        }
        let alg = Self { n, basis: Self::orthonormal_span(mats) };
        alg.validate()?;
        Ok(alg)
    }

    pub fn full(n: usize) -> Self {
        let mut basis = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let mut e = CMatrix::zeros(n, n);
                e[(i, j)] = real(1.0);
                basis.push(e);
            }
        }
        Self { n, basis }
    }

    pub fn scalars(n: usize) -> Self {
        Self { n, basis: vec![identity(n) / real((n as f64).sqrt())] }
    }

    pub fn diagonal(n: usize) -> Self {
        let basis = (0..n)
            .map(|i| {
                let mut e = CMatrix::zeros(n, n);
                e[(i, i)] = real(1.0);
                e
            })
            .collect();
        Self { n, basis }
    }

    /// `Mat(b₁) ⊕ Mat(b₂) ⊕ …` along the diagonal.
    pub fn block_diagonal(blocks: &[usize]) -> Self {
        let n: usize = blocks.iter().sum();
        let mut basis = Vec::new();
        let mut offset = 0;
        for &b in blocks {
            for j in 0..b {
                for i in 0..b {
                    let mut e = CMatrix::zeros(n, n);
                    e[(offset + i, offset + j)] = real(1.0);
                    basis.push(e);
                }
            }
            offset += b;
        }
        Self { n, basis }
    }

    /// `M ⊗ I_m` on `Cⁿ ⊗ Cᵐ`.
    pub fn tensor_identity(&self, m: usize) -> Self {
        let scale = real(1.0 / (m as f64).sqrt());
        let basis = self.basis.iter().map(|b| b.kronecker(&identity(m)) * scale).collect();
        Self { n: self.n * m, basis }
    }

    /// `M ⊗ N` on `Cⁿ ⊗ Cᵐ`.
    pub fn tensor(&self, other: &StarAlgebra) -> Self {
        let mut basis = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.basis {
            for b in &other.basis {
                basis.push(a.kronecker(b));
            }
        }
        Self { n: self.n * other.n, basis }
    }

    /// `U M U†` for a unitary `U`.
    pub fn conjugate(&self, u: &CMatrix) -> Self {
        let basis = self.basis.iter().map(|b| u * b * u.adjoint()).collect();
        Self { n: self.n, basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.n * self.n
    }

    /// Orthogonal projection onto the span in the HS inner product.
    pub fn project(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.n, self.n);
        for b in &self.basis {
            out += b * hs_inner(b, x);
        }
        out
    }

    /// `‖X − E(X)‖_F / (1 + ‖X‖_F)`.
    pub fn membership_residual(&self, x: &CMatrix) -> f64 {
        frobenius(&(x - self.project(x))) / (1.0 + frobenius(x))
    }

    pub fn contains(&self, x: &CMatrix) -> bool {
        self.membership_residual(x) <= 1e-10
    }

    /// Checks unit, adjoint closure and product closure.
    pub fn validate(&self) -> Result<()> {
        let unit = self.membership_residual(&identity(self.n));
        if unit > 1e-10 {
            return Err(Error::Internal(format!("identity not in algebra (residual {unit:.2e})")));
        }
        for (i, a) in self.basis.iter().enumerate() {
            let r = self.membership_residual(&a.adjoint());
            if r > 1e-10 {
                return Err(Error::Internal(format!("span not closed under adjoint (residual {r:.2e})")));
            }
            for b in &self.basis[i..] {
                for p in [a * b, b * a] {
                    let r = self.membership_residual(&p);
                    if r > 1e-10 {
                        return Err(Error::Internal(format!("span not closed under products (residual {r:.2e})")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Columns `vec(B_i)`, an isometry `C^{dim} → C^{n²}`.
    pub fn flat_basis(&self) -> CMatrix {
        let n2 = self.n * self.n;
        CMatrix::from_fn(n2, self.dim(), |r, k| self.basis[k].as_slice()[r])
    }

    pub fn is_subalgebra_of(&self, other: &StarAlgebra) -> bool {
        self.basis.iter().all(|b| other.contains(b))
    }

    /// HS-orthonormal basis of `span(mats)` by Gram–Schmidt with one
    /// re-orthogonalization pass.
    pub fn orthonormal_span(mats: &[CMatrix]) -> Vec<CMatrix> {
        let mut basis: Vec<CMatrix> = Vec::new();
        for m in mats {
            extend_orthonormal(&mut basis, m);
        }
        basis
    }

    pub fn span_dimension(mats: &[CMatrix]) -> usize {
        Self::orthonormal_span(mats).len()
    }
}

/// Adds the normalized component of `x` orthogonal to `basis`; returns
/// whether it was added.
fn extend_orthonormal(basis: &mut Vec<CMatrix>, x: &CMatrix) -> bool {
    let mut r = x.clone();
    for _ in 0..2 {
        for b in basis.iter() {
            let coeff = hs_inner(b, &r);
            r -= b * coeff;
        }
    }
    let norm = frobenius(&r);
    if norm < DROP_TOL {
        return false;
    }
    basis.push(r / real(norm));
    true
}

/// Smallest unital *-algebra containing `generators`.
pub fn generate_star_algebra(generators: &[CMatrix], n: usize) -> Result<StarAlgebra> {
    for g in generators {
        if g.nrows() != n || g.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: g.nrows() });
        }
    }
    let mut basis: Vec<CMatrix> = Vec::new();
    extend_orthonormal(&mut basis, &identity(n));
    for g in generators {
        let norm = frobenius(g);
        if norm > 0.0 {
            let g = g / real(norm);
            extend_orthonormal(&mut basis, &g);
            extend_orthonormal(&mut basis, &g.adjoint());
        }
    }
    let cap = 2 * n * n;
    let mut checked = 0;
    for _ in 0..cap {
        let before = basis.len();
        let snapshot = basis.clone();
        for (i, a) in snapshot.iter().enumerate() {
            extend_orthonormal(&mut basis, &a.adjoint());
            // Products not involving a new element were already tried.
            for (j, b) in snapshot.iter().enumerate() {
                if i < checked && j < checked {
                    continue;
                }
                extend_orthonormal(&mut basis, &(a * b));
            }
        }
        checked = before;
        if basis.len() == before {
            break;
        }
    }
    Ok(StarAlgebra { n, basis })
}

/// `{X : X B = B X for all B ∈ mats}`, the common null space of the
/// commutator maps. Each map is restricted to the null space left by the
/// previous ones, so every SVD is at most `n² × n²`.
pub fn commutant_of(mats: &[CMatrix], n: usize) -> StarAlgebra {
    if mats.is_empty() {
        return StarAlgebra::full(n);
    }
    let n2 = n * n;
    // ‖ad_B‖ ≤ 2‖B‖, so this bounds the largest singular value of every map.
    let scale = mats.iter().map(|b| 2.0 * frobenius(b)).fold(1.0, f64::max);
    let cut = NULL_TOL * scale;
    let mut kernel = identity(n2);
    for b in mats {
        if kernel.ncols() == 0 {
            break;
        }
        let image = CMatrix::from_columns(
            &kernel
                .column_iter()
                .map(|col| {
                    let x = unvec(&col.into_owned(), n);
                    vec(&(b * &x - &x * b))
                })
                .collect::<Vec<_>>(),
        );
        let null = null_space(&image, cut);
        kernel = if null.is_empty() { CMatrix::zeros(n2, 0) } else { &kernel * CMatrix::from_columns(&null) };
    }
    let basis = kernel.column_iter().map(|v| unvec(&v.into_owned(), n)).collect::<Vec<_>>();
    // Null vectors are orthonormal already; one more pass tidies roundoff.
    StarAlgebra { n, basis: StarAlgebra::orthonormal_span(&basis) }
}

/// Orthonormal basis of the null space of `a`: right singular vectors with
/// singular value at most `cut`.
fn null_space(a: &CMatrix, cut: f64) -> Vec<CVector> {
    let cols = a.ncols();
    // Wide inputs are zero-padded so the SVD returns a full set of right
    // singular vectors.
    let a = if a.nrows() < cols {
        let mut padded = CMatrix::zeros(cols, cols);
        padded.view_mut((0, 0), (a.nrows(), cols)).copy_from(a);
        padded
    } else {
        a.clone()
    };
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    (0..cols)
        .filter(|&k| svd.singular_values[k] <= cut)
        .map(|k| v_t.row(k).adjoint())
        .collect()
}

pub fn commutant(m: &StarAlgebra) -> StarAlgebra {
    commutant_of(&m.basis, m.n)
}

/// Sine of the largest principal angle between the spans of two algebras
/// (`π/2` if the dimensions differ).
pub fn subspace_angle(a: &StarAlgebra, b: &StarAlgebra) -> f64 {
    if a.dim() != b.dim() {
        return std::f64::consts::FRAC_PI_2;
    }
    let qa = a.flat_basis();
    let qb = b.flat_basis();
    let residual = &qb - &qa * (qa.adjoint() * &qb);
    let sine = crate::numkit::op_norm(&residual).min(1.0);
    sine.asin()
}

/// `max_k ‖(I − P_big) b_k‖` over the basis of `small`: zero iff
/// `span(small) ⊆ span(big)`.
pub fn containment_residual(small: &StarAlgebra, big: &StarAlgebra) -> f64 {
    small.basis.iter().map(|b| frobenius(&(b - big.project(b)))).fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct BicommutantReport {
    pub dim_m: usize,
    pub dim_mcc: usize,
    pub subspace_angle: f64,
    pub pass: bool,
}

pub fn bicommutant_check(m: &StarAlgebra) -> BicommutantReport {
    let mcc = commutant(&commutant(m));
    let angle = subspace_angle(m, &mcc);
    BicommutantReport {
        dim_m: m.dim(),
        dim_mcc: mcc.dim(),
        subspace_angle: angle,
        pass: m.dim() == mcc.dim() && angle <= ANGLE_TOL,
    }
}

/// HS-orthogonal projection onto `M`: the trace-preserving conditional
/// expectation.
pub fn conditional_expectation(m: &StarAlgebra, x: &CMatrix) -> CMatrix {
    m.project(x)
}

#[derive(Debug, Clone)]
pub struct SupportReport {
    pub projection: CMatrix,
    /// `φ(P)` for `φ = tr(ρ ·)`.
    pub value_on_support: f64,
    /// No strictly smaller spectral projection of `E(ρ)` carries all of `φ`.
    pub minimal: bool,
}

/// Support of `tr(ρ ·)` restricted to `M`: the range projection of `E_M(ρ)`.
pub fn support_projection_in(m: &StarAlgebra, rho: &DensityMatrix) -> Result<SupportReport> {
    if rho.dim() != m.n {
        return Err(Error::DimensionMismatch { expected: m.n, actual: rho.dim() });
    }
    let e_rho = HermitianMatrix::symmetrized(conditional_expectation(m, rho.matrix()));
    let projection = range_projection(&e_rho)?;
    let value_on_support = rho.expectation(&projection).re;
    let total = rho.trace();

    // Dropping any eigenspace of E(ρ) inside the support must lose weight.
    let eig = e_rho.eig()?;
    let cut = eig.rank_cut();
    let mut levels: Vec<f64> = Vec::new();
    for &l in &eig.eigenvalues {
        if l > cut && levels.iter().all(|&x| (x - l).abs() > 1e-9 * eig.max_abs()) {
            levels.push(l);
        }
    }
    let mut minimal = true;
    for &drop in &levels {
        let smaller = eig.apply_real(|l| if l > cut && (l - drop).abs() > 1e-9 * eig.max_abs() { 1.0 } else { 0.0 })?;
        if total - rho.expectation(&smaller).re <= tol::HERM * (1.0 + total.abs()) {
            minimal = false;
        }
    }
    Ok(SupportReport { projection, value_on_support, minimal })
}

/// `Z(M) = M ∩ M′`, computed as the commutant of `M ∪ M′`.
pub fn center(m: &StarAlgebra) -> StarAlgebra {
    let mc = commutant(m);
    let mut all = m.basis.clone();
    all.extend(mc.basis);
    commutant_of(&all, m.n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CyclicReport {
    pub cyclic: bool,
    pub separating: bool,
}

/// Numerical rank of `{B_i ξ}` at the rank tolerance.
fn orbit_rank(m: &StarAlgebra, xi: &CVector) -> usize {
    let cols: Vec<CVector> = m.basis.iter().map(|b| b * xi).collect();
    let a = CMatrix::from_columns(&cols);
    let s = a.svd(false, false).singular_values;
    let smax = s.iter().fold(0.0_f64, |x, &y| x.max(y));
    s.iter().filter(|&&v| v > tol::RANK * smax).count()
}

pub fn cyclic_separating_report(m: &StarAlgebra, xi: &CVector) -> Result<CyclicReport> {
    if xi.len() != m.n {
        return Err(Error::DimensionMismatch { expected: m.n, actual: xi.len() });
    }
    if xi.norm() == 0.0 {
        return Err(Error::InvalidParameter("zero vector".into()));
    }
    Ok(CyclicReport {
        cyclic: orbit_rank(m, xi) == m.n,
        separating: orbit_rank(&commutant(m), xi) == m.n,
    })
}

/// Random partition of `n` into blocks `(size, multiplicity)`.
fn random_blocks<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let mut blocks = Vec::new();
    let mut left = n;
    while left > 0 {
        let b = rng.random_range(1..=left);
        let max_m = left / b;
        let m = rng.random_range(1..=max_m);
        blocks.push((b, m));
        left -= b * m;
    }
    blocks
}

/// Random algebra `U (⊕ Mat(b_k) ⊗ I_{m_k}) U†` together with the two
/// generators it was built from.
pub fn random_algebra<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (Vec<CMatrix>, StarAlgebra) {
    let blocks = random_blocks(n, rng);
    let u = random::unitary(n, rng);
    let mut gens = Vec::new();
    for _ in 0..2 {
        let mut g = CMatrix::zeros(n, n);
        let mut offset = 0;
        for &(b, m) in &blocks {
            let a = random::gaussian_matrix(b, b, rng).kronecker(&identity(m));
            g.view_mut((offset, offset), (b * m, b * m)).copy_from(&a);
            offset += b * m;
        }
        gens.push(&u * g * u.adjoint());
    }
    let alg = generate_star_algebra(&gens, n).expect("generators have the ambient dimension");
    (gens, alg)
}

/// `⊕ Mat(b_k) ⊗ I_{m_k}` in the computational basis.
pub fn block_algebra(blocks: &[(usize, usize)]) -> StarAlgebra {
    let n: usize = blocks.iter().map(|&(b, m)| b * m).sum();
    let mut mats = Vec::new();
    let mut offset = 0;
    for &(b, m) in blocks {
        for j in 0..b {
            for i in 0..b {
                let mut e = CMatrix::zeros(b, b);
                e[(i, j)] = real(1.0);
                let a = e.kronecker(&identity(m));
                let mut full = CMatrix::zeros(n, n);
                full.view_mut((offset, offset), (b * m, b * m)).copy_from(&a);
                mats.push(full / real((m as f64).sqrt()));
            }
        }
        offset += b * m;
    }
    StarAlgebra { n, basis: mats }
}

impl PartialEq for StarAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.dim() == other.dim() && subspace_angle(self, other) <= ANGLE_TOL
    }
}
