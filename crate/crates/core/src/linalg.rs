//! Dense complex matrices and the handful of decompositions the protocol
//! needs.
//!
//! Everything here is row-major and allocation-light. The largest matrices
//! touched by the simulator are 64x64 (three spin-3/2 particles) apart from
//! the extraction register, which is 32x32 while a reference pair is
//! attached.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math;

pub type C64 = Complex64;

/// Tolerance for exact identities (hermiticity, unit trace).
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for decomposition residuals.
pub const DECOMP_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// `|v><v|`
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Side length; only meaningful for square matrices.
    pub fn dim(&self) -> usize {
        self.rows
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare { rows: self.rows, cols: self.cols })
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, c: C64) -> Self {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * c).collect() }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `tr(A B)` without forming the product.
    pub fn trace_product(&self, other: &CMatrix) -> C64 {
        debug_assert_eq!(self.cols, other.rows);
        debug_assert_eq!(self.rows, other.cols);
        let mut acc = ZERO;
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    /// Real part of `tr(A ρ)`, i.e. an expectation value for Hermitian `A`.
    pub fn expectation(&self, rho: &CMatrix) -> f64 {
        self.trace_product(rho).re
    }

    pub fn commutator(&self, other: &CMatrix) -> CMatrix {
        &(self * other) - &(other * self)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Max-entry distance of `M` from `M†`.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    /// Max-entry distance of `U U†` from the identity.
    pub fn unitary_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (self * &self.adjoint()).max_abs_diff(&Self::identity(self.rows))
    }

    /// `(M + M†) / 2`
    pub fn hermitian_part(&self) -> CMatrix {
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// `U M U†`
    pub fn conjugate_by(&self, u: &CMatrix) -> CMatrix {
        &(u * self) * &u.adjoint()
    }

    /// Adds `c · other` in place.
    pub fn axpy(&mut self, c: C64, other: &CMatrix) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix sum shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix difference shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac, br, bc) = (a.rows, a.cols, b.rows, b.cols);
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let x = a[(i, j)];
            if x == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = x * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    factors.into_iter().fold(CMatrix::identity(1), |acc, f| kron(&acc, f))
}

/// Splits full basis indices into a (selected, rest) pair of flat indices.
///
/// `selected` is interpreted in the order given, first entry most
/// significant; the rest keep their natural order.
struct FactorSplit {
    sel_index: Vec<usize>,
    rest_index: Vec<usize>,
    sel_dim: usize,
    rest_dim: usize,
}

impl FactorSplit {
    fn new(dims: &[usize], selected: &[usize]) -> Result<Self> {
        let mut seen = vec![false; dims.len()];
        for &s in selected {
            if s >= dims.len() || seen[s] {
                return Err(Error::BadFactorization);
            }
            seen[s] = true;
        }
        let total: usize = dims.iter().product();
        let sel_dim: usize = selected.iter().map(|&s| dims[s]).product();
        let rest_dim = total / sel_dim.max(1);
        let mut sel_index = vec![0; total];
        let mut rest_index = vec![0; total];
        let mut digits = vec![0usize; dims.len()];
        for full in 0..total {
            let mut rem = full;
            for f in (0..dims.len()).rev() {
                digits[f] = rem % dims[f];
                rem /= dims[f];
            }
            sel_index[full] = selected.iter().fold(0, |acc, &s| acc * dims[s] + digits[s]);
            rest_index[full] = (0..dims.len())
                .filter(|f| !seen[*f])
                .fold(0, |acc, f| acc * dims[f] + digits[f]);
        }
        Ok(FactorSplit { sel_index, rest_index, sel_dim, rest_dim })
    }

    /// Inverse map: `compose[rest][sel]` is the full index.
    fn compose_table(&self) -> Vec<Vec<usize>> {
        let mut table = vec![vec![0; self.sel_dim]; self.rest_dim];
        for full in 0..self.sel_index.len() {
            table[self.rest_index[full]][self.sel_index[full]] = full;
        }
        table
    }
}

fn check_factorization(m: &CMatrix, dims: &[usize]) -> Result<()> {
    if !m.is_square() || dims.is_empty() || dims.contains(&0) {
        return Err(Error::BadFactorization);
    }
    let total: usize = dims.iter().product();
    if total != m.rows {
        return Err(Error::BadFactorization);
    }
    Ok(())
}

/// Partial trace of `m` over every factor not listed in `keep`.
///
/// `dims` lists the tensor factor dimensions (first factor most significant).
/// Kept factors appear in the output in increasing factor order.
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    check_factorization(m, dims)?;
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    let split = FactorSplit::new(dims, &keep)?;
    let table = split.compose_table();
    let mut out = CMatrix::zeros(split.sel_dim, split.sel_dim);
    for group in &table {
        for (a, &i) in group.iter().enumerate() {
            for (b, &j) in group.iter().enumerate() {
                out[(a, b)] += m[(i, j)];
            }
        }
    }
    Ok(out)
}

/// `(U ⊗ I) ρ (U ⊗ I)†` with `U` acting on the listed factors, in the order
/// given.
pub fn conjugate_local(rho: &CMatrix, dims: &[usize], targets: &[usize], u: &CMatrix) -> Result<CMatrix> {
    check_factorization(rho, dims)?;
    let split = FactorSplit::new(dims, targets)?;
    if u.rows != split.sel_dim || !u.is_square() {
        return Err(Error::DimensionMismatch { expected: split.sel_dim, found: u.rows });
    }
    let table = split.compose_table();
    let n = rho.rows;
    // left: (U ρ)[i, j] = Σ_l U[sel(i), l] ρ[compose(rest(i), l), j]
    let mut left = CMatrix::zeros(n, n);
    for i in 0..n {
        let (si, ri) = (split.sel_index[i], split.rest_index[i]);
        let dst = &mut left.data[i * n..(i + 1) * n];
        for (l, &src_row) in table[ri].iter().enumerate() {
            let c = u[(si, l)];
            if c == ZERO {
                continue;
            }
            for (d, &x) in dst.iter_mut().zip(&rho.data[src_row * n..(src_row + 1) * n]) {
                *d += c * x;
            }
        }
    }
    // right: (L U†)[i, j] = Σ_l L[i, compose(rest(j), l)] conj(U[sel(j), l])
    let mut out = CMatrix::zeros(n, n);
    for j in 0..n {
        let (sj, rj) = (split.sel_index[j], split.rest_index[j]);
        for (l, &src_col) in table[rj].iter().enumerate() {
            let c = u[(sj, l)].conj();
            if c == ZERO {
                continue;
            }
            for i in 0..n {
                out.data[i * n + j] += left.data[i * n + src_col] * c;
            }
        }
    }
    Ok(out)
}

/// Embeds a single-factor operator as `I ⊗ … ⊗ op ⊗ … ⊗ I`.
pub fn embed(op: &CMatrix, dims: &[usize], slot: usize) -> Result<CMatrix> {
    if slot >= dims.len() || dims[slot] != op.rows || !op.is_square() {
        return Err(Error::BadFactorization);
    }
    let factors: Vec<CMatrix> = dims
        .iter()
        .enumerate()
        .map(|(f, &d)| if f == slot { op.clone() } else { CMatrix::identity(d) })
        .collect();
    Ok(kron_all(&factors))
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// `U f(Λ) U†` for a complex function of the eigenvalues.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let n = self.values.len();
        let fv: Vec<C64> = self.values.iter().map(|&l| f(l)).collect();
        let u = &self.vectors;
        CMatrix::from_fn(n, n, |i, j| (0..n).map(|k| u[(i, k)] * fv[k] * u[(j, k)].conj()).sum())
    }

    /// `exp(-i θ H)`
    pub fn exp_i(&self, theta: f64) -> CMatrix {
        self.map(|l| {
            let phase = -theta * l;
            C64::new(math::cos(phase), math::sin(phase))
        })
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
pub fn herm_eig(h: &CMatrix) -> Result<HermitianEigen> {
    let n = h.require_square()?;
    let defect = h.hermitian_defect();
    if defect > DECOMP_TOL {
        return Err(Error::NotHermitian { defect });
    }
    let mut a = h.hermitian_part();
    let mut v = CMatrix::identity(n);
    let scale = a.data.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let threshold = (f64::EPSILON * f64::EPSILON * 1e-2 * scale).max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let z = a[(p, q)];
                let mag = z.norm();
                if mag == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[(p, p)].re, a[(q, q)].re);
                let theta = 0.5 * math::atan2(2.0 * mag, aqq - app);
                let (c, s) = (math::cos(theta), math::sin(theta));
                let phase = z / mag; // e^{iφ}
                // G restricted to (p, q): [[c, s], [-s e^{-iφ}, c e^{-iφ}]]
                let g_pp = C64::new(c, 0.0);
                let g_pq = C64::new(s, 0.0);
                let g_qp = -phase.conj() * s;
                let g_qq = phase.conj() * c;
                rotate(&mut a, p, q, g_pp, g_pq, g_qp, g_qq, true);
                rotate(&mut v, p, q, g_pp, g_pq, g_qp, g_qq, false);
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(HermitianEigen { values, vectors })
}

// M ← M G on columns p, q; when `both`, also M ← G† M on rows p, q.
#[allow(clippy::too_many_arguments)]
fn rotate(m: &mut CMatrix, p: usize, q: usize, g_pp: C64, g_pq: C64, g_qp: C64, g_qq: C64, both: bool) {
    let n = m.rows;
    for k in 0..n {
        let (mp, mq) = (m[(k, p)], m[(k, q)]);
        m[(k, p)] = mp * g_pp + mq * g_qp;
        m[(k, q)] = mp * g_pq + mq * g_qq;
    }
    if both {
        for k in 0..n {
            let (mp, mq) = (m[(p, k)], m[(q, k)]);
            m[(p, k)] = g_pp.conj() * mp + g_qp.conj() * mq;
            m[(q, k)] = g_pq.conj() * mp + g_qq.conj() * mq;
        }
    }
}

/// `exp(-i θ H)` for Hermitian `H`.
pub fn expm_generator(h: &CMatrix, theta: f64) -> Result<CMatrix> {
    if theta == 0.0 {
        let n = h.require_square()?;
        let defect = h.hermitian_defect();
        if defect > DECOMP_TOL {
            return Err(Error::NotHermitian { defect });
        }
        return Ok(CMatrix::identity(n));
    }
    Ok(herm_eig(h)?.exp_i(theta))
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(a: &CMatrix) -> Result<f64> {
    Ok(herm_eig(a)?.values.iter().map(|l| math::abs(*l)).sum())
}

/// Largest absolute eigenvalue of a Hermitian matrix.
pub fn operator_norm(a: &CMatrix) -> Result<f64> {
    Ok(herm_eig(a)?.values.iter().map(|l| math::abs(*l)).fold(0.0, f64::max))
}

/// Largest singular value of an arbitrary square matrix, via `A†A`.
pub fn spectral_norm(a: &CMatrix) -> Result<f64> {
    let gram = &a.adjoint() * a;
    let top = herm_eig(&gram)?.values.last().copied().unwrap_or(0.0);
    Ok(math::sqrt(top.max(0.0)))
}

/// Global-phase-aligned max-entry distance between two matrices.
///
/// The phase of `B` is chosen to maximize `|tr(A† B)|`.
pub fn phase_aligned_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let overlap = a.adjoint().trace_product(b);
    let phase = if overlap.norm() > 0.0 { overlap.conj() / overlap.norm() } else { ONE };
    a.max_abs_diff(&b.scale(phase))
}

/// A validated quantum state: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let n = matrix.require_square()?;
        if n == 0 {
            return Err(Error::InvalidDensityMatrix("empty matrix"));
        }
        if matrix.hermitian_defect() > EXACT_TOL {
            return Err(Error::InvalidDensityMatrix("not Hermitian"));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > EXACT_TOL {
            return Err(Error::InvalidDensityMatrix("trace is not one"));
        }
        let eig = herm_eig(&matrix)?;
        if eig.values.first().is_some_and(|&l| l < -DECOMP_TOL) {
            return Err(Error::InvalidDensityMatrix("negative eigenvalue"));
        }
        Ok(DensityMatrix { matrix })
    }

    /// For channel outputs that are valid by construction; drops the
    /// anti-Hermitian rounding residue.
    pub(crate) fn from_channel_output(matrix: CMatrix) -> Self {
        DensityMatrix { matrix: matrix.hermitian_part() }
    }

    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm <= 0.0 {
            return Err(Error::InvalidDensityMatrix("zero vector"));
        }
        let scaled: Vec<C64> = amplitudes.iter().map(|a| a / math::sqrt(norm)).collect();
        Ok(DensityMatrix { matrix: CMatrix::outer(&scaled) })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix { matrix: CMatrix::identity(dim).scale_real(1.0 / dim as f64) }
    }

    /// Qubit state with Bloch vector `r`, `|r| ≤ 1`.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let m = CMatrix::from_vec(
            2,
            2,
            vec![
                C64::new(0.5 * (1.0 + r[2]), 0.0),
                C64::new(0.5 * r[0], -0.5 * r[1]),
                C64::new(0.5 * r[0], 0.5 * r[1]),
                C64::new(0.5 * (1.0 - r[2]), 0.0),
            ],
        )?;
        Self::new(m)
    }

    /// Pure qubit state at polar angle `theta`, azimuth `phi`.
    pub fn bloch_angles(theta: f64, phi: f64) -> Self {
        let st = math::sin(theta);
        let r = [st * math::cos(phi), st * math::sin(phi), math::cos(theta)];
        Self::from_channel_output(CMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => C64::new(0.5 * (1.0 + r[2]), 0.0),
            (0, 1) => C64::new(0.5 * r[0], -0.5 * r[1]),
            (1, 0) => C64::new(0.5 * r[0], 0.5 * r[1]),
            _ => C64::new(0.5 * (1.0 - r[2]), 0.0),
        }))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }

    pub fn expectation(&self, observable: &CMatrix) -> f64 {
        observable.expectation(&self.matrix)
    }

    /// `‖ρ - σ‖₁`
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        trace_norm(&(&self.matrix - &other.matrix))
    }

    pub fn evolve(&self, u: &CMatrix) -> Result<DensityMatrix> {
        if u.rows != self.dim() || !u.is_square() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: u.rows });
        }
        Ok(Self::from_channel_output(self.matrix.conjugate_by(u)))
    }
}
