//! Dense complex linear-algebra helpers shared by the channel, orthogonalization
//! and power-minimization modules.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;
pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Condition-number cutoff above which a matrix is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Deterministic random stream: a ChaCha8 generator keyed by `seed` on stream `stream`.
///
/// Independent quantities drawn from one seed use distinct stream ids so that
/// adding a draw never perturbs the others.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One circularly-symmetric complex Gaussian sample with the given variance.
pub fn cn_sample<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// Matrix of IID CN(0, variance) entries, filled column-major.
pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, variance: f64, rng: &mut R) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = cn_sample(rng, variance);
        }
    }
    m
}

pub fn complex_gaussian_vec<R: Rng + ?Sized>(len: usize, variance: f64, rng: &mut R) -> CVec {
    CVec::from_fn(len, |_, _| cn_sample(rng, variance))
}

pub fn fro_norm_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// ‖AᴴA − I‖_F.
pub fn semi_unitarity_residual(a: &CMat) -> f64 {
    let gram = a.adjoint() * a;
    (gram - CMat::identity(a.ncols(), a.ncols())).norm()
}

/// Rotates `col` so that its first component with modulus above `tol` is real positive.
/// Returns the unit phase that was applied.
fn normalize_column_phase(m: &mut CMat, col: usize, tol: f64) -> Complex64 {
    let lead = m.column(col).iter().copied().find(|z| z.norm() > tol);
    match lead {
        Some(z) => {
            let phase = (z / z.norm()).conj();
            m.column_mut(col).iter_mut().for_each(|x| *x *= phase);
            phase
        }
        None => Complex64::new(1.0, 0.0),
    }
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted ascending.
///
/// Eigenvalues are taken from the real part, clamped to zero when they fall in
/// `[-1e-12 · scale, 0)`. Each eigenvector has its leading component made real positive.
pub fn hermitian_eigen_ascending(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    // Symmetrize against round-off before handing to the solver.
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let scale = eig.eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    let mut values = Vec::with_capacity(n);
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvalues[src];
        if v < 0.0 && v >= -1e-12 * scale {
            v = 0.0;
        }
        values.push(v);
        vectors.set_column(dst, &eig.eigenvectors.column(src));
        normalize_column_phase(&mut vectors, dst, 1e-12);
    }
    (values, vectors)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let svd = m.clone().svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// σ_max / σ_min (infinite for a rank-deficient matrix).
pub fn condition_number(m: &CMat) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Inverse of a square matrix, rejecting condition numbers at or above [`MAX_CONDITION`].
pub fn checked_inverse(m: &CMat, what: &'static str) -> Result<CMat> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let condition = condition_number(m);
    if !(condition < MAX_CONDITION) {
        return Err(Error::IllConditioned { what, condition });
    }
    m.clone().try_inverse().ok_or(Error::IllConditioned { what, condition })
}

/// Moore–Penrose pseudo-inverse of a tall matrix with full column rank, via the SVD.
pub fn checked_pseudo_inverse(m: &CMat, what: &'static str) -> Result<CMat> {
    if m.nrows() < m.ncols() {
        return Err(Error::Dimension(format!(
            "{what} must have at least as many rows as columns, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let svd = m.clone().svd(true, true);
    let s = &svd.singular_values;
    let hi = s.iter().fold(0.0f64, |a, &b| a.max(b));
    let lo = s.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition < MAX_CONDITION) {
        return Err(Error::IllConditioned { what, condition });
    }
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut scaled_ut = u.adjoint();
    for (r, &sv) in s.iter().enumerate() {
        scaled_ut.row_mut(r).iter_mut().for_each(|z| *z /= sv);
    }
    Ok(v_t.adjoint() * scaled_ut)
}

/// Extends the orthonormal columns of `basis` (n×k) to an n×n unitary matrix.
///
/// Candidates are the standard basis vectors in order, orthogonalized with two
/// passes of modified Gram–Schmidt; the first k columns are re-orthonormalized too.
pub fn complete_unitary(basis: &CMat) -> CMat {
    let n = basis.nrows();
    let mut out: Vec<CVec> = Vec::with_capacity(n);
    let candidates = basis.column_iter().map(|c| c.into_owned()).chain((0..n).map(|i| {
        let mut e = CVec::zeros(n);
        e[i] = Complex64::new(1.0, 0.0);
        e
    }));
    for cand in candidates {
        if out.len() == n {
            break;
        }
        let mut v = cand;
        for _ in 0..2 {
            for q in &out {
                let proj = q.dotc(&v);
                v -= q * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            out.push(v / Complex64::new(norm, 0.0));
        }
    }
    CMat::from_columns(&out)
}

/// Haar-distributed n×k semi-unitary matrix: QR of an IID Gaussian matrix with
/// the phases of R's diagonal folded back into Q.
pub fn random_semi_unitary<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> CMat {
    let g = complex_gaussian(n, k, 1.0, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
        }
    }
    q
}

/// Haar-distributed n×n unitary matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    random_semi_unitary(n, n, rng)
}

/// exp(A) for skew-Hermitian A, computed through the Hermitian matrix −iA so the
/// result is unitary to working precision.
pub fn exp_skew_hermitian(a: &CMat) -> CMat {
    let minus_i = Complex64::new(0.0, -1.0);
    let h = a * minus_i;
    let (values, vectors) = hermitian_eigen_ascending(&h);
    let mut scaled = vectors.clone();
    for (j, &lambda) in values.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, lambda);
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    scaled * vectors.adjoint()
}

/// Real matrix to complex.
pub fn to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Diagonal complex matrix from real entries.
pub fn real_diag(values: &[f64]) -> CMat {
    let n = values.len();
    CMat::from_fn(n, n, |r, c| {
        if r == c {
            Complex64::new(values[r], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}
