//! Dense helpers around nalgebra for the π-normalized spectral quantities.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::graph::SymLaplacian;

/// Unit vector along `Π^{1/2}𝟙`.
pub fn sqrt_pi_unit(pi: &[f64]) -> DVector<f64> {
    let v = DVector::from_iterator(pi.len(), pi.iter().map(|p| p.sqrt()));
    let norm = v.norm();
    v / norm
}

pub fn laplacian_matrix(l: &SymLaplacian<f64>) -> DMatrix<f64> {
    let n = l.n();
    let mut m = DMatrix::zeros(n, n);
    for (i, j, w) in l.edges() {
        m[(i, j)] -= w;
        m[(j, i)] -= w;
        m[(i, i)] += w;
        m[(j, j)] += w;
    }
    m
}

/// `Π^{-1/2} L Π^{-1/2}` as a dense matrix.
pub fn normalized_matrix(l: &SymLaplacian<f64>, pi: &[f64]) -> DMatrix<f64> {
    let n = l.n();
    let s: Vec<f64> = pi.iter().map(|p| 1.0 / p.sqrt()).collect();
    let mut m = DMatrix::zeros(n, n);
    for (i, j, w) in l.edges() {
        let off = w * s[i] * s[j];
        m[(i, j)] -= off;
        m[(j, i)] -= off;
        m[(i, i)] += w * s[i] * s[i];
        m[(j, j)] += w * s[j] * s[j];
    }
    m
}

/// `I − uuᵀ`.
pub fn projector(u: &DVector<f64>) -> DMatrix<f64> {
    let n = u.len();
    DMatrix::identity(n, n) - u * u.transpose()
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let a = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = a;
            m[(j, i)] = a;
        }
    }
}

/// Smallest eigenvalue of `m` restricted to the complement of the unit
/// vector `u`. The `u` direction is lifted above the spectrum by a shift.
pub fn restricted_min_eigenvalue(m: &DMatrix<f64>, u: &DVector<f64>) -> f64 {
    let n = m.nrows();
    if n <= 1 {
        return 0.0;
    }
    let p = projector(u);
    let shift = 2.0 * (m.norm() + 1.0);
    let mut b = &p * m * &p + u * u.transpose() * shift;
    symmetrize(&mut b);
    let eig = SymmetricEigen::new(b);
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Second-smallest eigenvalue of `Π^{-1/2} L Π^{-1/2}` on `Π^{1/2}𝟙`'s complement.
pub fn normalized_lambda2(l: &SymLaplacian<f64>, pi: &[f64]) -> f64 {
    let m = normalized_matrix(l, pi);
    restricted_min_eigenvalue(&m, &sqrt_pi_unit(pi))
}

/// Largest absolute eigenvalue by dense eigensolve.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let mut s = m.clone();
    symmetrize(&mut s);
    SymmetricEigen::new(s).eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

/// Power-iteration estimate of `‖m‖` for symmetric `m` from a fixed start.
pub fn power_norm_estimate(m: &DMatrix<f64>, iters: usize) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    // Deterministic start with no special structure.
    let mut x = DVector::from_iterator(n, (0..n).map(|i| 1.0 + ((i * 7919 + 13) % 97) as f64 / 97.0));
    let mut est = 0.0;
    for _ in 0..iters {
        let y = m * &x;
        let ny = y.norm();
        if ny == 0.0 {
            return 0.0;
        }
        let nx = x.norm();
        est = ny / nx;
        // Apply m twice per step so alternating-sign spectra still converge.
        let z = m * &y;
        let nz = z.norm();
        if nz == 0.0 {
            return est;
        }
        est = (nz / nx).sqrt().max(est);
        x = z / nz;
    }
    est
}

/// `⟨A, B⟩ = tr(AᵀB)`.
pub fn frobenius_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::sym_laplacian;

    #[test]
    fn lambda2_examples() {
        let zero = SymLaplacian::<f64>::zero(3);
        assert!(normalized_lambda2(&zero, &[1.0 / 3.0; 3]).abs() < 1e-12);
        let tri = sym_laplacian(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]);
        assert!((normalized_lambda2(&tri, &[1.0 / 3.0; 3]) - 4.5).abs() < 1e-9);
        let edge = sym_laplacian(2, [(0, 1, 2.0)]);
        assert!((normalized_lambda2(&edge, &[0.5, 0.5]) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn lambda2_disconnected_is_zero() {
        let l = sym_laplacian(4, [(0, 1, 2.0), (1, 0, 1.0), (2, 3, 4.0)]);
        assert!(normalized_lambda2(&l, &[0.1, 0.2, 0.3, 0.4]).abs() < 1e-10);
    }

    #[test]
    fn power_estimate_tracks_dense_norm() {
        let l = sym_laplacian(4, [(0, 1, 2.0), (1, 2, -1.0), (2, 3, 4.0), (3, 0, 0.5)]);
        let m = normalized_matrix(&l, &[0.1, 0.2, 0.3, 0.4]);
        let exact = spectral_norm(&m);
        let est = power_norm_estimate(&m, 300);
        assert!(est <= exact * (1.0 + 1e-9));
        assert!(est >= exact * 0.99);
    }
}
