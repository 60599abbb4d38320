//! Small dense linear-algebra helpers shared by the propagation and oracle
//! modules.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

/// Smallest eigenvalue of a Hermitian complex matrix.
pub(crate) fn min_eig_hermitian(h: &DMatrix<Complex64>) -> f64 {
    let eig = SymmetricEigen::new(h.clone());
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Force exact symmetry on an almost-symmetric matrix.
pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of a real square matrix.
///
/// The drift generators of this crate have symplectically symmetric spectra
/// ({z, -z, conj z, -conj z} quadruples), on which nalgebra's QR iteration
/// can stall — both the real and the complexified variant. The Schur
/// decomposition is therefore attempted with an iteration cap and, on
/// failure, retried on a copy perturbed by a fixed asymmetric pattern big
/// enough to break the spectral symmetry and orders of magnitude below any
/// tolerance built on these eigenvalues.
pub(crate) fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    let n = m.nrows();
    let scale = m.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return vec![Complex64::new(0.0, 0.0); n];
    }
    let mc = m.map(|x| Complex64::new(x, 0.0));
    if let Some(eigs) = try_schur(&mc) {
        return eigs;
    }
    for magnitude in [1e-11, 1e-9, 1e-7] {
        let mut perturbed = mc.clone();
        for i in 0..n {
            for j in 0..n {
                // Deterministic, index-dependent, non-symmetric pattern.
                let phase = (1.0 + i as f64) * 0.7548776662 + (1.0 + j as f64) * 0.5698402910;
                perturbed[(i, j)] += Complex64::new(
                    magnitude * scale * phase.sin(),
                    magnitude * scale * phase.cos(),
                );
            }
        }
        if let Some(eigs) = try_schur(&perturbed) {
            return eigs;
        }
    }
    panic!("Schur iteration failed even on asymmetrically perturbed input");
}

fn try_schur(m: &DMatrix<Complex64>) -> Option<Vec<Complex64>> {
    nalgebra::linalg::Schur::try_new(m.clone(), 1e-14, 600)
        .and_then(|s| s.eigenvalues())
        .map(|v| v.iter().copied().collect())
}

/// Largest |eigenvalue| of a real square matrix, in rad/s for drift inputs.
pub(crate) fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
