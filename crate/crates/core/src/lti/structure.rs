//! Rank tests, PBH tests and Ackermann pole placement.

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;

use super::{eigenvalues, Domain, LtiError};

/// Default relative margin below which a PBH pencil counts as rank deficient.
pub const PBH_TOLERANCE: f64 = 1e-8;

/// `[B, AB, …, A^{n−1}B]`.
pub fn ctrb_matrix(a: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(n, n);
    let mut v = b.clone();
    for k in 0..n {
        m.set_column(k, &v);
        v = a * v;
    }
    m
}

/// `[C; CA; …; CA^{n−1}]`.
pub fn obsv_matrix(a: &DMatrix<f64>, c: &RowDVector<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(n, n);
    let mut v = c.clone();
    for k in 0..n {
        m.set_row(k, &v);
        v *= a;
    }
    m
}

/// Numerical rank from singular values. Values above `rel_tol·σ_max` count;
/// with `None` the tolerance is `max(rows, cols)·ε`.
pub fn matrix_rank(m: &DMatrix<f64>, rel_tol: Option<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    let tol = rel_tol.unwrap_or(m.nrows().max(m.ncols()) as f64 * f64::EPSILON) * smax;
    sv.iter().filter(|&&s| s > tol).count()
}

pub fn ctrb_rank(a: &DMatrix<f64>, b: &DVector<f64>) -> usize {
    matrix_rank(&ctrb_matrix(a, b), None)
}

pub fn obsv_rank(a: &DMatrix<f64>, c: &RowDVector<f64>) -> usize {
    matrix_rank(&obsv_matrix(a, c), None)
}

/// `σ_min/σ_max` of `[λI − A, s·B]`, with `s = ‖λI − A‖_F / ‖B‖_F` so that
/// both blocks carry comparable weight. Zero means rank deficient.
pub fn pbh_margin(a: &DMatrix<f64>, b: &DVector<f64>, lambda: Complex64) -> f64 {
    let n = a.nrows();
    let shifted = DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { lambda } else { Complex64::new(0.0, 0.0) };
        diag - a[(i, j)]
    });
    let bn = b.norm();
    let s = if bn > 0.0 { shifted.norm() / bn } else { 1.0 };
    let s = if s > 0.0 { s } else { 1.0 };
    let pencil = DMatrix::from_fn(n, n + 1, |i, j| if j < n { shifted[(i, j)] } else { Complex64::new(b[i] * s, 0.0) });
    let sv = pencil.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        0.0
    } else {
        sv.min() / smax
    }
}

/// First eigenvalue of `A` outside the stable region whose PBH pencil is
/// rank deficient; `None` when `(A, B)` is stabilizable.
pub fn stabilizability_witness(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    domain: Domain,
    unit_tol: f64,
    pbh_tol: f64,
) -> Result<Option<Complex64>, LtiError> {
    if ctrb_rank(a, b) == a.nrows() {
        return Ok(None);
    }
    for lambda in eigenvalues(a)? {
        if domain.is_unstable_mode(lambda, unit_tol) && pbh_margin(a, b, lambda) < pbh_tol {
            return Ok(Some(lambda));
        }
    }
    Ok(None)
}

pub fn stabilizable(a: &DMatrix<f64>, b: &DVector<f64>, domain: Domain) -> Result<bool, LtiError> {
    Ok(stabilizability_witness(a, b, domain, super::UNIT_CIRCLE_TOLERANCE, PBH_TOLERANCE)?.is_none())
}

/// Dual of [`stabilizability_witness`] on `(Aᵀ, Cᵀ)`.
pub fn detectability_witness(
    a: &DMatrix<f64>,
    c: &RowDVector<f64>,
    domain: Domain,
    unit_tol: f64,
    pbh_tol: f64,
) -> Result<Option<Complex64>, LtiError> {
    stabilizability_witness(&a.transpose(), &c.transpose(), domain, unit_tol, pbh_tol)
}

pub fn detectable(a: &DMatrix<f64>, c: &RowDVector<f64>, domain: Domain) -> Result<bool, LtiError> {
    Ok(detectability_witness(a, c, domain, super::UNIT_CIRCLE_TOLERANCE, PBH_TOLERANCE)?.is_none())
}

/// Ackermann's formula: `K = e_nᵀ 𝒞⁻¹ φ(A)` so that `eig(A − BK)` are the
/// roots of `φ`.
pub fn place_poles(a: &DMatrix<f64>, b: &DVector<f64>, targets: &[Complex64]) -> Result<RowDVector<f64>, LtiError> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(LtiError::Dimension(format!("A {}x{}, B {}", a.nrows(), a.ncols(), b.len())));
    }
    if targets.len() != n {
        return Err(LtiError::BadTargets(format!("{} targets for order {n}", targets.len())));
    }
    let phi = real_char_poly(targets)?;
    let ctrb = ctrb_matrix(a, b);
    let rank = matrix_rank(&ctrb, None);
    if rank < n {
        return Err(LtiError::Uncontrollable { rank, n });
    }
    let mut phi_a = DMatrix::identity(n, n);
    for &coef in &phi[1..] {
        phi_a = &phi_a * a + DMatrix::identity(n, n) * coef;
    }
    let mut e_n = DVector::zeros(n);
    e_n[n - 1] = 1.0;
    let q = ctrb.transpose().lu().solve(&e_n).ok_or(LtiError::Singular)?;
    Ok(q.transpose() * phi_a)
}

/// Monic characteristic polynomial of the targets; fails unless the
/// coefficients come out real.
fn real_char_poly(targets: &[Complex64]) -> Result<Vec<f64>, LtiError> {
    let mut acc = vec![Complex64::new(1.0, 0.0)];
    for &r in targets {
        if !(r.re.is_finite() && r.im.is_finite()) {
            return Err(LtiError::BadTargets(format!("non-finite target {r}")));
        }
        let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
        for (i, &c) in acc.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        acc = next;
    }
    let scale: f64 = targets.iter().map(|t| 1.0 + t.norm()).product();
    if acc.iter().any(|c| c.im.abs() > 1e-9 * scale) {
        return Err(LtiError::BadTargets("targets are not closed under conjugation".into()));
    }
    Ok(acc.into_iter().map(|c| c.re).collect())
}

/// `n` points on the circle of the given radius (roots of `zⁿ = −rⁿ`), in
/// exact conjugate pairs plus `−r` when `n` is odd.
pub fn circle_targets(n: usize, radius: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n);
    for k in 0..n / 2 {
        let theta = std::f64::consts::PI * (2 * k + 1) as f64 / n as f64;
        let z = Complex64::from_polar(radius, theta);
        out.push(z);
        out.push(z.conj());
    }
    if n % 2 == 1 {
        out.push(Complex64::new(-radius, 0.0));
    }
    out
}

pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64, LtiError> {
    Ok(eigenvalues(m)?.iter().fold(0.0, |r, z| r.max(z.norm())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(values: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(values))
    }

    fn col(values: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(values)
    }

    #[test]
    fn kalman_ranks() {
        assert_eq!(ctrb_rank(&diag(&[1.0, 2.0]), &col(&[1.0, 1.0])), 2);
        assert_eq!(ctrb_rank(&diag(&[1.0, 1.0]), &col(&[1.0, 1.0])), 1);
        assert_eq!(obsv_rank(&diag(&[1.0, 2.0]), &RowDVector::from_row_slice(&[0.0, 1.0])), 1);
        assert_eq!(matrix_rank(&DMatrix::zeros(2, 3), None), 0);
    }

    #[test]
    fn pbh_cases() {
        let a = diag(&[0.5, 2.0]);
        let d = Domain::Discrete { period: 1.0 };
        assert!(stabilizable(&a, &col(&[0.0, 1.0]), d).unwrap());
        assert!(!stabilizable(&a, &col(&[1.0, 0.0]), d).unwrap());
        let w = stabilizability_witness(&a, &col(&[1.0, 0.0]), d, 1e-9, PBH_TOLERANCE).unwrap();
        assert_eq!(w, Some(Complex64::new(2.0, 0.0)));
        assert!(detectable(&a, &RowDVector::from_row_slice(&[0.0, 1.0]), d).unwrap());
        assert!(!detectable(&a, &RowDVector::from_row_slice(&[1.0, 0.0]), d).unwrap());
        assert!(pbh_margin(&a, &col(&[1.0, 1.0]), Complex64::new(2.0, 0.0)) > 0.1);
    }

    #[test]
    fn scalar_placement() {
        let k = place_poles(&diag(&[0.0]), &col(&[1.0]), &[Complex64::new(0.0, 0.0)]).unwrap();
        assert_eq!(k[0], 0.0);
        let k = place_poles(&diag(&[2.0]), &col(&[1.0]), &[Complex64::new(0.5, 0.0)]).unwrap();
        assert!((k[0] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn placement_hits_targets() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 2.0, -1.0, 1.5]);
        let b = col(&[0.0, 0.0, 1.0]);
        let targets = circle_targets(3, 0.25);
        let k = place_poles(&a, &b, &targets).unwrap();
        let closed = &a - &b * &k;
        let ev = eigenvalues(&closed).unwrap();
        for t in &targets {
            assert!(ev.iter().any(|e| (e - t).norm() < 1e-9), "{t} not in {ev:?}");
        }
    }

    #[test]
    fn placement_errors() {
        let a = diag(&[1.0, 1.0]);
        let b = col(&[1.0, 1.0]);
        let t = circle_targets(2, 0.5);
        assert_eq!(place_poles(&a, &b, &t), Err(LtiError::Uncontrollable { rank: 1, n: 2 }));
        let a = diag(&[1.0, 2.0]);
        assert!(matches!(place_poles(&a, &b, &t[..1]), Err(LtiError::BadTargets(_))));
        let lopsided = [Complex64::new(0.1, 0.2), Complex64::new(0.1, 0.3)];
        assert!(matches!(place_poles(&a, &b, &lopsided), Err(LtiError::BadTargets(_))));
    }

    #[test]
    fn circle_targets_are_conjugate_closed() {
        for n in 1..8 {
            let t = circle_targets(n, 0.1);
            assert_eq!(t.len(), n);
            for z in &t {
                assert!((z.norm() - 0.1).abs() < 1e-15);
                assert!(t.iter().any(|w| *w == z.conj()));
            }
        }
    }
}
