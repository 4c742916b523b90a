use nalgebra::{DMatrix, DVector, RowDVector};

use super::{eigenvalues, Domain, LtiError, Polynomial, RationalTF};
use crate::model::ContinuousPlant;

/// SISO realization `x' = A x + B u`, `y = C x + D u`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: RowDVector<f64>,
    d: f64,
    domain: Domain,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: RowDVector<f64>, d: f64, domain: Domain) -> Result<Self, LtiError> {
        let n = a.nrows();
        if a.ncols() != n || b.len() != n || c.len() != n {
            return Err(LtiError::Dimension(format!("A {}x{}, B {}, C {}", a.nrows(), a.ncols(), b.len(), c.len())));
        }
        Ok(Self { a, b, c, d, domain })
    }

    pub fn continuous(plant: &ContinuousPlant) -> Self {
        Self { a: plant.a().clone(), b: plant.b().clone(), c: plant.c().clone(), d: 0.0, domain: Domain::Continuous }
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &RowDVector<f64> {
        &self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn output(&self, x: &DVector<f64>, u: f64) -> f64 {
        (&self.c * x)[0] + self.d * u
    }

    pub fn next_state(&self, x: &DVector<f64>, u: f64) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    pub fn poles(&self) -> Result<Vec<num_complex::Complex64>, LtiError> {
        eigenvalues(&self.a)
    }

    /// Markov parameters `C A^{k−1} B` for `k = 1..=count`.
    pub fn markov(&self, count: usize) -> Vec<f64> {
        let mut v = self.b.clone();
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push((&self.c * &v)[0]);
            v = &self.a * v;
        }
        out
    }
}

/// Zero-order-hold discretization over `period` via the exponential of the
/// augmented matrix `[[A, B], [0, 0]]·T`.
pub fn c2d_zoh(plant: &ContinuousPlant, period: f64) -> Result<StateSpace, LtiError> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(LtiError::BadPeriod(period));
    }
    let n = plant.order();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(&(plant.a() * period));
    m.view_mut((0, n), (n, 1)).copy_from(&(plant.b() * period));
    let e = m.exp();
    if e.iter().any(|v| !v.is_finite()) {
        return Err(LtiError::NumericOverflow);
    }
    let ad = e.view((0, 0), (n, n)).into_owned();
    let bd = e.view((0, n), (n, 1)).column(0).into_owned();
    StateSpace::new(ad, bd, plant.c().clone(), 0.0, Domain::Discrete { period })
}

/// `C (xI − A)⁻¹ B + D`. The denominator is the characteristic polynomial
/// rebuilt from the eigenvalues; the numerator comes from the Markov
/// parameters. Numerator coefficients below their round-off floor are
/// treated as zero, so an unreachable or unobservable output gives `0/1`.
pub fn tf_from_ss(ss: &StateSpace) -> Result<RationalTF, LtiError> {
    let n = ss.order();
    if n == 0 {
        return RationalTF::new(Polynomial::constant(ss.d), Polynomial::one(), ss.domain);
    }
    let den = Polynomial::from_roots(&eigenvalues(&ss.a)?, 1.0);
    let a = den.coeffs();
    let h = ss.markov(n);
    let (na, nb, nc) = (ss.a.norm(), ss.b.norm(), ss.c.norm());
    let h_scale: Vec<f64> = (0..n).map(|k| nc * na.powi(k as i32) * nb).collect();
    let floor_factor = 16.0 * (n as f64 + 1.0) * f64::EPSILON;
    let mut num = vec![0.0; n + 1];
    num[0] = ss.d;
    for k in 1..=n {
        let mut b = 0.0;
        let mut scale = 0.0;
        for j in 0..k {
            b += a[j] * h[k - j - 1];
            scale += a[j].abs() * h_scale[k - j - 1];
        }
        if b.abs() <= floor_factor * scale {
            b = 0.0;
        }
        num[k] = b + ss.d * a[k];
    }
    RationalTF::new(Polynomial::new(num), den, ss.domain)
}
