use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Serialize, Serializer};

use super::{eigenvalues, LtiError};

/// Real polynomial, coefficients highest degree first. The zero polynomial
/// is the empty coefficient list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Strips exact leading zeros.
    pub fn new(coeffs: Vec<f64>) -> Self {
        let first = coeffs.iter().position(|&c| c != 0.0).unwrap_or(coeffs.len());
        Self { coeffs: coeffs[first..].to_vec() }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// `z^k`.
    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[0] = 1.0;
        Self { coeffs }
    }

    /// `lead · Π (z − rᵢ)`, keeping only the real part of each coefficient.
    /// Roots should be closed under conjugation.
    pub fn from_roots(roots: &[Complex64], lead: f64) -> Self {
        let mut acc = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (i, &a) in acc.iter().enumerate() {
                next[i] += a;
                next[i + 1] -= a * r;
            }
            acc = next;
        }
        Self::new(acc.into_iter().map(|c| c.re * lead).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.first().copied().unwrap_or(0.0)
    }

    /// Multiplicity of the root at zero (number of trailing zero coefficients).
    pub fn trailing_zeros(&self) -> usize {
        self.coeffs.iter().rev().take_while(|&&c| c == 0.0).count()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    /// Divides by `z^k` when the low coefficients are exactly zero.
    pub fn shift_down(&self, k: usize) -> Self {
        assert!(k <= self.trailing_zeros(), "shift_down would drop nonzero coefficients");
        Self::new(self.coeffs[..self.coeffs.len() - k].to_vec())
    }

    pub fn roots(&self) -> Result<Vec<Complex64>, LtiError> {
        poly_roots(self)
    }

    /// Largest coefficient magnitude.
    pub fn norm_inf(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        let n = self.coeffs.len() - 1;
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let power = n - i;
            let sign = if c < 0.0 { "-" } else { "+" };
            if first {
                if c < 0.0 {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let mag = c.abs();
            match (power, mag == 1.0) {
                (0, _) => write!(f, "{mag}")?,
                (1, true) => f.write_str("z")?,
                (1, false) => write!(f, "{mag} z")?,
                (p, true) => write!(f, "z^{p}")?,
                (p, false) => write!(f, "{mag} z^{p}")?,
            }
            first = false;
        }
        Ok(())
    }
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.coeffs.serialize(serializer)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let pad = |p: &Polynomial, i: usize| {
            let offset = n - p.coeffs.len();
            if i < offset {
                0.0
            } else {
                p.coeffs[i - offset]
            }
        };
        Polynomial::new((0..n).map(|i| pad(self, i) + pad(rhs, i)).collect())
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

/// Roots as eigenvalues of the (balanced) companion matrix. Exact zero
/// roots (trailing zero coefficients) are split off first and returned as
/// exact zeros. Output is sorted by real, then imaginary part.
pub fn poly_roots(p: &Polynomial) -> Result<Vec<Complex64>, LtiError> {
    if p.is_zero() {
        return Err(LtiError::ZeroPolynomial);
    }
    let zeros = p.trailing_zeros();
    let reduced = p.shift_down(zeros);
    let c = reduced.coeffs();
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
    match c.len() {
        0 | 1 => {}
        2 => roots.push(Complex64::new(-c[1] / c[0], 0.0)),
        len => {
            let n = len - 1;
            let mut companion = DMatrix::zeros(n, n);
            for j in 0..n {
                companion[(0, j)] = -c[j + 1] / c[0];
            }
            for i in 1..n {
                companion[(i, i - 1)] = 1.0;
            }
            roots.extend(eigenvalues(&companion)?);
        }
    }
    sort_complex(&mut roots);
    Ok(roots)
}

pub(crate) fn sort_complex(values: &mut [Complex64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}
