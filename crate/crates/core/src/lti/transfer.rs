use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use super::{sort_complex, Domain, LtiError, Polynomial};

/// Two roots coincide when `|r1 − r2| ≤ tol·max(1, |r1|)`.
pub fn coincide(r1: Complex64, r2: Complex64, tol: f64) -> bool {
    (r1 - r2).norm() <= tol * r1.norm().max(1.0)
}

/// `num(x) / den(x)` in `s` or `z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RationalTF {
    num: Polynomial,
    den: Polynomial,
    domain: Domain,
}

/// A zero that was removed together with a pole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cancellation {
    #[serde(serialize_with = "crate::report::ser_complex")]
    pub zero: Complex64,
    #[serde(serialize_with = "crate::report::ser_complex")]
    pub pole: Complex64,
    pub distance: f64,
}

impl RationalTF {
    pub fn new(num: Polynomial, den: Polynomial, domain: Domain) -> Result<Self, LtiError> {
        if den.is_zero() {
            return Err(LtiError::ZeroDenominator);
        }
        if num.is_zero() {
            return Ok(Self { num, den: Polynomial::one(), domain });
        }
        Ok(Self { num, den, domain })
    }

    pub fn unity(domain: Domain) -> Self {
        Self { num: Polynomial::one(), den: Polynomial::one(), domain }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn poles(&self) -> Result<Vec<Complex64>, LtiError> {
        self.den.roots()
    }

    /// Zeros of the numerator; empty for the zero function.
    pub fn zeros(&self) -> Result<Vec<Complex64>, LtiError> {
        if self.num.is_zero() {
            return Ok(Vec::new());
        }
        self.num.roots()
    }

    /// Ratio of leading coefficients.
    pub fn gain(&self) -> f64 {
        self.num.leading() / self.den.leading()
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.num.eval_complex(x) / self.den.eval_complex(x)
    }

    /// Relative degree `deg(den) − deg(num)` (0 for the zero function).
    pub fn relative_degree(&self) -> isize {
        match (self.den.degree(), self.num.degree()) {
            (Some(d), Some(n)) => d as isize - n as isize,
            _ => 0,
        }
    }

    /// Removes numerator/denominator root pairs that coincide at `tol`.
    pub fn reduce(&self, tol: f64) -> Result<(RationalTF, Vec<Cancellation>), LtiError> {
        if self.num.is_zero() {
            return Ok((self.clone(), Vec::new()));
        }
        let zeros = self.num.roots()?;
        let poles = self.den.roots()?;
        let (zeros, poles, cancelled) = cancel_pairs(zeros, poles, tol);
        if cancelled.is_empty() {
            return Ok((self.clone(), cancelled));
        }
        Ok((self.rebuild(&zeros, &poles, self.gain()), cancelled))
    }

    fn rebuild(&self, zeros: &[Complex64], poles: &[Complex64], gain: f64) -> RationalTF {
        RationalTF {
            num: Polynomial::from_roots(zeros, gain),
            den: Polynomial::from_roots(poles, 1.0),
            domain: self.domain,
        }
    }
}

impl fmt::Display for RationalTF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let var = match self.domain {
            Domain::Continuous => "s",
            Domain::Discrete { .. } => "z",
        };
        let num = self.num.to_string().replace('z', var);
        let den = self.den.to_string().replace('z', var);
        if den == "1" {
            write!(f, "{num}")
        } else {
            write!(f, "({num}) / ({den})")
        }
    }
}

/// Result of a cascade: the product and the pole/zero pairs that cancelled
/// across the two blocks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesResult {
    pub tf: RationalTF,
    pub cancellations: Vec<Cancellation>,
}

impl SeriesResult {
    pub fn cancelled(&self) -> bool {
        !self.cancellations.is_empty()
    }
}

/// `g1·g2`. Zeros of one block that coincide (at `tol_cancel`) with poles of
/// the other are cancelled and reported; without any cancellation the product
/// polynomials are returned untouched.
pub fn series(g1: &RationalTF, g2: &RationalTF, tol_cancel: f64) -> Result<SeriesResult, LtiError> {
    if g1.domain != g2.domain {
        return Err(LtiError::DomainMismatch);
    }
    let domain = g1.domain;
    if g1.is_zero() || g2.is_zero() {
        return Ok(SeriesResult {
            tf: RationalTF { num: Polynomial::zero(), den: Polynomial::one(), domain },
            cancellations: Vec::new(),
        });
    }
    let (z1, z2) = (g1.num.roots()?, g2.num.roots()?);
    let (p1, p2) = (g1.den.roots()?, g2.den.roots()?);
    let (z1_left, p2_left, mut cancelled) = cancel_pairs(z1, p2, tol_cancel);
    let (z2_left, p1_left, c2) = cancel_pairs(z2, p1, tol_cancel);
    cancelled.extend(c2);
    if cancelled.is_empty() {
        let tf = RationalTF { num: &g1.num * &g2.num, den: &g1.den * &g2.den, domain };
        return Ok(SeriesResult { tf, cancellations: cancelled });
    }
    let gain = g1.gain() * g2.gain();
    let mut zeros = z1_left;
    zeros.extend(z2_left);
    let mut poles = p1_left;
    poles.extend(p2_left);
    sort_complex(&mut zeros);
    sort_complex(&mut poles);
    let tf = RationalTF { num: Polynomial::from_roots(&zeros, gain), den: Polynomial::from_roots(&poles, 1.0), domain };
    Ok(SeriesResult { tf, cancellations: cancelled })
}

/// Greedy nearest-pair matching: each zero (in order) cancels its nearest
/// still-unmatched pole if the two coincide.
fn cancel_pairs(
    zeros: Vec<Complex64>,
    mut poles: Vec<Complex64>,
    tol: f64,
) -> (Vec<Complex64>, Vec<Complex64>, Vec<Cancellation>) {
    let mut kept = Vec::new();
    let mut cancelled = Vec::new();
    for z in zeros {
        let nearest = poles.iter().enumerate().map(|(i, p)| (i, (z - p).norm())).min_by(|a, b| a.1.total_cmp(&b.1));
        match nearest {
            Some((i, _)) if coincide(z, poles[i], tol) => {
                let pole = poles.remove(i);
                cancelled.push(Cancellation { zero: z, pole, distance: (z - pole).norm() });
            }
            _ => kept.push(z),
        }
    }
    (kept, poles, cancelled)
}
