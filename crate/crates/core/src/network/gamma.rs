use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use super::{enumerate_paths, induced_graph, jointly_connected, NetScalar, NetworkError, RoutedPath};
use crate::lti::{Domain, Polynomial, RationalTF};
use crate::model::{format_weight, weight_to_f64, RadioGraph, Schedule};

/// Per-delay sums of path weights: `γ(i) = Σ W(ρ)` over paths of delay `i`,
/// for `i = 1..=D` with `D` the longest source-to-sink path length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaSequence {
    longest_path: Option<usize>,
    gamma: Vec<BigRational>,
}

impl GammaSequence {
    /// The all-zero sequence of a disconnected side.
    pub fn disconnected() -> Self {
        Self { longest_path: None, gamma: Vec::new() }
    }

    /// Aggregates the given paths. `longest_path` must bound every delay.
    pub fn from_paths(paths: &[RoutedPath], longest_path: Option<usize>) -> Self {
        let d = longest_path.unwrap_or(0);
        let mut gamma = vec![BigRational::zero(); d];
        for p in paths {
            assert!(p.delay >= 1 && p.delay <= d, "path delay {} outside 1..={d}", p.delay);
            gamma[p.delay - 1] += &p.weight;
        }
        Self { longest_path, gamma }
    }

    pub fn connected(&self) -> bool {
        self.longest_path.is_some()
    }

    pub fn longest_path(&self) -> Option<usize> {
        self.longest_path
    }

    /// `γ(i)`, zero outside `1..=D`.
    pub fn get(&self, i: usize) -> BigRational {
        if i == 0 {
            return BigRational::zero();
        }
        self.gamma.get(i - 1).cloned().unwrap_or_else(BigRational::zero)
    }

    /// `[γ(1), …, γ(D)]`.
    pub fn coefficients(&self) -> &[BigRational] {
        &self.gamma
    }

    /// Largest delay carrying nonzero weight.
    pub fn realized_delay(&self) -> Option<usize> {
        self.gamma.iter().rposition(|g| !g.is_zero()).map(|i| i + 1)
    }

    pub fn is_zero(&self) -> bool {
        self.realized_delay().is_none()
    }

    /// Coefficients of the reduced network numerator `Σ γ(i) z^{d−i}` with
    /// `d` the realized delay, highest degree first: `[γ(1), …, γ(d)]`.
    pub fn numerator(&self) -> &[BigRational] {
        &self.gamma[..self.realized_delay().unwrap_or(0)]
    }

    /// `Σ γ(i) p^{d−i}` in any scalar type, by Horner.
    pub fn numerator_at<T: NetScalar>(&self, p: &T) -> T {
        self.numerator().iter().fold(T::zero(), |acc, g| acc * p.clone() + T::from_weight(g))
    }

    pub fn numerator_polynomial(&self) -> Polynomial {
        Polynomial::new(self.numerator().iter().map(weight_to_f64).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.gamma.iter().map(weight_to_f64).collect()
    }
}

impl Serialize for GammaSequence {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Out {
            connected: bool,
            longest_path: Option<usize>,
            gamma: Vec<String>,
        }
        Out {
            connected: self.connected(),
            longest_path: self.longest_path,
            gamma: self.gamma.iter().map(format_weight).collect(),
        }
        .serialize(serializer)
    }
}

pub fn gamma_sequence(graph: &RadioGraph, schedule: &Schedule) -> Result<GammaSequence, NetworkError> {
    let ig = induced_graph(graph, schedule);
    let conn = jointly_connected(&ig);
    if !conn.connected {
        return Ok(GammaSequence::disconnected());
    }
    let paths = enumerate_paths(&ig)?;
    Ok(GammaSequence::from_paths(&paths, conn.longest_path))
}

/// `G(z) = Σ γ(i) z^{−i}` reduced by the common powers of `z`: numerator
/// `[γ(1), …, γ(d)]` over `z^d`.
pub fn network_tf(gs: &GammaSequence, sample_period: f64) -> Result<RationalTF, NetworkError> {
    let d = gs.realized_delay().ok_or(NetworkError::ZeroTransferFunction)?;
    let tf =
        RationalTF::new(gs.numerator_polynomial(), Polynomial::monomial(d), Domain::Discrete { period: sample_period })
            .expect("monomial denominator is nonzero");
    Ok(tf)
}
