mod common;

use common::rng;
use mcn_core::lti::{c2d_zoh, ctrb_rank, poly_roots, series, stabilizable, tf_from_ss, Domain, Polynomial, RationalTF};
use mcn_core::model::ContinuousPlant;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn random_poly(rng: &mut impl Rng, degree: usize) -> Polynomial {
    let mut c: Vec<f64> = (0..=degree).map(|_| rng.random_range(-1.0..1.0)).collect();
    c[0] = rng.random_range(0.5..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    Polynomial::new(c)
}

fn random_tf(rng: &mut impl Rng) -> RationalTF {
    let den = rng.random_range(1..=4);
    let num = rng.random_range(0..=den);
    RationalTF::new(random_poly(rng, num), random_poly(rng, den), Domain::Discrete { period: 0.1 }).unwrap()
}

/// Coefficients scaled so the leading denominator coefficient is 1.
fn normalized(tf: &RationalTF) -> (Vec<f64>, Vec<f64>) {
    let lead = tf.den().leading();
    (tf.num().coeffs().iter().map(|c| c / lead).collect(), tf.den().coeffs().iter().map(|c| c / lead).collect())
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    let scale = a.iter().chain(b).fold(1.0f64, |m, c| m.max(c.abs()));
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn zoh_poles_are_exponentials(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.random_range(1..=5usize);
        let lambdas: Vec<f64> = (0..n).map(|i| -0.5 - 1.3 * i as f64 - rng.random_range(0.0..0.5)).collect();
        let v = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { rng.random_range(-0.3..0.3) });
        let a = &v * DMatrix::from_diagonal(&DVector::from_vec(lambdas.clone())) * v.clone().try_inverse().unwrap();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).iter().copied().collect()).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
        let t = rng.random_range(0.05..0.5);
        let plant = ContinuousPlant::from_rows(&rows, &b, &c).unwrap();
        let tf = tf_from_ss(&c2d_zoh(&plant, t).unwrap()).unwrap();
        for pole in tf.poles().unwrap() {
            let nearest = lambdas.iter().map(|l| (pole - (l * t).exp()).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(nearest <= 1e-9, "pole {} is {} from every exp(lambda T)", pole, nearest);
        }
    }

    #[test]
    fn roots_rebuild_the_polynomial(seed in any::<u64>(), degree in 1usize..=8) {
        let p = random_poly(&mut rng(seed), degree);
        let roots = poly_roots(&p).unwrap();
        prop_assert_eq!(roots.len(), degree);
        let rebuilt = Polynomial::from_roots(&roots, p.leading());
        let scale = p.norm_inf();
        for (a, b) in p.coeffs().iter().zip(rebuilt.coeffs()) {
            prop_assert!((a - b).abs() <= 1e-8 * scale, "{:?} vs {:?}", p.coeffs(), rebuilt.coeffs());
        }
    }

    #[test]
    fn unity_is_neutral(seed in any::<u64>()) {
        let g = random_tf(&mut rng(seed));
        let one = RationalTF::unity(g.domain());
        let left = series(&one, &g, 1e-6).unwrap();
        let right = series(&g, &one, 1e-6).unwrap();
        prop_assert!(!left.cancelled() && !right.cancelled());
        prop_assert_eq!(&left.tf, &g);
        prop_assert_eq!(&right.tf, &g);
    }

    #[test]
    fn series_is_associative(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (a, b, c) = (random_tf(&mut rng), random_tf(&mut rng), random_tf(&mut rng));
        let tol = 1e-12;
        let left = series(&series(&a, &b, tol).unwrap().tf, &c, tol).unwrap().tf;
        let right = series(&a, &series(&b, &c, tol).unwrap().tf, tol).unwrap().tf;
        let (ln, ld) = normalized(&left);
        let (rn, rd) = normalized(&right);
        prop_assert!(close(&ln, &rn, 1e-12) && close(&ld, &rd, 1e-12), "{} vs {}", left, right);
    }

    #[test]
    fn controllable_pairs_are_stabilizable(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.random_range(1..=5usize);
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0));
        let b = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let discrete = Domain::Discrete { period: 1.0 };
        if ctrb_rank(&a, &b) == n {
            prop_assert!(stabilizable(&a, &b, discrete).unwrap());
            prop_assert!(stabilizable(&a, &b, Domain::Continuous).unwrap());
        }
    }
}
