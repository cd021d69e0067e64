//! Cross-module property tests.

use proptest::prelude::*;
use slt_core::matrix::SPECTRAL_TOL;
use slt_core::rng::CounterRng;
use slt_core::{ActivationKind, Architecture, InputDomain, Matrix, TargetNetwork};

fn matrix_strategy(rows: usize, cols: usize, c: f64) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-c..c, rows * cols)
        .prop_map(move |data| Matrix::from_vec(rows, cols, data).unwrap())
}

proptest! {
    /// max-norm ≤ spectral norm ≤ √(nm) · max-norm.
    #[test]
    fn spectral_norm_is_sandwiched_by_max_norm(
        rows in 1usize..6,
        cols in 1usize..6,
        seed in 0u64..10_000,
    ) {
        let mut rng = CounterRng::from_parts(seed, "props.sandwich", 0);
        let data: Vec<f64> = (0..rows * cols).map(|_| 2.0 * rng.next_unit() - 1.0).collect();
        let m = Matrix::from_vec(rows, cols, data).unwrap();
        let spectral = m.spectral_norm(SPECTRAL_TOL);
        let max = m.max_norm();
        prop_assert!(max <= spectral + 1e-9);
        prop_assert!(spectral <= ((rows * cols) as f64).sqrt() * max + 1e-9);
    }

    /// Power iteration against the closed-form 2x2 singular value
    /// (largest eigenvalue of MᵀM by the quadratic formula).
    #[test]
    fn spectral_norm_matches_two_by_two_oracle(m in matrix_strategy(2, 2, 1.0)) {
        let (a, b, c, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
        // MᵀM = [[a²+c², ab+cd], [ab+cd, b²+d²]].
        let p = a * a + c * c;
        let q = a * b + c * d;
        let r = b * b + d * d;
        let mean = (p + r) / 2.0;
        let disc = ((p - r) / 2.0).powi(2) + q * q;
        let lam_hi = mean + disc.sqrt();
        let lam_lo = (mean - disc.sqrt()).max(0.0);
        let sigma = lam_hi.max(0.0).sqrt();
        let got = m.spectral_norm(SPECTRAL_TOL);
        // Within tol when the iteration converges; never worse than the
        // eigengap when the cap stops it early.
        let gap = sigma - lam_lo.sqrt();
        let tol = (1e-6 * sigma).max(gap * 1.0001).max(1e-12);
        prop_assert!((got - sigma).abs() <= tol, "got {got}, oracle {sigma}");
    }

    /// Pure-ReLU networks are positively homogeneous: F(a·x) = a·F(x) for a ≥ 0.
    #[test]
    fn relu_forward_is_positively_homogeneous(
        seed in 0u64..10_000,
        scale in 0.0f64..8.0,
    ) {
        let widths = vec![3usize, 4, 2];
        let arch = Architecture::uniform(widths.clone(), ActivationKind::Relu).unwrap();
        let mut rng = CounterRng::from_parts(seed, "props.homog", 0);
        let weights: Vec<Matrix> = widths
            .windows(2)
            .map(|w| {
                let data = (0..w[0] * w[1]).map(|_| 2.0 * rng.next_unit() - 1.0).collect();
                Matrix::from_vec(w[1], w[0], data).unwrap()
            })
            .collect();
        let net = TargetNetwork::new(arch, weights, 1.0).unwrap();
        let x: Vec<f64> = (0..3).map(|_| 2.0 * rng.next_unit() - 1.0).collect();
        let scaled: Vec<f64> = x.iter().map(|v| v * scale).collect();
        let direct = net.forward(&scaled).unwrap();
        let expect: Vec<f64> = net.forward(&x).unwrap().iter().map(|v| v * scale).collect();
        for (a, b) in direct.iter().zip(&expect) {
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    /// Enlarging the input domain never decreases the activation bound.
    #[test]
    fn f_max_is_monotone_in_the_domain(seed in 0u64..10_000, extra in 1usize..5) {
        let widths = vec![2usize, 3, 1];
        let arch = Architecture::uniform(widths.clone(), ActivationKind::Relu).unwrap();
        let mut rng = CounterRng::from_parts(seed, "props.fmax", 0);
        let weights: Vec<Matrix> = widths
            .windows(2)
            .map(|w| {
                let data = (0..w[0] * w[1]).map(|_| 2.0 * rng.next_unit() - 1.0).collect();
                Matrix::from_vec(w[1], w[0], data).unwrap()
            })
            .collect();
        let net = TargetNetwork::new(arch, weights, 1.0).unwrap();
        let draw = |rng: &mut CounterRng| (0..2).map(|_| 2.0 * rng.next_unit() - 1.0).collect::<Vec<_>>();
        let base: Vec<Vec<f64>> = (0..3).map(|_| draw(&mut rng)).collect();
        let mut grown = base.clone();
        for _ in 0..extra {
            grown.push(draw(&mut rng));
        }
        let small = net.f_max(&InputDomain::new(2, base).unwrap()).unwrap();
        let large = net.f_max(&InputDomain::new(2, grown).unwrap()).unwrap();
        prop_assert!(large >= small);
    }
}
