use ialign::channel::complex_gaussian;
use ialign::numerics::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random(seed: u64, rows: usize, cols: usize, scale: f64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(&mut rng) * scale)
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 1000, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn eigh_residual_and_orthogonality(seed in any::<u64>(), n in 1usize..7, log_scale in -3.0f64..3.0) {
        let a = gram_outer(&random(seed, n, n + 1, 10f64.powf(log_scale)));
        let e = eigh(&a);
        let scale = e.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            let v = e.vectors.column(i);
            let r = (a.matrix() * v - v * Complex64::new(e.values[i], 0.0)).norm();
            prop_assert!(r / scale <= 1e-9, "residual {}", r / scale);
        }
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let g = e.vectors.adjoint() * &e.vectors - CMat::identity(n, n);
        prop_assert!(max_abs(&g) <= 1e-10);

        // independent reference
        let mut reference: Vec<f64> = a.matrix().clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        reference.sort_by(f64::total_cmp);
        for (x, y) in e.values.iter().zip(&reference) {
            prop_assert!((x - y).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn eigh_smallest_is_prefix(seed in any::<u64>(), n in 2usize..6) {
        let a = gram_outer(&random(seed, n, n, 1.0));
        let d = 1 + (seed as usize) % n;
        let all = eigh(&a);
        let small = eigh_smallest(&a, d).unwrap();
        for i in 0..d {
            prop_assert!((small.values[i] - all.values[i]).abs() <= 1e-12 * all.values[n - 1].max(1.0));
        }
    }

    #[test]
    fn orthonormalize_idempotent(seed in any::<u64>(), n in 1usize..7, extra in 0usize..3, log_scale in -3.0f64..3.0) {
        let g = random(seed, n + extra, n, 10f64.powf(log_scale));
        let q = orthonormalize(&g).unwrap();
        let again = orthonormalize(&q).unwrap();
        prop_assert!(max_abs(&(again - &q)) <= 1e-12);
        let gram = q.adjoint() * &q - CMat::identity(n, n);
        prop_assert!(max_abs(&gram) <= 1e-12);
    }

    #[test]
    fn logdet_matches_eigen_sum(seed in any::<u64>(), n in 1usize..7, log_scale in -2.0f64..4.0) {
        let a = gram_outer(&random(seed, n, n, 10f64.powf(log_scale))).shifted(1.0);
        let direct = logdet_pd(&a).unwrap();
        let from_eigs: f64 = eigh(&a).values.iter().map(|v| v.log2()).sum();
        prop_assert!((direct - from_eigs).abs() <= 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn solve_pd_residual(seed in any::<u64>(), n in 1usize..7, log_scale in -2.0f64..4.0) {
        let b = gram_outer(&random(seed, n, n, 10f64.powf(log_scale))).shifted(1.0);
        let y = random(seed ^ 0x5555, n, 1, 1.0).column(0).into_owned();
        let x = solve_pd(&b, &y).unwrap();
        let r = (b.matrix() * &x - &y).norm() / y.norm();
        prop_assert!(r <= 1e-10, "relative residual {r}");
    }

    #[test]
    fn cholesky_reconstructs(seed in any::<u64>(), n in 1usize..7) {
        let a = gram_outer(&random(seed, n, n, 1.0)).shifted(0.5);
        let l = cholesky(&a).unwrap();
        let err = max_abs(&(&l * l.adjoint() - a.matrix()));
        prop_assert!(err <= 1e-12 * max_abs(a.matrix()).max(1.0));
    }

    #[test]
    fn inv_sqrt_whitens(seed in any::<u64>(), n in 1usize..5) {
        let a = gram_outer(&random(seed, n, n, 1.0)).shifted(1.0);
        let w = inv_sqrt_pd(&a).unwrap();
        let e = w.matrix() * a.matrix() * w.matrix() - CMat::identity(n, n);
        prop_assert!(max_abs(&e) <= 1e-10);
    }

    #[test]
    fn fix_phase_is_canonical(seed in any::<u64>(), n in 1usize..6, theta in 0.0f64..std::f64::consts::TAU) {
        let mut x = random(seed, n, 1, 1.0).column(0).into_owned();
        let mut y = &x * Complex64::from_polar(1.0, theta);
        fix_phase(&mut x);
        fix_phase(&mut y);
        prop_assert!((x - y).norm() <= 1e-12);
    }
}
