use num_complex::Complex64 as C;
use oiptb::eigen::{eigh, eigvalsh};
use oiptb::HermitianMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
    let mut upper = vec![C::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in i..n {
            let re = rng.random_range(-1.0..1.0);
            let im = if i == j { 0.0 } else { rng.random_range(-1.0..1.0) };
            upper[i * n + j] = C::new(re, im);
        }
    }
    HermitianMatrix::from_upper(n, upper)
}

/// Cyclic Jacobi on the real symmetric embedding [[A, -B], [B, A]] of
/// H = A + iB. Every eigenvalue of H appears twice.
fn jacobi_embedding(h: &HermitianMatrix) -> Vec<f64> {
    let n = h.dim();
    let m = 2 * n;
    let mut a = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = h.get(i, j);
            a[i * m + j] = z.re;
            a[(i + n) * m + j + n] = z.re;
            a[i * m + j + n] = -z.im;
            a[(i + n) * m + j] = z.im;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..m).flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i * m + j].powi(2)).sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let (akp, akq) = (a[k * m + p], a[k * m + q]);
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let (apk, aqk) = (a[p * m + k], a[q * m + k]);
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut d: Vec<f64> = (0..m).map(|i| a[i * m + i]).collect();
    d.sort_by(f64::total_cmp);
    d
}

#[test]
fn matches_jacobi_on_real_embedding_dim_50() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let h = random_hermitian(50, &mut rng);
        let ours = eigvalsh(&h).unwrap();
        let oracle = jacobi_embedding(&h);
        for (i, v) in ours.iter().enumerate() {
            assert!((v - oracle[2 * i]).abs() < 1e-10, "value {i}: {v} vs {}", oracle[2 * i]);
            assert!((v - oracle[2 * i + 1]).abs() < 1e-10);
        }
    }
}

#[test]
fn trace_is_preserved_over_1000_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let n = rng.random_range(1..=200usize);
        let h = random_hermitian(n, &mut rng);
        let sum: f64 = eigvalsh(&h).unwrap().iter().sum();
        assert!((sum - h.trace()).abs() < 1e-9 * n as f64, "n = {n}");
    }
}

/// Random unitary from Gram–Schmidt on complex Gaussian-ish columns.
fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<C>> {
    let mut cols: Vec<Vec<C>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<C> = (0..n).map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        for _ in 0..2 {
            for u in &cols {
                let d: C = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= d * y);
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    cols
}

#[test]
fn spectrum_is_unitarily_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in [2, 7, 30] {
        let h = random_hermitian(n, &mut rng);
        let u = random_unitary(n, &mut rng);
        // (U^H H U)_ij = u_i^H H u_j
        let hu: Vec<Vec<C>> = u.iter().map(|c| h.matvec(c)).collect();
        let mut entries = vec![C::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] = u[i].iter().zip(&hu[j]).map(|(a, b)| a.conj() * b).sum();
            }
        }
        let rotated = HermitianMatrix::from_upper(n, entries);
        let a = eigvalsh(&h).unwrap();
        let b = eigvalsh(&rotated).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}

fn check_residual_and_orthonormality(h: &HermitianMatrix) {
    let r = eigh(h, true).unwrap();
    let vs = r.vectors.unwrap();
    let scale = h.norm_inf().max(1.0);
    for (lambda, v) in r.values.iter().zip(&vs) {
        let hv = h.matvec(v);
        let res = hv.iter().zip(v).map(|(a, b)| (a - b * lambda).norm_sqr()).sum::<f64>().sqrt();
        assert!(res < 1e-10 * scale, "residual {res}");
    }
    for (i, a) in vs.iter().enumerate() {
        for (j, b) in vs.iter().enumerate() {
            let d: C = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((d - want).norm() < 1e-10, "<{i}|{j}> = {d}");
        }
    }
}

#[test]
fn degenerate_and_diagonal_inputs() {
    let id = HermitianMatrix::identity(6);
    assert_eq!(eigvalsh(&id).unwrap(), vec![1.0; 6]);
    check_residual_and_orthonormality(&id);
    let one = HermitianMatrix::from_upper(1, vec![C::new(-3.5, 0.0)]);
    assert_eq!(eigvalsh(&one).unwrap(), vec![-3.5]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residual_and_orthonormality(seed in any::<u64>(), n in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        check_residual_and_orthonormality(&random_hermitian(n, &mut rng));
    }

    #[test]
    fn values_ascend_and_shift(seed in any::<u64>(), n in 1usize..30, sigma in -5.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hermitian(n, &mut rng);
        let a = eigvalsh(&h).unwrap();
        prop_assert!(a.windows(2).all(|w| w[0] <= w[1]));
        let b = eigvalsh(&h.shifted(sigma)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - sigma - y).abs() < 1e-10);
        }
    }
}
