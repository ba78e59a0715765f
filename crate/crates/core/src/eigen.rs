//! Dense complex Hermitian eigensolver.
//!
//! Householder reduction to Hermitian tridiagonal form, a diagonal phase
//! transform to a real symmetric tridiagonal matrix, then implicit-shift QL
//! iterations. Eigenvectors, when requested, are accumulated and
//! back-transformed through the reflectors.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;

/// Implicit QL sweeps allowed per eigenvalue before giving up.
const MAX_SWEEPS_PER_VALUE: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    /// Ascending.
    pub values: Vec<f64>,
    /// `vectors[j]` belongs to `values[j]`; orthonormal.
    pub vectors: Option<Vec<Vec<Complex64>>>,
}

pub fn eigh(h: &HermitianMatrix, want_vectors: bool) -> Result<EigenResult> {
    let n = h.dim();
    if n == 0 {
        return Ok(EigenResult { values: Vec::new(), vectors: want_vectors.then(Vec::new) });
    }
    let tri = tridiagonalize(h);
    let mut d = tri.diag.clone();
    let mut e = tri.off_real.clone();
    e.push(0.0);
    let mut z = want_vectors.then(|| {
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        z
    });
    tql2(&mut d, &mut e, z.as_deref_mut())?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vectors = z.map(|z| {
        order
            .iter()
            .map(|&j| {
                let mut v: Vec<Complex64> =
                    (0..n).map(|i| tri.phases[i] * z[j * n + i]).collect();
                tri.apply_q(&mut v);
                v
            })
            .collect()
    });
    Ok(EigenResult { values, vectors })
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(h: &HermitianMatrix) -> Result<Vec<f64>> {
    eigh(h, false).map(|r| r.values)
}

/// Unitary reduction `A = Q·D·T·D^H·Q^H` with `T` real symmetric tridiagonal.
struct Tridiagonal {
    diag: Vec<f64>,
    off_real: Vec<f64>,
    phases: Vec<Complex64>,
    /// Unit Householder vectors; reflector `k` acts on indices `k+1..n`.
    reflectors: Vec<Vec<Complex64>>,
}

impl Tridiagonal {
    /// `v ← Q v` with `Q = H_0 H_1 ⋯ H_{n-3}`.
    fn apply_q(&self, v: &mut [Complex64]) {
        for (k, u) in self.reflectors.iter().enumerate().rev() {
            if u.is_empty() {
                continue;
            }
            let tail = &mut v[k + 1..];
            let dot: Complex64 = u.iter().zip(tail.iter()).map(|(a, b)| a.conj() * b).sum();
            let s = dot * 2.0;
            for (t, ui) in tail.iter_mut().zip(u) {
                *t -= ui * s;
            }
        }
    }
}

fn tridiagonalize(h: &HermitianMatrix) -> Tridiagonal {
    let n = h.dim();
    let mut a = h.as_slice().to_vec();
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    let mut p = vec![Complex64::new(0.0, 0.0); n];

    for k in 0..n.saturating_sub(1) {
        let m = n - k - 1;
        let x: Vec<Complex64> = (0..m).map(|i| a[(k + 1 + i) * n + k]).collect();
        let tail_norm2: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if k + 2 >= n || tail_norm2 == 0.0 {
            off.push(x[0]);
            reflectors.push(Vec::new());
            continue;
        }
        let xnorm = (x[0].norm_sqr() + tail_norm2).sqrt();
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { Complex64::new(1.0, 0.0) };
        let alpha = -phase * xnorm;
        let mut u = x;
        u[0] -= alpha;
        let unorm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in u.iter_mut() {
            *z /= unorm;
        }

        // Trailing block B = a[k+1.., k+1..]:  B ← B - 2(u w^H + w u^H),
        // w = p - (u^H p) u, p = B u.
        let off0 = k + 1;
        for i in 0..m {
            let row = &a[(off0 + i) * n + off0..(off0 + i) * n + n];
            p[i] = row.iter().zip(&u).map(|(b, ui)| b * ui).sum();
        }
        let kappa: Complex64 = u.iter().zip(&p[..m]).map(|(ui, pi)| ui.conj() * pi).sum();
        let w: Vec<Complex64> = (0..m).map(|i| p[i] - kappa * u[i]).collect();
        for i in 0..m {
            let ui2 = u[i] * 2.0;
            let wi2 = w[i] * 2.0;
            let row = &mut a[(off0 + i) * n + off0..(off0 + i) * n + n];
            for j in 0..m {
                row[j] -= ui2 * w[j].conj() + wi2 * u[j].conj();
            }
        }
        off.push(alpha);
        reflectors.push(u);
    }

    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    let mut phases = Vec::with_capacity(n);
    phases.push(Complex64::new(1.0, 0.0));
    let mut off_real = Vec::with_capacity(off.len());
    for (k, e) in off.iter().enumerate() {
        let r = e.norm();
        let next = if r > 0.0 { phases[k] * (e / r) } else { phases[k] };
        phases.push(next);
        off_real.push(r);
    }
    Tridiagonal { diag, off_real, phases, reflectors }
}

/// Implicit QL on a real symmetric tridiagonal matrix (`d` diagonal, `e[i]`
/// couples `i` and `i+1`, `e[n-1] = 0`). On return `d` holds the eigenvalues
/// (unsorted) and row `j` of `zt`, if given, the eigenvector of `d[j]`.
fn tql2(d: &mut [f64], e: &mut [f64], mut zt: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_SWEEPS_PER_VALUE {
                    return Err(Error::NoConvergence { dim: n, residual: e[l].abs() });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(zt) = zt.as_deref_mut() {
                        let (lo, hi) = zt.split_at_mut((i + 1) * n);
                        let zi = &mut lo[i * n..i * n + n];
                        let zi1 = &mut hi[..n];
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let hh = *b;
                            *b = s * *a + c * hh;
                            *a = c * *a - s * hh;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if !(e[l].abs() > eps * tst1) {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    if d.iter().any(|x| !x.is_finite()) {
        return Err(Error::NoConvergence { dim: n, residual: f64::NAN });
    }
    Ok(())
}
