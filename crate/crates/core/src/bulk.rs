//! The 10×10 sp³s* nearest-neighbour bulk Hamiltonian with on-site
//! spin-orbit coupling.
//!
//! Basis order (canonical index map):
//!
//! | index | 0   | 1    | 2    | 3    | 4    | 5   | 6    | 7    | 8    | 9    |
//! |-------|-----|------|------|------|------|-----|------|------|------|------|
//! | orb.  | s_a | px_a | py_a | pz_a | s*_a | s_c | px_c | py_c | pz_c | s*_c |

use num_complex::Complex64;

use crate::eigen::eigvalsh;
use crate::error::{Error, Result};
use crate::hermitian::HermitianMatrix;
use crate::model::{OipSet, WaveVector};
use crate::units::reduced_to_inverse_angstrom;

pub const S: usize = 0;
pub const PX: usize = 1;
pub const PY: usize = 2;
pub const PZ: usize = 3;
pub const S_STAR: usize = 4;
/// Offset of the cation orbitals.
pub const CATION: usize = 5;

pub const BULK_DIM: usize = 10;

/// Sign pattern of the four nearest-neighbour bonds, in units of a/4.
pub const ZB_BOND_SIGNS: [[f64; 3]; 4] =
    [[1.0, 1.0, 1.0], [-1.0, -1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0]];

type C = Complex64;

const fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Anion→cation nearest-neighbour vectors in Å.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BondVectors {
    pub lattice_constant: f64,
    pub tau: [[f64; 3]; 4],
}

impl BondVectors {
    pub fn zinc_blende(lattice_constant: f64) -> Self {
        let q = lattice_constant / 4.0;
        let tau = ZB_BOND_SIGNS.map(|s| s.map(|x| x * q));
        BondVectors { lattice_constant, tau }
    }

    pub fn bond_length(&self) -> f64 {
        self.tau[0].iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Bloch sums g₀…g₃ over the four bonds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseFactors {
    pub g: [C; 4],
}

/// `g_j = ¼ Σ_m σ_j(m) exp(i k·τ_m)` with σ₀ = 1 and σ₁,σ₂,σ₃ the signs of
/// the x, y, z components of τ_m.
pub fn phase_factors(k: &WaveVector, tau: &BondVectors) -> PhaseFactors {
    let a = tau.lattice_constant;
    let kc = k.as_array().map(|x| reduced_to_inverse_angstrom(x, a));
    let mut g = [c(0.0, 0.0); 4];
    for t in &tau.tau {
        let phase = kc[0] * t[0] + kc[1] * t[1] + kc[2] * t[2];
        let e = C::from_polar(0.25, phase);
        g[0] += e;
        for j in 0..3 {
            g[j + 1] += e * t[j].signum();
        }
    }
    PhaseFactors { g }
}

/// On-site 5×5 block of one atom, spin-orbit terms included.
pub fn onsite_block(es: f64, ep: f64, ess: f64, delta: f64) -> [[C; 5]; 5] {
    let d = delta / 3.0;
    let mut h = [[c(0.0, 0.0); 5]; 5];
    h[S][S] = c(es, 0.0);
    h[PX][PX] = c(ep, 0.0);
    h[PY][PY] = c(ep, 0.0);
    h[PZ][PZ] = c(ep, 0.0);
    h[S_STAR][S_STAR] = c(ess, 0.0);
    let so = spin_orbit_block(d);
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                h[PX + i][PX + j] = so[i][j];
            }
        }
    }
    h
}

/// The p-shell spin-orbit coupling `(Δ/3)·M` with
/// `M = [[0, -i, 1], [i, 0, -i], [1, i, 0]]` (eigenvalues 1, 1, -2).
fn spin_orbit_block(d: f64) -> [[C; 3]; 3] {
    [
        [c(0.0, 0.0), c(0.0, -d), c(d, 0.0)],
        [c(0.0, d), c(0.0, 0.0), c(0.0, -d)],
        [c(d, 0.0), c(0.0, d), c(0.0, 0.0)],
    ]
}

pub fn anion_onsite(o: &OipSet) -> [[C; 5]; 5] {
    onsite_block(o.e_sa, o.e_pa, o.e_ssa, o.delta_a)
}

pub fn cation_onsite(o: &OipSet) -> [[C; 5]; 5] {
    onsite_block(o.e_sc, o.e_pc, o.e_ssc, o.delta_c)
}

/// Two-centre anion→cation hopping for a single bond along `dir` (need not
/// be normalized), Slater–Koster form.
///
/// Normalized so that for the ideal tetrahedral directions the sum over the
/// four bonds with their Bloch phases reproduces the g-weighted coupling
/// block of the bulk matrix; distorted bonds follow from the direction
/// cosines with V_σ = (E_xx + 2E_xy)/4, V_π = (E_xx − E_xy)/4.
pub fn two_center_block(o: &OipSet, dir: [f64; 3]) -> [[f64; 5]; 5] {
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    let l = dir.map(|x| x / norm);
    let r3 = 3f64.sqrt();
    let v_sigma = (o.e_xaxc + 2.0 * o.e_xayc) / 4.0;
    let v_pi = (o.e_xaxc - o.e_xayc) / 4.0;
    let mut t = [[0.0; 5]; 5];
    t[S][S] = o.e_sasc / 4.0;
    for i in 0..3 {
        t[S][PX + i] = r3 * l[i] * o.e_saxc / 4.0;
        t[PX + i][S] = -r3 * l[i] * o.e_xasc / 4.0;
        t[PX + i][S_STAR] = -r3 * l[i] * o.e_xassc / 4.0;
        t[S_STAR][PX + i] = r3 * l[i] * o.e_ssaxc / 4.0;
        for j in 0..3 {
            t[PX + i][PX + j] = if i == j {
                l[i] * l[i] * v_sigma + (1.0 - l[i] * l[i]) * v_pi
            } else {
                l[i] * l[j] * (v_sigma - v_pi)
            };
        }
    }
    t
}

/// Assembles the 10×10 bulk Hamiltonian at reduced wave vector `k`.
pub fn build_bulk_hamiltonian(o: &OipSet, k: &WaveVector, lattice_constant: f64) -> Result<HermitianMatrix> {
    o.validate().into_result()?;
    if !k.is_finite() {
        return Err(Error::Domain("wave vector must be finite".into()));
    }
    if !(lattice_constant > 0.0 && lattice_constant.is_finite()) {
        return Err(Error::Domain(format!("lattice constant {lattice_constant} must be positive")));
    }
    let PhaseFactors { g: [g0, g1, g2, g3] } = phase_factors(k, &BondVectors::zinc_blende(lattice_constant));
    let mut h = vec![c(0.0, 0.0); BULK_DIM * BULK_DIM];
    let mut set = |i: usize, j: usize, v: C| h[i * BULK_DIM + j] = v;

    for (off, block) in [(0, anion_onsite(o)), (CATION, cation_onsite(o))] {
        for i in 0..5 {
            for j in i..5 {
                set(off + i, off + j, block[i][j]);
            }
        }
    }

    let cs = CATION + S;
    let (cx, cy, cz, css) = (CATION + PX, CATION + PY, CATION + PZ, CATION + S_STAR);
    // s_a row
    set(S, cs, g0 * o.e_sasc);
    set(S, cx, g1 * o.e_saxc);
    set(S, cy, g2 * o.e_saxc);
    set(S, cz, g3 * o.e_saxc);
    // p_a rows
    set(PX, cs, -g1 * o.e_xasc);
    set(PX, cx, g0 * o.e_xaxc);
    set(PX, cy, g3 * o.e_xayc);
    set(PX, cz, g2 * o.e_xayc);
    set(PX, css, -g1 * o.e_xassc);
    set(PY, cs, -g2 * o.e_xasc);
    set(PY, cx, g3 * o.e_xayc);
    set(PY, cy, g0 * o.e_xaxc);
    set(PY, cz, g1 * o.e_xayc);
    set(PY, css, -g2 * o.e_xassc);
    set(PZ, cs, -g3 * o.e_xasc);
    set(PZ, cx, g2 * o.e_xayc);
    set(PZ, cy, g1 * o.e_xayc);
    set(PZ, cz, g0 * o.e_xaxc);
    set(PZ, css, -g3 * o.e_xassc);
    // s*_a row
    set(S_STAR, cx, g1 * o.e_ssaxc);
    set(S_STAR, cy, g2 * o.e_ssaxc);
    set(S_STAR, cz, g3 * o.e_ssaxc);

    Ok(HermitianMatrix::from_upper(BULK_DIM, h))
}

/// The ten band energies at `k`, ascending.
pub fn band_energies(o: &OipSet, k: &WaveVector, lattice_constant: f64) -> Result<Vec<f64>> {
    let h = build_bulk_hamiltonian(o, k, lattice_constant)?;
    eigvalsh(&h).map_err(|e| Error::AtKPoint { k: k.as_array(), source: Box::new(e) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ALAS_OIPS, GAAS_LATTICE_CONSTANT as A, GAAS_OIPS};

    fn close(a: C, b: C, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn phase_factors_at_gamma() {
        let p = phase_factors(&WaveVector::GAMMA, &BondVectors::zinc_blende(A));
        assert_eq!(p.g[0], c(1.0, 0.0));
        for g in &p.g[1..] {
            assert_eq!(*g, c(0.0, 0.0));
        }
    }

    #[test]
    fn phase_factors_at_x() {
        // k·τ = ±π/2 for every bond: g0 = (i - i + i - i)/4, g1 = (i + i + i + i)/4.
        let p = phase_factors(&WaveVector::X, &BondVectors::zinc_blende(A));
        assert!(close(p.g[0], c(0.0, 0.0), 1e-15));
        assert!(close(p.g[1], c(0.0, 1.0), 1e-15));
        assert!(close(p.g[2], c(0.0, 0.0), 1e-15));
        assert!(close(p.g[3], c(0.0, 0.0), 1e-15));
    }

    #[test]
    fn phase_factors_conjugate_under_inversion() {
        let tau = BondVectors::zinc_blende(A);
        let k = WaveVector::new(0.31, -0.12, 0.77);
        let p = phase_factors(&k, &tau);
        let q = phase_factors(&k.scaled(-1.0), &tau);
        for j in 0..4 {
            assert!(close(p.g[j].conj(), q.g[j], 1e-15));
            assert!(p.g[j].norm() <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn bond_geometry() {
        let tau = BondVectors::zinc_blende(A);
        for t in &tau.tau {
            let len = t.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((len - A * 3f64.sqrt() / 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn gamma_entries() {
        let h = build_bulk_hamiltonian(&GAAS_OIPS, &WaveVector::GAMMA, A).unwrap();
        assert_eq!(h.get(0, 5), c(-6.7941, 0.0));
        assert!(close(h.get(1, 2), c(0.0, -0.421 / 3.0), 1e-15));
        assert!((h.get(1, 2).im + 0.140333).abs() < 1e-6);
        assert_eq!(h.get(0, 6), c(0.0, 0.0));
        assert_eq!(h.hermitian_deviation(), 0.0);
    }

    #[test]
    fn gamma_is_block_diagonal() {
        // Blocks: {s_a, s_c}, {s*_a}, {s*_c}, {p_a, p_c}.
        let block = |i: usize| match i {
            0 | 5 => 0,
            4 => 1,
            9 => 2,
            _ => 3,
        };
        for o in [GAAS_OIPS, ALAS_OIPS] {
            let h = build_bulk_hamiltonian(&o, &WaveVector::GAMMA, A).unwrap();
            for i in 0..10 {
                for j in 0..10 {
                    if block(i) != block(j) {
                        assert_eq!(h.get(i, j), c(0.0, 0.0), "({i},{j})");
                    }
                }
            }
        }
    }

    #[test]
    fn bond_sum_reproduces_coupling_block() {
        // Dual route: Σ_m exp(i k·τ_m)·T(τ_m) against the g-weighted block.
        let tau = BondVectors::zinc_blende(A);
        for k in [WaveVector::new(0.2, 0.3, -0.45), WaveVector::L, WaveVector::X] {
            let h = build_bulk_hamiltonian(&ALAS_OIPS, &k, A).unwrap();
            let kc = k.as_array().map(|x| reduced_to_inverse_angstrom(x, A));
            let mut sum = [[c(0.0, 0.0); 5]; 5];
            for t in &tau.tau {
                let ph = C::from_polar(1.0, kc[0] * t[0] + kc[1] * t[1] + kc[2] * t[2]);
                let blk = two_center_block(&ALAS_OIPS, *t);
                for i in 0..5 {
                    for j in 0..5 {
                        sum[i][j] += ph * blk[i][j];
                    }
                }
            }
            for i in 0..5 {
                for j in 0..5 {
                    assert!(close(sum[i][j], h.get(i, CATION + j), 1e-12), "k={k:?} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        let o = OipSet { delta_c: -1.0, ..GAAS_OIPS };
        assert!(matches!(build_bulk_hamiltonian(&o, &WaveVector::GAMMA, A), Err(Error::Parameter(_))));
        let k = WaveVector::new(f64::NAN, 0.0, 0.0);
        assert!(build_bulk_hamiltonian(&GAAS_OIPS, &k, A).is_err());
    }

    #[test]
    fn spin_orbit_eigenvalues() {
        // M has spectrum {1, 1, -2}; so the p-shell splits into +Δ/3 (×2) and -2Δ/3.
        let h = onsite_block(0.0, 0.0, 0.0, 3.0);
        let mut data = vec![c(0.0, 0.0); 9];
        for i in 0..3 {
            for j in 0..3 {
                data[i * 3 + j] = h[PX + i][PX + j];
            }
        }
        let m = HermitianMatrix::from_entries(3, data).unwrap();
        let v = eigvalsh(&m).unwrap();
        assert!((v[0] + 2.0).abs() < 1e-12);
        assert!((v[1] - 1.0).abs() < 1e-12);
        assert!((v[2] - 1.0).abs() < 1e-12);
    }
}
