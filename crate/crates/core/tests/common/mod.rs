//! Dense full-space reference pipeline built from Kronecker products,
//! sharing no code with the sector solver.

#![allow(dead_code)]

use majorana_core::C64;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn eye2() -> DMatrix<C64> {
    DMatrix::identity(2, 2)
}

/// Basis order (↑, ↓); ↑ is σz = +1.
pub fn sz() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
}

pub fn sx() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

pub fn sy() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[c(0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), c(0.0)])
}

/// σ+ = |↑⟩⟨↓|
pub fn sp() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)])
}

pub fn sm() -> DMatrix<C64> {
    sp().transpose()
}

/// Tensor product with site 1 as the most significant factor.
pub fn chain_product(ops: &[DMatrix<C64>]) -> DMatrix<C64> {
    ops.iter()
        .skip(1)
        .fold(ops[0].clone(), |acc, op| acc.kronecker(op))
}

pub fn site_op(op: &DMatrix<C64>, site: usize, n: usize) -> DMatrix<C64> {
    let ops: Vec<_> = (1..=n).map(|j| if j == site { op.clone() } else { eye2() }).collect();
    chain_product(&ops)
}

pub fn two_site_op(a: &DMatrix<C64>, i: usize, b: &DMatrix<C64>, j: usize, n: usize) -> DMatrix<C64> {
    site_op(a, i, n) * site_op(b, j, n)
}

/// H = Σ [w(σ+σ- + σ-σ+) + Δ(σ+σ+ + σ-σ-)] - μ/2 Σ σz + U/4 Σ σzσz.
pub fn hamiltonian(n: usize, w: f64, delta: f64, mu: f64, u: f64) -> DMatrix<C64> {
    let dim = 1usize << n;
    let mut h = DMatrix::from_element(dim, dim, c(0.0));
    for j in 1..n {
        h += (two_site_op(&sp(), j, &sm(), j + 1, n) + two_site_op(&sm(), j, &sp(), j + 1, n)) * c(w);
        h += (two_site_op(&sp(), j, &sp(), j + 1, n) + two_site_op(&sm(), j, &sm(), j + 1, n)) * c(delta);
        h += two_site_op(&sz(), j, &sz(), j + 1, n) * c(u / 4.0);
    }
    for j in 1..=n {
        h -= site_op(&sz(), j, n) * c(mu / 2.0);
    }
    h
}

pub fn parity(n: usize) -> DMatrix<C64> {
    chain_product(&vec![sz(); n])
}

/// (-1)^(j-1) Π_{k<j} σz_k σx_j
pub fn majorana(j: usize, n: usize) -> DMatrix<C64> {
    let ops: Vec<_> = (1..=n)
        .map(|k| match k.cmp(&j) {
            std::cmp::Ordering::Less => sz(),
            std::cmp::Ordering::Equal => sx(),
            std::cmp::Ordering::Greater => eye2(),
        })
        .collect();
    let sign = if (j - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
    chain_product(&ops) * c(sign)
}

pub fn number(j: usize, n: usize) -> DMatrix<C64> {
    (site_op(&sz(), j, n) + DMatrix::identity(1 << n, 1 << n)) * c(0.5)
}

pub struct Oracle {
    pub n: usize,
    pub even_energies: Vec<f64>,
    pub odd_energies: Vec<f64>,
    pub even_states: Vec<DVector<C64>>,
    pub odd_states: Vec<DVector<C64>>,
}

/// Diagonalizes H + s P on the full space; the shift separates the two
/// parity sectors so every eigenvector has definite parity.
pub fn oracle(n: usize, w: f64, delta: f64, mu: f64, u: f64) -> Oracle {
    let h = hamiltonian(n, w, delta, mu, u);
    let p = parity(n);
    let shift = 10.0 * (1.0 + h.iter().map(|z| z.norm()).sum::<f64>());
    let eig = SymmetricEigen::new(&h + &p * c(shift));
    let mut even = Vec::new();
    let mut odd = Vec::new();
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(i).into_owned();
        let pv = (v.adjoint() * &p * &v)[(0, 0)].re;
        let e = (v.adjoint() * &h * &v)[(0, 0)].re;
        assert!((pv.abs() - 1.0).abs() < 1e-9, "mixed parity eigenvector");
        assert!((lam - e - shift * pv).abs() < 1e-6 * shift);
        if pv > 0.0 {
            even.push((e, v));
        } else {
            odd.push((e, v));
        }
    }
    even.sort_by(|a, b| a.0.total_cmp(&b.0));
    odd.sort_by(|a, b| a.0.total_cmp(&b.0));
    Oracle {
        n,
        even_energies: even.iter().map(|x| x.0).collect(),
        odd_energies: odd.iter().map(|x| x.0).collect(),
        even_states: even.into_iter().map(|x| x.1).collect(),
        odd_states: odd.into_iter().map(|x| x.1).collect(),
    }
}

pub fn braket(a: &DVector<C64>, op: &DMatrix<C64>, b: &DVector<C64>) -> C64 {
    (a.adjoint() * op * b)[(0, 0)]
}

impl Oracle {
    /// C^{nm}_j = ⟨e_n| c_j + c_j† |o_m⟩ for j = 1..N.
    pub fn c_row(&self, n: usize, m: usize) -> Vec<C64> {
        (1..=self.n)
            .map(|j| braket(&self.even_states[n - 1], &majorana(j, self.n), &self.odd_states[m - 1]))
            .collect()
    }

    /// D^{nm}_{αj} = ⟨α_n| c_j† c_j |α_m⟩.
    pub fn d_row(&self, even: bool, n: usize, m: usize) -> Vec<C64> {
        let s = if even { &self.even_states } else { &self.odd_states };
        (1..=self.n).map(|j| braket(&s[n - 1], &number(j, self.n), &s[m - 1])).collect()
    }

    pub fn gamma_low(&self, g: f64) -> f64 {
        g * self.c_row(1, 1).iter().sum::<C64>().norm()
    }

    pub fn gamma_tilde_low(&self, g: f64) -> f64 {
        let e = self.d_row(true, 1, 1);
        let o = self.d_row(false, 1, 1);
        g * e.iter().zip(&o).map(|(a, b)| a - b).sum::<C64>().norm()
    }

    pub fn dissipative_weight(&self, n: usize, m: usize) -> f64 {
        self.c_row(n, m).iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn dephasing_weight(&self, even: bool, n: usize, m: usize) -> f64 {
        self.d_row(even, n, m).iter().sum::<C64>().norm_sqr()
    }

    /// Smallest spacing among the lowest `k` levels of either sector.
    pub fn min_spacing(&self, k: usize) -> f64 {
        [&self.even_energies, &self.odd_energies]
            .iter()
            .flat_map(|e| e[..k.min(e.len())].windows(2).map(|w| w[1] - w[0]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Distance between two vectors after the best global phase alignment.
pub fn phase_aligned_distance(a: &[C64], b: &[C64]) -> f64 {
    let overlap = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { c(1.0) };
    a.iter().zip(b).map(|(x, y)| (x * phase - y).norm_sqr()).sum::<f64>().sqrt()
}

/// x-basis Néel product state |1010..⟩_x (first = true) or |0101..⟩_x,
/// with |1⟩_x = |+⟩ and |0⟩_x = |−⟩.
pub fn x_neel(n: usize, first: bool) -> DVector<C64> {
    let plus = DVector::from_vec(vec![c(1.0 / 2f64.sqrt()), c(1.0 / 2f64.sqrt())]);
    let minus = DVector::from_vec(vec![c(1.0 / 2f64.sqrt()), c(-1.0 / 2f64.sqrt())]);
    let mut v = DVector::from_vec(vec![c(1.0)]);
    for j in 1..=n {
        let one = (j % 2 == 1) == first;
        v = v.kronecker(if one { &plus } else { &minus });
    }
    v
}
