//! Single-site Pauli actions on computational basis states.
//!
//! Site `j` (1-based) lives in bit `N - j` of the basis index, so site 1 is
//! the most significant bit. A clear bit is spin up (`σ^z = +1`, occupied
//! fermion site); a set bit is spin down.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(format!("unknown axis '{other}' (expected x, y or z)")),
        }
    }
}

/// Bit mask of site `j` (1-based) in an `n_sites` chain.
#[inline]
pub fn site_mask(site: usize, n_sites: usize) -> usize {
    1usize << (n_sites - site)
}

/// `σ^z` eigenvalue of `site` in basis state `index`.
#[inline]
pub fn z_value(index: usize, site: usize, n_sites: usize) -> f64 {
    if index & site_mask(site, n_sites) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `σ^a_site |index> = phase |target>`.
#[inline]
pub fn apply_pauli(index: usize, site: usize, n_sites: usize, axis: Axis) -> (usize, Complex64) {
    let mask = site_mask(site, n_sites);
    let up = index & mask == 0;
    match axis {
        Axis::X => (index ^ mask, Complex64::new(1.0, 0.0)),
        // σ^y|↑> = i|↓>, σ^y|↓> = -i|↑>
        Axis::Y => (
            index ^ mask,
            if up {
                Complex64::new(0.0, 1.0)
            } else {
                Complex64::new(0.0, -1.0)
            },
        ),
        Axis::Z => (index, Complex64::new(if up { 1.0 } else { -1.0 }, 0.0)),
    }
}

/// Applies `σ^a_i σ^a_j` to a basis state.
#[inline]
pub fn apply_pauli_pair(index: usize, i: usize, j: usize, n_sites: usize, axis: Axis) -> (usize, Complex64) {
    let (mid, p1) = apply_pauli(index, j, n_sites, axis);
    let (out, p2) = apply_pauli(mid, i, n_sites, axis);
    (out, p1 * p2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_y_is_i_x_z() {
        // σ^y = i σ^x σ^z
        for index in 0..4 {
            let (t, py) = apply_pauli(index, 1, 2, Axis::Y);
            let (tz, pz) = apply_pauli(index, 1, 2, Axis::Z);
            let (tx, px) = apply_pauli(tz, 1, 2, Axis::X);
            assert_eq!(t, tx);
            assert!((py - Complex64::new(0.0, 1.0) * px * pz).norm() < 1e-15);
        }
    }

    #[test]
    fn site_one_is_most_significant() {
        assert_eq!(site_mask(1, 3), 0b100);
        assert_eq!(site_mask(3, 3), 0b001);
        assert_eq!(z_value(0b100, 1, 3), -1.0);
        assert_eq!(z_value(0b100, 2, 3), 1.0);
    }
}
