//! Hermitian eigensolvers: a dense path (LAPACK-free, via nalgebra) and a
//! thick-restarted block Lanczos for the lowest few pairs of large blocks.
//!
//! The Lanczos block is at least as wide as the number of requested pairs, so
//! a degenerate level among the lowest `k` shows up with its full
//! multiplicity (up to `k`) instead of collapsing to a single Ritz vector.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::operator::{OperatorMatrix, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Eigenpairs in ascending order; column `i` of `vectors` belongs to
/// `values[i]`.
#[derive(Debug, Clone)]
pub struct RawEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
    pub matvecs: usize,
    pub worst_residual: f64,
}

/// Full diagonalization. Real blocks go through the real symmetric solver,
/// which is several times faster than the complex one.
pub fn dense_eigh(op: &OperatorMatrix) -> RawEigen {
    let (values, vectors) = if op.is_real() {
        let eig = SymmetricEigen::new(op.to_dense_real());
        (eig.eigenvalues.as_slice().to_vec(), eig.eigenvectors.map(|x| C64::new(x, 0.0)))
    } else {
        let eig = SymmetricEigen::new(op.to_dense());
        (eig.eigenvalues.as_slice().to_vec(), eig.eigenvectors)
    };
    let (values, vectors) = sort_pairs(values, vectors);
    RawEigen {
        values,
        vectors,
        matvecs: 0,
        worst_residual: 0.0,
    }
}

fn sort_pairs(values: Vec<f64>, vectors: DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors = DMatrix::from_fn(vectors.nrows(), order.len(), |r, c| vectors[(r, order[c])]);
    (sorted_values, sorted_vectors)
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Absolute residual target `||H v - λ v||`.
    pub tol: f64,
    /// Total matrix-application budget per requested pair.
    pub max_matvecs_per_pair: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_matvecs_per_pair: 10_000,
            seed: 0x5eed_cafe,
        }
    }
}

/// Failure of the iterative solver, carrying its best effort.
#[derive(Debug, Clone, Copy)]
pub struct LanczosFailure {
    pub matvecs: usize,
    pub worst_residual: f64,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).fold(ZERO, |acc, (x, y)| acc + x.conj() * y)
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn scale(alpha: f64, x: &mut [C64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// Two rounds of classical Gram-Schmidt against an orthonormal set.
fn orthogonalize(v: &mut [C64], basis: &[Vec<C64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            axpy(-c, q, v);
        }
    }
}

struct Krylov<'a> {
    op: &'a OperatorMatrix,
    q: Vec<Vec<C64>>,
    aq: Vec<Vec<C64>>,
    /// Projected matrix `Q^H A Q`, row-major with stride `cap`.
    t: Vec<C64>,
    cap: usize,
    matvecs: usize,
}

impl<'a> Krylov<'a> {
    fn new(op: &'a OperatorMatrix, cap: usize) -> Self {
        Self {
            op,
            q: Vec::with_capacity(cap),
            aq: Vec::with_capacity(cap),
            t: vec![ZERO; cap * cap],
            cap,
            matvecs: 0,
        }
    }

    fn len(&self) -> usize {
        self.q.len()
    }

    /// Appends an orthonormal vector together with its image under `A`.
    fn push_with_image(&mut self, v: Vec<C64>, av: Vec<C64>) {
        let c = self.q.len();
        for i in 0..c {
            let x = dot(&self.q[i], &av);
            self.t[i * self.cap + c] = x;
            self.t[c * self.cap + i] = x.conj();
        }
        self.t[c * self.cap + c] = C64::new(dot(&v, &av).re, 0.0);
        self.q.push(v);
        self.aq.push(av);
    }

    fn push(&mut self, v: Vec<C64>) {
        let av = self.op.apply(&v);
        self.matvecs += 1;
        self.push_with_image(v, av);
    }

    /// Orthonormalizes `candidates` against the basis and each other,
    /// dropping directions already contained in the span. Returns how many
    /// vectors were added.
    fn extend(&mut self, candidates: Vec<Vec<C64>>) -> usize {
        let mut added = 0;
        for mut v in candidates {
            if self.len() >= self.cap {
                break;
            }
            let before = norm(&v);
            if before == 0.0 {
                continue;
            }
            orthogonalize(&mut v, &self.q);
            let after = norm(&v);
            if after <= 1e-10 * before || after < 1e-300 {
                continue;
            }
            scale(1.0 / after, &mut v);
            self.push(v);
            added += 1;
        }
        added
    }

    fn projected(&self) -> DMatrix<C64> {
        let m = self.len();
        DMatrix::from_fn(m, m, |i, j| self.t[i * self.cap + j])
    }
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<C64> {
    (0..dim).map(|_| C64::new(rng.gen::<f64>() - 0.5, 0.0)).collect()
}

/// Lowest `k` eigenpairs of a Hermitian operator by thick-restarted block
/// Lanczos with full reorthogonalization.
pub fn block_lanczos(op: &OperatorMatrix, k: usize, opts: &LanczosOptions) -> Result<RawEigen, LanczosFailure> {
    let dim = op.dim();
    assert!(k >= 1 && k <= dim, "k must lie in 1..=dim");
    let block = (k + 2).min(dim);
    let cap = dim.min((10 * block).max(40));
    let keep = (2 * block).min(cap.saturating_sub(block)).max(k.min(cap));
    let budget = opts.max_matvecs_per_pair.saturating_mul(k);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut kry = Krylov::new(op, cap);
    kry.extend((0..block).map(|_| random_vector(&mut rng, dim)).collect());
    let mut last_start = 0;

    loop {
        // Grow the block Krylov space until the basis is full.
        while kry.len() < cap {
            let images: Vec<Vec<C64>> = kry.aq[last_start..].to_vec();
            let start = kry.len();
            let mut added = kry.extend(images);
            if added == 0 {
                // Invariant subspace reached; keep exploring with fresh directions.
                let fresh = (0..block.min(cap - kry.len()))
                    .map(|_| random_vector(&mut rng, dim))
                    .collect();
                added = kry.extend(fresh);
                if added == 0 {
                    break;
                }
            }
            last_start = start;
        }

        // Rayleigh-Ritz over the whole basis.
        let t = kry.projected();
        let m = t.nrows();
        let (theta, y) = {
            let real = t.iter().all(|z| z.im.abs() <= 1e-14 * z.norm().max(1.0));
            if real {
                let eig = SymmetricEigen::new(t.map(|z| z.re));
                sort_pairs(eig.eigenvalues.as_slice().to_vec(), eig.eigenvectors.map(|x| C64::new(x, 0.0)))
            } else {
                let eig = SymmetricEigen::new(t);
                sort_pairs(eig.eigenvalues.as_slice().to_vec(), eig.eigenvectors)
            }
        };
        let n_ritz = keep.max(block).min(m);
        let mut ritz = Vec::with_capacity(n_ritz);
        let mut ritz_images = Vec::with_capacity(n_ritz);
        let mut residuals = Vec::with_capacity(n_ritz);
        for i in 0..n_ritz {
            let mut x = vec![ZERO; dim];
            let mut ax = vec![ZERO; dim];
            for c in 0..m {
                let coef = y[(c, i)];
                if coef != ZERO {
                    axpy(coef, &kry.q[c], &mut x);
                    axpy(coef, &kry.aq[c], &mut ax);
                }
            }
            let mut r = ax.clone();
            axpy(C64::new(-theta[i], 0.0), &x, &mut r);
            residuals.push(r);
            ritz.push(x);
            ritz_images.push(ax);
        }
        let res_norms: Vec<f64> = residuals.iter().map(|r| norm(r)).collect();
        let worst = res_norms[..k].iter().copied().fold(0.0, f64::max);
        let exhausted = m == dim;
        if worst <= opts.tol || (exhausted && worst <= opts.tol.max(1e-12)) {
            let vectors = DMatrix::from_fn(dim, k, |r, c| ritz[c][r]);
            return Ok(RawEigen {
                values: theta[..k].to_vec(),
                vectors,
                matvecs: kry.matvecs,
                worst_residual: worst,
            });
        }
        if kry.matvecs >= budget || (exhausted && m <= keep) {
            return Err(LanczosFailure {
                matvecs: kry.matvecs,
                worst_residual: worst,
            });
        }

        // Thick restart: keep the lowest Ritz vectors, continue from the
        // residuals of the unconverged ones.
        let mut next = Krylov::new(op, cap);
        next.matvecs = kry.matvecs;
        for (x, ax) in ritz.into_iter().zip(ritz_images).take(keep) {
            next.push_with_image(x, ax);
        }
        let pending: Vec<Vec<C64>> = residuals
            .into_iter()
            .zip(&res_norms)
            .take(block)
            .filter(|(_, &rn)| rn > 0.1 * opts.tol)
            .map(|(r, _)| r)
            .collect();
        last_start = next.len();
        let added = next.extend(pending);
        if added == 0 {
            let fresh = (0..block).map(|_| random_vector(&mut rng, dim)).collect();
            next.extend(fresh);
        }
        kry = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> OperatorMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, C64::new(2.0, 0.0)));
            if i + 1 < n {
                t.push((i, i + 1, C64::new(-1.0, 0.0)));
                t.push((i + 1, i, C64::new(-1.0, 0.0)));
            }
        }
        OperatorMatrix::from_triplets(n, n, t, true)
    }

    #[test]
    fn dense_sorted_ascending() {
        let m = OperatorMatrix::from_diagonal(&[3.0, -1.0, 2.0]);
        let e = dense_eigh(&m);
        assert_eq!(e.values, vec![-1.0, 2.0, 3.0]);
        assert!((e.vectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lanczos_matches_closed_form_laplacian() {
        let n = 300;
        let e = block_lanczos(&laplacian(n), 4, &LanczosOptions::default()).unwrap();
        for (j, v) in e.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (j + 1) as f64 / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-10, "{v} vs {exact}");
        }
        assert!(e.worst_residual <= 1e-9);
    }

    #[test]
    fn lanczos_resolves_degenerate_levels() {
        // diag(0, 1, 1, 1, 2, ...) : the threefold level must appear thrice.
        let mut d: Vec<f64> = vec![0.0, 1.0, 1.0, 1.0];
        d.extend((0..200).map(|i| 2.0 + i as f64 * 0.01));
        let e = block_lanczos(&OperatorMatrix::from_diagonal(&d), 4, &LanczosOptions::default()).unwrap();
        let expect = [0.0, 1.0, 1.0, 1.0];
        for (v, x) in e.values.iter().zip(expect) {
            assert!((v - x).abs() < 1e-10);
        }
    }

    #[test]
    fn lanczos_on_complex_hermitian() {
        let n = 120;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, C64::new((i % 7) as f64, 0.0)));
            if i + 1 < n {
                t.push((i, i + 1, C64::new(0.3, 0.4)));
                t.push((i + 1, i, C64::new(0.3, -0.4)));
            }
        }
        let op = OperatorMatrix::from_triplets(n, n, t, true);
        let it = block_lanczos(&op, 3, &LanczosOptions::default()).unwrap();
        let de = dense_eigh(&op);
        for i in 0..3 {
            assert!((it.values[i] - de.values[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let opts = LanczosOptions {
            tol: 1e-14,
            max_matvecs_per_pair: 5,
            seed: 1,
        };
        let err = block_lanczos(&laplacian(2000), 2, &opts).unwrap_err();
        assert!(err.worst_residual > 1e-14);
    }
}
