//! Dense reference implementations used as test oracles. Nothing here calls
//! into the sparse or windowed code paths of the library.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use infolat::hilbert::{build_sector_basis, StateVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Haar-random vector in the full `2^n` space, as plain amplitudes.
pub fn haar_amplitudes(n: usize, rng: &mut ChaCha8Rng) -> Vec<C> {
    let dim = 1usize << n;
    let mut v: Vec<C> = (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C::new(re, im)
        })
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= norm);
    v
}

pub fn full_state(n: usize, amps: Vec<C>) -> StateVector {
    StateVector::from_amplitudes(build_sector_basis(n, None).unwrap(), amps).unwrap()
}

/// Full-space amplitudes of any state (sector states are embedded).
pub fn dense_amplitudes(state: &StateVector) -> Vec<C> {
    state.embed_full().unwrap().amplitudes().to_vec()
}

/// Reduced density matrix of sites `first..first+len` (1-based, site 1 is the
/// most significant bit) by reshaping `psi` into `(left, window, right)`.
pub fn dense_rdm(psi: &[C], n: usize, first: usize, len: usize) -> DMatrix<C> {
    let left = first - 1;
    let right = n - left - len;
    let (dl, dw, dr) = (1usize << left, 1usize << len, 1usize << right);
    let mut rho = DMatrix::<C>::zeros(dw, dw);
    for l in 0..dl {
        for r in 0..dr {
            let col = DVector::from_iterator(dw, (0..dw).map(|w| psi[(l * dw + w) * dr + r]));
            rho += &col * col.adjoint();
        }
    }
    rho
}

pub fn dense_information(rho: &DMatrix<C>) -> f64 {
    let dim = rho.nrows() as f64;
    let eig = SymmetricEigen::new(rho.clone());
    dim.log2()
        + eig
            .eigenvalues
            .iter()
            .filter(|&&l| l > 1e-15)
            .map(|&l| l * l.log2())
            .sum::<f64>()
}

/// `I` of a window computed from scratch; zero for an empty window.
pub fn dense_window_information(psi: &[C], n: usize, first: usize, len: usize) -> f64 {
    if len == 0 {
        0.0
    } else {
        dense_information(&dense_rdm(psi, n, first, len))
    }
}

/// `i(n, l)` by the four-term formula with every RDM recomputed.
pub fn brute_local_information(psi: &[C], n: usize, first: usize, ell: usize) -> f64 {
    let len = ell + 1;
    let mut v = dense_window_information(psi, n, first, len);
    if len >= 2 {
        v -= dense_window_information(psi, n, first, len - 1);
        v -= dense_window_information(psi, n, first + 1, len - 1);
        v += dense_window_information(psi, n, first + 1, len - 2);
    }
    v
}

/// `rows[l][first - 1]`.
pub fn brute_lattice(psi: &[C], n: usize, ell_max: usize) -> Vec<Vec<f64>> {
    (0..=ell_max)
        .map(|ell| {
            (1..=n - ell)
                .map(|first| brute_local_information(psi, n, first, ell))
                .collect()
        })
        .collect()
}

pub fn dense_entropy(psi: &[C], n: usize, cut: usize) -> f64 {
    let rho = dense_rdm(psi, n, 1, cut);
    let eig = SymmetricEigen::new(rho);
    -eig.eigenvalues
        .iter()
        .filter(|&&l| l > 1e-15)
        .map(|&l| l * l.log2())
        .sum::<f64>()
}

fn kron(a: &DMatrix<C>, b: &DMatrix<C>) -> DMatrix<C> {
    a.kronecker(b)
}

pub fn single(n: usize, site: usize, op: &DMatrix<C>) -> DMatrix<C> {
    let id = DMatrix::<C>::identity(2, 2);
    let mut m = DMatrix::<C>::identity(1, 1);
    for k in 1..=n {
        m = kron(&m, if k == site { op } else { &id });
    }
    m
}

/// Local basis `(|down>, |up>)`: a set bit of the library's configuration is
/// an up spin, and site 1 is the leftmost tensor factor.
pub fn pauli_z() -> DMatrix<C> {
    DMatrix::from_row_slice(2, 2, &[C::new(-1.0, 0.0), C::default(), C::default(), C::new(1.0, 0.0)])
}

/// `sigma^+ = |up><down|`.
pub fn sigma_plus() -> DMatrix<C> {
    DMatrix::from_row_slice(2, 2, &[C::default(), C::default(), C::new(1.0, 0.0), C::default()])
}

pub fn sigma_minus() -> DMatrix<C> {
    sigma_plus().adjoint()
}

/// Operator acting on the adjacent pair `site, site + 1`.
fn pair(n: usize, site: usize, op: &DMatrix<C>) -> DMatrix<C> {
    let left = DMatrix::<C>::identity(1 << (site - 1), 1 << (site - 1));
    let right = DMatrix::<C>::identity(1 << (n - site - 1), 1 << (n - site - 1));
    kron(&kron(&left, op), &right)
}

/// Full `2^N` Hamiltonian from Kronecker products, with field shifts
/// `shift[n - 1]` subtracted on links `n = 1..N-1`. The diagonal terms are
/// accumulated from the diagonals of the embedded `sigma^z` matrices.
pub fn dense_hamiltonian(n: usize, ga: f64, ma: f64, shift: &[f64]) -> DMatrix<C> {
    let dim = 1usize << n;
    let z: Vec<Vec<f64>> = (1..=n)
        .map(|k| single(n, k, &pauli_z()).diagonal().iter().map(|c| c.re).collect())
        .collect();
    let mut diag = vec![0.0; dim];
    let mut field = vec![0.0; dim];
    for link in 1..n {
        let stagger = if link % 2 == 0 { 1.0 } else { -1.0 };
        let q = shift.get(link - 1).copied().unwrap_or(0.0);
        for i in 0..dim {
            field[i] += 0.5 * (z[link - 1][i] + stagger);
            diag[i] += 0.5 * ga * ga * (field[i] - q).powi(2);
        }
    }
    for k in 1..=n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for i in 0..dim {
            diag[i] += 0.5 * ma * sign * z[k - 1][i];
        }
    }
    let hop = kron(&sigma_plus(), &sigma_minus()) + kron(&sigma_minus(), &sigma_plus());
    let mut h = DMatrix::<C>::from_diagonal(&DVector::from_iterator(dim, diag.into_iter().map(|d| C::new(d, 0.0))));
    for k in 1..n {
        h += pair(n, k, &hop) * C::new(0.5, 0.0);
    }
    h
}

/// Indices of full-space configurations with the given magnetization, in
/// increasing numeric order.
pub fn sector_indices(n: usize, sector: i32) -> Vec<usize> {
    (0..1usize << n)
        .filter(|c| 2 * c.count_ones() as i32 - n as i32 == sector)
        .collect()
}

pub fn restrict(m: &DMatrix<C>, idx: &[usize]) -> DMatrix<C> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Sorted eigenvalues of a dense Hermitian matrix.
pub fn dense_levels(m: &DMatrix<C>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// `exp(-i H t) v` through the full eigendecomposition.
pub fn dense_evolve(h: &DMatrix<C>, v: &[C], t: f64) -> Vec<C> {
    let eig = SymmetricEigen::new(h.clone());
    let u = &eig.eigenvectors;
    let x = DVector::from_column_slice(v);
    let mut c = u.adjoint() * x;
    for (k, ck) in c.iter_mut().enumerate() {
        *ck *= C::from_polar(1.0, -eig.eigenvalues[k] * t);
    }
    (u * c).iter().copied().collect()
}

pub fn max_abs_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Equal-weight GHZ state on `n` qubits.
pub fn ghz(n: usize) -> Vec<C> {
    let mut v = vec![C::default(); 1 << n];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    v[0] = C::new(h, 0.0);
    v[(1 << n) - 1] = C::new(h, 0.0);
    v
}
