//! Low-lying spectrum of sparse Hermitian operators and classification of the
//! resulting states.
//!
//! [`lanczos_lowest`] runs explicitly restarted Lanczos with full
//! re-orthogonalization. Eigenpairs are found one at a time and locked; each
//! new search runs in the orthogonal complement of the locked vectors, so
//! degenerate levels are resolved. [`excited_by_deflation`] instead lifts known
//! states by a penalty shift, the way consecutive DMRG runs do.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hilbert::{neel_state, Pauli, SectorBasis, StateVector};
use crate::schwinger::ModelParams;
use crate::sparse::{LinearOperator, SparseOperator};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LanczosOptions {
    /// Residual bound `||H psi - E psi||` for accepting an eigenpair.
    pub tol: f64,
    /// Budget of operator applications per eigenpair.
    pub max_iter: usize,
    /// Krylov dimension between restarts.
    pub krylov_dim: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            tol: 1e-9,
            max_iter: 50_000,
            krylov_dim: 80,
            seed: 0,
        }
    }
}

/// Eigenpairs in ascending energy order.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub energies: Vec<f64>,
    pub states: Vec<StateVector>,
    pub residuals: Vec<f64>,
}

impl EigenResult {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    fn sorted(mut self) -> Self {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.energies[a].total_cmp(&self.energies[b]));
        self.energies = idx.iter().map(|&i| self.energies[i]).collect();
        self.residuals = idx.iter().map(|&i| self.residuals[i]).collect();
        let mut states: Vec<Option<StateVector>> = self.states.into_iter().map(Some).collect();
        self.states = idx.iter().map(|&i| states[i].take().unwrap()).collect();
        self
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn scale(v: &mut [C64], s: f64) {
    v.iter_mut().for_each(|z| *z *= s);
}

/// Two passes of classical Gram-Schmidt against every vector in `sets`.
fn orthogonalize(w: &mut [C64], sets: &[&[Vec<C64>]]) {
    for _ in 0..2 {
        for set in sets {
            for v in set.iter() {
                let c = dot(v, w);
                axpy(-c, v, w);
            }
        }
    }
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng, against: &[&[Vec<C64>]]) -> Vec<C64> {
    use rand::Rng;
    use rand_distr::StandardNormal;
    loop {
        let mut v: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        orthogonalize(&mut v, against);
        let n = norm(&v);
        if n > 1e-8 {
            scale(&mut v, 1.0 / n);
            return v;
        }
    }
}

/// Lowest eigenpair of `op` restricted to the complement of `locked`.
fn lowest_in_complement(
    op: &dyn LinearOperator,
    locked: &[Vec<C64>],
    rng: &mut ChaCha8Rng,
    opts: &LanczosOptions,
) -> Result<(f64, Vec<C64>, f64)> {
    let dim = op.dim();
    let avail = dim - locked.len();
    let mut start = random_unit(dim, rng, &[locked]);
    let mut used = 0usize;
    let mut best = f64::INFINITY;
    let mut w = vec![C64::default(); dim];
    loop {
        let m_max = opts.krylov_dim.max(2).min(avail);
        let mut basis: Vec<Vec<C64>> = vec![start];
        let mut alphas: Vec<f64> = Vec::with_capacity(m_max);
        let mut betas: Vec<f64> = Vec::with_capacity(m_max);
        let mut broke_down = false;
        loop {
            let j = basis.len() - 1;
            op.apply(&basis[j], &mut w);
            used += 1;
            let alpha = dot(&basis[j], &w).re;
            axpy(C64::new(-alpha, 0.0), &basis[j], &mut w);
            if j > 0 {
                axpy(C64::new(-betas[j - 1], 0.0), &basis[j - 1], &mut w);
            }
            orthogonalize(&mut w, &[&basis, locked]);
            alphas.push(alpha);
            let beta = norm(&w);
            if basis.len() == m_max {
                break;
            }
            if beta < 1e-12 * alpha.abs().max(1.0) {
                broke_down = true;
                break;
            }
            betas.push(beta);
            let mut next = w.clone();
            scale(&mut next, 1.0 / beta);
            basis.push(next);
        }
        let m = alphas.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alphas[i];
            if i + 1 < m {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (imin, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty tridiagonal");
        let y = eig.eigenvectors.column(imin);
        let mut x = vec![C64::default(); dim];
        for (i, v) in basis.iter().enumerate() {
            axpy(C64::new(y[i], 0.0), v, &mut x);
        }
        orthogonalize(&mut x, &[locked]);
        let nx = norm(&x);
        scale(&mut x, 1.0 / nx);
        op.apply(&x, &mut w);
        used += 1;
        let theta = dot(&x, &w).re;
        axpy(C64::new(-theta, 0.0), &x, &mut w);
        let residual = norm(&w);
        best = best.min(residual);
        if residual < opts.tol {
            return Ok((theta, x, residual));
        }
        if used >= opts.max_iter {
            return Err(Error::Convergence {
                iterations: used,
                best_residual: best,
            });
        }
        if broke_down {
            // invariant subspace without convergence: inject a fresh direction
            let extra = random_unit(dim, rng, &[locked]);
            axpy(C64::new(1e-3, 0.0), &extra, &mut x);
            orthogonalize(&mut x, &[locked]);
            let nx = norm(&x);
            scale(&mut x, 1.0 / nx);
        }
        start = x;
    }
}

fn lowest_with_locking(
    op: &dyn LinearOperator,
    k: usize,
    opts: &LanczosOptions,
) -> Result<Vec<(f64, Vec<C64>, f64)>> {
    let dim = op.dim();
    if k == 0 || k > dim {
        return Err(Error::Size(format!("requested {k} eigenpairs of a {dim}-dimensional operator")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<Vec<C64>> = Vec::with_capacity(k);
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let (e, v, r) = lowest_in_complement(op, &locked, &mut rng, opts)?;
        locked.push(v.clone());
        out.push((e, v, r));
    }
    Ok(out)
}

/// `k` lowest eigenpairs of `h`.
pub fn lanczos_lowest(h: &SparseOperator, k: usize, opts: &LanczosOptions) -> Result<EigenResult> {
    let pairs = lowest_with_locking(h, k, opts)?;
    let basis = h.basis().clone();
    let mut res = EigenResult {
        energies: Vec::with_capacity(k),
        states: Vec::with_capacity(k),
        residuals: Vec::with_capacity(k),
    };
    for (e, v, r) in pairs {
        res.energies.push(e);
        res.states.push(StateVector::from_raw(basis.clone(), v)?);
        res.residuals.push(r);
    }
    Ok(res.sorted())
}

/// `H + shift * sum_i |psi_i><psi_i|`.
struct Deflated<'a> {
    h: &'a SparseOperator,
    known: Vec<&'a [C64]>,
    shift: f64,
}

impl LinearOperator for Deflated<'_> {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.h.apply(x, y);
        for psi in &self.known {
            let c = dot(psi, x) * self.shift;
            axpy(c, psi, y);
        }
    }
}

/// Overlap amplitude above which a deflated state counts as leaked.
pub const DEFLATION_LEAK_TOL: f64 = 1e-4;

/// Lowest `k` eigenpairs of `H + shift * sum |psi><psi|` over the `known`
/// states, re-orthogonalized against them. Energies and residuals refer to `H`.
pub fn excited_by_deflation(
    h: &SparseOperator,
    known: &[StateVector],
    shift: f64,
    k: usize,
    opts: &LanczosOptions,
) -> Result<EigenResult> {
    if known.is_empty() {
        return lanczos_lowest(h, k, opts);
    }
    let op = Deflated {
        h,
        known: known.iter().map(|s| s.amplitudes()).collect(),
        shift,
    };
    let pairs = lowest_with_locking(&op, k, opts)?;
    let known_vecs: Vec<Vec<C64>> = known.iter().map(|s| s.amplitudes().to_vec()).collect();
    let mut res = EigenResult {
        energies: Vec::with_capacity(k),
        states: Vec::with_capacity(k),
        residuals: Vec::with_capacity(k),
    };
    let mut w = vec![C64::default(); h.dim()];
    for (_, mut v, _) in pairs {
        let leak = known_vecs
            .iter()
            .map(|p| dot(p, &v).norm())
            .fold(0.0, f64::max);
        if leak > DEFLATION_LEAK_TOL {
            return Err(Error::DeflationLeak { overlap: leak });
        }
        orthogonalize(&mut v, &[&known_vecs]);
        let n = norm(&v);
        scale(&mut v, 1.0 / n);
        h.apply(&v, &mut w);
        let e = dot(&v, &w).re;
        axpy(C64::new(-e, 0.0), &v, &mut w);
        res.energies.push(e);
        res.residuals.push(norm(&w));
        res.states.push(StateVector::from_raw(h.basis().clone(), v)?);
    }
    Ok(res.sorted())
}

/// Default penalty `10 (ga)^2/2 N`.
pub fn default_deflation_shift(params: &ModelParams) -> f64 {
    10.0 * params.electric_scale() * params.n_sites as f64
}

/// Consecutive single-state deflation runs: each run lifts every state found
/// so far and starts from a fresh seed.
pub fn spectrum_by_deflation(
    h: &SparseOperator,
    count: usize,
    shift: f64,
    opts: &LanczosOptions,
) -> Result<EigenResult> {
    let mut res = EigenResult {
        energies: Vec::new(),
        states: Vec::new(),
        residuals: Vec::new(),
    };
    for i in 0..count {
        let run_opts = LanczosOptions {
            seed: opts.seed.wrapping_add(i as u64),
            ..*opts
        };
        let next = excited_by_deflation(h, &res.states, shift, 1, &run_opts)?;
        res.energies.push(next.energies[0]);
        res.residuals.push(next.residuals[0]);
        res.states.extend(next.states);
    }
    Ok(res.sorted())
}

/// Strong-coupling vacuum and the two pair-flip excitations
/// `|1_{V,S}> = (N-1)^{-1/2} sum_n (sigma^+_{n+1} sigma^-_n -+ h.c.)|Omega>`.
#[derive(Debug, Clone)]
pub struct StrongCouplingStates {
    pub vacuum: StateVector,
    pub vector: StateVector,
    pub scalar: StateVector,
}

pub fn strong_coupling_states(basis: &Arc<SectorBasis>) -> Result<StrongCouplingStates> {
    let n = basis.n_sites();
    if n < 3 {
        return Err(Error::Size(format!("meson states need N >= 3, got {n}")));
    }
    let vacuum = neel_state(basis)?;
    let norm = 1.0 / ((n - 1) as f64).sqrt();
    let mut vector = StateVector::zeros(basis.clone());
    let mut scalar = StateVector::zeros(basis.clone());
    for k in 1..n {
        let fwd = vacuum.apply_pauli_string(&[(k + 1, Pauli::Plus), (k, Pauli::Minus)])?;
        let back = vacuum.apply_pauli_string(&[(k, Pauli::Plus), (k + 1, Pauli::Minus)])?;
        for (i, (f, b)) in fwd.amplitudes().iter().zip(back.amplitudes()).enumerate() {
            vector.amplitudes_mut()[i] += norm * (f - b);
            scalar.amplitudes_mut()[i] += norm * (f + b);
        }
    }
    Ok(StrongCouplingStates {
        vacuum,
        vector,
        scalar,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateTag {
    Vacuum,
    VectorLike,
    ScalarLike,
    MomentumExcitation,
    Unclassified,
}

impl StateTag {
    pub fn as_str(self) -> &'static str {
        match self {
            StateTag::Vacuum => "vacuum",
            StateTag::VectorLike => "vector-like",
            StateTag::ScalarLike => "scalar-like",
            StateTag::MomentumExcitation => "momentum-excitation",
            StateTag::Unclassified => "unclassified",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateLabel {
    pub energy: f64,
    /// Gap to the vacuum `E - E_vac`.
    pub gap: f64,
    /// `<P^2>`.
    pub p2: f64,
    /// `<P>^2`.
    pub p_mean_sq: f64,
    pub overlap_v: f64,
    pub overlap_s: f64,
    pub tag: StateTag,
}

/// Tags states by gap, pseudo-momentum and overlap with the strong-coupling
/// meson states.
///
/// A gapped state whose overlap with `|1_V>` or `|1_S>` reaches
/// `dominant_overlap` takes that tag directly. Otherwise it counts as
/// zero-momentum when `<P^2>` is within `p2_tolerance` of the reference
/// minimum: the smaller of `<1_V|P^2|1_V>` and `<1_S|P^2|1_S>`, or the
/// spectrum minimum in [`Classifier::classify_spectrum`]. Zero-momentum
/// states are vector- or scalar-like according to the larger ansatz overlap,
/// or unclassified when both overlaps are below `overlap_floor`; the rest
/// are momentum excitations. Parity under one-site translation is not
/// available with open boundaries, so the ansatz overlaps stand in for it.
pub struct Classifier<'a> {
    h: &'a SparseOperator,
    p: SparseOperator,
    ansatz: StrongCouplingStates,
    pub eps_gap: f64,
    pub p2_tolerance: f64,
    pub dominant_overlap: f64,
    pub overlap_floor: f64,
}

/// Default vacuum threshold on the gap, in units of `1/a`.
pub const DEFAULT_EPS_GAP: f64 = 1e-6;

impl<'a> Classifier<'a> {
    pub fn new(h: &'a SparseOperator) -> Result<Self> {
        let basis = h.basis();
        Ok(Classifier {
            h,
            p: crate::schwinger::pseudo_momentum_operator(basis)?,
            ansatz: strong_coupling_states(basis)?,
            eps_gap: DEFAULT_EPS_GAP,
            p2_tolerance: 0.25,
            dominant_overlap: 0.5,
            overlap_floor: 0.01,
        })
    }

    pub fn pseudo_momentum(&self) -> &SparseOperator {
        &self.p
    }

    fn measure(&self, state: &StateVector, vacuum_energy: f64) -> StateLabel {
        let energy = self.h.expectation(state).re;
        let p_mean = self.p.expectation(state).re;
        StateLabel {
            energy,
            gap: energy - vacuum_energy,
            p2: self.p.square_expectation(state),
            p_mean_sq: p_mean * p_mean,
            overlap_v: self.ansatz.vector.overlap(state).min(1.0),
            overlap_s: self.ansatz.scalar.overlap(state).min(1.0),
            tag: StateTag::Unclassified,
        }
    }

    fn tag(&self, mut label: StateLabel, p2_min: f64) -> StateLabel {
        let by_overlap = if label.overlap_v >= label.overlap_s {
            StateTag::VectorLike
        } else {
            StateTag::ScalarLike
        };
        let best = label.overlap_v.max(label.overlap_s);
        label.tag = if label.gap.abs() < self.eps_gap {
            StateTag::Vacuum
        } else if label.gap < 0.0 || !label.p2.is_finite() {
            StateTag::Unclassified
        } else if best >= self.dominant_overlap {
            by_overlap
        } else if label.p2 <= p2_min + self.p2_tolerance {
            if best >= self.overlap_floor {
                by_overlap
            } else {
                StateTag::Unclassified
            }
        } else {
            StateTag::MomentumExcitation
        };
        label
    }

    /// Reference minimum `<P^2>` of a zero-momentum meson.
    pub fn reference_p2(&self) -> f64 {
        self.p
            .square_expectation(&self.ansatz.vector)
            .min(self.p.square_expectation(&self.ansatz.scalar))
    }

    /// Labels a single state against the ansatz reference momentum.
    pub fn classify(&self, state: &StateVector, vacuum_energy: f64) -> StateLabel {
        self.tag(self.measure(state, vacuum_energy), self.reference_p2())
    }

    /// Labels a spectrum, taking the minimal-momentum reference from the
    /// gapped states themselves. `states[0]` is taken as the vacuum.
    pub fn classify_spectrum(&self, states: &[StateVector], exec: Execution) -> Vec<StateLabel> {
        if states.is_empty() {
            return Vec::new();
        }
        let e0 = self.h.expectation(&states[0]).re;
        let labels: Vec<StateLabel> = exec.map_range(states.len(), |i| self.measure(&states[i], e0));
        let p2_min = labels
            .iter()
            .filter(|l| l.gap.abs() >= self.eps_gap)
            .map(|l| l.p2)
            .fold(f64::INFINITY, f64::min);
        labels.into_iter().map(|l| self.tag(l, p2_min)).collect()
    }
}

/// Convenience wrapper with default thresholds.
pub fn classify(
    state: &StateVector,
    vacuum_energy: f64,
    h: &SparseOperator,
) -> Result<StateLabel> {
    Ok(Classifier::new(h)?.classify(state, vacuum_energy))
}
