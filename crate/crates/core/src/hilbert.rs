//! Qubit-chain Hilbert spaces restricted to a total-magnetization sector,
//! state vectors over them and reduced density matrices of contiguous windows.
//!
//! Sites are numbered `1..=N`. Internally a configuration is a `u32` whose bit
//! `N - k` holds site `k`, so site 1 is the most significant bit and a set bit
//! is spin up. Basis states are ordered by their numeric value, which is the
//! lexicographic order of the site string with down < up.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::C64;

pub const MAX_SITES: usize = 24;

/// Tag written into state files to pin the configuration bit order.
pub const BIT_ORDER_TAG: &str = "site1-msb";

/// Binomial coefficient for the small arguments used in basis ranking.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Rank of `bits` among all integers with the same popcount, in numeric order
/// (combinatorial number system).
fn rank_fixed_weight(mut bits: u32) -> usize {
    let mut rank = 0;
    let mut seen = 0;
    while bits != 0 {
        let p = bits.trailing_zeros() as usize;
        seen += 1;
        rank += binomial(p, seen);
        bits &= bits - 1;
    }
    rank
}

#[inline]
fn low_mask(bits: usize) -> u32 {
    if bits >= 32 {
        u32::MAX
    } else {
        (1u32 << bits) - 1
    }
}

/// Enumeration of chain configurations, optionally restricted to a fixed
/// total magnetization `sum_k sigma^z_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    n_sites: usize,
    sector: Option<i32>,
    states: Vec<u32>,
}

impl SectorBasis {
    pub fn new(n_sites: usize, sector: Option<i32>) -> Result<Self> {
        if !(2..=MAX_SITES).contains(&n_sites) {
            return Err(Error::Size(format!(
                "site count {n_sites} outside 2..={MAX_SITES}"
            )));
        }
        let states = match sector {
            None => (0..(1u32 << n_sites)).collect(),
            Some(m) => {
                let n = n_sites as i32;
                if m.abs() > n || (m - n).rem_euclid(2) != 0 {
                    return Err(Error::InvalidSector(format!(
                        "magnetization {m} impossible on {n_sites} sites"
                    )));
                }
                let ups = ((n + m) / 2) as usize;
                fixed_weight_configs(n_sites, ups)
            }
        };
        Ok(SectorBasis {
            n_sites,
            sector,
            states,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn sector(&self) -> Option<i32> {
        self.sector
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    pub fn config(&self, index: usize) -> u32 {
        self.states[index]
    }

    /// Number of up spins shared by all configurations of a sector basis.
    pub fn up_count(&self) -> Option<usize> {
        self.sector
            .map(|m| ((self.n_sites as i32 + m) / 2) as usize)
    }

    /// Ordinal of a configuration, or `None` if it is outside the basis.
    pub fn index_of(&self, config: u32) -> Option<usize> {
        if config & !low_mask(self.n_sites) != 0 {
            return None;
        }
        match self.up_count() {
            None => Some(config as usize),
            Some(ups) => {
                (config.count_ones() as usize == ups).then(|| rank_fixed_weight(config))
            }
        }
    }

    pub fn magnetization(&self, config: u32) -> i32 {
        2 * config.count_ones() as i32 - self.n_sites as i32
    }

    /// Bit mask of site `k` (1-based).
    #[inline]
    pub fn site_mask(&self, site: usize) -> u32 {
        1u32 << (self.n_sites - site)
    }

    /// `sigma^z` eigenvalue of `site` in `config`.
    #[inline]
    pub fn spin_z(&self, config: u32, site: usize) -> f64 {
        if config & self.site_mask(site) != 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.n_sites {
            return Err(Error::SiteOutOfRange {
                site,
                n_sites: self.n_sites,
            });
        }
        Ok(())
    }

    /// Configuration from a string of `u`/`d` (or arrow) characters, site 1 first.
    pub fn parse_config(&self, spins: &str) -> Result<u32> {
        let chars: Vec<char> = spins.chars().filter(|c| !c.is_whitespace()).collect();
        if chars.len() != self.n_sites {
            return Err(Error::Size(format!(
                "configuration '{spins}' has {} sites, basis has {}",
                chars.len(),
                self.n_sites
            )));
        }
        let mut cfg = 0u32;
        for (i, c) in chars.iter().enumerate() {
            match c {
                'u' | 'U' | '↑' | '1' => cfg |= self.site_mask(i + 1),
                'd' | 'D' | '↓' | '0' => {}
                other => {
                    return Err(Error::Size(format!("unknown spin symbol '{other}'")));
                }
            }
        }
        Ok(cfg)
    }

    pub fn format_config(&self, config: u32) -> String {
        (1..=self.n_sites)
            .map(|k| if config & self.site_mask(k) != 0 { '↑' } else { '↓' })
            .collect()
    }
}

fn fixed_weight_configs(n_sites: usize, ups: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(binomial(n_sites, ups));
    if ups == 0 {
        out.push(0);
        return out;
    }
    let limit = 1u64 << n_sites;
    let mut v: u64 = (1u64 << ups) - 1;
    while v < limit {
        out.push(v as u32);
        // Gosper's hack: next integer with the same popcount.
        let c = v & v.wrapping_neg();
        let r = v + c;
        v = (((r ^ v) >> 2) / c) | r;
    }
    out
}

/// Convenience constructor returning a shareable basis.
pub fn build_sector_basis(n_sites: usize, sector: Option<i32>) -> Result<Arc<SectorBasis>> {
    SectorBasis::new(n_sites, sector).map(Arc::new)
}

/// Single-site operators available in Pauli strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    /// `sigma^+`: lowers nothing, raises down to up.
    Plus,
    Minus,
    Z,
    X,
    Y,
}

impl Pauli {
    /// Action on a single spin. Returns the coefficient and whether the spin flips,
    /// or `None` when the operator annihilates the state.
    #[inline]
    fn act(self, up: bool) -> Option<(C64, bool)> {
        match (self, up) {
            (Pauli::Plus, false) => Some((C64::new(1.0, 0.0), true)),
            (Pauli::Plus, true) => None,
            (Pauli::Minus, true) => Some((C64::new(1.0, 0.0), true)),
            (Pauli::Minus, false) => None,
            (Pauli::Z, true) => Some((C64::new(1.0, 0.0), false)),
            (Pauli::Z, false) => Some((C64::new(-1.0, 0.0), false)),
            (Pauli::X, _) => Some((C64::new(1.0, 0.0), true)),
            (Pauli::Y, true) => Some((C64::new(0.0, 1.0), true)),
            (Pauli::Y, false) => Some((C64::new(0.0, -1.0), true)),
        }
    }
}

/// Window label `(n, l)`: the `l + 1` contiguous sites centred on `n`.
///
/// `n` is stored doubled so that half-integer centres are exact. For even `l`
/// the centre is an integer, for odd `l` a half-integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    ell: usize,
    twice_n: usize,
}

impl Label {
    pub fn new(n: f64, ell: usize) -> Result<Self> {
        let twice = 2.0 * n;
        if twice.fract() != 0.0 || twice < 0.0 {
            return Err(Error::Label {
                n,
                ell,
                reason: "centre must be an integer or half-integer".into(),
            });
        }
        Label::from_twice(twice as usize, ell)
    }

    pub fn from_twice(twice_n: usize, ell: usize) -> Result<Self> {
        if twice_n % 2 != ell % 2 {
            return Err(Error::Label {
                n: twice_n as f64 / 2.0,
                ell,
                reason: "even scales need integer centres, odd scales half-integer ones".into(),
            });
        }
        if twice_n < ell + 2 {
            return Err(Error::Label {
                n: twice_n as f64 / 2.0,
                ell,
                reason: "window starts before site 1".into(),
            });
        }
        Ok(Label { ell, twice_n })
    }

    /// Label of the window of `ell + 1` sites starting at `first` (1-based).
    pub fn from_first_site(first: usize, ell: usize) -> Self {
        assert!(first >= 1, "sites are 1-based");
        Label {
            ell,
            twice_n: 2 * first + ell,
        }
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn n(&self) -> f64 {
        self.twice_n as f64 / 2.0
    }

    pub fn twice_n(&self) -> usize {
        self.twice_n
    }

    pub fn first_site(&self) -> usize {
        (self.twice_n - self.ell) / 2
    }

    pub fn last_site(&self) -> usize {
        (self.twice_n + self.ell) / 2
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.ell + 1
    }

    pub fn check(&self, n_sites: usize) -> Result<()> {
        if self.last_site() > n_sites {
            return Err(Error::Window(format!(
                "window {}..={} exceeds {n_sites} sites",
                self.first_site(),
                self.last_site()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.n(), self.ell)
    }
}

/// Reduced density matrix of a contiguous window.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    label: Label,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(label: Label, matrix: DMatrix<C64>) -> Result<Self> {
        let dim = 1usize << label.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::ShapeMismatch(format!(
                "window of {} sites needs a {dim}x{dim} matrix",
                label.len()
            )));
        }
        Ok(DensityMatrix { label, matrix })
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Largest entry of `|rho - rho^dagger|`.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Complex amplitude vector over a [`SectorBasis`].
///
/// Constructors normalize; [`StateVector::apply_pauli_string`] is the one
/// operation that returns an unnormalized vector.
#[derive(Debug, Clone)]
pub struct StateVector {
    basis: Arc<SectorBasis>,
    amps: Vec<C64>,
}

impl StateVector {
    /// Normalizing constructor.
    pub fn from_amplitudes(basis: Arc<SectorBasis>, amps: Vec<C64>) -> Result<Self> {
        StateVector::from_raw(basis, amps)?.normalized()
    }

    /// Wraps amplitudes as-is (no normalization).
    pub fn from_raw(basis: Arc<SectorBasis>, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::ShapeMismatch(format!(
                "{} amplitudes for a basis of dimension {}",
                amps.len(),
                basis.dim()
            )));
        }
        Ok(StateVector { basis, amps })
    }

    pub fn zeros(basis: Arc<SectorBasis>) -> Self {
        let dim = basis.dim();
        StateVector {
            basis,
            amps: vec![C64::new(0.0, 0.0); dim],
        }
    }

    pub fn basis_state(basis: Arc<SectorBasis>, config: u32) -> Result<Self> {
        let idx = basis.index_of(config).ok_or_else(|| {
            Error::InvalidSector(format!(
                "configuration {} not in sector {:?}",
                basis.format_config(config),
                basis.sector()
            ))
        })?;
        let mut s = StateVector::zeros(basis);
        s.amps[idx] = C64::new(1.0, 0.0);
        Ok(s)
    }

    /// Haar-random state: i.i.d. complex Gaussian amplitudes, normalized.
    pub fn random<R: Rng + ?Sized>(basis: Arc<SectorBasis>, rng: &mut R) -> Self {
        let amps = (0..basis.dim())
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        StateVector::from_amplitudes(basis, amps).expect("gaussian vector is nonzero")
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn n_sites(&self) -> usize {
        self.basis.n_sites()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let inv = 1.0 / norm;
        self.amps.iter_mut().for_each(|a| *a *= inv);
        Ok(self)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        debug_assert_eq!(self.amps.len(), other.amps.len());
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|<self|other>|^2`.
    pub fn overlap(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Applies a product of single-site operators. The rightmost entry acts
    /// first, matching operator notation: `[(2, Plus), (1, Minus)]` is
    /// `sigma^+_2 sigma^-_1`. The result is not normalized.
    pub fn apply_pauli_string(&self, ops: &[(usize, Pauli)]) -> Result<StateVector> {
        for &(site, _) in ops {
            self.basis.check_site(site)?;
        }
        let mut out = StateVector::zeros(self.basis.clone());
        for (i, &amp) in self.amps.iter().enumerate() {
            if amp == C64::new(0.0, 0.0) {
                continue;
            }
            if let Some((coef, cfg)) = apply_string_to_config(&self.basis, self.basis.config(i), ops)
            {
                let j = self.basis.index_of(cfg).ok_or(Error::SectorEscape {
                    sector: self.basis.sector().unwrap_or_default(),
                })?;
                out.amps[j] += coef * amp;
            }
        }
        Ok(out)
    }

    /// Same state expressed in the full `2^N` basis.
    pub fn embed_full(&self) -> Result<StateVector> {
        let full = build_sector_basis(self.n_sites(), None)?;
        let mut out = StateVector::zeros(full);
        for (i, &a) in self.amps.iter().enumerate() {
            out.amps[self.basis.config(i) as usize] = a;
        }
        Ok(out)
    }

    /// Spatial reflection `k -> N + 1 - k`.
    pub fn reflected(&self) -> StateVector {
        let n = self.n_sites();
        let mut out = StateVector::zeros(self.basis.clone());
        for (i, &a) in self.amps.iter().enumerate() {
            let cfg = self.basis.config(i);
            let rev = cfg.reverse_bits() >> (32 - n);
            let j = self.basis.index_of(rev).expect("reflection keeps magnetization");
            out.amps[j] = a;
        }
        out
    }

    /// Expectation value of `sigma^z` on every site, `1..=N` mapped to `0..N`.
    pub fn sz_profile(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_sites()];
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let cfg = self.basis.config(i);
            for (k, o) in out.iter_mut().enumerate() {
                *o += p * self.basis.spin_z(cfg, k + 1);
            }
        }
        out
    }

    /// Reduced density matrix of the window `label` (`Tr` over the complement).
    ///
    /// Sector states are first regrouped by the configuration of the
    /// complement; the window matrix lives in the full local space `2^(l+1)`.
    pub fn partial_trace(&self, label: Label) -> Result<DensityMatrix> {
        label.check(self.n_sites())?;
        let split = WindowSplit::new(self.n_sites(), label.first_site(), label.len());
        let mut by_rest: HashMap<u32, Vec<(u32, C64)>> = HashMap::new();
        for (i, &a) in self.amps.iter().enumerate() {
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            let (w, rest) = split.split(self.basis.config(i));
            by_rest.entry(rest).or_default().push((w, a));
        }
        let dim = 1usize << label.len();
        let mut rho = DMatrix::<C64>::zeros(dim, dim);
        for group in by_rest.values() {
            for &(wa, a) in group {
                for &(wb, b) in group {
                    rho[(wa as usize, wb as usize)] += a * b.conj();
                }
            }
        }
        DensityMatrix::new(label, rho)
    }

    /// Nonzero-block spectrum of the reduced density matrix of `len` sites
    /// starting at `first`.
    ///
    /// Only the smaller of the window and complement Gram matrices is
    /// diagonalized, block by block in window magnetization when the state
    /// lives in a sector. Eigenvalues that are structurally zero are omitted.
    pub fn window_spectrum(&self, first: usize, len: usize) -> Result<Vec<f64>> {
        let blocks = self.window_blocks(first, len)?;
        let mut out = Vec::new();
        for b in blocks {
            if b.nrows() == 0 || b.ncols() == 0 {
                continue;
            }
            let gram = if b.nrows() <= b.ncols() {
                &b * b.adjoint()
            } else {
                b.adjoint() * &b
            };
            out.extend(gram.symmetric_eigenvalues().iter().copied());
        }
        Ok(out)
    }

    /// Schmidt coefficients of the cut between sites `cut` and `cut + 1`,
    /// from singular values of the (block-diagonal) coefficient matrix.
    pub fn schmidt_values(&self, cut: usize) -> Result<Vec<f64>> {
        if cut == 0 || cut >= self.n_sites() {
            return Err(Error::Window(format!(
                "cut {cut} must lie in 1..{}",
                self.n_sites()
            )));
        }
        let blocks = self.window_blocks(1, cut)?;
        let mut out = Vec::new();
        for b in blocks {
            if b.nrows() == 0 || b.ncols() == 0 {
                continue;
            }
            out.extend(b.svd(false, false).singular_values.iter().copied());
        }
        Ok(out)
    }

    /// Coefficient matrices `psi[window, complement]`, one per conserved block.
    fn window_blocks(&self, first: usize, len: usize) -> Result<Vec<DMatrix<C64>>> {
        let n = self.n_sites();
        if first == 0 || len == 0 || first + len - 1 > n {
            return Err(Error::Window(format!(
                "window of {len} sites at {first} does not fit {n} sites"
            )));
        }
        let split = WindowSplit::new(n, first, len);
        let rest_len = n - len;
        match self.basis.up_count() {
            None => {
                let mut m = DMatrix::<C64>::zeros(1 << len, 1 << rest_len);
                for (i, &a) in self.amps.iter().enumerate() {
                    let (w, rest) = split.split(self.basis.config(i));
                    m[(w as usize, rest as usize)] = a;
                }
                Ok(vec![m])
            }
            Some(ups) => {
                let k_lo = ups.saturating_sub(rest_len);
                let k_hi = ups.min(len);
                let mut blocks: Vec<DMatrix<C64>> = (0..=len)
                    .map(|k| {
                        if k < k_lo || k > k_hi {
                            DMatrix::zeros(0, 0)
                        } else {
                            DMatrix::zeros(binomial(len, k), binomial(rest_len, ups - k))
                        }
                    })
                    .collect();
                for (i, &a) in self.amps.iter().enumerate() {
                    let (w, rest) = split.split(self.basis.config(i));
                    let k = w.count_ones() as usize;
                    blocks[k][(rank_fixed_weight(w), rank_fixed_weight(rest))] = a;
                }
                Ok(blocks)
            }
        }
    }
}

/// Splits a configuration into window bits and complement bits.
#[derive(Debug, Clone, Copy)]
struct WindowSplit {
    shift: usize,
    len: usize,
}

impl WindowSplit {
    fn new(n_sites: usize, first: usize, len: usize) -> Self {
        let last = first + len - 1;
        WindowSplit {
            shift: n_sites - last,
            len,
        }
    }

    #[inline]
    fn split(&self, cfg: u32) -> (u32, u32) {
        let w = (cfg >> self.shift) & low_mask(self.len);
        let hi = cfg.checked_shr((self.shift + self.len) as u32).unwrap_or(0);
        let lo = cfg & low_mask(self.shift);
        (w, (hi << self.shift) | lo)
    }
}

/// Applies a Pauli string to one configuration. `None` if annihilated.
pub(crate) fn apply_string_to_config(
    basis: &SectorBasis,
    mut cfg: u32,
    ops: &[(usize, Pauli)],
) -> Option<(C64, u32)> {
    let mut coef = C64::new(1.0, 0.0);
    for &(site, op) in ops.iter().rev() {
        let mask = basis.site_mask(site);
        let (c, flip) = op.act(cfg & mask != 0)?;
        coef *= c;
        if flip {
            cfg ^= mask;
        }
    }
    Some((coef, cfg))
}

/// Staggered configuration with `sigma^z_k = (-1)^(k+1)`: up on odd sites.
pub fn neel_config(n_sites: usize) -> u32 {
    (1..=n_sites)
        .filter(|k| k % 2 == 1)
        .fold(0u32, |acc, k| acc | (1u32 << (n_sites - k)))
}

/// The product state `|up down up down ...>`.
pub fn neel_state(basis: &Arc<SectorBasis>) -> Result<StateVector> {
    StateVector::basis_state(basis.clone(), neel_config(basis.n_sites()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn small_sector_bases() {
        let b = SectorBasis::new(2, Some(0)).unwrap();
        assert_eq!(b.dim(), 2);
        let mut names: Vec<String> = b.states().iter().map(|&c| b.format_config(c)).collect();
        names.sort();
        assert_eq!(names, vec!["↑↓", "↓↑"]);
        assert_eq!(SectorBasis::new(4, Some(0)).unwrap().dim(), 6);
        assert_eq!(SectorBasis::new(3, None).unwrap().dim(), 8);
    }

    #[test]
    fn sector_14_matches_direct_count() {
        let b = SectorBasis::new(14, Some(0)).unwrap();
        let direct = (0u32..1 << 14).filter(|c| c.count_ones() == 7).count();
        assert_eq!(direct, 3432);
        assert_eq!(b.dim(), direct);
    }

    #[test]
    fn index_map_is_bijective_and_sorted() {
        for sector in [-4, -2, 0, 2, 6] {
            let b = SectorBasis::new(8, Some(sector)).unwrap();
            assert!(b.states().windows(2).all(|w| w[0] < w[1]));
            for (i, &c) in b.states().iter().enumerate() {
                assert_eq!(b.magnetization(c), sector);
                assert_eq!(b.index_of(c), Some(i));
            }
            assert_eq!(b.dim(), binomial(8, ((8 + sector) / 2) as usize));
        }
        let b = SectorBasis::new(6, Some(0)).unwrap();
        assert_eq!(b.index_of(0b111111), None);
        assert_eq!(b.index_of(1 << 7), None);
    }

    #[test]
    fn invalid_sector_is_rejected() {
        assert!(matches!(
            SectorBasis::new(4, Some(1)),
            Err(Error::InvalidSector(_))
        ));
        assert!(matches!(
            SectorBasis::new(4, Some(6)),
            Err(Error::InvalidSector(_))
        ));
        assert!(matches!(SectorBasis::new(1, None), Err(Error::Size(_))));
    }

    #[test]
    fn neel_configuration() {
        let b = build_sector_basis(4, Some(0)).unwrap();
        let s = neel_state(&b).unwrap();
        let nz: Vec<_> = s
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > 0.0)
            .collect();
        assert_eq!(nz.len(), 1);
        assert_eq!(b.format_config(b.config(nz[0].0)), "↑↓↑↓");
        assert_eq!(*nz[0].1, C64::new(1.0, 0.0));
        let b2 = build_sector_basis(2, None).unwrap();
        let s2 = neel_state(&b2).unwrap();
        assert_eq!(s2.amplitudes()[0b10], C64::new(1.0, 0.0));
        // staggered configuration is absent from the all-up sector
        let b3 = build_sector_basis(4, Some(4)).unwrap();
        assert!(matches!(neel_state(&b3), Err(Error::InvalidSector(_))));
    }

    #[test]
    fn pauli_string_examples() {
        let b = build_sector_basis(2, Some(0)).unwrap();
        let up_down = StateVector::basis_state(b.clone(), b.parse_config("ud").unwrap()).unwrap();
        let z = up_down.apply_pauli_string(&[(1, Pauli::Z)]).unwrap();
        assert_eq!(z.inner(&up_down), C64::new(1.0, 0.0));

        let flipped = up_down
            .apply_pauli_string(&[(2, Pauli::Plus), (1, Pauli::Minus)])
            .unwrap();
        let down_up = StateVector::basis_state(b.clone(), b.parse_config("du").unwrap()).unwrap();
        assert_eq!(flipped.inner(&down_up), C64::new(1.0, 0.0));
        assert_eq!(flipped.norm(), 1.0);

        let killed = up_down.apply_pauli_string(&[(1, Pauli::Plus)]).unwrap();
        assert_eq!(killed.norm(), 0.0);
    }

    #[test]
    fn pauli_string_sector_escape_and_range() {
        let b = build_sector_basis(2, Some(0)).unwrap();
        let s = neel_state(&b).unwrap();
        assert!(matches!(
            s.apply_pauli_string(&[(1, Pauli::X)]),
            Err(Error::SectorEscape { .. })
        ));
        assert!(matches!(
            s.apply_pauli_string(&[(3, Pauli::Z)]),
            Err(Error::SiteOutOfRange { .. })
        ));
        let full = s.embed_full().unwrap();
        let x = full.apply_pauli_string(&[(1, Pauli::X)]).unwrap();
        assert_eq!(x.amplitudes()[0b00], C64::new(1.0, 0.0));
        let y = full.apply_pauli_string(&[(2, Pauli::Y)]).unwrap();
        assert_eq!(y.amplitudes()[0b11], C64::new(0.0, -1.0));
    }

    #[test]
    fn label_conventions() {
        let l = Label::new(1.5, 1).unwrap();
        assert_eq!((l.first_site(), l.last_site()), (1, 2));
        assert!(Label::new(2.0, 1).is_err());
        assert!(Label::new(1.5, 2).is_err());
        assert!(Label::new(1.0, 2).is_err());
        let l = Label::from_first_site(3, 4);
        assert_eq!(l.n(), 5.0);
        assert!(l.check(7).is_ok());
        assert!(l.check(6).is_err());
    }

    #[test]
    fn bell_pair_single_site_is_maximally_mixed() {
        let b = build_sector_basis(2, None).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = StateVector::from_amplitudes(
            b,
            vec![C64::new(h, 0.0), C64::default(), C64::default(), C64::new(h, 0.0)],
        )
        .unwrap();
        for site in 1..=2 {
            let rho = bell.partial_trace(Label::from_first_site(site, 0)).unwrap();
            let m = rho.matrix();
            assert!((m[(0, 0)].re - 0.5).abs() < 1e-15);
            assert!((m[(1, 1)].re - 0.5).abs() < 1e-15);
            assert!(m[(0, 1)].norm() < 1e-15);
        }
    }

    #[test]
    fn product_state_windows_are_pure() {
        let b = build_sector_basis(6, Some(0)).unwrap();
        let s = neel_state(&b).unwrap();
        for ell in 0..6 {
            for first in 1..=(6 - ell) {
                let rho = s.partial_trace(Label::from_first_site(first, ell)).unwrap();
                let ev = rho.eigenvalues();
                assert!((ev.last().unwrap() - 1.0).abs() < 1e-12);
                assert!(ev.iter().rev().skip(1).all(|x| x.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn window_spectrum_matches_partial_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for sector in [None, Some(1), Some(-3)] {
            let b = build_sector_basis(7, sector).unwrap();
            let s = StateVector::random(b, &mut rng);
            for len in 1..=7 {
                for first in 1..=(8 - len) {
                    let mut a = s.window_spectrum(first, len).unwrap();
                    a.retain(|x| *x > 1e-13);
                    a.sort_by(f64::total_cmp);
                    let mut d = s
                        .partial_trace(Label::from_first_site(first, len - 1))
                        .unwrap()
                        .eigenvalues();
                    d.retain(|x| *x > 1e-13);
                    assert_eq!(a.len(), d.len(), "sector {sector:?} window {first}+{len}");
                    for (x, y) in a.iter().zip(&d) {
                        assert!((x - y).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn reflection_is_an_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = build_sector_basis(6, Some(0)).unwrap();
        let s = StateVector::random(b.clone(), &mut rng);
        let back = s.reflected().reflected();
        assert!((back.inner(&s).re - 1.0).abs() < 1e-14);
        let n = neel_state(&b).unwrap().reflected();
        assert_eq!(
            b.format_config(b.config(
                n.amplitudes().iter().position(|a| a.norm() > 0.0).unwrap()
            )),
            "↓↑↓↑↓↑"
        );
    }
}
