//! Information lattice of a pure chain state.
//!
//! For a window `C(n, l)` of `l + 1` contiguous sites the von Neumann
//! information is `I = log2 dim + Tr rho log2 rho` (bits). Local information
//!
//! ```text
//! i(n, l) = I(n, l) - I(n - 1/2, l - 1) - I(n + 1/2, l - 1) + I(n, l - 2)
//! ```
//!
//! with `I = 0` for empty windows, is the conditional mutual information of
//! the two overlapping sub-windows. Summing `i` over every label inside a
//! window recovers that window's information, and over the whole lattice the
//! total is `N` bits for any pure state.

use std::collections::HashMap;
use std::ops::Index;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hilbert::{DensityMatrix, Label, StateVector};

/// Eigenvalues in `[-NEGATIVE_EIGENVALUE_TOL, 0]` are treated as zero.
pub const NEGATIVE_EIGENVALUE_TOL: f64 = 1e-8;

/// Default largest scale for time-dependent runs.
pub fn default_ell_max(n_sites: usize) -> usize {
    9.min(n_sites - 1)
}

/// `log2(dim) + sum lambda log2 lambda` over a spectrum. Eigenvalues in
/// `[-1e-8, 0]` count as zero; anything more negative is an error.
pub fn information_from_spectrum(log2_dim: f64, eigenvalues: &[f64]) -> Result<f64> {
    let mut acc = log2_dim;
    for &lam in eigenvalues {
        if lam < -NEGATIVE_EIGENVALUE_TOL {
            return Err(Error::InvalidDensity { eigenvalue: lam });
        }
        if lam > 0.0 {
            acc += lam * lam.log2();
        }
    }
    Ok(acc)
}

/// Von Neumann information of a reduced density matrix, in bits.
pub fn von_neumann_information(rho: &DensityMatrix) -> Result<f64> {
    let log2_dim = (rho.dim() as f64).log2();
    information_from_spectrum(log2_dim, &rho.eigenvalues())
}

/// Information of the window of `len` sites starting at `first`; zero for empty windows.
pub fn window_information(state: &StateVector, first: usize, len: usize) -> Result<f64> {
    if len == 0 {
        return Ok(0.0);
    }
    let spectrum = state.window_spectrum(first, len)?;
    information_from_spectrum(len as f64, &spectrum)
}

/// `i(n, l)` for a single label.
pub fn local_information(state: &StateVector, label: Label) -> Result<f64> {
    label.check(state.n_sites())?;
    let first = label.first_site();
    let len = label.len();
    let whole = window_information(state, first, len)?;
    if len == 1 {
        return Ok(whole);
    }
    let left = window_information(state, first, len - 1)?;
    let right = window_information(state, first + 1, len - 1)?;
    let inner = window_information(state, first + 1, len - 2)?;
    Ok(whole - left - right + inner)
}

/// Triangular array `i(n, l)` for `l = 0..=ell_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoLattice {
    n_sites: usize,
    ell_max: usize,
    /// `values[l][first_site - 1]`.
    values: Vec<Vec<f64>>,
}

impl InfoLattice {
    /// Builds a lattice from raw rows (`rows[l]` has `N - l` entries).
    pub fn from_rows(n_sites: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows.len() > n_sites {
            return Err(Error::ShapeMismatch(format!(
                "{} scale rows for {n_sites} sites",
                rows.len()
            )));
        }
        for (ell, row) in rows.iter().enumerate() {
            if row.len() != n_sites - ell {
                return Err(Error::ShapeMismatch(format!(
                    "row l = {ell} has {} entries, expected {}",
                    row.len(),
                    n_sites - ell
                )));
            }
        }
        Ok(InfoLattice {
            n_sites,
            ell_max: rows.len() - 1,
            values: rows,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn ell_max(&self) -> usize {
        self.ell_max
    }

    pub fn get(&self, label: Label) -> Option<f64> {
        if label.ell() > self.ell_max || label.last_site() > self.n_sites {
            return None;
        }
        Some(self.values[label.ell()][label.first_site() - 1])
    }

    pub fn row(&self, ell: usize) -> &[f64] {
        &self.values[ell]
    }

    /// All `(label, i)` pairs, scale-major then left to right.
    pub fn iter(&self) -> impl Iterator<Item = (Label, f64)> + '_ {
        self.values.iter().enumerate().flat_map(|(ell, row)| {
            row.iter()
                .enumerate()
                .map(move |(k, &v)| (Label::from_first_site(k + 1, ell), v))
        })
    }

    pub fn total(&self) -> f64 {
        self.values.iter().flatten().sum()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// Sum of `i` over every label whose window lies inside `label`'s window.
    pub fn sum_within(&self, label: Label) -> f64 {
        let (lo, hi) = (label.first_site(), label.last_site());
        self.iter()
            .filter(|(l, _)| l.first_site() >= lo && l.last_site() <= hi)
            .map(|(_, v)| v)
            .sum()
    }
}

impl Index<Label> for InfoLattice {
    type Output = f64;

    fn index(&self, label: Label) -> &f64 {
        &self.values[label.ell()][label.first_site() - 1]
    }
}

/// Information of every window of up to `max_len` sites, computed once each.
#[derive(Debug, Clone)]
pub struct WindowInformation {
    n_sites: usize,
    /// `table[len - 1][first - 1]`.
    table: Vec<Vec<f64>>,
}

impl WindowInformation {
    pub fn compute(state: &StateVector, max_len: usize, exec: Execution) -> Result<Self> {
        let n = state.n_sites();
        let max_len = max_len.min(n);
        let jobs: Vec<(usize, usize)> = (1..=max_len)
            .flat_map(|len| (1..=n + 1 - len).map(move |first| (first, len)))
            .collect();
        let values = exec.map_range(jobs.len(), |j| {
            let (first, len) = jobs[j];
            window_information(state, first, len)
        });
        let mut table: Vec<Vec<f64>> = (1..=max_len).map(|len| vec![0.0; n + 1 - len]).collect();
        for ((first, len), v) in jobs.into_iter().zip(values) {
            table[len - 1][first - 1] = v?;
        }
        Ok(WindowInformation { n_sites: n, table })
    }

    /// `I` of `len` sites from `first`; zero for `len == 0`.
    pub fn get(&self, first: usize, len: usize) -> f64 {
        if len == 0 {
            0.0
        } else {
            self.table[len - 1][first - 1]
        }
    }

    pub fn max_len(&self) -> usize {
        self.table.len()
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }
}

/// Full lattice up to scale `ell_max`, using the default execution policy.
pub fn full_info_lattice(state: &StateVector, ell_max: usize) -> Result<InfoLattice> {
    full_info_lattice_with(state, ell_max, Execution::default())
}

pub fn full_info_lattice_with(
    state: &StateVector,
    ell_max: usize,
    exec: Execution,
) -> Result<InfoLattice> {
    let n = state.n_sites();
    if ell_max >= n {
        return Err(Error::Label {
            n: 0.0,
            ell: ell_max,
            reason: format!("largest scale on {n} sites is {}", n - 1),
        });
    }
    let windows = WindowInformation::compute(state, ell_max + 1, exec)?;
    Ok(lattice_from_windows(&windows, ell_max))
}

pub fn lattice_from_windows(windows: &WindowInformation, ell_max: usize) -> InfoLattice {
    let n = windows.n_sites();
    let rows = (0..=ell_max)
        .map(|ell| {
            let len = ell + 1;
            (1..=n - ell)
                .map(|first| {
                    let mut v = windows.get(first, len);
                    if len >= 2 {
                        v -= windows.get(first, len - 1) + windows.get(first + 1, len - 1);
                        v += windows.get(first + 1, len - 2);
                    }
                    v
                })
                .collect()
        })
        .collect();
    InfoLattice {
        n_sites: n,
        ell_max,
        values: rows,
    }
}

/// Profile over scales `l = 0..=ell_max`, in bits.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleProfile(pub Vec<f64>);

impl ScaleProfile {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Index<usize> for ScaleProfile {
    type Output = f64;

    fn index(&self, ell: usize) -> &f64 {
        &self.0[ell]
    }
}

/// `I(l) = sum_n i(n, l)`.
pub fn info_per_scale(lattice: &InfoLattice) -> ScaleProfile {
    ScaleProfile(lattice.values.iter().map(|row| row.iter().sum()).collect())
}

/// Position-restricted profile: sum over labels with `n_lo <= n <= n_hi`
/// (half-integer centres included).
pub fn windowed_info_per_scale(lattice: &InfoLattice, n_lo: f64, n_hi: f64) -> Result<ScaleProfile> {
    if !(n_lo <= n_hi) || n_hi < 1.0 || n_lo > lattice.n_sites as f64 {
        return Err(Error::Window(format!(
            "position window [{n_lo}, {n_hi}] is empty on {} sites",
            lattice.n_sites
        )));
    }
    let mut out = vec![0.0; lattice.ell_max + 1];
    let mut hits = 0usize;
    for (label, v) in lattice.iter() {
        let n = label.n();
        if n >= n_lo - 1e-12 && n <= n_hi + 1e-12 {
            out[label.ell()] += v;
            hits += 1;
        }
    }
    if hits == 0 {
        return Err(Error::Window(format!(
            "no labels with centre in [{n_lo}, {n_hi}]"
        )));
    }
    Ok(ScaleProfile(out))
}

/// Pointwise `a - b`.
pub fn info_difference(a: &InfoLattice, b: &InfoLattice) -> Result<InfoLattice> {
    if a.n_sites != b.n_sites || a.ell_max != b.ell_max {
        return Err(Error::ShapeMismatch(format!(
            "lattices (N={}, l_max={}) and (N={}, l_max={})",
            a.n_sites, a.ell_max, b.n_sites, b.ell_max
        )));
    }
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect())
        .collect();
    Ok(InfoLattice {
        n_sites: a.n_sites,
        ell_max: a.ell_max,
        values,
    })
}

/// Values below this are treated as zero when looking for a peak.
pub const PEAK_FLOOR: f64 = 1e-12;

/// Scale of the maximum at or above `exclude_below`; ties go to the smaller
/// scale. `None` when nothing above the threshold is positive.
pub fn peak_scale(profile: &ScaleProfile, exclude_below: usize) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (ell, &v) in profile.0.iter().enumerate().skip(exclude_below) {
        if v <= PEAK_FLOOR {
            continue;
        }
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((ell, v));
        }
    }
    best.map(|(ell, _)| ell)
}

/// `S(n)` in bits for every cut `n = 1..N-1`, from Schmidt coefficients.
pub fn bipartite_entropy_profile(state: &StateVector) -> Result<Vec<f64>> {
    (1..state.n_sites())
        .map(|cut| {
            let sv = state.schmidt_values(cut)?;
            Ok(sv
                .iter()
                .map(|s| s * s)
                .filter(|&p| p > 0.0)
                .map(|p| -p * p.log2())
                .sum())
        })
        .collect()
}

/// Memo keyed by window, for callers that want lazily filled values.
#[derive(Debug, Default)]
pub struct WindowCache {
    map: HashMap<(usize, usize), f64>,
}

impl WindowCache {
    pub fn get_or_compute(&mut self, state: &StateVector, first: usize, len: usize) -> Result<f64> {
        if let Some(v) = self.map.get(&(first, len)) {
            return Ok(*v);
        }
        let v = window_information(state, first, len)?;
        self.map.insert((first, len), v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{build_sector_basis, neel_state};
    use crate::C64;
    use nalgebra::DMatrix;

    fn bell() -> StateVector {
        let b = build_sector_basis(2, None).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        StateVector::from_amplitudes(
            b,
            vec![C64::new(h, 0.0), C64::default(), C64::default(), C64::new(h, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn information_of_simple_densities() {
        let l0 = Label::from_first_site(1, 0);
        let mixed = DensityMatrix::new(l0, DMatrix::identity(2, 2) * C64::new(0.5, 0.0)).unwrap();
        assert!(von_neumann_information(&mixed).unwrap().abs() < 1e-15);
        let mut pure = DMatrix::<C64>::zeros(4, 4);
        pure[(2, 2)] = C64::new(1.0, 0.0);
        let pure = DensityMatrix::new(Label::from_first_site(1, 1), pure).unwrap();
        assert!((von_neumann_information(&pure).unwrap() - 2.0).abs() < 1e-15);
        let mut bad = DMatrix::<C64>::zeros(2, 2);
        bad[(0, 0)] = C64::new(1.1, 0.0);
        bad[(1, 1)] = C64::new(-0.1, 0.0);
        let bad = DensityMatrix::new(l0, bad).unwrap();
        assert!(matches!(
            von_neumann_information(&bad),
            Err(Error::InvalidDensity { .. })
        ));
    }

    #[test]
    fn bell_pair_lattice() {
        let s = bell();
        let rho = s.partial_trace(Label::from_first_site(1, 0)).unwrap();
        assert!(von_neumann_information(&rho).unwrap().abs() < 1e-12);
        let il = full_info_lattice(&s, 1).unwrap();
        assert!(il[Label::new(1.0, 0).unwrap()].abs() < 1e-12);
        assert!(il[Label::new(2.0, 0).unwrap()].abs() < 1e-12);
        assert!((il[Label::new(1.5, 1).unwrap()] - 2.0).abs() < 1e-12);
        assert!((local_information(&s, Label::new(1.5, 1).unwrap()).unwrap() - 2.0).abs() < 1e-12);
        // window {1} excludes the n = 3/2 label
        let w = windowed_info_per_scale(&il, 1.0, 1.0).unwrap();
        assert_eq!(w[1], 0.0);
    }

    #[test]
    fn neel_lattice_is_delta() {
        let b = build_sector_basis(8, Some(0)).unwrap();
        let s = neel_state(&b).unwrap();
        let il = full_info_lattice(&s, 7).unwrap();
        for (label, v) in il.iter() {
            let expect = if label.ell() == 0 { 1.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-12, "{label}: {v}");
        }
        let prof = info_per_scale(&il);
        assert!((prof[0] - 8.0).abs() < 1e-12);
        assert_eq!(peak_scale(&prof, 0), Some(0));
    }

    #[test]
    fn invalid_labels() {
        let b = build_sector_basis(4, Some(0)).unwrap();
        let s = neel_state(&b).unwrap();
        assert!(local_information(&s, Label::from_first_site(3, 2)).is_err());
        assert!(full_info_lattice(&s, 4).is_err());
    }

    #[test]
    fn peak_scale_cases() {
        let p = ScaleProfile(vec![5.0, 3.0, 0.0, 0.0, 7.0]);
        assert_eq!(peak_scale(&p, 2), Some(4));
        let dec = ScaleProfile(vec![4.0, 3.0, 2.0, 1.0]);
        assert_eq!(peak_scale(&dec, 0), Some(0));
        let tie = ScaleProfile(vec![0.0, 2.0, 2.0]);
        assert_eq!(peak_scale(&tie, 0), Some(1));
        let flat = ScaleProfile(vec![3.0, 0.0, 0.0]);
        assert_eq!(peak_scale(&flat, 1), None);
    }

    #[test]
    fn difference_shapes() {
        let b = build_sector_basis(6, Some(0)).unwrap();
        let s = neel_state(&b).unwrap();
        let a = full_info_lattice(&s, 3).unwrap();
        let z = info_difference(&a, &a).unwrap();
        assert!(z.iter().all(|(_, v)| v == 0.0));
        let c = full_info_lattice(&s, 2).unwrap();
        assert!(info_difference(&a, &c).is_err());
    }

    #[test]
    fn window_errors() {
        let b = build_sector_basis(4, Some(0)).unwrap();
        let il = full_info_lattice(&neel_state(&b).unwrap(), 3).unwrap();
        assert!(windowed_info_per_scale(&il, 3.0, 2.0).is_err());
        assert!(windowed_info_per_scale(&il, 7.0, 9.0).is_err());
        let full = windowed_info_per_scale(&il, 1.0, 4.0).unwrap();
        assert_eq!(full, info_per_scale(&il));
    }

    #[test]
    fn entropy_profile_simple_states() {
        let b = build_sector_basis(6, Some(0)).unwrap();
        let s = neel_state(&b).unwrap();
        assert!(bipartite_entropy_profile(&s).unwrap().iter().all(|x| x.abs() < 1e-14));
        let e = bipartite_entropy_profile(&bell()).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cache_reuses_windows() {
        let b = build_sector_basis(6, Some(0)).unwrap();
        let s = neel_state(&b).unwrap();
        let mut cache = WindowCache::default();
        let a = cache.get_or_compute(&s, 2, 3).unwrap();
        let again = cache.get_or_compute(&s, 2, 3).unwrap();
        assert_eq!(a, again);
        assert_eq!(cache.len(), 1);
    }
}
