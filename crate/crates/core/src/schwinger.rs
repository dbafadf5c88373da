//! Lattice Schwinger model in its spin-chain form (gauge field eliminated with
//! Gauss's law, open boundaries, zero field at the left edge).
//!
//! In units where energies are `1/a` and times are `a`:
//!
//! ```text
//! H a = (ga)^2/2 sum_{n=1}^{N-1} [L(n) - Q_n]^2
//!     + (ma)/2   sum_{n=1}^{N}   (-1)^n sigma^z_n
//!     + 1/2      sum_{n=1}^{N-1} (sigma^+_n sigma^-_{n+1} + h.c.)
//! L(n) = 1/2 sum_{k<=n} (sigma^z_k + (-1)^k)
//! ```
//!
//! `Q_n` is the external-charge background: `Q` on the links inside the
//! current charge window and zero elsewhere.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{apply_string_to_config, Pauli, SectorBasis, StateVector};
use crate::sparse::SparseOperator;
use crate::C64;

/// Dimensionless model inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub n_sites: usize,
    /// Coupling `g a`.
    pub ga: f64,
    /// Mass `m a`.
    pub ma: f64,
}

impl ModelParams {
    pub fn new(n_sites: usize, ga: f64, ma: f64) -> Result<Self> {
        let p = ModelParams { n_sites, ga, ma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::Config(format!("need at least 2 sites, got {}", self.n_sites)));
        }
        if !(self.ga > 0.0) || !self.ga.is_finite() {
            return Err(Error::Config(format!("coupling ga must be positive, got {}", self.ga)));
        }
        if !(self.ma >= 0.0) || !self.ma.is_finite() {
            return Err(Error::Config(format!("mass ma must be non-negative, got {}", self.ma)));
        }
        Ok(())
    }

    /// Prefactor `(ga)^2 / 2` of the electric term.
    pub fn electric_scale(&self) -> f64 {
        0.5 * self.ga * self.ga
    }
}

/// External charges `+-Q` whose separating window of links grows on a light cone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargeBackground {
    /// Charge magnitude in units of `g`.
    pub q: f64,
    /// Light-cone speed in sites per unit time.
    pub u: f64,
    /// First link of the initial window.
    pub center_left: usize,
    /// Last link of the initial window.
    pub center_right: usize,
    /// Time at which the charges are removed, if ever.
    #[serde(default)]
    pub t_remove: Option<f64>,
}

/// Links `lo..=hi` carrying a field shift of `-q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeWindow {
    pub q: f64,
    pub lo: usize,
    pub hi: usize,
}

impl ChargeWindow {
    #[inline]
    pub fn shift(&self, link: usize) -> f64 {
        if (self.lo..=self.hi).contains(&link) {
            self.q
        } else {
            0.0
        }
    }
}

impl ChargeBackground {
    pub fn validate(&self, n_sites: usize) -> Result<()> {
        if !(self.q >= 0.0) || !self.q.is_finite() {
            return Err(Error::Config(format!("charge Q must be non-negative, got {}", self.q)));
        }
        if !(self.u >= 0.0) || !self.u.is_finite() {
            return Err(Error::Config(format!("light-cone speed u must be non-negative, got {}", self.u)));
        }
        if self.center_left >= self.center_right {
            return Err(Error::Window(format!(
                "charge window {}..={} must have left < right",
                self.center_left, self.center_right
            )));
        }
        if self.center_left < 1 || self.center_right > n_sites - 1 {
            return Err(Error::Window(format!(
                "charge window {}..={} outside links 1..={}",
                self.center_left,
                self.center_right,
                n_sites - 1
            )));
        }
        if let Some(tr) = self.t_remove {
            if !(tr >= 0.0) {
                return Err(Error::Config(format!("removal time must be non-negative, got {tr}")));
            }
        }
        Ok(())
    }

    /// Number of outward hops each charge has made by time `t`.
    pub fn hops_at(&self, t: f64) -> usize {
        (self.u * t + 1e-9).floor().max(0.0) as usize
    }

    /// Charge window at time `t`, or `None` once the charges are removed.
    ///
    /// Each charge moves one link outward whenever `floor(u t)` increments and
    /// stops at the chain edge.
    pub fn window_at(&self, t: f64, n_sites: usize) -> Option<ChargeWindow> {
        if let Some(tr) = self.t_remove {
            if t >= tr - 1e-12 {
                return None;
            }
        }
        let h = self.hops_at(t);
        Some(ChargeWindow {
            q: self.q,
            lo: self.center_left.saturating_sub(h).max(1),
            hi: (self.center_right + h).min(n_sites - 1),
        })
    }

    /// Times in `(0, t_end)` at which the window changes.
    pub fn change_times(&self, n_sites: usize, t_end: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let t_stop = self.t_remove.unwrap_or(f64::INFINITY).min(t_end);
        if self.u > 0.0 {
            let max_hops = (self.center_left - 1).max(n_sites - 1 - self.center_right);
            for k in 1..=max_hops {
                let t = k as f64 / self.u;
                if t >= t_stop - 1e-12 {
                    break;
                }
                out.push(t);
            }
        }
        if let Some(tr) = self.t_remove {
            if tr > 1e-12 && tr < t_end - 1e-12 {
                out.push(tr);
            }
        }
        out
    }
}

fn check_basis(basis: &SectorBasis, params: &ModelParams) -> Result<()> {
    if basis.n_sites() != params.n_sites {
        return Err(Error::ShapeMismatch(format!(
            "basis has {} sites, model has {}",
            basis.n_sites(),
            params.n_sites
        )));
    }
    Ok(())
}

/// Running electric field `L(1..N-1)` of a configuration (index 0 is link 1).
pub fn link_fields(basis: &SectorBasis, config: u32) -> Vec<f64> {
    let n = basis.n_sites();
    let mut out = Vec::with_capacity(n - 1);
    let mut acc = 0.0;
    for k in 1..n {
        let stagger = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += 0.5 * (basis.spin_z(config, k) + stagger);
        out.push(acc);
    }
    out
}

/// Builds an operator from weighted Pauli strings.
pub fn operator_from_strings(
    basis: &Arc<SectorBasis>,
    terms: &[(C64, Vec<(usize, Pauli)>)],
) -> Result<SparseOperator> {
    for (_, ops) in terms {
        for &(site, _) in ops {
            basis.check_site(site)?;
        }
    }
    let mut trip = Vec::new();
    for (col, &cfg) in basis.states().iter().enumerate() {
        for (w, ops) in terms {
            if let Some((c, out)) = apply_string_to_config(basis, cfg, ops) {
                let row = basis.index_of(out).ok_or(Error::SectorEscape {
                    sector: basis.sector().unwrap_or_default(),
                })?;
                trip.push((row, col, w * c));
            }
        }
    }
    SparseOperator::from_triplets(basis.clone(), trip)
}

/// Hamiltonian with an explicit (already resolved) charge window.
pub fn hamiltonian_with_window(
    basis: &Arc<SectorBasis>,
    params: &ModelParams,
    window: Option<ChargeWindow>,
) -> Result<SparseOperator> {
    params.validate()?;
    check_basis(basis, params)?;
    let n = params.n_sites;
    if let Some(w) = window {
        if w.lo < 1 || w.hi > n - 1 || w.lo > w.hi {
            return Err(Error::Window(format!(
                "charge window {}..={} outside links 1..={}",
                w.lo,
                w.hi,
                n - 1
            )));
        }
    }
    let e_scale = params.electric_scale();
    let mut trip = Vec::with_capacity(basis.dim() * n);
    for (i, &cfg) in basis.states().iter().enumerate() {
        let mut diag = 0.0;
        for (idx, l) in link_fields(basis, cfg).into_iter().enumerate() {
            let shift = window.map_or(0.0, |w| w.shift(idx + 1));
            diag += e_scale * (l - shift) * (l - shift);
        }
        for k in 1..=n {
            let stagger = if k % 2 == 0 { 1.0 } else { -1.0 };
            diag += 0.5 * params.ma * stagger * basis.spin_z(cfg, k);
        }
        trip.push((i, i, C64::new(diag, 0.0)));
        // hopping: 1/2 (sigma^+_k sigma^-_{k+1} + h.c.) swaps antiparallel neighbours
        for k in 1..n {
            let m = basis.site_mask(k) | basis.site_mask(k + 1);
            let pair = cfg & m;
            if pair != 0 && pair != m {
                let j = basis
                    .index_of(cfg ^ m)
                    .expect("exchange conserves magnetization");
                trip.push((j, i, C64::new(0.5, 0.0)));
            }
        }
    }
    SparseOperator::from_triplets(basis.clone(), trip)
}

/// `H_latt`, optionally with the external-charge background as seen at time `t`.
pub fn build_hamiltonian(
    basis: &Arc<SectorBasis>,
    params: &ModelParams,
    background: Option<&ChargeBackground>,
    t: f64,
) -> Result<SparseOperator> {
    if !(t >= 0.0) {
        return Err(Error::Config(format!("time must be non-negative, got {t}")));
    }
    let window = match background {
        Some(bg) => {
            bg.validate(params.n_sites)?;
            bg.window_at(t, params.n_sites)
        }
        None => None,
    };
    hamiltonian_with_window(basis, params, window)
}

/// Physical field `<L(n)> - Q_n` on links `1..N-1`.
pub fn electric_field_profile(
    state: &StateVector,
    background: Option<&ChargeBackground>,
    t: f64,
) -> Result<Vec<f64>> {
    let n = state.n_sites();
    let window = match background {
        Some(bg) => {
            bg.validate(n)?;
            bg.window_at(t, n)
        }
        None => None,
    };
    Ok(field_profile_with_window(state, window))
}

pub fn field_profile_with_window(state: &StateVector, window: Option<ChargeWindow>) -> Vec<f64> {
    let basis = state.basis();
    let n = basis.n_sites();
    let mut out = vec![0.0; n - 1];
    for (i, a) in state.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        if p == 0.0 {
            continue;
        }
        for (o, l) in out.iter_mut().zip(link_fields(basis, basis.config(i))) {
            *o += p * l;
        }
    }
    if let Some(w) = window {
        for (idx, o) in out.iter_mut().enumerate() {
            *o -= w.shift(idx + 1);
        }
    }
    out
}

/// `P = -i sum_n (sigma^-_n sigma^z_{n+1} sigma^+_{n+2} - h.c.)`.
pub fn pseudo_momentum_operator(basis: &Arc<SectorBasis>) -> Result<SparseOperator> {
    let n = basis.n_sites();
    if n < 3 {
        return Err(Error::Size(format!("pseudo-momentum needs N >= 3, got {n}")));
    }
    let mut terms = Vec::with_capacity(2 * (n - 2));
    for k in 1..=n - 2 {
        terms.push((
            C64::new(0.0, -1.0),
            vec![(k, Pauli::Minus), (k + 1, Pauli::Z), (k + 2, Pauli::Plus)],
        ));
        terms.push((
            C64::new(0.0, 1.0),
            vec![(k + 2, Pauli::Minus), (k + 1, Pauli::Z), (k, Pauli::Plus)],
        ));
    }
    operator_from_strings(basis, &terms)
}

/// Total magnetization `sum_k sigma^z_k`.
pub fn total_sz_operator(basis: &Arc<SectorBasis>) -> Result<SparseOperator> {
    let trip = basis
        .states()
        .iter()
        .enumerate()
        .map(|(i, &c)| (i, i, C64::new(basis.magnetization(c) as f64, 0.0)))
        .collect();
    SparseOperator::from_triplets(basis.clone(), trip)
}

/// Semi-classical string-breaking field `L_c = m^2 / g^2`.
pub fn critical_field(params: &ModelParams) -> f64 {
    (params.ma * params.ma) / (params.ga * params.ga)
}

/// Continuum vector-meson mass `g / sqrt(pi)`.
pub fn continuum_vector_mass(g: f64) -> f64 {
    g / std::f64::consts::PI.sqrt()
}

/// Scalar-meson reference mass, twice the vector mass.
pub fn scalar_reference_mass(g: f64) -> f64 {
    2.0 * continuum_vector_mass(g)
}
