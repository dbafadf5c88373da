//! Meson scattering and string quench runs.
//!
//! Both runs solve for the vacuum, prepare an initial state, evolve it through
//! a [`QuenchSchedule`] and record observables at every sample time. The
//! results are plain in-memory tables; [`crate::io`] serializes them.

use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve, KrylovOptions, QuenchSchedule, Sample, DEFAULT_DT, DEFAULT_SAMPLE_EVERY};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hilbert::{build_sector_basis, Pauli, StateVector};
use crate::info_lattice::{
    bipartite_entropy_profile, default_ell_max, full_info_lattice_with, peak_scale,
    windowed_info_per_scale, InfoLattice, ScaleProfile,
};
use crate::schwinger::{build_hamiltonian, field_profile_with_window, ChargeBackground, ModelParams};
use crate::spectral::{
    default_deflation_shift, lanczos_lowest, spectrum_by_deflation, Classifier, LanczosOptions,
    StateLabel,
};
use crate::C64;

/// Integrator settings shared by both protocols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub t_end: f64,
    pub dt: f64,
    pub sample_every: f64,
    pub krylov_dim: usize,
    pub krylov_tol: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            t_end: 20.0,
            dt: DEFAULT_DT,
            sample_every: DEFAULT_SAMPLE_EVERY,
            krylov_dim: KrylovOptions::default().m_dim,
            krylov_tol: KrylovOptions::default().tol,
        }
    }
}

impl EvolutionConfig {
    fn validate(&self) -> Result<()> {
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.sample_every > 0.0) {
            return Err(Error::Config(format!(
                "sample_every must be positive, got {}",
                self.sample_every
            )));
        }
        if self.krylov_dim < 2 {
            return Err(Error::Config("krylov_dim must be at least 2".into()));
        }
        if !(self.krylov_tol > 0.0) {
            return Err(Error::Config("krylov_tol must be positive".into()));
        }
        Ok(())
    }

    fn krylov(&self) -> KrylovOptions {
        KrylovOptions {
            m_dim: self.krylov_dim,
            tol: self.krylov_tol,
            ..KrylovOptions::default()
        }
    }

    fn apply_to(&self, schedule: &mut QuenchSchedule) {
        schedule.dt = self.dt;
        schedule.sample_every = self.sample_every;
        schedule.krylov = self.krylov();
    }

    /// Times on the sample grid closest to `t_end * {0, 1/4, 1/2, 3/4, 1}`.
    fn default_snapshots(&self) -> Vec<f64> {
        let mut out: Vec<f64> = (0..=4)
            .map(|k| {
                let t = self.t_end * k as f64 / 4.0;
                ((t / self.sample_every).round() * self.sample_every).min(self.t_end)
            })
            .collect();
        out.dedup();
        out
    }
}

/// Two-packet scattering run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatteringConfig {
    pub model: ModelParams,
    /// Momentum of the left packet; `k_right` defaults to `-k`.
    pub k: f64,
    #[serde(default)]
    pub k_right: Option<f64>,
    pub j_left: usize,
    pub j_right: usize,
    pub sigma: f64,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    /// Largest scale recorded for the windowed profile; defaults to `min(9, N-1)`.
    #[serde(default)]
    pub ell_max: Option<usize>,
    /// Centre range `[lo, hi]` of the central region.
    pub cut_n: (f64, f64),
    /// Time range `[lo, hi]` over which the windowed profile is emitted.
    pub cut_t: (f64, f64),
    /// Times of full-lattice snapshots; defaults to quarters of `t_end`.
    #[serde(default)]
    pub snapshot_times: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
}

impl ScatteringConfig {
    /// Desk-scale default: `N = 16`, packets centred on links 4 and 12.
    pub fn desk(k: f64) -> Self {
        ScatteringConfig {
            model: ModelParams {
                n_sites: 16,
                ga: 1.0,
                ma: 1e-5,
            },
            k,
            k_right: None,
            j_left: 4,
            j_right: 12,
            sigma: 1.0,
            evolution: EvolutionConfig {
                t_end: 14.0,
                ..EvolutionConfig::default()
            },
            ell_max: None,
            cut_n: (6.0, 9.5),
            cut_t: (6.0, 14.0),
            snapshot_times: None,
            seed: 0,
        }
    }

    pub fn k_right(&self) -> f64 {
        self.k_right.unwrap_or(-self.k)
    }

    pub fn ell_max(&self) -> usize {
        self.ell_max.unwrap_or_else(|| default_ell_max(self.model.n_sites))
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshot_times
            .clone()
            .unwrap_or_else(|| self.evolution.default_snapshots())
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.evolution.validate()?;
        let n = self.model.n_sites;
        if n < 3 {
            return Err(Error::Config("scattering needs at least 3 sites".into()));
        }
        for (name, j) in [("j_left", self.j_left), ("j_right", self.j_right)] {
            if j < 1 || j > n - 1 {
                return Err(Error::Config(format!("{name} = {j} outside 1..={}", n - 1)));
            }
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::Config(format!("sigma must be non-negative, got {}", self.sigma)));
        }
        if !self.k.is_finite() || !self.k_right().is_finite() {
            return Err(Error::Config("packet momenta must be finite".into()));
        }
        if self.j_left >= self.j_right {
            return Err(Error::Config("j_left must be smaller than j_right".into()));
        }
        if ((self.j_right - self.j_left) as f64) < 6.0 * self.sigma {
            return Err(Error::Config(format!(
                "packets at {} and {} overlap within 3 sigma = {}",
                self.j_left,
                self.j_right,
                3.0 * self.sigma
            )));
        }
        check_ell_max(self.ell_max(), n)?;
        check_range("cut_n", self.cut_n, 1.0, n as f64)?;
        check_range("cut_t", self.cut_t, 0.0, f64::INFINITY)?;
        check_times(&self.snapshot_times(), self.evolution.t_end)?;
        Ok(())
    }
}

/// Light-cone string quench.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StringConfig {
    pub model: ModelParams,
    pub background: ChargeBackground,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub ell_max: Option<usize>,
    /// Links `[lo, hi]` averaged for the mean field.
    pub field_links: (usize, usize),
    /// Centre range `[lo, hi]` for the partially integrated profile.
    pub info_n: (f64, f64),
    /// Scales below this are ignored when locating the profile peak.
    pub peak_exclude_below: usize,
    #[serde(default)]
    pub snapshot_times: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
}

impl StringConfig {
    /// Desk-scale default: `N = 16`, charges on links 6 and 10.
    pub fn desk(ga: f64, q: f64) -> Self {
        StringConfig {
            model: ModelParams {
                n_sites: 16,
                ga,
                ma: 0.25,
            },
            background: ChargeBackground {
                q,
                u: 1.0,
                center_left: 6,
                center_right: 10,
                t_remove: None,
            },
            evolution: EvolutionConfig::default(),
            ell_max: None,
            field_links: (7, 8),
            info_n: (6.0, 11.0),
            peak_exclude_below: 2,
            snapshot_times: None,
            seed: 0,
        }
    }

    pub fn ell_max(&self) -> usize {
        self.ell_max.unwrap_or_else(|| default_ell_max(self.model.n_sites))
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshot_times
            .clone()
            .unwrap_or_else(|| self.evolution.default_snapshots())
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.evolution.validate()?;
        let n = self.model.n_sites;
        self.background.validate(n)?;
        check_ell_max(self.ell_max(), n)?;
        let (lo, hi) = self.field_links;
        if lo < 1 || hi > n - 1 || lo > hi {
            return Err(Error::Config(format!(
                "field_links {lo}..={hi} outside links 1..={}",
                n - 1
            )));
        }
        check_range("info_n", self.info_n, 1.0, n as f64)?;
        if self.peak_exclude_below > self.ell_max() {
            return Err(Error::Config(format!(
                "peak_exclude_below = {} exceeds ell_max = {}",
                self.peak_exclude_below,
                self.ell_max()
            )));
        }
        check_times(&self.snapshot_times(), self.evolution.t_end)?;
        Ok(())
    }
}

fn check_ell_max(ell_max: usize, n: usize) -> Result<()> {
    if ell_max >= n {
        return Err(Error::Config(format!("ell_max = {ell_max} must be below N = {n}")));
    }
    Ok(())
}

fn check_range(name: &str, (lo, hi): (f64, f64), min: f64, max: f64) -> Result<()> {
    if !(lo <= hi) || lo < min || hi > max {
        return Err(Error::Config(format!(
            "{name} = [{lo}, {hi}] must be ordered and inside [{min}, {max}]"
        )));
    }
    Ok(())
}

fn check_times(times: &[f64], t_end: f64) -> Result<()> {
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0 && **t <= t_end + 1e-9)) {
        return Err(Error::Config(format!("snapshot time {t} outside [0, {t_end}]")));
    }
    Ok(())
}

/// `exp(-(n - j)^2 / (2 sigma^2))`, or a Kronecker delta for `sigma = 0`.
pub fn gaussian_profile(n: usize, j: usize, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return if n == j { 1.0 } else { 0.0 };
    }
    let d = n as f64 - j as f64;
    (-d * d / (2.0 * sigma * sigma)).exp()
}

/// `sum_n phi(n, j) e^{-i n k} (sigma^+_n sigma^-_{n+1} - sigma^+_{n+1} sigma^-_n) |psi>`,
/// unnormalized.
pub fn apply_meson_creator(state: &StateVector, j: usize, k: f64, sigma: f64) -> Result<StateVector> {
    let n_sites = state.n_sites();
    if j < 1 || j > n_sites - 1 {
        return Err(Error::Config(format!("packet centre {j} outside 1..={}", n_sites - 1)));
    }
    let mut out = vec![C64::default(); state.amplitudes().len()];
    for n in 1..n_sites {
        let phi = gaussian_profile(n, j, sigma);
        if phi < 1e-300 {
            continue;
        }
        let coeff = phi * C64::from_polar(1.0, -(n as f64) * k);
        let fwd = state.apply_pauli_string(&[(n, Pauli::Plus), (n + 1, Pauli::Minus)])?;
        let back = state.apply_pauli_string(&[(n + 1, Pauli::Plus), (n, Pauli::Minus)])?;
        for ((o, f), b) in out.iter_mut().zip(fwd.amplitudes()).zip(back.amplitudes()) {
            *o += coeff * (f - b);
        }
    }
    StateVector::from_raw(state.basis().clone(), out)
}

fn normalize_packet(state: StateVector) -> Result<StateVector> {
    if state.norm() < 1e-12 {
        return Err(Error::DegeneratePacket);
    }
    state.normalized()
}

/// Single Gaussian meson packet on top of `vacuum`, normalized.
pub fn prepare_meson_wavepacket(vacuum: &StateVector, j: usize, k: f64, sigma: f64) -> Result<StateVector> {
    normalize_packet(apply_meson_creator(vacuum, j, k, sigma)?)
}

/// Both packets applied in turn to `vacuum`, normalized once at the end.
pub fn prepare_two_packets(vacuum: &StateVector, cfg: &ScatteringConfig) -> Result<StateVector> {
    let left = apply_meson_creator(vacuum, cfg.j_left, cfg.k, cfg.sigma)?;
    let both = apply_meson_creator(&left, cfg.j_right, cfg.k_right(), cfg.sigma)?;
    normalize_packet(both)
}

/// Ground state of the charge-free Hamiltonian in the zero-magnetization sector.
pub fn solve_vacuum(params: &ModelParams, seed: u64) -> Result<(f64, StateVector)> {
    params.validate()?;
    let sector = (params.n_sites % 2) as i32;
    let basis = build_sector_basis(params.n_sites, Some(sector))?;
    let h = build_hamiltonian(&basis, params, None, 0.0)?;
    let opts = LanczosOptions {
        seed,
        ..LanczosOptions::default()
    };
    let mut r = lanczos_lowest(&h, 1, &opts)?;
    Ok((r.energies[0], r.states.swap_remove(0)))
}

/// Low-lying spectrum with classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub model: ModelParams,
    pub levels: usize,
    /// Total magnetization; defaults to `N mod 2`.
    #[serde(default)]
    pub sector: Option<i32>,
    /// Deflation weight; defaults to `10 (ga)^2 N / 2`.
    #[serde(default)]
    pub shift: Option<f64>,
    #[serde(default)]
    pub lanczos: LanczosOptions,
}

impl SpectrumConfig {
    pub fn new(model: ModelParams, levels: usize) -> Self {
        SpectrumConfig {
            model,
            levels,
            sector: None,
            shift: None,
            lanczos: LanczosOptions::default(),
        }
    }

    pub fn sector(&self) -> i32 {
        self.sector.unwrap_or((self.model.n_sites % 2) as i32)
    }

    pub fn shift(&self) -> f64 {
        self.shift.unwrap_or_else(|| default_deflation_shift(&self.model))
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.model.n_sites < 3 {
            return Err(Error::Config("spectrum classification needs at least 3 sites".into()));
        }
        if self.levels == 0 {
            return Err(Error::Config("levels must be at least 1".into()));
        }
        if !(self.shift() > 0.0) {
            return Err(Error::Config(format!("deflation shift must be positive, got {}", self.shift())));
        }
        if !(self.lanczos.tol > 0.0) || self.lanczos.krylov_dim < 2 {
            return Err(Error::Config("lanczos tol must be positive and krylov_dim at least 2".into()));
        }
        let basis = crate::hilbert::SectorBasis::new(self.model.n_sites, Some(self.sector()))
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.levels > basis.dim() {
            return Err(Error::Config(format!(
                "{} levels requested from a sector of dimension {}",
                self.levels,
                basis.dim()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumRun {
    pub config: SpectrumConfig,
    pub labels: Vec<StateLabel>,
    pub residuals: Vec<f64>,
}

pub fn run_spectrum(cfg: &SpectrumConfig, exec: Execution) -> Result<SpectrumRun> {
    cfg.validate()?;
    let basis = build_sector_basis(cfg.model.n_sites, Some(cfg.sector()))?;
    let h = build_hamiltonian(&basis, &cfg.model, None, 0.0)?.with_execution(exec);
    let res = spectrum_by_deflation(&h, cfg.levels, cfg.shift(), &cfg.lanczos)?;
    let labels = Classifier::new(&h)?.classify_spectrum(&res.states, exec);
    Ok(SpectrumRun {
        config: cfg.clone(),
        labels,
        residuals: res.residuals,
    })
}

/// Time-indexed profile rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    pub times: Vec<f64>,
    pub values: Vec<T>,
}

impl<T> Default for TimeSeries<T> {
    fn default() -> Self {
        TimeSeries {
            times: Vec::new(),
            values: Vec::new(),
        }
    }
}

impl<T> TimeSeries<T> {
    fn push(&mut self, t: f64, v: T) {
        self.times.push(t);
        self.values.push(v);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &T)> {
        self.times.iter().copied().zip(&self.values)
    }
}

/// Whether the evolution reached `t_end`.
#[derive(Debug)]
pub struct RunStatus {
    pub complete: bool,
    pub error: Option<Error>,
}

#[derive(Debug)]
pub struct ScatteringRun {
    pub config: ScatteringConfig,
    pub vacuum_energy: f64,
    pub initial_energy: f64,
    /// `S(n)` for `n = 1..N-1`.
    pub entropy: TimeSeries<Vec<f64>>,
    /// `<H>` at each sample.
    pub energy: TimeSeries<f64>,
    /// Full lattices (all scales) at snapshot times.
    pub snapshots: TimeSeries<InfoLattice>,
    /// Central-region profile for samples inside `cut_t`.
    pub cut_profile: TimeSeries<ScaleProfile>,
    pub status: RunStatus,
}

#[derive(Debug)]
pub struct StringRun {
    pub config: StringConfig,
    /// `<L(n)> - Q_n` for links `1..N-1`.
    pub field: TimeSeries<Vec<f64>>,
    pub entropy: TimeSeries<Vec<f64>>,
    pub energy: TimeSeries<f64>,
    pub total_sz: TimeSeries<f64>,
    pub snapshots: TimeSeries<InfoLattice>,
    /// Partially integrated profile over `info_n`.
    pub window_profile: TimeSeries<ScaleProfile>,
    /// Mean field over `field_links` minus its initial value.
    pub field_shift: TimeSeries<f64>,
    /// Peak scale of the windowed profile, if any.
    pub peak: TimeSeries<Option<usize>>,
    pub status: RunStatus,
}

fn is_snapshot(t: f64, times: &[f64]) -> bool {
    times.iter().any(|s| (s - t).abs() < 1e-9)
}

fn lattice_for_sample(
    state: &StateVector,
    ell_max: usize,
    snapshot: bool,
    exec: Execution,
) -> Result<InfoLattice> {
    let depth = if snapshot { state.n_sites() - 1 } else { ell_max };
    full_info_lattice_with(state, depth, exec)
}

fn truncated(lattice: &InfoLattice, ell_max: usize) -> InfoLattice {
    let rows = (0..=ell_max.min(lattice.ell_max()))
        .map(|ell| lattice.row(ell).to_vec())
        .collect();
    InfoLattice::from_rows(lattice.n_sites(), rows).expect("rows taken from a valid lattice")
}

pub fn run_scattering(cfg: &ScatteringConfig, exec: Execution) -> Result<ScatteringRun> {
    cfg.validate()?;
    let (vacuum_energy, vacuum) = solve_vacuum(&cfg.model, cfg.seed)?;
    let initial = prepare_two_packets(&vacuum, cfg)?;
    let basis = vacuum.basis().clone();
    let mut schedule = QuenchSchedule::constant(basis, cfg.model, None, cfg.evolution.t_end)?;
    cfg.evolution.apply_to(&mut schedule);

    let snapshots_at = cfg.snapshot_times();
    let ell_max = cfg.ell_max();
    let mut entropy = TimeSeries::default();
    let mut energy = TimeSeries::default();
    let mut snapshots = TimeSeries::default();
    let mut cut_profile = TimeSeries::default();
    let mut observer = |s: &Sample<'_>| -> Result<()> {
        entropy.push(s.t, bipartite_entropy_profile(s.state)?);
        energy.push(s.t, s.hamiltonian.expectation(s.state).re);
        let snap = is_snapshot(s.t, &snapshots_at);
        let in_cut = s.t >= cfg.cut_t.0 - 1e-9 && s.t <= cfg.cut_t.1 + 1e-9;
        if snap || in_cut {
            let il = lattice_for_sample(s.state, ell_max, snap, exec)?;
            if in_cut {
                let limited = truncated(&il, ell_max);
                cut_profile.push(s.t, windowed_info_per_scale(&limited, cfg.cut_n.0, cfg.cut_n.1)?);
            }
            if snap {
                snapshots.push(s.t, il);
            }
        }
        Ok(())
    };
    let traj = evolve(&schedule, &initial, &mut [&mut observer])?;
    let initial_energy = energy.values.first().copied().unwrap_or(f64::NAN);
    Ok(ScatteringRun {
        config: cfg.clone(),
        vacuum_energy,
        initial_energy,
        entropy,
        energy,
        snapshots,
        cut_profile,
        status: RunStatus {
            complete: traj.complete,
            error: traj.error,
        },
    })
}

pub fn run_string_quench(cfg: &StringConfig, exec: Execution) -> Result<StringRun> {
    cfg.validate()?;
    let (_, vacuum) = solve_vacuum(&cfg.model, cfg.seed)?;
    let basis = vacuum.basis().clone();
    let mut schedule =
        QuenchSchedule::string_quench(basis, cfg.model, &cfg.background, cfg.evolution.t_end)?;
    cfg.evolution.apply_to(&mut schedule);

    let snapshots_at = cfg.snapshot_times();
    let ell_max = cfg.ell_max();
    let (f_lo, f_hi) = cfg.field_links;
    let mut field = TimeSeries::default();
    let mut entropy = TimeSeries::default();
    let mut energy = TimeSeries::default();
    let mut total_sz = TimeSeries::default();
    let mut snapshots = TimeSeries::default();
    let mut window_profile = TimeSeries::default();
    let mut field_shift = TimeSeries::default();
    let mut peak = TimeSeries::default();
    let mut field_origin: Option<f64> = None;
    let mut observer = |s: &Sample<'_>| -> Result<()> {
        let profile = field_profile_with_window(s.state, s.window);
        let mean = profile[f_lo - 1..f_hi].iter().sum::<f64>() / (f_hi + 1 - f_lo) as f64;
        let origin = *field_origin.get_or_insert(mean);
        field_shift.push(s.t, mean - origin);
        field.push(s.t, profile);
        entropy.push(s.t, bipartite_entropy_profile(s.state)?);
        energy.push(s.t, s.hamiltonian.expectation(s.state).re);
        total_sz.push(s.t, s.state.sz_profile().iter().sum());
        let snap = is_snapshot(s.t, &snapshots_at);
        let il = lattice_for_sample(s.state, ell_max, snap, exec)?;
        let limited = truncated(&il, ell_max);
        let prof = windowed_info_per_scale(&limited, cfg.info_n.0, cfg.info_n.1)?;
        peak.push(s.t, peak_scale(&prof, cfg.peak_exclude_below));
        window_profile.push(s.t, prof);
        if snap {
            snapshots.push(s.t, il);
        }
        Ok(())
    };
    let traj = evolve(&schedule, &vacuum, &mut [&mut observer])?;
    Ok(StringRun {
        config: cfg.clone(),
        field,
        entropy,
        energy,
        total_sz,
        snapshots,
        window_profile,
        field_shift,
        peak,
        status: RunStatus {
            complete: traj.complete,
            error: traj.error,
        },
    })
}

/// Runs independent scattering configs, concurrently under a parallel policy.
/// Each run's own lattice work stays sequential.
pub fn scattering_sweep(cfgs: &[ScatteringConfig], exec: Execution) -> Vec<Result<ScatteringRun>> {
    exec.map_range(cfgs.len(), |i| run_scattering(&cfgs[i], Execution::Sequential))
}

pub fn string_sweep(cfgs: &[StringConfig], exec: Execution) -> Vec<Result<StringRun>> {
    exec.map_range(cfgs.len(), |i| run_string_quench(&cfgs[i], Execution::Sequential))
}

/// Momenta of the `fig7-desk` preset.
pub const FIG7_DESK_MOMENTA: [f64; 4] = [0.7, 1.0, 1.2, 1.3];

pub fn fig7_desk_configs() -> Vec<ScatteringConfig> {
    FIG7_DESK_MOMENTA.iter().map(|&k| ScatteringConfig::desk(k)).collect()
}
