//! Real-time propagation `|psi(t)> = exp(-i H t)|psi(0)>` with Lanczos-Krylov
//! steps under piecewise-constant Hamiltonians.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{SectorBasis, StateVector};
use crate::schwinger::{hamiltonian_with_window, ChargeBackground, ChargeWindow, ModelParams};
use crate::sparse::{LinearOperator, SparseOperator};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrylovOptions {
    /// Krylov subspace dimension.
    pub m_dim: usize,
    /// Bound on the a-posteriori local error estimate per step.
    pub tol: f64,
    /// Maximum number of step halvings before giving up.
    pub max_halvings: u32,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            m_dim: 20,
            tol: 1e-10,
            max_halvings: 12,
        }
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn vnorm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Lanczos decomposition `H V = V T + beta e_m^T`, kept for reuse across
/// sub-steps of the same vector.
struct KrylovSpace {
    vectors: Vec<Vec<C64>>,
    eigvals: Vec<f64>,
    eigvecs: DMatrix<f64>,
    /// Norm of the first discarded residual vector; zero on happy breakdown.
    beta_next: f64,
}

impl KrylovSpace {
    fn build(h: &dyn LinearOperator, start: &[C64], m_dim: usize) -> Self {
        let dim = h.dim();
        let m_max = m_dim.max(2).min(dim);
        let n0 = vnorm(start);
        let mut vectors = vec![start.iter().map(|z| z / n0).collect::<Vec<_>>()];
        let mut alphas = Vec::with_capacity(m_max);
        let mut betas: Vec<f64> = Vec::with_capacity(m_max);
        let mut w = vec![C64::default(); dim];
        let beta_next;
        loop {
            let j = vectors.len() - 1;
            h.apply(&vectors[j], &mut w);
            let alpha = dot(&vectors[j], &w).re;
            for (wi, vi) in w.iter_mut().zip(&vectors[j]) {
                *wi -= alpha * vi;
            }
            if j > 0 {
                let b = betas[j - 1];
                for (wi, vi) in w.iter_mut().zip(&vectors[j - 1]) {
                    *wi -= b * vi;
                }
            }
            // full re-orthogonalization keeps V unitary to machine precision
            for v in &vectors {
                let c = dot(v, &w);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
            alphas.push(alpha);
            let beta = vnorm(&w);
            if beta < 1e-13 * alpha.abs().max(1.0) {
                beta_next = 0.0;
                break;
            }
            if vectors.len() == m_max {
                beta_next = beta;
                break;
            }
            betas.push(beta);
            vectors.push(w.iter().map(|z| z / beta).collect());
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
        KrylovSpace {
            vectors,
            eigvals: eig.eigenvalues.iter().copied().collect(),
            eigvecs: eig.eigenvectors,
            beta_next,
        }
    }

    /// Coefficients `exp(-i T dt) e_1` and the local error estimate
    /// `beta_next |[exp(-i T dt) e_1]_m|`.
    fn propagate(&self, dt: f64) -> (Vec<C64>, f64) {
        let m = self.eigvals.len();
        let mut c = vec![C64::default(); m];
        for k in 0..m {
            let phase = C64::from_polar(1.0, -self.eigvals[k] * dt) * self.eigvecs[(0, k)];
            for (i, ci) in c.iter_mut().enumerate() {
                *ci += self.eigvecs[(i, k)] * phase;
            }
        }
        let est = self.beta_next * c[m - 1].norm();
        (c, est)
    }

    fn combine(&self, c: &[C64]) -> Vec<C64> {
        let dim = self.vectors[0].len();
        let mut out = vec![C64::default(); dim];
        for (v, ci) in self.vectors.iter().zip(c) {
            for (o, vi) in out.iter_mut().zip(v) {
                *o += ci * vi;
            }
        }
        out
    }
}

fn renormalize(v: &mut [C64]) {
    let n = vnorm(v);
    v.iter_mut().for_each(|z| *z /= n);
}

/// One propagation step `exp(-i H dt)|psi>`.
///
/// The step is split in halves (recursively, up to `max_halvings` times) until
/// the Krylov error estimate drops below `tol`. The result is renormalized.
pub fn krylov_step(
    h: &dyn LinearOperator,
    state: &StateVector,
    dt: f64,
    opts: &KrylovOptions,
) -> Result<StateVector> {
    if dt == 0.0 {
        return state.clone().normalized();
    }
    let mut substeps: u64 = 1;
    let mut halvings = 0;
    loop {
        match substep_chain(h, state.amplitudes(), dt, substeps, opts) {
            Ok(amps) => return StateVector::from_raw(state.basis().clone(), amps),
            Err(est) if halvings >= opts.max_halvings => return Err(Error::Step { estimate: est }),
            Err(_) => {
                halvings += 1;
                substeps *= 2;
            }
        }
    }
}

/// `substeps` equal Krylov steps covering `dt`, or the first error estimate
/// above tolerance.
fn substep_chain(
    h: &dyn LinearOperator,
    start: &[C64],
    dt: f64,
    substeps: u64,
    opts: &KrylovOptions,
) -> std::result::Result<Vec<C64>, f64> {
    let h_dt = dt / substeps as f64;
    let mut cur = start.to_vec();
    for _ in 0..substeps {
        let space = KrylovSpace::build(h, &cur, opts.m_dim);
        let (c, est) = space.propagate(h_dt);
        if est > opts.tol {
            return Err(est);
        }
        cur = space.combine(&c);
        renormalize(&mut cur);
    }
    Ok(cur)
}

/// One constant-Hamiltonian interval of a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    /// Charge window active during the segment.
    pub window: Option<ChargeWindow>,
}

/// Piecewise-constant Hamiltonian schedule with integrator settings.
#[derive(Debug, Clone)]
pub struct QuenchSchedule {
    pub basis: Arc<SectorBasis>,
    pub params: ModelParams,
    pub segments: Vec<Segment>,
    pub dt: f64,
    pub sample_every: f64,
    pub krylov: KrylovOptions,
}

/// Default integrator step in units of `a`.
pub const DEFAULT_DT: f64 = 0.02;
/// Default observer cadence in units of `a`.
pub const DEFAULT_SAMPLE_EVERY: f64 = 0.5;

impl QuenchSchedule {
    /// Single segment with a fixed (possibly absent) charge window.
    pub fn constant(
        basis: Arc<SectorBasis>,
        params: ModelParams,
        window: Option<ChargeWindow>,
        t_end: f64,
    ) -> Result<Self> {
        let s = QuenchSchedule {
            basis,
            params,
            segments: vec![Segment {
                start: 0.0,
                end: t_end,
                window,
            }],
            dt: DEFAULT_DT,
            sample_every: DEFAULT_SAMPLE_EVERY,
            krylov: KrylovOptions::default(),
        };
        s.validate()?;
        Ok(s)
    }

    /// Segments following a light-cone charge background, split at every hop
    /// of the charges and at the removal time.
    pub fn string_quench(
        basis: Arc<SectorBasis>,
        params: ModelParams,
        background: &ChargeBackground,
        t_end: f64,
    ) -> Result<Self> {
        background.validate(params.n_sites)?;
        let mut cuts = vec![0.0];
        cuts.extend(background.change_times(params.n_sites, t_end));
        cuts.push(t_end);
        let segments = cuts
            .windows(2)
            .map(|w| Segment {
                start: w[0],
                end: w[1],
                window: background.window_at(w[0], params.n_sites),
            })
            .collect();
        let s = QuenchSchedule {
            basis,
            params,
            segments,
            dt: DEFAULT_DT,
            sample_every: DEFAULT_SAMPLE_EVERY,
            krylov: KrylovOptions::default(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn t_end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.sample_every > 0.0) {
            return Err(Error::Config(format!(
                "sample cadence must be positive, got {}",
                self.sample_every
            )));
        }
        if self.krylov.m_dim < 2 {
            return Err(Error::Config("Krylov dimension must be at least 2".into()));
        }
        let first = self
            .segments
            .first()
            .ok_or_else(|| Error::Config("schedule has no segments".into()))?;
        if first.start != 0.0 {
            return Err(Error::Config("schedule must start at t = 0".into()));
        }
        for w in self.segments.windows(2) {
            if (w[0].end - w[1].start).abs() > 1e-12 {
                return Err(Error::Config("segments must be contiguous".into()));
            }
        }
        if self.segments.iter().any(|s| !(s.end > s.start)) {
            return Err(Error::Config("segments must have positive length".into()));
        }
        Ok(())
    }

    /// Sample times `0, s, 2s, ...` up to `t_end` inclusive.
    pub fn sample_times(&self) -> Vec<f64> {
        let t_end = self.t_end();
        let count = (t_end / self.sample_every + 1e-9).floor() as usize;
        (0..=count).map(|k| k as f64 * self.sample_every).collect()
    }
}

/// What observers see at each sample.
pub struct Sample<'a> {
    pub index: usize,
    pub t: f64,
    pub state: &'a StateVector,
    pub hamiltonian: &'a SparseOperator,
    pub window: Option<ChargeWindow>,
}

pub trait Observer {
    fn observe(&mut self, sample: &Sample<'_>) -> Result<()>;
}

impl<F> Observer for F
where
    F: FnMut(&Sample<'_>) -> Result<()>,
{
    fn observe(&mut self, sample: &Sample<'_>) -> Result<()> {
        self(sample)
    }
}

#[derive(Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub final_state: StateVector,
    /// False when a step or an observer failed; `error` then says why.
    pub complete: bool,
    pub error: Option<Error>,
}

/// Propagates `initial` through the schedule, calling every observer at each
/// sample time. Steps never straddle a sample or a segment boundary.
pub fn evolve(
    schedule: &QuenchSchedule,
    initial: &StateVector,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    schedule.validate()?;
    if initial.basis().as_ref() != schedule.basis.as_ref() {
        return Err(Error::ShapeMismatch("initial state basis differs from schedule basis".into()));
    }
    let samples = schedule.sample_times();
    let mut state = initial.clone().normalized()?;
    let mut times = Vec::with_capacity(samples.len());
    let mut next_sample = 0usize;
    let mut t = 0.0;

    for (seg_idx, seg) in schedule.segments.iter().enumerate() {
        let h = hamiltonian_with_window(&schedule.basis, &schedule.params, seg.window)?;
        let is_last = seg_idx + 1 == schedule.segments.len();
        loop {
            // observe at the current time if it is a sample time
            while next_sample < samples.len() && samples[next_sample] <= t + 1e-9 {
                if samples[next_sample] < seg.end - 1e-9 || is_last {
                    let sample = Sample {
                        index: next_sample,
                        t: samples[next_sample],
                        state: &state,
                        hamiltonian: &h,
                        window: seg.window,
                    };
                    for obs in observers.iter_mut() {
                        if let Err(e) = obs.observe(&sample) {
                            return Ok(Trajectory {
                                times,
                                final_state: state,
                                complete: false,
                                error: Some(e),
                            });
                        }
                    }
                    times.push(samples[next_sample]);
                    next_sample += 1;
                } else {
                    break;
                }
            }
            if t >= seg.end - 1e-9 {
                break;
            }
            let stop = samples
                .get(next_sample)
                .copied()
                .unwrap_or(f64::INFINITY)
                .min(seg.end);
            let span = stop - t;
            let n_steps = ((span / schedule.dt) - 1e-9).ceil().max(1.0) as usize;
            let h_dt = span / n_steps as f64;
            for _ in 0..n_steps {
                match krylov_step(&h, &state, h_dt, &schedule.krylov) {
                    Ok(s) => state = s,
                    Err(e) => {
                        return Ok(Trajectory {
                            times,
                            final_state: state,
                            complete: false,
                            error: Some(e),
                        })
                    }
                }
            }
            t = stop;
        }
    }
    Ok(Trajectory {
        times,
        final_state: state,
        complete: true,
        error: None,
    })
}
