mod common;

use common::*;
use infolat::dynamics::*;
use infolat::hilbert::{build_sector_basis, neel_state, StateVector};
use infolat::schwinger::*;
use infolat::C64;

#[test]
fn krylov_step_matches_dense_exponential() {
    let n = 8;
    let b = build_sector_basis(n, Some(0)).unwrap();
    let p = ModelParams::new(n, 1.0, 0.25).unwrap();
    let h = build_hamiltonian(&b, &p, None, 0.0).unwrap();
    let d = restrict(&dense_hamiltonian(n, 1.0, 0.25, &[]), &sector_indices(n, 0));
    let psi = StateVector::random(b, &mut rng(21));
    for dt in [0.01, 0.3, 2.0] {
        let got = krylov_step(&h, &psi, dt, &KrylovOptions::default()).unwrap();
        let expect = dense_evolve(&d, psi.amplitudes(), dt);
        assert!(max_abs_diff(got.amplitudes(), &expect) < 1e-10, "dt={dt}");
    }
}

#[test]
fn step_halving_keeps_large_steps_accurate() {
    let n = 6;
    let b = build_sector_basis(n, None).unwrap();
    let p = ModelParams::new(n, 2.0, 0.5).unwrap();
    let h = build_hamiltonian(&b, &p, None, 0.0).unwrap();
    let d = dense_hamiltonian(n, 2.0, 0.5, &[]);
    let psi = StateVector::random(b, &mut rng(22));
    let opts = KrylovOptions {
        m_dim: 6,
        ..Default::default()
    };
    let got = krylov_step(&h, &psi, 5.0, &opts).unwrap();
    assert!(max_abs_diff(got.amplitudes(), &dense_evolve(&d, psi.amplitudes(), 5.0)) < 1e-9);
}

#[test]
fn evolve_samples_match_dense_evolution() {
    let n = 8;
    let b = build_sector_basis(n, Some(0)).unwrap();
    let p = ModelParams::new(n, 1.0, 0.25).unwrap();
    let d = restrict(&dense_hamiltonian(n, 1.0, 0.25, &[]), &sector_indices(n, 0));
    let psi0 = neel_state(&b).unwrap();
    let schedule = QuenchSchedule::constant(b, p, None, 3.0).unwrap();
    let mut seen: Vec<(f64, Vec<C64>)> = Vec::new();
    let mut obs = |s: &Sample<'_>| {
        seen.push((s.t, s.state.amplitudes().to_vec()));
        Ok(())
    };
    let traj = evolve(&schedule, &psi0, &mut [&mut obs]).unwrap();
    assert!(traj.complete);
    assert_eq!(seen.len(), 7);
    for (t, amps) in &seen {
        let expect = dense_evolve(&d, psi0.amplitudes(), *t);
        assert!(max_abs_diff(amps, &expect) < 1e-8, "t={t}");
    }
}

/// Window of the light-cone background at time `t`, worked out by hand.
fn window(t: f64, n: usize, q: f64, u: f64, left: usize, right: usize, t_remove: f64) -> Vec<f64> {
    let mut shift = vec![0.0; n - 1];
    if t < t_remove {
        let hops = (u * t).floor() as usize;
        let lo = left.saturating_sub(hops).max(1);
        let hi = (right + hops).min(n - 1);
        for link in lo..=hi {
            shift[link - 1] = q;
        }
    }
    shift
}

#[test]
fn piecewise_string_schedule_matches_dense() {
    let n = 8;
    let (q, u, left, right, t_remove, t_end) = (1.5, 1.0, 3, 5, 2.5, 4.0);
    let b = build_sector_basis(n, Some(0)).unwrap();
    let p = ModelParams::new(n, 1.0, 0.25).unwrap();
    let bg = ChargeBackground {
        q,
        u,
        center_left: left,
        center_right: right,
        t_remove: Some(t_remove),
    };
    let mut schedule = QuenchSchedule::string_quench(b.clone(), p, &bg, t_end).unwrap();
    schedule.sample_every = 0.25;
    let idx = sector_indices(n, 0);
    let psi0 = neel_state(&b).unwrap();

    // dense reference: constant pieces between hops at t = 1, 2 and removal at 2.5
    let cuts = [0.0, 1.0, 2.0, 2.5, t_end];
    let dense_at = |t: f64| -> Vec<C64> {
        let mut v = psi0.amplitudes().to_vec();
        for w in cuts.windows(2) {
            if t <= w[0] {
                break;
            }
            let span = t.min(w[1]) - w[0];
            let h = restrict(&dense_hamiltonian(n, 1.0, 0.25, &window(w[0], n, q, u, left, right, t_remove)), &idx);
            v = dense_evolve(&h, &v, span);
        }
        v
    };

    let mut seen: Vec<(f64, Vec<C64>)> = Vec::new();
    let mut obs = |s: &Sample<'_>| {
        seen.push((s.t, s.state.amplitudes().to_vec()));
        Ok(())
    };
    let traj = evolve(&schedule, &psi0, &mut [&mut obs]).unwrap();
    assert!(traj.complete);
    assert_eq!(seen.len(), 17);
    for (t, amps) in &seen {
        assert!(max_abs_diff(amps, &dense_at(*t)) < 1e-8, "t={t}");
    }
}

#[test]
fn norm_energy_and_magnetization_are_conserved() {
    let n = 10;
    let b = build_sector_basis(n, Some(0)).unwrap();
    let p = ModelParams::new(n, 1.0, 0.25).unwrap();
    let psi0 = StateVector::random(b.clone(), &mut rng(23));
    let sz = total_sz_operator(&b).unwrap();
    let schedule = QuenchSchedule::constant(b, p, None, 4.0).unwrap();
    let mut rows = Vec::new();
    let mut obs = |s: &Sample<'_>| {
        rows.push((s.state.norm(), s.hamiltonian.expectation(s.state).re, sz.expectation(s.state).re));
        Ok(())
    };
    evolve(&schedule, &psi0, &mut [&mut obs]).unwrap();
    let (_, e0, _) = rows[0];
    for (norm, e, m) in rows {
        assert!((norm - 1.0).abs() < 1e-12);
        assert!((e - e0).abs() < 1e-8);
        assert!(m.abs() < 1e-12);
    }
}
