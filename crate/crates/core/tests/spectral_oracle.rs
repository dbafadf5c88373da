mod common;

use common::*;
use infolat::hilbert::{build_sector_basis, neel_state, StateVector};
use infolat::schwinger::*;
use infolat::spectral::*;
use infolat::C64;

fn sparse_vs_dense(n: usize, ga: f64, ma: f64, window: Option<ChargeWindow>) {
    let b = build_sector_basis(n, None).unwrap();
    let p = ModelParams::new(n, ga, ma).unwrap();
    let h = hamiltonian_with_window(&b, &p, window).unwrap();
    let shift: Vec<f64> = (1..n).map(|l| window.map_or(0.0, |w| w.shift(l))).collect();
    let d = dense_hamiltonian(n, ga, ma, &shift);
    let diff = (h.to_dense() - d).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(diff < 1e-12, "N={n} ga={ga} ma={ma}: {diff}");
}

#[test]
fn hamiltonian_matches_kronecker_construction() {
    sparse_vs_dense(2, 1.0, 0.0, None);
    sparse_vs_dense(5, 0.7, 0.3, None);
    sparse_vs_dense(6, 1.0, 0.25, Some(ChargeWindow { q: 1.5, lo: 2, hi: 4 }));
    sparse_vs_dense(7, 0.5, 0.2, Some(ChargeWindow { q: 2.8, lo: 1, hi: 6 }));
}

#[test]
fn sector_hamiltonian_is_the_restricted_block() {
    let n = 8;
    let b = build_sector_basis(n, Some(0)).unwrap();
    let p = ModelParams::new(n, 1.0, 1e-5).unwrap();
    let h = build_hamiltonian(&b, &p, None, 0.0).unwrap();
    let d = restrict(&dense_hamiltonian(n, 1.0, 1e-5, &[]), &sector_indices(n, 0));
    let diff = (h.to_dense() - d).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(diff < 1e-12);
}

#[test]
fn lanczos_matches_dense_at_n8() {
    let n = 8;
    let b = build_sector_basis(n, Some(0)).unwrap();
    let p = ModelParams::new(n, 1.0, 1e-5).unwrap();
    let h = build_hamiltonian(&b, &p, None, 0.0).unwrap();
    let dense = dense_levels(&restrict(&dense_hamiltonian(n, 1.0, 1e-5, &[]), &sector_indices(n, 0)));
    let r = lanczos_lowest(&h, 4, &LanczosOptions::default()).unwrap();
    for (e, d) in r.energies.iter().zip(&dense) {
        assert!((e - d).abs() < 1e-8, "{e} vs {d}");
    }
    assert!(r.residuals.iter().all(|&x| x < 1e-9));
    for i in 0..4 {
        for j in 0..i {
            assert!(r.states[i].inner(&r.states[j]).norm() < 1e-8);
        }
    }
}

#[test]
fn first_excited_by_deflation_at_n8() {
    let n = 8;
    let b = build_sector_basis(n, Some(0)).unwrap();
    let p = ModelParams::new(n, 1.0, 1e-5).unwrap();
    let h = build_hamiltonian(&b, &p, None, 0.0).unwrap();
    let dense = dense_levels(&restrict(&dense_hamiltonian(n, 1.0, 1e-5, &[]), &sector_indices(n, 0)));
    let o = LanczosOptions::default();
    let g = lanczos_lowest(&h, 1, &o).unwrap();
    let ex = excited_by_deflation(&h, &g.states, default_deflation_shift(&p), 1, &o).unwrap();
    assert!((ex.energies[0] - dense[1]).abs() < 1e-8);
    assert!(ex.states[0].inner(&g.states[0]).norm() < 1e-8);
}

#[test]
fn twenty_deflations_reproduce_dense_spectrum_at_n10() {
    let n = 10;
    let b = build_sector_basis(n, Some(0)).unwrap();
    let p = ModelParams::new(n, 1.0, 1e-5).unwrap();
    let h = build_hamiltonian(&b, &p, None, 0.0).unwrap();
    let dense = dense_levels(&restrict(&dense_hamiltonian(n, 1.0, 1e-5, &[]), &sector_indices(n, 0)));
    let r = spectrum_by_deflation(&h, 20, default_deflation_shift(&p), &LanczosOptions::default()).unwrap();
    for (i, (e, d)) in r.energies.iter().zip(&dense).enumerate() {
        assert!((e - d).abs() < 1e-8, "level {i}: {e} vs {d}");
    }
}

#[test]
fn variational_bound() {
    let n = 10;
    let b = build_sector_basis(n, Some(0)).unwrap();
    let p = ModelParams::new(n, 1.0, 0.25).unwrap();
    let h = build_hamiltonian(&b, &p, None, 0.0).unwrap();
    let e0 = lanczos_lowest(&h, 1, &LanczosOptions::default()).unwrap().energies[0];
    let mut r = rng(5);
    let mut trial = vec![neel_state(&b).unwrap()];
    trial.extend((0..5).map(|_| StateVector::random(b.clone(), &mut r)));
    for s in &trial {
        assert!(e0 <= h.expectation(s).re + 1e-12);
    }
}

#[test]
fn strong_coupling_ground_state_is_neel() {
    let n = 8;
    let b = build_sector_basis(n, Some(0)).unwrap();
    let p = ModelParams::new(n, 10.0, 0.0).unwrap();
    let h = build_hamiltonian(&b, &p, None, 0.0).unwrap();
    let g = lanczos_lowest(&h, 1, &LanczosOptions::default()).unwrap();
    let overlap = g.states[0].overlap(&neel_state(&b).unwrap());
    assert!(overlap > 0.99, "{overlap}");
    // the dense oracle agrees on the energy
    let dense = dense_levels(&restrict(&dense_hamiltonian(n, 10.0, 0.0, &[]), &sector_indices(n, 0)));
    assert!((g.energies[0] - dense[0]).abs() < 1e-8);
}

#[test]
fn classification_examples() {
    let n = 10;
    let b = build_sector_basis(n, Some(0)).unwrap();
    let p = ModelParams::new(n, 1.0, 1e-5).unwrap();
    let h = build_hamiltonian(&b, &p, None, 0.0).unwrap();
    let r = spectrum_by_deflation(&h, 6, default_deflation_shift(&p), &LanczosOptions::default()).unwrap();
    let labels = Classifier::new(&h).unwrap().classify_spectrum(&r.states, Default::default());
    assert_eq!(labels[0].tag, StateTag::Vacuum);
    assert_eq!(labels[1].tag, StateTag::VectorLike);
    // deflated states with large <P^2> are momentum excitations
    let moving: Vec<_> = labels.iter().filter(|l| l.tag == StateTag::MomentumExcitation).collect();
    assert!(!moving.is_empty());
    for l in &moving {
        assert!(l.p2 > labels[1].p2 + 0.25);
        assert!((0.0..=1.0).contains(&l.overlap_v) && (0.0..=1.0).contains(&l.overlap_s));
    }
    let g = classify(&r.states[0], r.energies[0], &h).unwrap();
    assert_eq!(g.tag, StateTag::Vacuum);
}

#[test]
fn vector_state_is_vector_like_at_strong_coupling() {
    let n = 8;
    let b = build_sector_basis(n, Some(0)).unwrap();
    let p = ModelParams::new(n, 10.0, 0.0).unwrap();
    let h = build_hamiltonian(&b, &p, None, 0.0).unwrap();
    let e0 = lanczos_lowest(&h, 1, &LanczosOptions::default()).unwrap().energies[0];
    let sc = strong_coupling_states(&b).unwrap();
    let l = classify(&sc.vector, e0, &h).unwrap();
    assert_eq!(l.tag, StateTag::VectorLike);
    assert!((l.overlap_v - 1.0).abs() < 1e-12);
    let s = classify(&sc.scalar, e0, &h).unwrap();
    assert_eq!(s.tag, StateTag::ScalarLike);
}

#[test]
fn momentum_operator_matches_dense_strings() {
    let n = 5;
    let b = build_sector_basis(n, None).unwrap();
    let p = pseudo_momentum_operator(&b).unwrap();
    let sm = |k: usize| single(n, k, &sigma_minus());
    let sp = |k: usize| single(n, k, &sigma_plus());
    let z = |k: usize| single(n, k, &pauli_z());
    let dim = 1 << n;
    let mut d = nalgebra::DMatrix::<C64>::zeros(dim, dim);
    for k in 1..=n - 2 {
        let a = sm(k) * z(k + 1) * sp(k + 2);
        d += (&a - a.adjoint()) * C64::new(0.0, -1.0);
    }
    let diff = (p.to_dense() - d).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(diff < 1e-12);
}

