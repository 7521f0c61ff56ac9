use boundwalk::dynamics::{transfer_time, QuantumState, SpectralCache, TimeWindow};
use boundwalk::effective::{
    closed_form_effective, effective_matrix, reduce, solve_sylvester_dyson, split_blocks,
};
use boundwalk::fock::enumerate_basis;
use boundwalk::lattice::{apply_scheme, build_hamiltonian, LatticeParams, Scheme};
use boundwalk::open::{evolve_density, DensityMatrix, EvolutionOptions};
use boundwalk::{CMatrix, Complex64};

/// Second-order degenerate perturbation theory straight from the sector Hamiltonian.
fn second_order_sum(h: &CMatrix, bound: &[usize], e0: f64) -> CMatrix {
    let others: Vec<usize> = (0..h.nrows()).filter(|i| !bound.contains(i)).collect();
    CMatrix::from_fn(bound.len(), bound.len(), |a, b| {
        let (pa, pb) = (bound[a], bound[b]);
        let mut acc = h[(pa, pb)];
        for &q in &others {
            acc += h[(pa, q)] * h[(q, pb)] / (e0 - h[(q, q)].re);
        }
        acc
    })
}

#[test]
fn two_site_pair_sector_by_hand() {
    let basis = enumerate_basis(2, 2).unwrap();
    let h = build_hamiltonian(&basis, &LatticeParams::uniform(2, 1.0, 5.0).unwrap()).unwrap();
    let m = h.matrix();
    let diag: Vec<f64> = (0..3).map(|i| m[(i, i)].re).collect();
    assert_eq!(diag, vec![5.0, 0.0, 5.0]);
    assert!((m[(1, 0)].re + std::f64::consts::SQRT_2 / 2.0).abs() < 1e-15);
    assert_eq!(m[(0, 2)], Complex64::new(0.0, 0.0));

    let shifted = apply_scheme(
        &LatticeParams::uniform(2, 1.0, 5.0).unwrap(),
        &Scheme::SiteField { site: 1, beta: 0.3 },
    )
    .unwrap();
    let hs = build_hamiltonian(&basis, &shifted).unwrap();
    assert!((hs.matrix()[(0, 0)].re - 5.0 - 0.6).abs() < 1e-14);
}

#[test]
fn first_order_dyson_is_degenerate_perturbation_theory() {
    for l in 2..=5 {
        let u = 50.0;
        let basis = enumerate_basis(l, 2).unwrap();
        let p = LatticeParams::uniform(l, 1.0, u).unwrap();
        let h = build_hamiltonian(&basis, &p).unwrap();
        let blocks = split_blocks(&h, &basis).unwrap();
        let w = solve_sylvester_dyson(&blocks, &p, 1).unwrap();
        let (heff, _) = effective_matrix(&blocks, w.w());
        let oracle = second_order_sum(h.matrix(), &basis.bound_indices(), u);
        let diff = (&heff - &oracle)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-10 * u, "L={l}: {diff}");
    }
}

#[test]
fn zeroth_order_weight_is_minus_coupling_over_interaction() {
    let basis = enumerate_basis(4, 2).unwrap();
    let p = LatticeParams::uniform(4, 1.0, 8.0).unwrap();
    let blocks = split_blocks(&build_hamiltonian(&basis, &p).unwrap(), &basis).unwrap();
    let w = solve_sylvester_dyson(&blocks, &p, 0).unwrap();
    let expect = blocks.v().adjoint() / Complex64::new(-8.0, 0.0);
    assert!((w.w() - expect).norm() < 1e-15);
}

#[test]
fn exact_and_effective_transfer_agree_at_strong_coupling() {
    let (l, u) = (5, 20.0);
    let basis = enumerate_basis(l, 2).unwrap();
    let p = LatticeParams::uniform(l, 1.0, u).unwrap();
    let exact = SpectralCache::new(&build_hamiltonian(&basis, &p).unwrap()).unwrap();
    let exact = exact
        .propagate(&QuantumState::bound(&basis, 1).unwrap())
        .unwrap();
    let chain = reduce(&basis, &p, 1).unwrap().chain;
    let eff = SpectralCache::from_real(&chain.to_matrix());
    let eff = eff
        .propagate(&QuantumState::basis_vector(l, 0).unwrap())
        .unwrap();
    let last = basis.bound_index(l).unwrap();
    let jeff = 1.0 / (2.0 * u);
    let window = TimeWindow::transfer(l, jeff, 2.0).unwrap();
    let (t_star, _) = transfer_time(&exact, &[last], window).unwrap();
    let worst = (0..=2000)
        .map(|k| 2.0 * t_star * k as f64 / 2000.0)
        .map(|t| (exact.probability(&[last], t) - eff.probability(&[l - 1], t)).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 0.02, "{worst}");
}

#[test]
fn numerical_and_closed_form_chains_agree() {
    let p = LatticeParams::uniform(5, 1.0, 20.0).unwrap();
    let red = reduce(&enumerate_basis(5, 2).unwrap(), &p, 1).unwrap();
    let cf = closed_form_effective(2, &p).unwrap();
    for (a, b) in red.chain.hopping.iter().zip(&cf.hopping) {
        assert!((a.abs() - b).abs() < 0.1 * b);
    }
    let red3 = reduce(
        &enumerate_basis(5, 3).unwrap(),
        &LatticeParams::uniform(5, 1.0, 20.0).unwrap(),
        2,
    )
    .unwrap();
    let cf3 = closed_form_effective(3, &LatticeParams::uniform(5, 1.0, 20.0).unwrap()).unwrap();
    for (a, b) in red3.chain.hopping.iter().zip(&cf3.hopping) {
        assert!((a.abs() - b).abs() < 0.1 * b, "{a} vs {b}");
    }
}

#[test]
fn lossless_master_equation_is_unitary() {
    let basis = enumerate_basis(5, 2).unwrap();
    let p = LatticeParams::uniform(5, 1.0, 5.0).unwrap();
    let h = build_hamiltonian(&basis, &p).unwrap();
    let psi0 = QuantumState::bound(&basis, 1).unwrap();
    let t = 30.0;
    let psi = SpectralCache::new(&h).unwrap().evolve(&psi0, t).unwrap();
    let tight = EvolutionOptions {
        rtol: 1e-10,
        ..EvolutionOptions::matrix_free()
    };
    for options in [EvolutionOptions::default(), tight] {
        let rho = evolve_density(&h, 0.0, &basis, &DensityMatrix::pure(&psi0), t, options).unwrap();
        let d = rho.trace_distance(&DensityMatrix::pure(&psi));
        assert!(d < 1e-8, "{options:?}: {d}");
        assert!((rho.trace().re - 1.0).abs() < 1e-9);
        assert!(rho.hermiticity_deviation() < 1e-9);
    }
}
