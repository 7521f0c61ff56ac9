//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and exits
//! non-zero if any failed.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command as Process;
use std::time::{Duration, Instant};

use boundwalk::dynamics::{transfer_time, QuantumState, SpectralCache, TimeWindow};
use boundwalk::effective::{effective_matrix, reduce, solve_sylvester_dyson, split_blocks};
use boundwalk::fock::{enumerate_basis, FockState};
use boundwalk::lattice::{build_hamiltonian, LatticeParams};
use boundwalk::open::{evolve_density, DensityMatrix, EvolutionOptions};
use boundwalk::protocols::{
    balanced_beam_splitter, dephasing_scan, fisher_finite_difference, fisher_from_state,
    fisher_information, fit_splitting_alpha, ideal_mach_zehnder, ideal_quench_detection,
    linear_optics_output, mach_zehnder_fringes, optimize_edge_field, phase_grid, quench_detection,
    run_noon, EdgeField, ExperimentConfig, FringeScan, SplitField,
};
use boundwalk::{CMatrix, CVector, Complex64};
use boundwalk_cli::PRESETS;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn unlocked(sites: usize, particles: usize, u: f64) -> ExperimentConfig {
    ExperimentConfig::new(sites, particles, 1.0, u)
        .with_edge_field(EdgeField::ClosedForm { factor: 1.0 })
}

fn factorial(n: u128) -> u128 {
    (1..=n).product()
}

fn dimension_law() -> Outcome {
    let mut checked = 0;
    for l in 1..=8u128 {
        for m in 0..=4u128 {
            let expect = factorial(m + l - 1) / (factorial(m) * factorial(l - 1));
            let got = enumerate_basis(l as usize, m as usize)
                .map_err(|e| e.to_string())?
                .dim();
            ensure(got as u128 == expect, || {
                format!("L={l} M={m}: {got} != {expect}")
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} sectors"))
}

/// `H_pp' + Σ_q H_pq H_qp' / (U - H_qq)` evaluated directly on the sector matrix.
fn perturbative_block(h: &CMatrix, bound: &[usize], e0: f64) -> CMatrix {
    let others: Vec<usize> = (0..h.nrows()).filter(|i| !bound.contains(i)).collect();
    CMatrix::from_fn(bound.len(), bound.len(), |a, b| {
        let mut acc = h[(bound[a], bound[b])];
        for &q in &others {
            acc += h[(bound[a], q)] * h[(q, bound[b])] / (e0 - h[(q, q)].re);
        }
        acc
    })
}

fn effective_oracle() -> Outcome {
    let u = 50.0;
    let mut worst = 0.0f64;
    for l in 2..=5 {
        let basis = enumerate_basis(l, 2).map_err(|e| e.to_string())?;
        let p = LatticeParams::uniform(l, 1.0, u).map_err(|e| e.to_string())?;
        let h = build_hamiltonian(&basis, &p).map_err(|e| e.to_string())?;
        let blocks = split_blocks(&h, &basis).map_err(|e| e.to_string())?;
        let w = solve_sylvester_dyson(&blocks, &p, 1).map_err(|e| e.to_string())?;
        let (heff, _) = effective_matrix(&blocks, w.w());
        let oracle = perturbative_block(h.matrix(), &basis.bound_indices(), u);
        let diff = (&heff - &oracle)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        worst = worst.max(diff);
    }
    ensure(worst <= 1e-10 * u, || {
        format!("Dyson vs perturbation theory {worst:e}")
    })?;

    let u = 20.0;
    let expect = 1.0 / (2.0 * u);
    let p = LatticeParams::uniform(5, 1.0, u).map_err(|e| e.to_string())?;
    let chain = reduce(&enumerate_basis(5, 2).map_err(|e| e.to_string())?, &p, 1)
        .map_err(|e| e.to_string())?
        .chain;
    let dev = chain
        .hopping
        .iter()
        .map(|j| (j.abs() - expect).abs() / expect)
        .fold(0.0, f64::max);
    ensure(dev <= 0.1, || format!("J_eff deviates {dev:.3} from J²/2U"))?;
    Ok(format!(
        "max |ΔH_eff| = {worst:.1e}, J_eff deviation {:.2}%",
        100.0 * dev
    ))
}

fn exact_vs_effective() -> Outcome {
    let (l, u) = (5, 20.0);
    let basis = enumerate_basis(l, 2).map_err(|e| e.to_string())?;
    let p = LatticeParams::uniform(l, 1.0, u).map_err(|e| e.to_string())?;
    let exact = SpectralCache::new(&build_hamiltonian(&basis, &p).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let exact = exact
        .propagate(&QuantumState::bound(&basis, 1).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let chain = reduce(&basis, &p, 1).map_err(|e| e.to_string())?.chain;
    let eff = SpectralCache::from_real(&chain.to_matrix());
    let eff = eff
        .propagate(&QuantumState::basis_vector(l, 0).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let last = basis.bound_index(l).map_err(|e| e.to_string())?;
    let window = TimeWindow::transfer(l, 1.0 / (2.0 * u), 2.0).map_err(|e| e.to_string())?;
    let (t_star, _) = transfer_time(&exact, &[last], window).map_err(|e| e.to_string())?;
    let n = 4000;
    let worst = (0..=n)
        .map(|k| 2.0 * t_star * k as f64 / n as f64)
        .map(|t| (exact.probability(&[last], t) - eff.probability(&[l - 1], t)).abs())
        .fold(0.0, f64::max);
    ensure(worst <= 0.02, || format!("max |ΔP_LL| = {worst:.4}"))?;
    Ok(format!(
        "max |ΔP_LL| = {worst:.4} over [0, 2t*], t* = {t_star:.2}"
    ))
}

fn edge_unlocking() -> Outcome {
    let mut worst = 0.0f64;
    for m in [2, 3] {
        for l in [5, 7] {
            for u in [5.0, 10.0] {
                let r = optimize_edge_field(&ExperimentConfig::new(l, m, 1.0, u))
                    .map_err(|e| e.to_string())?;
                let theory = if m == 2 {
                    1.0 / (4.0 * u)
                } else {
                    1.0 / (8.0 * u)
                };
                let dev = (r.beta_prime - theory).abs() / theory;
                ensure(dev <= 0.1, || {
                    format!("M={m} L={l} U={u}: β′ = {} vs {theory}", r.beta_prime)
                })?;
                worst = worst.max(dev);
            }
        }
    }
    Ok(format!("worst relative deviation {:.2}%", 100.0 * worst))
}

fn splitting_fit(particles: usize, target: f64, tol: f64) -> Outcome {
    let fit = fit_splitting_alpha(&unlocked(5, particles, 5.0), &[5.0, 8.0, 10.0, 15.0, 20.0])
        .map_err(|e| e.to_string())?;
    ensure((fit.alpha - target).abs() <= tol, || {
        format!("α = {:.4}", fit.alpha)
    })?;
    Ok(format!("α = {:.4}", fit.alpha))
}

fn noon_signature() -> Outcome {
    let r2 = run_noon(&unlocked(5, 2, 5.0).with_split_field(SplitField::Optimize))
        .map_err(|e| e.to_string())?;
    let p_1l = r2.mixed[0].probability;
    ensure(p_1l <= 0.05, || format!("P_1L = {p_1l}"))?;
    let r3 = run_noon(&unlocked(5, 3, 5.0).with_split_field(SplitField::Optimize))
        .map_err(|e| e.to_string())?;
    let find = |sites: &[usize]| {
        r3.mixed
            .iter()
            .find(|m| m.sites == sites)
            .map(|m| m.probability)
            .ok_or_else(|| format!("no term {sites:?}"))
    };
    let (p_1ll, p_11l) = (find(&[1, 5, 5])?, find(&[1, 1, 5])?);
    ensure(p_1ll <= 0.05, || format!("P_1LL = {p_1ll}"))?;
    ensure((p_1ll - p_11l).abs() <= 1e-3, || {
        format!("|P_1LL - P_11L| = {}", (p_1ll - p_11l).abs())
    })?;
    Ok(format!(
        "P_1L = {p_1l:.1e}; P_1LL = {p_1ll:.1e}, P_11L = {p_11l:.1e}"
    ))
}

fn ideal_splitter() -> Outcome {
    let basis = enumerate_basis(2, 3).map_err(|e| e.to_string())?;
    let out = linear_optics_output(
        &basis,
        &FockState::new(vec![3, 0]),
        &balanced_beam_splitter(),
    )
    .map_err(|e| e.to_string())?;
    // binomial weights C(3, k)/8 for k particles leaving through the second port
    for (k, expect) in [
        (0usize, 1.0 / 8.0),
        (1, 3.0 / 8.0),
        (2, 3.0 / 8.0),
        (3, 1.0 / 8.0),
    ] {
        let i = basis
            .index_of(&FockState::new(vec![3 - k, k]))
            .ok_or("missing state")?;
        let p = out.probability(i);
        ensure((p - expect).abs() <= 4.0 * f64::EPSILON, || {
            format!("k={k}: {p} vs {expect}")
        })?;
    }
    Ok("(1/8, 3/8, 3/8, 1/8) to rounding".into())
}

/// Largest distance from each extremum in `found` to the nearest in `reference`, and from
/// each reference extremum at least `margin` inside `[lo, hi]` back to `found`. Extrema on
/// the grid ends cannot be detected as interior turning points.
fn extremum_mismatch(found: &[f64], reference: &[f64], lo: f64, hi: f64, margin: f64) -> f64 {
    let one_way = |a: &[f64], b: &[f64]| {
        a.iter()
            .map(|x| {
                b.iter()
                    .map(|y| (x - y).abs())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    let interior: Vec<f64> = reference
        .iter()
        .copied()
        .filter(|x| *x > lo + margin && *x < hi - margin)
        .collect();
    if found.is_empty() || interior.is_empty() {
        return f64::INFINITY;
    }
    one_way(found, reference).max(one_way(&interior, found))
}

/// Analytic extrema `offset + k·period` inside `[lo, hi]`.
fn lattice_points(offset: f64, period: f64, lo: f64, hi: f64) -> Vec<f64> {
    let k0 = ((lo - offset) / period).ceil() as i64 - 1;
    let k1 = ((hi - offset) / period).floor() as i64 + 1;
    (k0..=k1)
        .map(|k| offset + k as f64 * period)
        .filter(|x| *x >= lo - 1e-9 && *x <= hi + 1e-9)
        .collect()
}

fn fringe_extrema(scan: &FringeScan, maxima: &[f64], minima: &[f64]) -> f64 {
    let (found_max, found_min) = scan.extrema_of(&scan.detected);
    let (lo, hi) = (scan.phi[0], scan.phi[scan.phi.len() - 1]);
    extremum_mismatch(&found_max, maxima, lo, hi, 0.1)
        .max(extremum_mismatch(&found_min, minima, lo, hi, 0.1))
}

fn fringes() -> Outcome {
    for n in [2usize, 3] {
        let period = 2.0 * PI / n as f64;
        for k in 0..50 {
            let phi = -PI + 0.1237 * k as f64;
            let d = (ideal_mach_zehnder(n, phi) - ideal_mach_zehnder(n, phi + period)).abs();
            ensure(d < 1e-12, || format!("N={n}: not 2π/N periodic at {phi}"))?;
        }
        let half = (ideal_mach_zehnder(n, 0.3) - ideal_mach_zehnder(n, 0.3 + period / 2.0)).abs();
        ensure(half > 0.1, || format!("N={n}: period shorter than 2π/N"))?;
    }
    let phis = phase_grid(-PI, PI, 721).map_err(|e| e.to_string())?;
    let config = unlocked(5, 2, 5.0).with_split_field(SplitField::Optimize);

    let mz = mach_zehnder_fringes(&config, &phis).map_err(|e| e.to_string())?;
    // sin²(φ): maxima at π/2 + kπ, minima at kπ
    let mz_err = fringe_extrema(
        &mz,
        &lattice_points(PI / 2.0, PI, -PI, PI),
        &lattice_points(0.0, PI, -PI, PI),
    );
    ensure(mz_err <= 0.1, || {
        format!("Mach-Zehnder extrema off by {mz_err:.3} rad")
    })?;

    let q = quench_detection(&config, &phis).map_err(|e| e.to_string())?;
    // decreasing in sin 2φ: maxima where sin 2φ = -1, minima where sin 2φ = 1
    let q_err = fringe_extrema(
        &q.scan,
        &lattice_points(-PI / 4.0, PI, -PI, PI),
        &lattice_points(PI / 4.0, PI, -PI, PI),
    );
    ensure(q_err <= 0.1, || {
        format!("quench extrema off by {q_err:.3} rad")
    })?;

    let at = ideal_quench_detection(2, -5.0 * PI / 4.0);
    ensure((at - 1.0).abs() < 1e-12, || {
        format!("quench curve at -5π/4 = {at}")
    })?;
    Ok(format!(
        "extrema within {mz_err:.3} rad (Mach-Zehnder), {q_err:.3} rad (quench)"
    ))
}

fn fisher() -> Outcome {
    for m in [2usize, 3] {
        let basis = enumerate_basis(2, m).map_err(|e| e.to_string())?;
        let mut v = CVector::zeros(basis.dim());
        v[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
        v[basis.dim() - 1] = Complex64::new(0.0, FRAC_1_SQRT_2);
        let noon = QuantumState::new(v).map_err(|e| e.to_string())?;
        let f = fisher_from_state(&noon, &basis, 2)
            .map_err(|e| e.to_string())?
            .f_q;
        let target = (m * m) as f64;
        ensure((f - target).abs() <= 1e-12 * target, || {
            format!("M={m}: F_Q = {f}")
        })?;
        let fd = fisher_finite_difference(&noon, &basis, 2, 1e-5).map_err(|e| e.to_string())?;
        ensure((fd - f).abs() <= 1e-4 * f, || {
            format!("M={m}: finite difference {fd} vs {f}")
        })?;
    }
    let mut report = Vec::new();
    for m in [2usize, 3] {
        let (lo, hi) = (1.0 / m as f64, 1.0 / (m as f64).sqrt());
        for u in [5.0, 8.0, 10.0, 15.0, 20.0] {
            let r = fisher_information(&unlocked(5, m, u).with_split_field(SplitField::Optimize))
                .map_err(|e| e.to_string())?;
            ensure(r.delta_phi >= lo && r.delta_phi <= hi, || {
                format!(
                    "M={m} U={u}: Δφ = {} outside [{lo:.3}, {hi:.3}]",
                    r.delta_phi
                )
            })?;
            if u == 5.0 {
                report.push(format!("Δφ(M={m}, U=5) = {:.3}", r.delta_phi));
            }
        }
    }
    Ok(report.join(", "))
}

fn open_system() -> Outcome {
    let basis = enumerate_basis(5, 2).map_err(|e| e.to_string())?;
    let p = LatticeParams::uniform(5, 1.0, 5.0).map_err(|e| e.to_string())?;
    let h = build_hamiltonian(&basis, &p).map_err(|e| e.to_string())?;
    let psi0 = QuantumState::bound(&basis, 1).map_err(|e| e.to_string())?;
    let rho0 = DensityMatrix::pure(&psi0);
    let cache = SpectralCache::new(&h).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for t in [1.0, 10.0, 35.0, 70.0] {
        let rho = evolve_density(&h, 0.0, &basis, &rho0, t, EvolutionOptions::default())
            .map_err(|e| e.to_string())?;
        let psi = cache.evolve(&psi0, t).map_err(|e| e.to_string())?;
        worst = worst.max(rho.trace_distance(&DensityMatrix::pure(&psi)));
    }
    ensure(worst <= 1e-8, || format!("trace distance {worst:e}"))?;
    for options in [EvolutionOptions::default(), EvolutionOptions::matrix_free()] {
        let rho =
            evolve_density(&h, 0.05, &basis, &rho0, 35.0, options).map_err(|e| e.to_string())?;
        let tr = (rho.trace() - Complex64::new(1.0, 0.0)).norm();
        ensure(tr <= 1e-9, || format!("{options:?}: trace drift {tr:e}"))?;
        let herm = rho.hermiticity_deviation();
        ensure(herm <= 1e-9, || {
            format!("{options:?}: hermiticity {herm:e}")
        })?;
    }
    let two = dephasing_scan(&unlocked(5, 2, 3.0), &[1e-3], EvolutionOptions::default())
        .map_err(|e| e.to_string())?;
    let three = dephasing_scan(&unlocked(5, 3, 2.0), &[1e-4], EvolutionOptions::default())
        .map_err(|e| e.to_string())?;
    let (v2, v3) = (
        two.points[0].relative_variation,
        three.points[0].relative_variation,
    );
    ensure(v2 < 0.05, || format!("M=2 relative variation {v2}"))?;
    ensure(v3 < 0.05, || format!("M=3 relative variation {v3}"))?;
    Ok(format!(
        "unitary limit {worst:.1e}; ΔP/P = {:.2}% (M=2), {:.2}% (M=3)",
        100.0 * v2,
        100.0 * v3
    ))
}

fn csv_bodies(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let body = std::fs::read(&p).map_err(|e| e.to_string())?;
            Ok((p.file_name().unwrap().to_string_lossy().into_owned(), body))
        })
        .collect()
}

fn determinism() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_boundwalk");
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = 0;
    for (name, _) in PRESETS {
        let mut bodies = Vec::new();
        for run in 0..2 {
            let out = root.path().join(format!("{name}-{run}"));
            let status = Process::new(exe)
                .args(["--preset", name, "--out"])
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            ensure(status.status.success(), || {
                format!("{name}: {}", String::from_utf8_lossy(&status.stderr))
            })?;
            bodies.push(csv_bodies(&out)?);
        }
        ensure(!bodies[0].is_empty(), || format!("{name}: no CSV written"))?;
        ensure(bodies[0] == bodies[1], || {
            format!("{name}: CSV differs between runs")
        })?;
        files += bodies[0].len();
    }
    Ok(format!(
        "{} presets, {files} CSV files identical",
        PRESETS.len()
    ))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("dimension law", Duration::from_secs(1), dimension_law),
        (
            "effective-theory oracle",
            Duration::from_secs(5),
            effective_oracle,
        ),
        (
            "exact vs effective dynamics",
            Duration::from_secs(10),
            exact_vs_effective,
        ),
        ("edge unlocking", Duration::from_secs(120), edge_unlocking),
        (
            "splitting fit, two particles",
            Duration::from_secs(120),
            || splitting_fit(2, 0.395, 0.02),
        ),
        (
            "splitting fit, three particles",
            Duration::from_secs(300),
            || splitting_fit(3, 0.099, 0.01),
        ),
        ("NOON signature", Duration::from_secs(60), noon_signature),
        (
            "ideal splitter combinatorics",
            Duration::from_secs(1),
            ideal_splitter,
        ),
        ("fringes", Duration::from_secs(120), fringes),
        ("Fisher information", Duration::from_secs(120), fisher),
        (
            "open-system validity",
            Duration::from_secs(600),
            open_system,
        ),
        ("determinism", Duration::from_secs(60), determinism),
    ];
    let mut failed = 0;
    for (k, (name, budget, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > budget => {
                Err(format!("{detail}; took {elapsed:.1?}, budget {budget:?}"))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => println!(
                "criterion {:>2} {name}: PASS ({detail}) [{elapsed:.2?}]",
                k + 1
            ),
            Err(why) => {
                failed += 1;
                println!(
                    "criterion {:>2} {name}: FAIL ({why}) [{elapsed:.2?}]",
                    k + 1
                );
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
