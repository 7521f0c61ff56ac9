use super::{locate_transfer, prepare, resolve_split_field, spectral, ExperimentConfig};
use crate::dynamics::{transfer_time, QuantumState, SpectralCache, TimeWindow};
use crate::effective::EffectiveChain;
use crate::lattice::{apply_scheme, edge_unlock_field, LatticeParams, Scheme};
use crate::optimize::{golden_section_max, scan_then_refine_max};
use crate::{Error, Result};

/// Outcome of a transfer run from `|{M}, 1⟩`.
#[derive(Debug, Clone)]
pub struct TransferReport {
    pub t_star: f64,
    pub p_first: f64,
    pub p_last: f64,
    pub times: Vec<f64>,
    pub first: Vec<f64>,
    pub last: Vec<f64>,
    pub params: LatticeParams,
}

/// Evolve the configured chain (including any splitting impurity), locate the
/// transfer peak and sample `P_{1…1}` and `P_{L…L}` on the scan grid.
pub fn run_transfer(config: &ExperimentConfig) -> Result<TransferReport> {
    let setup = prepare(config)?;
    let params = match resolve_split_field(config, &setup)? {
        Some(beta) => setup.with_split(beta)?,
        None => setup.base.clone(),
    };
    let window = config.window()?;
    let cache = spectral(&setup.basis, &params)?;
    let prop = cache.propagate(&setup.initial_state())?;
    let (first, last) = (setup.first_index(), setup.last_index());
    let (t_star, p_last) = transfer_time(&prop, &[last], window)?;
    let times = window.grid();
    Ok(TransferReport {
        t_star,
        p_first: prop.probability(&[first], t_star),
        p_last,
        first: prop.trajectory(&[first], &times),
        last: prop.trajectory(&[last], &times),
        times,
        params,
    })
}

/// Result of the edge-field optimisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeFieldReport {
    pub beta_prime: f64,
    pub closed_form: f64,
    pub t_star: f64,
    pub p_last: f64,
    /// The objective is flat (no hopping), so `beta_prime` carries no information.
    pub degenerate: bool,
}

/// Maximise `P_{L…L}(t*)` over `β′ ∈ [0, J²/U]` by golden-section search, re-locating
/// `t*` for every candidate. Any edge field in `config` is ignored.
pub fn optimize_edge_field(config: &ExperimentConfig) -> Result<EdgeFieldReport> {
    config.validate()?;
    let (m, j, u) = (config.particles, config.hopping, config.interaction);
    let closed_form = edge_unlock_field(m, j, u)?;
    if j == 0.0 {
        return Ok(EdgeFieldReport {
            beta_prime: 0.0,
            closed_form,
            t_star: 0.0,
            p_last: 0.0,
            degenerate: true,
        });
    }
    let plain = ExperimentConfig {
        edge_field: super::EdgeField::Off,
        ..config.clone()
    };
    let setup = prepare(&plain)?;
    let base = match resolve_split_field(config, &setup)? {
        Some(beta) => setup.with_split(beta)?,
        None => setup.base.clone(),
    };
    let window = config.window()?;
    let objective = |b: f64| -> Result<(f64, f64)> {
        let p = apply_scheme(&base, &Scheme::EdgeUnlocked { beta_prime: b })?;
        locate_transfer(&setup, &p, window)
    };
    let hi = j * j / u;
    let mut failure = None;
    let (beta_prime, _) = golden_section_max(
        |b| match objective(b) {
            Ok((_, p)) => p,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        hi,
        1e-6 * hi,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    if !beta_prime.is_finite() {
        return Err(Error::NoBracket(
            "edge-field objective is not finite".into(),
        ));
    }
    let (t_star, p_last) = objective(beta_prime)?;
    Ok(EdgeFieldReport {
        beta_prime,
        closed_form,
        t_star,
        p_last,
        degenerate: false,
    })
}

fn single_particle_fidelity(sites: usize, ratio: f64) -> Result<f64> {
    let chain = EffectiveChain::single_particle(sites, 1.0, ratio)?;
    let cache = SpectralCache::from_real(&chain.to_matrix());
    let prop = cache.propagate(&QuantumState::basis_vector(sites, 0)?)?;
    // with unit hopping the front crosses in about L/2; longer windows let a weakly coupled
    // chain win through slow off-resonant tunnelling, which is not the regime of interest
    let window = TimeWindow::new(0.0, sites as f64, 1000)?;
    Ok(transfer_time(&prop, &[sites - 1], window)?.1)
}

/// End hopping `J₀` of a minimally engineered chain, chosen so the ratio
/// `J₀_eff / J_eff ∈ (0, 1.5]` maximises single-particle transfer on the effective chain.
/// Since `J_eff ∝ J^M`, `J₀ = J · ratio^(1/M)`.
pub fn optimal_minimal_edge_hopping(particles: usize, sites: usize, hopping: f64) -> Result<f64> {
    if sites < 3 {
        return Err(Error::InvalidParameter(format!(
            "minimal engineering needs at least 3 sites, got {sites}"
        )));
    }
    let mut failure = None;
    let (ratio, _) = scan_then_refine_max(
        |r| {
            single_particle_fidelity(sites, r).unwrap_or_else(|e| {
                failure.get_or_insert(e);
                f64::NAN
            })
        },
        1e-3,
        1.5,
        150,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(hopping * ratio.powf(1.0 / particles.max(1) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::EdgeField;

    #[test]
    fn locking_and_unlocking() {
        let locked = run_transfer(&ExperimentConfig::new(5, 2, 1.0, 5.0)).unwrap();
        let unlocked = run_transfer(
            &ExperimentConfig::new(5, 2, 1.0, 5.0)
                .with_edge_field(EdgeField::ClosedForm { factor: 1.0 }),
        )
        .unwrap();
        assert!(
            unlocked.p_last > locked.p_last + 0.05,
            "{} vs {}",
            unlocked.p_last,
            locked.p_last
        );
        // a unit-hopping 5-site chain transfers at t ≈ 3.38; J_eff = J²/2U = 0.1
        let expect = 3.38 / 0.1;
        assert!(
            (unlocked.t_star - expect).abs() < 0.25 * expect,
            "{}",
            unlocked.t_star
        );
        assert!(locked.first.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn single_particle_baseline() {
        let r = run_transfer(&ExperimentConfig::new(5, 1, 1.0, 0.0)).unwrap();
        assert!(r.t_star > 0.5 * 5.0 && r.t_star < 2.0 * 5.0, "{}", r.t_star);
    }

    #[test]
    fn flat_objective_is_flagged() {
        let r = optimize_edge_field(&ExperimentConfig::new(5, 2, 0.0, 5.0)).unwrap();
        assert!(r.degenerate);
    }

    #[test]
    fn minimal_edge_hopping_improves_transfer() {
        let j0 = optimal_minimal_edge_hopping(1, 21, 1.0).unwrap();
        assert!(j0 > 0.55 && j0 < 0.7, "{j0}");
        assert!(
            single_particle_fidelity(21, j0).unwrap() > single_particle_fidelity(21, 1.0).unwrap()
        );
    }
}
