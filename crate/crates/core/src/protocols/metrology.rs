use super::{locate_transfer, prepare, resolve_split_field, spectral, ExperimentConfig};
use crate::dynamics::QuantumState;
use crate::fock::FockBasis;
use crate::{Error, Result};

/// Quantum Fisher information for a phase imprinted on one site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherReport {
    pub f_q: f64,
    /// `1/√F_Q`.
    pub delta_phi: f64,
    /// `1/√M`.
    pub classical_bound: f64,
    /// `1/M`.
    pub quantum_bound: f64,
    pub mean_occupation: f64,
    pub mean_square_occupation: f64,
}

/// `F_Q = 4 (⟨n²⟩ - ⟨n⟩²)` for the occupation of 1-based `site`.
pub fn fisher_from_state(
    state: &QuantumState,
    basis: &FockBasis,
    site: usize,
) -> Result<FisherReport> {
    if state.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: state.dim(),
        });
    }
    if site == 0 || site > basis.sites() {
        return Err(Error::SiteOutOfRange {
            site,
            sites: basis.sites(),
        });
    }
    let n = basis.occupation_column(site - 1);
    let n2: Vec<f64> = n.iter().map(|x| x * x).collect();
    let mean = state.diagonal_expectation(&n);
    let mean_sq = state.diagonal_expectation(&n2);
    let f_q = (4.0 * (mean_sq - mean * mean)).max(0.0);
    let m = basis.particles() as f64;
    Ok(FisherReport {
        f_q,
        delta_phi: 1.0 / f_q.sqrt(),
        classical_bound: 1.0 / m.sqrt(),
        quantum_bound: 1.0 / m,
        mean_occupation: mean,
        mean_square_occupation: mean_sq,
    })
}

/// `F_Q = 4 (⟨∂ψ|∂ψ⟩ - |⟨ψ|∂ψ⟩|²)` with `ψ(φ) = e^{-i n φ} ψ` and the derivative taken
/// by central differences of step `step`.
pub fn fisher_finite_difference(
    state: &QuantumState,
    basis: &FockBasis,
    site: usize,
    step: f64,
) -> Result<f64> {
    if site == 0 || site > basis.sites() {
        return Err(Error::SiteOutOfRange {
            site,
            sites: basis.sites(),
        });
    }
    let n = basis.occupation_column(site - 1);
    let shifted = |phi: f64| {
        let phases: Vec<f64> = n.iter().map(|x| -x * phi).collect();
        state.apply_phases(&phases)
    };
    let plus = shifted(step);
    let minus = shifted(-step);
    let d = (plus.amplitudes() - minus.amplitudes()).unscale(2.0 * step);
    let overlap = state.amplitudes().dotc(&d);
    Ok(4.0 * (d.norm_squared() - overlap.norm_sqr()))
}

/// Fisher information of `n_L` on the state produced by the splitting pass at `t*`.
pub fn fisher_information(config: &ExperimentConfig) -> Result<FisherReport> {
    let setup = prepare(config)?;
    let params = match resolve_split_field(config, &setup)? {
        Some(beta) => setup.with_split(beta)?,
        None => setup.base.clone(),
    };
    let (t_star, _) = locate_transfer(&setup, &setup.base, config.window()?)?;
    let psi = spectral(&setup.basis, &params)?.evolve(&setup.initial_state(), t_star)?;
    fisher_from_state(&psi, &setup.basis, config.sites)
}
