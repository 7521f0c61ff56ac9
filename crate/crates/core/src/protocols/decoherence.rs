use super::{locate_transfer, prepare, resolve_split_field, ExperimentConfig};
use crate::lattice::build_hamiltonian;
use crate::open::{dephasing_sweep, DensityMatrix, DephasingPoint, EvolutionOptions};
use crate::{Error, Result};

/// Transfer population under dephasing at the closed-system transfer time.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingScan {
    pub t_star: f64,
    /// Hopping scale the rates were expressed in.
    pub effective_hopping: f64,
    pub points: Vec<DephasingPoint>,
}

/// Sweep `Γ = g · J_eff` for each `g` in `gamma_over_jeff`, keeping `t*` from the
/// dephasing-free run and reading `P_{L…L}(t*)`.
pub fn dephasing_scan(
    config: &ExperimentConfig,
    gamma_over_jeff: &[f64],
    options: EvolutionOptions,
) -> Result<DephasingScan> {
    if gamma_over_jeff.iter().any(|g| !(*g >= 0.0)) {
        return Err(Error::InvalidParameter(
            "dephasing rates must be non-negative".into(),
        ));
    }
    let setup = prepare(config)?;
    let params = match resolve_split_field(config, &setup)? {
        Some(beta) => setup.with_split(beta)?,
        None => setup.base.clone(),
    };
    let (t_star, _) = locate_transfer(&setup, &params, config.window()?)?;
    let h = build_hamiltonian(&setup.basis, &params)?;
    let jeff = config.effective_hopping();
    let gammas: Vec<f64> = gamma_over_jeff.iter().map(|g| g * jeff).collect();
    let rho0 = DensityMatrix::pure(&setup.initial_state());
    let points = dephasing_sweep(
        &h,
        &setup.basis,
        &rho0,
        setup.last_index(),
        t_star,
        &gammas,
        options,
    )?;
    Ok(DephasingScan {
        t_star,
        effective_hopping: jeff,
        points,
    })
}
