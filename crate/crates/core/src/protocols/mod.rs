//! End-to-end experiments on a configured chain: transfer and edge unlocking, NOON
//! generation behind a splitting impurity, interferometric read-out and Fisher information.
//!
//! Every protocol starts from the bound state `|{M}, 1⟩`.

mod decoherence;
mod interferometry;
mod metrology;
mod noon;
mod transfer;

pub use decoherence::{dephasing_scan, DephasingScan};
pub use interferometry::{
    ideal_mach_zehnder, ideal_quench_detection, mach_zehnder_fringes, phase_grid, quench_detection,
    FringeScan, QuenchScan,
};
pub use metrology::{
    fisher_finite_difference, fisher_from_state, fisher_information, FisherReport,
};
pub use noon::{
    balanced_beam_splitter, fit_splitting_alpha, linear_optics_output, optimize_split_field,
    run_noon, MixedTerm, SplitFit, SplitOptimum, SplitReport,
};
pub use transfer::{
    optimal_minimal_edge_hopping, optimize_edge_field, run_transfer, EdgeFieldReport,
    TransferReport,
};

use crate::dynamics::{transfer_time, QuantumState, SpectralCache, TimeWindow};
use crate::fock::{enumerate_basis, FockBasis};
use crate::lattice::{
    apply_scheme, balanced_minimal_engineering_fields, build_hamiltonian, edge_unlock_field,
    even_chain_scheme, even_chain_scheme_quadratic, minimal_engineering_fields,
    splitting_field_asymptotic, LatticeParams, OnsiteConvention, Scheme,
};
use crate::{Error, Result};

/// Boundary field choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeField {
    Off,
    /// `factor` times the closed-form unlocking field.
    ClosedForm {
        factor: f64,
    },
    Fixed(f64),
    /// Maximise the transfer probability numerically.
    Optimize,
}

/// Which compensating-field formulas an engineered chain uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldFormula {
    /// Fields that level the second-order effective energies.
    #[default]
    Balanced,
    /// The nominal closed forms (see [`minimal_engineering_fields`] and [`even_chain_scheme`]).
    Nominal,
}

/// Coupling engineering on top of the uniform chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engineering {
    None,
    /// End bonds set to `J₀` (optimised on the single-particle chain when `None`).
    Minimal {
        edge_hopping: Option<f64>,
        fields: FieldFormula,
    },
    /// Middle bond weakened and fields on the ends and the middle pair.
    EvenChain {
        fields: FieldFormula,
    },
}

/// Mid-chain splitting impurity at site `L/2 + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitField {
    Off,
    Fixed(f64),
    /// `factor` times the long-chain balanced field.
    Asymptotic {
        factor: f64,
    },
    /// `alpha · J^M / U^(M-1)`.
    Prefactor {
        alpha: f64,
    },
    /// Root of the balance residual.
    Optimize,
}

/// How the interferometric phase is imprinted on site `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseMode {
    /// Multiply by `exp(i φ n_L)` directly.
    Diagonal,
    /// Evolve under `Σ U n(n-1) - β_L n_L` with hopping frozen for `t′ = φ/β_L`
    /// (`φ` taken modulo `2π`).
    Literal { field: f64 },
}

/// Chain geometry, couplings and protocol settings. Energies share one unit.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sites: usize,
    pub particles: usize,
    pub hopping: f64,
    pub interaction: f64,
    pub convention: OnsiteConvention,
    pub edge_field: EdgeField,
    pub engineering: Engineering,
    pub split_field: SplitField,
    /// Applied after everything else.
    pub extra_schemes: Vec<Scheme>,
    /// Transfer window is `[0, window_factor · L / J_eff]`.
    pub window_factor: f64,
    pub scan_steps: usize,
    pub phase_mode: PhaseMode,
}

impl ExperimentConfig {
    pub fn new(sites: usize, particles: usize, hopping: f64, interaction: f64) -> Self {
        Self {
            sites,
            particles,
            hopping,
            interaction,
            convention: OnsiteConvention::default(),
            edge_field: EdgeField::Off,
            engineering: Engineering::None,
            split_field: SplitField::Off,
            extra_schemes: Vec::new(),
            window_factor: 2.0,
            scan_steps: TimeWindow::DEFAULT_STEPS,
            phase_mode: PhaseMode::Diagonal,
        }
    }

    pub fn with_edge_field(mut self, edge: EdgeField) -> Self {
        self.edge_field = edge;
        self
    }

    pub fn with_split_field(mut self, split: SplitField) -> Self {
        self.split_field = split;
        self
    }

    pub fn with_engineering(mut self, engineering: Engineering) -> Self {
        self.engineering = engineering;
        self
    }

    pub fn with_interaction(&self, interaction: f64) -> Self {
        Self {
            interaction,
            ..self.clone()
        }
    }

    pub fn with_sites(&self, sites: usize) -> Self {
        Self {
            sites,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.sites < 2 {
            return bad(format!("need at least 2 sites, got {}", self.sites));
        }
        if !(1..=3).contains(&self.particles) {
            return Err(Error::UnsupportedParticleNumber {
                particles: self.particles,
            });
        }
        if !(self.hopping >= 0.0 && self.hopping.is_finite()) {
            return bad(format!(
                "hopping J must be non-negative, got {}",
                self.hopping
            ));
        }
        if !self.interaction.is_finite() || self.interaction < 0.0 {
            return bad(format!(
                "interaction U must be non-negative, got {}",
                self.interaction
            ));
        }
        if self.particles >= 2 && self.interaction <= 0.0 {
            return bad("bound-particle protocols need U > 0".into());
        }
        if !(self.window_factor > 0.0 && self.window_factor.is_finite()) || self.scan_steps == 0 {
            return bad("time window factor and scan steps must be positive".into());
        }
        let field = match self.edge_field {
            EdgeField::ClosedForm { factor } => Some(("edge field factor", factor)),
            EdgeField::Fixed(b) => Some(("edge field", b)),
            EdgeField::Off | EdgeField::Optimize => None,
        };
        let split = match self.split_field {
            SplitField::Fixed(b) => Some(("splitting field", b)),
            SplitField::Asymptotic { factor } => Some(("splitting field factor", factor)),
            SplitField::Prefactor { alpha } => Some(("splitting prefactor", alpha)),
            SplitField::Off | SplitField::Optimize => None,
        };
        for (what, x) in field.into_iter().chain(split) {
            if !x.is_finite() {
                return bad(format!("{what} must be finite, got {x}"));
            }
        }
        if let Engineering::Minimal {
            edge_hopping: Some(j0),
            ..
        } = self.engineering
        {
            if !(j0 > 0.0 && j0.is_finite()) {
                return bad(format!("edge hopping J0 must be positive, got {j0}"));
            }
        }
        if self.engineering != Engineering::None && self.edge_field != EdgeField::Off {
            return bad(
                "engineered chains carry their own edge fields; drop the edge field".into(),
            );
        }
        if let PhaseMode::Literal { field } = self.phase_mode {
            if !(field > 0.0 && field.is_finite()) {
                return bad(format!("phase field must be positive, got {field}"));
            }
        }
        Ok(())
    }

    /// Scale of the bound-particle hopping: `J/2`, `J²/2U` or `3J³/16U²`.
    pub fn effective_hopping(&self) -> f64 {
        let (j, u) = (self.hopping, self.interaction);
        match self.particles {
            1 => j / 2.0,
            2 => j * j / (2.0 * u),
            _ => 3.0 * j.powi(3) / (16.0 * u * u),
        }
    }

    /// `J^M / U^(M-1)`, the natural unit of impurity fields.
    pub fn field_scale(&self) -> f64 {
        let m = self.particles as i32;
        self.hopping.powi(m) / self.interaction.powi(m - 1)
    }

    pub fn basis(&self) -> Result<FockBasis> {
        enumerate_basis(self.sites, self.particles)
    }

    /// Default transfer window.
    pub fn window(&self) -> Result<TimeWindow> {
        let jeff = self.effective_hopping();
        let end = self.window_factor * self.sites as f64 / jeff;
        TimeWindow::new(0.0, end, self.scan_steps)
    }

    fn uniform_params(&self) -> Result<LatticeParams> {
        Ok(
            LatticeParams::uniform(self.sites, self.hopping, self.interaction)?
                .with_convention(self.convention),
        )
    }
}

/// A configuration with every field resolved to a number.
#[derive(Debug, Clone)]
pub struct ChainSetup {
    pub basis: FockBasis,
    /// Everything except the splitting impurity.
    pub base: LatticeParams,
    pub edge_field: f64,
    pub edge_hopping: Option<f64>,
    pub engineering_fields: Option<(f64, f64)>,
}

impl ChainSetup {
    /// `base` plus the splitting impurity `beta`.
    pub fn with_split(&self, beta: f64) -> Result<LatticeParams> {
        apply_scheme(&self.base, &Scheme::SplitImpurity { beta })
    }

    pub fn first_index(&self) -> usize {
        self.basis.bound_index(1).expect("site 1 exists")
    }

    pub fn last_index(&self) -> usize {
        self.basis
            .bound_index(self.basis.sites())
            .expect("site L exists")
    }

    pub fn initial_state(&self) -> QuantumState {
        QuantumState::bound(&self.basis, 1).expect("site 1 exists")
    }
}

/// Resolve edge fields and engineering; splitting is left to the caller.
pub fn prepare(config: &ExperimentConfig) -> Result<ChainSetup> {
    config.validate()?;
    let basis = config.basis()?;
    let uniform = config.uniform_params()?;
    let (j, u, m) = (config.hopping, config.interaction, config.particles);
    let mut edge_hopping = None;
    let mut engineering_fields = None;
    let engineered = match config.engineering {
        Engineering::None => uniform,
        Engineering::Minimal {
            edge_hopping: j0,
            fields,
        } => {
            let j0 = match j0 {
                Some(x) => x,
                None => optimal_minimal_edge_hopping(m, config.sites, j)?,
            };
            let (b1, b2) = match fields {
                FieldFormula::Balanced => balanced_minimal_engineering_fields(m, j, j0, u)?,
                FieldFormula::Nominal => minimal_engineering_fields(m, j, j0, u)?,
            };
            edge_hopping = Some(j0);
            engineering_fields = Some((b1, b2));
            apply_scheme(
                &uniform,
                &Scheme::MinimalEngineered {
                    edge_hopping: j0,
                    beta1: b1,
                    beta2: b2,
                },
            )?
        }
        Engineering::EvenChain { fields } => {
            let f = match fields {
                FieldFormula::Balanced => even_chain_scheme_quadratic(j, u)?,
                FieldFormula::Nominal => even_chain_scheme(j, u)?,
            };
            edge_hopping = Some(f.j_mid);
            engineering_fields = Some((f.beta1, f.beta2));
            apply_scheme(
                &uniform,
                &Scheme::EvenChain {
                    j_mid: f.j_mid,
                    beta1: f.beta1,
                    beta2: f.beta2,
                },
            )?
        }
    };
    let edge_field = match config.edge_field {
        EdgeField::Off => 0.0,
        EdgeField::Fixed(b) => b,
        EdgeField::ClosedForm { factor } => {
            if m == 1 {
                0.0
            } else {
                factor * edge_unlock_field(m, j, u)?
            }
        }
        EdgeField::Optimize => {
            let plain = ExperimentConfig {
                edge_field: EdgeField::Off,
                split_field: SplitField::Off,
                ..config.clone()
            };
            optimize_edge_field(&plain)?.beta_prime
        }
    };
    let mut base = apply_scheme(
        &engineered,
        &Scheme::EdgeUnlocked {
            beta_prime: edge_field,
        },
    )?;
    for s in &config.extra_schemes {
        base = apply_scheme(&base, s)?;
    }
    Ok(ChainSetup {
        basis,
        base,
        edge_field,
        edge_hopping,
        engineering_fields,
    })
}

/// Splitting field from the configuration, running the optimiser if requested.
/// The splitting field the configuration asks for, if any.
pub fn resolve_split_field(config: &ExperimentConfig, setup: &ChainSetup) -> Result<Option<f64>> {
    Ok(match config.split_field {
        SplitField::Off => None,
        SplitField::Fixed(b) => Some(b),
        SplitField::Asymptotic { factor } => Some(
            factor
                * splitting_field_asymptotic(config.particles, config.hopping, config.interaction)?,
        ),
        SplitField::Prefactor { alpha } => Some(alpha * config.field_scale()),
        SplitField::Optimize => Some(noon::optimize_split_with(config, setup)?.beta),
    })
}

pub(crate) fn spectral(basis: &FockBasis, params: &LatticeParams) -> Result<SpectralCache> {
    SpectralCache::new(&build_hamiltonian(basis, params)?)
}

/// `(t*, P_last(t*))` for the bound state starting at site 1.
pub(crate) fn locate_transfer(
    setup: &ChainSetup,
    params: &LatticeParams,
    window: TimeWindow,
) -> Result<(f64, f64)> {
    let cache = spectral(&setup.basis, params)?;
    let prop = cache.propagate(&setup.initial_state())?;
    transfer_time(&prop, &[setup.last_index()], window)
}

/// Every multiset of `particles` labels drawn from `{1, L}` except the two pure ones.
pub(crate) fn mixed_patterns(particles: usize, sites: usize) -> Vec<Vec<usize>> {
    (1..particles)
        .rev()
        .map(|k| {
            let mut v = vec![1; k];
            v.extend(std::iter::repeat_n(sites, particles - k));
            v
        })
        .collect()
}
