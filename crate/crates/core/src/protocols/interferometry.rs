use super::{
    locate_transfer, prepare, resolve_split_field, spectral, ChainSetup, ExperimentConfig,
    PhaseMode,
};
use crate::dynamics::{transfer_time, QuantumState, SpectralCache, TimeWindow};
use crate::fock::enumerate_basis;
use crate::lattice::{apply_scheme, LatticeParams, Scheme};
use crate::optimize::{bisect_root, first_sign_change};
use crate::{Error, Result};

/// `|1 - e^{iNφ}|² / 4`: probability of finding all particles back on the first site
/// after an ideal split, phase and recombination.
pub fn ideal_mach_zehnder(particles: usize, phi: f64) -> f64 {
    (0.5 * particles as f64 * phi).sin().powi(2)
}

/// `2(sin Nφ - 1)/(sin Nφ - 3)`: one particle on each end after the phase and a free
/// (non-interacting) balanced split.
pub fn ideal_quench_detection(particles: usize, phi: f64) -> f64 {
    let s = (particles as f64 * phi).sin();
    2.0 * (s - 1.0) / (s - 3.0)
}

/// `n` evenly spaced phases from `lo` to `hi` inclusive.
pub fn phase_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(hi > lo) {
        return Err(Error::InvalidParameter(format!(
            "phase grid needs hi > lo and at least two points, got [{lo}, {hi}] with {n}"
        )));
    }
    let h = (hi - lo) / (n - 1) as f64;
    Ok((0..n).map(|k| lo + h * k as f64).collect())
}

/// Detection probability against phase, next to the ideal curve.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeScan {
    pub phi: Vec<f64>,
    pub detected: Vec<f64>,
    pub ideal: Vec<f64>,
}

impl FringeScan {
    fn new(phi: Vec<f64>, detected: Vec<f64>, ideal: Vec<f64>) -> Result<Self> {
        if phi.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "phase grid must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            phi,
            detected,
            ideal,
        })
    }

    /// Phases of interior local maxima and minima of `values` on this grid.
    pub fn extrema_of(&self, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut maxima = Vec::new();
        let mut minima = Vec::new();
        for k in 1..values.len().saturating_sub(1) {
            let (a, b, c) = (values[k - 1], values[k], values[k + 1]);
            if b > a && b >= c {
                maxima.push(self.phi[k]);
            } else if b < a && b <= c {
                minima.push(self.phi[k]);
            }
        }
        (maxima, minima)
    }
}

/// State right after the splitting pass, shared by the read-out schemes.
struct SplitStage {
    setup: ChainSetup,
    split_cache: SpectralCache,
    t_star: f64,
    after_split: QuantumState,
    last_occupation: Vec<f64>,
}

fn split_stage(config: &ExperimentConfig) -> Result<SplitStage> {
    let setup = prepare(config)?;
    let beta = resolve_split_field(config, &setup)?
        .ok_or_else(|| Error::InvalidParameter("interferometry needs a splitting field".into()))?;
    let (t_star, _) = locate_transfer(&setup, &setup.base, config.window()?)?;
    let split_cache = spectral(&setup.basis, &setup.with_split(beta)?)?;
    let after_split = split_cache.evolve(&setup.initial_state(), t_star)?;
    let last_occupation = setup.basis.occupation_column(config.sites - 1);
    Ok(SplitStage {
        setup,
        split_cache,
        t_star,
        after_split,
        last_occupation,
    })
}

/// Imprint the phase `φ` on site `L`.
fn imprint(stage: &SplitStage, config: &ExperimentConfig, phi: f64) -> QuantumState {
    let phases: Vec<f64> = match config.phase_mode {
        PhaseMode::Diagonal => stage.last_occupation.iter().map(|n| n * phi).collect(),
        PhaseMode::Literal { field } => {
            let duration = phi.rem_euclid(std::f64::consts::TAU) / field;
            stage
                .setup
                .basis
                .states()
                .iter()
                .map(|s| {
                    let occ = s.occupations();
                    let pairs: f64 = occ.iter().map(|&n| (n * n.saturating_sub(1)) as f64).sum();
                    let energy = config.interaction * pairs - field * occ[occ.len() - 1] as f64;
                    -energy * duration
                })
                .collect()
        }
    };
    stage.after_split.apply_phases(&phases)
}

/// Split for `t*`, imprint `φ` on site `L`, pass through the same chain for another `t*`,
/// and read `P_{1…1}`.
pub fn mach_zehnder_fringes(config: &ExperimentConfig, phis: &[f64]) -> Result<FringeScan> {
    let stage = split_stage(config)?;
    let first = stage.setup.first_index();
    let detected = phis
        .iter()
        .map(|&phi| {
            let psi = imprint(&stage, config, phi);
            Ok(stage
                .split_cache
                .evolve(&psi, stage.t_star)?
                .probability(first))
        })
        .collect::<Result<Vec<_>>>()?;
    let ideal = phis
        .iter()
        .map(|&p| ideal_mach_zehnder(config.particles, p))
        .collect();
    FringeScan::new(phis.to_vec(), detected, ideal)
}

/// Fringes after switching the interaction off.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchScan {
    pub scan: FringeScan,
    /// Barrier balancing a single free particle at `t_free`.
    pub barrier: f64,
    /// Transfer time of a free particle on the chain without barrier.
    pub t_free: f64,
}

fn free_particle_chain(base: &LatticeParams) -> Result<LatticeParams> {
    let l = base.sites();
    LatticeParams::new(base.hoppings().to_vec(), vec![0.0; l], vec![0.0; l])
}

/// Two-particle detection by interaction quench: after the phase, set `U = 0`, swap the
/// splitting impurity for the barrier that balances a single free particle, evolve for
/// the free transfer time `t″` and read `P_{1L}`.
pub fn quench_detection(config: &ExperimentConfig, phis: &[f64]) -> Result<QuenchScan> {
    if config.particles != 2 {
        return Err(Error::UnsupportedParticleNumber {
            particles: config.particles,
        });
    }
    let stage = split_stage(config)?;
    let base = &stage.setup.base;
    let l = config.sites;

    let free = free_particle_chain(base)?;
    let basis1 = enumerate_basis(l, 1)?;
    let start = QuantumState::basis_vector(l, 0)?;
    let window = TimeWindow::new(0.0, 2.0 * l as f64 / config.hopping, config.scan_steps)?;
    let plain = spectral(&basis1, &free)?;
    let (t_free, _) = transfer_time(&plain.propagate(&start)?, &[l - 1], window)?;

    let mut failure = None;
    let mut balance = |b: f64| {
        let run = || -> Result<f64> {
            let p = apply_scheme(&free, &Scheme::SplitImpurity { beta: b })?;
            let cache = spectral(&basis1, &p)?;
            let prop = cache.propagate(&start)?;
            Ok(prop.probability(&[0], t_free) - prop.probability(&[l - 1], t_free))
        };
        run().unwrap_or_else(|e| {
            failure.get_or_insert(e);
            f64::NAN
        })
    };
    let (lo, hi) = (0.01 * config.hopping, 3.0 * config.hopping);
    let (a, b) =
        first_sign_change(&mut balance, lo, hi, 60).ok_or(Error::NoSignChange { lo, hi })?;
    let barrier = bisect_root(&mut balance, a, b, 1e-8)?;
    if let Some(e) = failure {
        return Err(e);
    }

    let quenched = apply_scheme(
        &base.with_interaction(0.0),
        &Scheme::SplitImpurity { beta: barrier },
    )?;
    let cache = spectral(&stage.setup.basis, &quenched)?;
    let target = stage.setup.basis.index_of_sites(&[1, l])?;
    let detected = phis
        .iter()
        .map(|&phi| {
            let psi = imprint(&stage, config, phi);
            Ok(cache.evolve(&psi, t_free)?.probability(target))
        })
        .collect::<Result<Vec<_>>>()?;
    let ideal = phis.iter().map(|&p| ideal_quench_detection(2, p)).collect();
    Ok(QuenchScan {
        scan: FringeScan::new(phis.to_vec(), detected, ideal)?,
        barrier,
        t_free,
    })
}
