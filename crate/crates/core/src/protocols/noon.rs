use std::collections::HashMap;

use rayon::prelude::*;

use super::{
    locate_transfer, mixed_patterns, prepare, resolve_split_field, spectral, ChainSetup,
    ExperimentConfig,
};
use crate::dynamics::QuantumState;
use crate::fock::{FockBasis, FockState};
use crate::optimize::{bisect_root, first_sign_change};
use crate::{CMatrix, CVector, Complex64, Error, Result};

/// Balanced splitting field and the transfer time it was balanced at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitOptimum {
    pub beta: f64,
    /// Transfer time of the chain without the impurity.
    pub t_star: f64,
    /// `P_first - P_last` at `beta`.
    pub residual: f64,
}

/// Find `β` with `P_{1…1}(t*) = P_{L…L}(t*)`, where `t*` is the transfer time of the same
/// chain without the impurity. Brackets `(0, 2 J^M/U^(M-1)]`, takes the first sign change on
/// a coarse grid and bisects it to `1e-4` relative.
pub fn optimize_split_field(config: &ExperimentConfig) -> Result<SplitOptimum> {
    let setup = prepare(config)?;
    optimize_split_with(config, &setup)
}

pub(crate) fn optimize_split_with(
    config: &ExperimentConfig,
    setup: &ChainSetup,
) -> Result<SplitOptimum> {
    if config.particles < 2 {
        return Err(Error::InvalidParameter(
            "the splitting field is defined for bound states of 2 or 3 particles".into(),
        ));
    }
    let (t_star, _) = locate_transfer(setup, &setup.base, config.window()?)?;
    let (first, last) = (setup.first_index(), setup.last_index());
    let psi0 = setup.initial_state();
    let residual = |beta: f64| -> Result<f64> {
        let cache = spectral(&setup.basis, &setup.with_split(beta)?)?;
        let prop = cache.propagate(&psi0)?;
        Ok(prop.probability(&[first], t_star) - prop.probability(&[last], t_star))
    };
    let hi = 2.0 * config.field_scale();
    let lo = 1e-3 * hi;
    let mut failure = None;
    let mut f = |b: f64| {
        residual(b).unwrap_or_else(|e| {
            failure.get_or_insert(e);
            f64::NAN
        })
    };
    let (a, b) = first_sign_change(&mut f, lo, hi, 40).ok_or(Error::NoSignChange { lo, hi })?;
    let beta = bisect_root(&mut f, a, b, 1e-4)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(SplitOptimum {
        beta,
        t_star,
        residual: residual(beta)?,
    })
}

/// Least-squares prefactor of `β = α J^M / U^(M-1)` over a set of interactions.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitFit {
    /// `(U, β)` pairs in input order.
    pub points: Vec<(f64, f64)>,
    pub alpha: f64,
}

/// Optimise the splitting field at each interaction and fit `α = Σ xβ / Σ x²` with
/// `x = J^M / U^(M-1)`. Interactions are processed in parallel.
pub fn fit_splitting_alpha(config: &ExperimentConfig, interactions: &[f64]) -> Result<SplitFit> {
    let points: Vec<(f64, f64)> = interactions
        .par_iter()
        .map(|&u| Ok((u, optimize_split_field(&config.with_interaction(u))?.beta)))
        .collect::<Result<_>>()?;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(u, beta) in &points {
        let x = config.with_interaction(u).field_scale();
        sxy += x * beta;
        sxx += x * x;
    }
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("no points to fit".into()));
    }
    Ok(SplitFit {
        points,
        alpha: sxy / sxx,
    })
}

/// Probability of a mixed endpoint pattern such as `P_{1L}` or `P_{11L}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedTerm {
    pub sites: Vec<usize>,
    pub probability: f64,
}

/// NOON-generation read-out at the transfer time.
#[derive(Debug, Clone)]
pub struct SplitReport {
    pub beta: f64,
    pub t_star: f64,
    pub p_first: f64,
    pub p_last: f64,
    pub mixed: Vec<MixedTerm>,
    /// `P_first - P_last`.
    pub balance_residual: f64,
    pub times: Vec<f64>,
    pub first: Vec<f64>,
    pub last: Vec<f64>,
    /// Summed mixed-term probability along `times`.
    pub mixed_series: Vec<f64>,
}

impl SplitReport {
    /// `P_first + P_last`.
    pub fn noon_weight(&self) -> f64 {
        self.p_first + self.p_last
    }
}

/// Evolve through the splitting impurity and read the endpoint and mixed probabilities at
/// `t*` (the transfer time without the impurity). Series cover `[0, 2t*]`.
pub fn run_noon(config: &ExperimentConfig) -> Result<SplitReport> {
    let setup = prepare(config)?;
    let beta = resolve_split_field(config, &setup)?
        .ok_or_else(|| Error::InvalidParameter("NOON generation needs a splitting field".into()))?;
    let (t_star, _) = locate_transfer(&setup, &setup.base, config.window()?)?;
    let cache = spectral(&setup.basis, &setup.with_split(beta)?)?;
    let prop = cache.propagate(&setup.initial_state())?;
    let (first, last) = (setup.first_index(), setup.last_index());
    let patterns = mixed_patterns(config.particles, config.sites);
    let mixed_idx: Vec<usize> = patterns
        .iter()
        .map(|p| setup.basis.index_of_sites(p))
        .collect::<Result<_>>()?;
    let mixed = patterns
        .iter()
        .zip(&mixed_idx)
        .map(|(p, &i)| MixedTerm {
            sites: p.clone(),
            probability: prop.probability(&[i], t_star),
        })
        .collect();
    let p_first = prop.probability(&[first], t_star);
    let p_last = prop.probability(&[last], t_star);
    let n = 1000;
    let times: Vec<f64> = (0..=n)
        .map(|k| 2.0 * t_star * k as f64 / n as f64)
        .collect();
    Ok(SplitReport {
        beta,
        t_star,
        p_first,
        p_last,
        mixed,
        balance_residual: p_first - p_last,
        first: prop.trajectory(&[first], &times),
        last: prop.trajectory(&[last], &times),
        mixed_series: prop.trajectory(&mixed_idx, &times),
        times,
    })
}

/// `(1/√2) [[1, i], [i, 1]]`.
pub fn balanced_beam_splitter() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(s, 0.0),
            Complex64::new(0.0, s),
            Complex64::new(0.0, s),
            Complex64::new(s, 0.0),
        ],
    )
}

/// Output of a passive linear network `a†_j → Σ_k u_kj a†_k` applied to a Fock input, by
/// expanding the product of transformed creation operators.
pub fn linear_optics_output(
    basis: &FockBasis,
    input: &FockState,
    unitary: &CMatrix,
) -> Result<QuantumState> {
    let l = basis.sites();
    if unitary.nrows() != l || unitary.ncols() != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            found: unitary.nrows(),
        });
    }
    if input.occupations().len() != l || input.particles() != basis.particles() {
        return Err(Error::InvalidState(
            "input does not belong to the basis sector".into(),
        ));
    }
    // polynomial in creation operators: exponent vector -> coefficient
    let mut poly: HashMap<Vec<usize>, Complex64> = HashMap::new();
    poly.insert(vec![0; l], Complex64::new(1.0, 0.0));
    for (j, &n) in input.occupations().iter().enumerate() {
        for _ in 0..n {
            let mut next: HashMap<Vec<usize>, Complex64> = HashMap::new();
            for (mono, c) in &poly {
                for k in 0..l {
                    let u = unitary[(k, j)];
                    if u == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let mut m = mono.clone();
                    m[k] += 1;
                    *next.entry(m).or_default() += c * u;
                }
            }
            poly = next;
        }
    }
    let fact = |n: usize| (1..=n).map(|x| x as f64).product::<f64>();
    let norm_in: f64 = input
        .occupations()
        .iter()
        .map(|&n| fact(n))
        .product::<f64>()
        .sqrt();
    let mut amps = CVector::zeros(basis.dim());
    for (mono, c) in poly {
        let norm_out: f64 = mono.iter().map(|&n| fact(n)).product::<f64>().sqrt();
        let idx = basis
            .index_of(&FockState::new(mono))
            .expect("particle number is conserved");
        amps[idx] += c * norm_out / norm_in;
    }
    QuantumState::new(amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::joint_probability;
    use crate::fock::enumerate_basis;

    #[test]
    fn ideal_splitter_combinatorics() {
        let bs = balanced_beam_splitter();
        let b2 = enumerate_basis(2, 2).unwrap();
        let out2 = linear_optics_output(&b2, &FockState::new(vec![2, 0]), &bs).unwrap();
        assert!((joint_probability(&out2, &b2, &[1, 2]).unwrap() - 0.5).abs() < 1e-15);

        let b3 = enumerate_basis(2, 3).unwrap();
        let out3 = linear_optics_output(&b3, &FockState::new(vec![3, 0]), &bs).unwrap();
        let p = |s: &[usize]| joint_probability(&out3, &b3, s).unwrap();
        for (s, expect) in [
            (&[1, 1, 1], 0.125),
            (&[2, 2, 2], 0.125),
            (&[1, 1, 2], 0.375),
            (&[1, 2, 2], 0.375),
        ] {
            assert!((p(s) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn hong_ou_mandel_dip() {
        let bs = balanced_beam_splitter();
        let b = enumerate_basis(2, 2).unwrap();
        let out = linear_optics_output(&b, &FockState::new(vec![1, 1]), &bs).unwrap();
        assert!(joint_probability(&out, &b, &[1, 2]).unwrap() < 1e-30);
    }
}
