//! Pure-state evolution by spectral decomposition.

use nalgebra::{DMatrix, DVector};

use crate::fock::{FockBasis, SectorOperator};
use crate::optimize::scan_then_refine_max;
use crate::{CMatrix, CVector, Complex64, Error, Result};

const NORM_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-12;

/// Normalised amplitude vector over a sector (or effective-chain) basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: CVector,
}

impl QuantumState {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let n = amplitudes.norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm {n} differs from 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Normalise `amplitudes` first.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let n = amplitudes.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidState("cannot normalise a zero vector".into()));
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(n),
        })
    }

    /// Basis vector `e_index` of a `dim`-dimensional space.
    pub fn basis_vector(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index + 1,
            });
        }
        let mut v = CVector::zeros(dim);
        v[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes: v })
    }

    /// Bound state `|{M}, site⟩`, `site` 1-based.
    pub fn bound(basis: &FockBasis, site: usize) -> Result<Self> {
        Self::basis_vector(basis.dim(), basis.bound_index(site)?)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }

    /// `Σ_i |ψ_i|² d_i` for a diagonal observable `d`.
    pub fn diagonal_expectation(&self, diag: &[f64]) -> f64 {
        self.amplitudes
            .iter()
            .zip(diag)
            .map(|(a, d)| a.norm_sqr() * d)
            .sum()
    }

    /// Multiply amplitude `i` by `exp(i·phase_i)`.
    pub fn apply_phases(&self, phases: &[f64]) -> Self {
        let amplitudes = CVector::from_iterator(
            self.dim(),
            self.amplitudes
                .iter()
                .zip(phases)
                .map(|(a, &p)| a * Complex64::from_polar(1.0, p)),
        );
        Self { amplitudes }
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.amplitudes.dotc(&other.amplitudes).norm_sqr()
    }
}

/// Probability of the occupation pattern given by a multiset of 1-based sites.
///
/// Equal to `|⟨0| Π a_{s} |ψ⟩|² / Π n_j!`, which for normalised Fock states is just
/// the squared amplitude of that pattern.
pub fn joint_probability(state: &QuantumState, basis: &FockBasis, sites: &[usize]) -> Result<f64> {
    if state.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: state.dim(),
        });
    }
    Ok(state.probability(basis.index_of_sites(sites)?))
}

/// Eigen-decomposition `H = V E V†`, reusable across many evolution times.
#[derive(Debug, Clone)]
pub struct SpectralCache {
    energies: Vec<f64>,
    vectors: CMatrix,
}

impl SpectralCache {
    pub fn new(h: &SectorOperator) -> Result<Self> {
        if !h.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::NotHermitian {
                deviation: h.hermiticity_deviation(),
            });
        }
        if h.is_real() {
            Ok(Self::from_real(&h.matrix().map(|z| z.re)))
        } else {
            let eig = h.matrix().clone().symmetric_eigen();
            Ok(Self {
                energies: eig.eigenvalues.iter().copied().collect(),
                vectors: eig.eigenvectors,
            })
        }
    }

    /// Decompose a real symmetric matrix.
    pub fn from_real(h: &DMatrix<f64>) -> Self {
        let eig = h.clone().symmetric_eigen();
        Self {
            energies: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors.map(|x| Complex64::new(x, 0.0)),
        }
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    /// Largest entry of `V E V† - H`.
    pub fn reconstruction_error(&self, h: &SectorOperator) -> f64 {
        let e = DVector::from_iterator(
            self.dim(),
            self.energies.iter().map(|&x| Complex64::new(x, 0.0)),
        );
        let r = &self.vectors * CMatrix::from_diagonal(&e) * self.vectors.adjoint();
        (r - h.matrix()).camax()
    }

    /// Expand `psi0` in the eigenbasis once so later queries cost `O(D)` per amplitude.
    pub fn propagate(&self, psi0: &QuantumState) -> Result<Propagation<'_>> {
        if psi0.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi0.dim(),
            });
        }
        Ok(Propagation {
            cache: self,
            initial: psi0.clone(),
            coefficients: self.vectors.adjoint() * psi0.amplitudes(),
        })
    }

    /// `V e^{-iEt} V† ψ0`.
    pub fn evolve(&self, psi0: &QuantumState, t: f64) -> Result<QuantumState> {
        Ok(self.propagate(psi0)?.state_at(t))
    }
}

/// Initial state expressed in the eigenbasis of a [`SpectralCache`].
#[derive(Debug, Clone)]
pub struct Propagation<'a> {
    cache: &'a SpectralCache,
    initial: QuantumState,
    coefficients: CVector,
}

impl Propagation<'_> {
    fn phased(&self, t: f64) -> CVector {
        CVector::from_iterator(
            self.coefficients.len(),
            self.coefficients
                .iter()
                .zip(&self.cache.energies)
                .map(|(c, &e)| c * Complex64::from_polar(1.0, -e * t)),
        )
    }

    pub fn state_at(&self, t: f64) -> QuantumState {
        if t == 0.0 {
            return self.initial.clone();
        }
        QuantumState {
            amplitudes: &self.cache.vectors * self.phased(t),
        }
    }

    /// Amplitude on basis index `index` at time `t`.
    pub fn amplitude(&self, index: usize, t: f64) -> Complex64 {
        if t == 0.0 {
            return self.initial.amplitudes[index];
        }
        let row = self.cache.vectors.row(index);
        row.iter()
            .zip(self.coefficients.iter().zip(&self.cache.energies))
            .map(|(v, (c, &e))| v * c * Complex64::from_polar(1.0, -e * t))
            .sum()
    }

    /// Summed probability on `indices` at time `t`.
    pub fn probability(&self, indices: &[usize], t: f64) -> f64 {
        indices
            .iter()
            .map(|&i| self.amplitude(i, t).norm_sqr())
            .sum()
    }

    /// `probability(indices, t)` along `times`.
    pub fn trajectory(&self, indices: &[usize], times: &[f64]) -> Vec<f64> {
        times
            .iter()
            .map(|&t| self.probability(indices, t))
            .collect()
    }
}

/// Time interval and grid resolution used to locate a transfer peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl TimeWindow {
    pub const DEFAULT_STEPS: usize = 2000;

    pub fn new(start: f64, end: f64, steps: usize) -> Result<Self> {
        if !(end > start) || steps == 0 || !start.is_finite() || !end.is_finite() {
            return Err(Error::EmptyWindow { start, end });
        }
        Ok(Self { start, end, steps })
    }

    /// `[0, factor·L/J_eff]` at the default resolution.
    pub fn transfer(sites: usize, effective_hopping: f64, factor: f64) -> Result<Self> {
        Self::new(
            0.0,
            factor * sites as f64 / effective_hopping.abs(),
            Self::DEFAULT_STEPS,
        )
    }

    /// `steps + 1` equally spaced sample times.
    pub fn grid(&self) -> Vec<f64> {
        let h = (self.end - self.start) / self.steps as f64;
        (0..=self.steps)
            .map(|k| self.start + h * k as f64)
            .collect()
    }
}

/// Time of the global maximum of the probability on `targets` within `window`, found by a
/// grid scan refined by golden-section search. The earliest grid peak wins ties.
pub fn transfer_time(
    propagation: &Propagation<'_>,
    targets: &[usize],
    window: TimeWindow,
) -> Result<(f64, f64)> {
    scan_then_refine_max(
        |t| propagation.probability(targets, t),
        window.start,
        window.end,
        window.steps,
    )
}

/// One-shot `e^{-iHt} ψ0`.
pub fn evolve(h: &SectorOperator, psi0: &QuantumState, t: f64) -> Result<QuantumState> {
    SpectralCache::new(h)?.evolve(psi0, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::enumerate_basis;
    use crate::lattice::{build_hamiltonian, LatticeParams};
    use std::f64::consts::PI;

    fn dimer() -> (FockBasis, SectorOperator) {
        let b = enumerate_basis(2, 1).unwrap();
        let h = build_hamiltonian(&b, &LatticeParams::uniform(2, 1.0, 0.0).unwrap()).unwrap();
        (b, h)
    }

    #[test]
    fn zero_time_is_identity() {
        let (b, h) = dimer();
        let psi = QuantumState::bound(&b, 1).unwrap();
        assert_eq!(evolve(&h, &psi, 0.0).unwrap().probability(0), 1.0);
    }

    #[test]
    fn dimer_rabi_cycle() {
        let (b, h) = dimer();
        let psi = QuantumState::bound(&b, 1).unwrap();
        let back = evolve(&h, &psi, 2.0 * PI).unwrap();
        assert!((back.fidelity(&psi) - 1.0).abs() < 1e-12);
        let across = evolve(&h, &psi, PI).unwrap();
        assert!((across.probability(1) - 1.0).abs() < 1e-12);

        let cache = SpectralCache::new(&h).unwrap();
        let prop = cache.propagate(&psi).unwrap();
        let (t, p) =
            transfer_time(&prop, &[1], TimeWindow::new(0.0, 2.0 * PI, 2000).unwrap()).unwrap();
        assert!((t - PI).abs() < 1e-6, "{t}");
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenstate_only_picks_up_a_phase() {
        let b = enumerate_basis(4, 2).unwrap();
        let h = build_hamiltonian(&b, &LatticeParams::uniform(4, 1.0, 3.0).unwrap()).unwrap();
        let cache = SpectralCache::new(&h).unwrap();
        assert!(cache.reconstruction_error(&h) < 1e-12);
        let v = QuantumState::new(cache.vectors().column(2).into_owned()).unwrap();
        let vt = cache.evolve(&v, 3.7).unwrap();
        assert!((vt.fidelity(&v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn joint_probabilities() {
        let b = enumerate_basis(2, 2).unwrap();
        let psi = QuantumState::bound(&b, 1).unwrap();
        assert_eq!(joint_probability(&psi, &b, &[1, 1]).unwrap(), 1.0);
        assert_eq!(joint_probability(&psi, &b, &[1, 2]).unwrap(), 0.0);

        let s = 0.5f64.sqrt();
        let mut v = CVector::zeros(3);
        v[0] = Complex64::new(s, 0.0);
        v[2] = Complex64::new(s, 0.0);
        let noon = QuantumState::new(v).unwrap();
        assert!((joint_probability(&noon, &b, &[1, 1]).unwrap() - 0.5).abs() < 1e-15);
        assert!((joint_probability(&noon, &b, &[2, 2]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(joint_probability(&noon, &b, &[2, 1]).unwrap(), 0.0);
        assert!(joint_probability(&noon, &b, &[1]).is_err());
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        let h = SectorOperator::from_matrix(m).unwrap();
        assert!(matches!(
            SpectralCache::new(&h),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn empty_window_rejected() {
        assert!(TimeWindow::new(1.0, 1.0, 10).is_err());
        assert!(TimeWindow::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn complex_hamiltonian_path() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = Complex64::new(0.0, -0.5);
        m[(1, 0)] = Complex64::new(0.0, 0.5);
        let h = SectorOperator::from_matrix(m).unwrap();
        let psi = QuantumState::basis_vector(2, 0).unwrap();
        let out = evolve(&h, &psi, PI).unwrap();
        assert!((out.probability(1) - 1.0).abs() < 1e-12);
        assert!((out.norm() - 1.0).abs() < 1e-12);
    }
}
