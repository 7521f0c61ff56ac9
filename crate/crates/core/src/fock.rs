//! Fixed-particle-number Fock sectors.
//!
//! A sector holds `M` bosons on `L` sites. States are ordered by lexicographically
//! *decreasing* occupation vectors, so `|M,0,…,0⟩` has index 0 and `|0,…,0,M⟩` has
//! index `D - 1`. Site and bond arguments of the public operator builders are
//! 1-based, matching the physics convention `j = 1…L`.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::{CMatrix, Complex64, Error, Result};

/// Occupation numbers `n_1 … n_L` of one basis state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState(Vec<usize>);

impl FockState {
    pub fn new(occupations: Vec<usize>) -> Self {
        Self(occupations)
    }

    /// `|{M}, site⟩`: all particles on one (1-based) site.
    pub fn bound(sites: usize, particles: usize, site: usize) -> Result<Self> {
        if site == 0 || site > sites {
            return Err(Error::SiteOutOfRange { site, sites });
        }
        let mut occ = vec![0; sites];
        occ[site - 1] = particles;
        Ok(Self(occ))
    }

    /// Occupation pattern of the multiset of (1-based) sites, e.g. `[1, 1, 5]` → `|2,0,0,0,1⟩`.
    pub fn from_sites(sites: usize, labels: &[usize]) -> Result<Self> {
        let mut occ = vec![0; sites];
        for &s in labels {
            if s == 0 || s > sites {
                return Err(Error::SiteOutOfRange { site: s, sites });
            }
            occ[s - 1] += 1;
        }
        Ok(Self(occ))
    }

    pub fn occupations(&self) -> &[usize] {
        &self.0
    }

    pub fn particles(&self) -> usize {
        self.0.iter().sum()
    }

    /// Mirror image `n_j → n_{L+1-j}`.
    pub fn reversed(&self) -> Self {
        Self(self.0.iter().rev().copied().collect())
    }

    /// `Π_j n_j!`, the bosonic symmetry factor of the occupation pattern.
    pub fn symmetry_factor(&self) -> f64 {
        self.0.iter().map(|&n| factorial(n)).product()
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `(M+L-1)! / (M! (L-1)!)`, the number of ways to put `M` bosons on `L` sites.
pub fn sector_dimension(sites: usize, particles: usize) -> Result<usize> {
    if sites == 0 {
        return Err(Error::NoSites);
    }
    // C(M+L-1, M) built incrementally; each partial product is itself a binomial.
    let mut acc: u128 = 1;
    for k in 1..=particles as u128 {
        acc = acc * (sites as u128 - 1 + k) / k;
    }
    usize::try_from(acc)
        .map_err(|_| Error::InvalidParameter("sector dimension overflows usize".into()))
}

/// Ordered basis of one `(L, M)` sector.
#[derive(Debug, Clone)]
pub struct FockBasis {
    sites: usize,
    particles: usize,
    states: Vec<FockState>,
    index: HashMap<FockState, usize>,
}

/// Enumerate the `(L, M)` sector in lexicographically decreasing order.
pub fn enumerate_basis(sites: usize, particles: usize) -> Result<FockBasis> {
    if sites == 0 {
        return Err(Error::NoSites);
    }
    let mut states = Vec::with_capacity(sector_dimension(sites, particles)?);
    let mut current = vec![0; sites];
    fill(&mut current, 0, particles, &mut states);
    let index = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    Ok(FockBasis {
        sites,
        particles,
        states,
        index,
    })
}

fn fill(current: &mut [usize], site: usize, remaining: usize, out: &mut Vec<FockState>) {
    if site + 1 == current.len() {
        current[site] = remaining;
        out.push(FockState(current.to_vec()));
        return;
    }
    for n in (0..=remaining).rev() {
        current[site] = n;
        fill(current, site + 1, remaining - n, out);
    }
    current[site] = 0;
}

impl FockBasis {
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &FockState {
        &self.states[i]
    }

    pub fn index_of(&self, state: &FockState) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// Index of `|{M}, site⟩` (1-based site).
    pub fn bound_index(&self, site: usize) -> Result<usize> {
        let s = FockState::bound(self.sites, self.particles, site)?;
        Ok(self.index[&s])
    }

    /// Indices of all bound states `|{M}, j⟩`, ordered by `j = 1…L`.
    pub fn bound_indices(&self) -> Vec<usize> {
        (1..=self.sites)
            .map(|j| self.bound_index(j).expect("site in range"))
            .collect()
    }

    /// Index of the occupation pattern of a multiset of (1-based) sites.
    pub fn index_of_sites(&self, labels: &[usize]) -> Result<usize> {
        if labels.len() != self.particles {
            return Err(Error::LengthMismatch {
                what: "site labels",
                expected: self.particles,
                found: labels.len(),
            });
        }
        let s = FockState::from_sites(self.sites, labels)?;
        Ok(self.index[&s])
    }

    /// Occupation of (0-based) site `site` in every basis state.
    pub fn occupation_column(&self, site: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.0[site] as f64).collect()
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.sites {
            return Err(Error::SiteOutOfRange {
                site,
                sites: self.sites,
            });
        }
        Ok(())
    }
}

/// Dense operator restricted to one sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorOperator {
    matrix: CMatrix,
}

impl SectorOperator {
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        Ok(Self { matrix })
    }

    pub fn from_real(matrix: DMatrix<f64>) -> Result<Self> {
        Self::from_matrix(matrix.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Hermitian to within `rel_tol` relative to the largest entry.
    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        let scale = self
            .matrix
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
            .max(1.0);
        self.hermiticity_deviation() <= rel_tol * scale
    }

    /// True when every entry has a vanishing imaginary part.
    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|z| z.im == 0.0)
    }

    /// Frobenius norm of `[self, other]`.
    pub fn commutator_norm(&self, other: &SectorOperator) -> f64 {
        (&self.matrix * &other.matrix - &other.matrix * &self.matrix).norm()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            matrix: self.matrix.map(|z| z * factor),
        }
    }

    pub fn plus(&self, other: &SectorOperator) -> Self {
        Self {
            matrix: &self.matrix + &other.matrix,
        }
    }
}

/// `n_site` on the sector; `site` is 1-based.
pub fn number_operator(basis: &FockBasis, site: usize) -> Result<SectorOperator> {
    basis.check_site(site)?;
    let diag = basis.occupation_column(site - 1);
    Ok(diagonal_operator(&diag))
}

/// `Σ_j n_j`, which is `M` times the identity.
pub fn total_number_operator(basis: &FockBasis) -> SectorOperator {
    diagonal_operator(&vec![basis.particles() as f64; basis.dim()])
}

pub(crate) fn diagonal_operator(diag: &[f64]) -> SectorOperator {
    let n = diag.len();
    let mut m = CMatrix::zeros(n, n);
    for (i, &d) in diag.iter().enumerate() {
        m[(i, i)] = Complex64::new(d, 0.0);
    }
    SectorOperator { matrix: m }
}

/// `a_j a†_{j+1} + a†_j a_{j+1}` on bond `j` (1-based, `1 ≤ j ≤ L-1`).
pub fn hop_operator(basis: &FockBasis, bond: usize) -> Result<SectorOperator> {
    let bonds = basis.sites().saturating_sub(1);
    if bond == 0 || bond > bonds {
        return Err(Error::BondOutOfRange { bond, bonds });
    }
    let n = basis.dim();
    let mut m = CMatrix::zeros(n, n);
    let (left, right) = (bond - 1, bond);
    for (i, s) in basis.states().iter().enumerate() {
        let occ = s.occupations();
        if occ[left] == 0 {
            continue;
        }
        // a_left a†_right |s⟩ = sqrt(n_left (n_right + 1)) |t⟩
        let mut t = occ.to_vec();
        t[left] -= 1;
        t[right] += 1;
        let amp = ((occ[left] * (occ[right] + 1)) as f64).sqrt();
        let k = basis.index[&FockState(t)];
        m[(k, i)] += Complex64::new(amp, 0.0);
        m[(i, k)] += Complex64::new(amp, 0.0);
    }
    Ok(SectorOperator { matrix: m })
}

/// Permutation implementing the site reversal `j → L+1-j` on the sector.
pub fn reflection_operator(basis: &FockBasis) -> SectorOperator {
    let n = basis.dim();
    let mut m = CMatrix::zeros(n, n);
    for (i, s) in basis.states().iter().enumerate() {
        let k = basis.index[&s.reversed()];
        m[(k, i)] = Complex64::new(1.0, 0.0);
    }
    SectorOperator { matrix: m }
}
