//! Reduction of a sector Hamiltonian to the bound-particle subspace.
//!
//! The sector splits into bound states `|{M}, j⟩` (block `P`) and everything else
//! (block `Q`):
//!
//! ```text
//!     | H_p   V  |
//! H = |          |        H_eff = H_p - V W,    H_q W - W H_p = V†
//!     | V†   H_q |
//! ```
//!
//! `W` is expanded in powers of the small part of the Hamiltonian around its diagonal
//! interaction energies, so the truncated series is a strong-coupling expansion.

use nalgebra::DMatrix;

use crate::fock::{FockBasis, FockState, SectorOperator};
use crate::lattice::LatticeParams;
use crate::{CMatrix, Complex64, Error, Result};

/// Default cut for long-range effective couplings, relative to the largest nearest-neighbour one.
pub const DEFAULT_TRUNCATION: f64 = 1e-3;

/// Bound/unbound partition of a sector Hamiltonian.
#[derive(Debug, Clone)]
pub struct BlockSplit {
    p_indices: Vec<usize>,
    q_indices: Vec<usize>,
    p_states: Vec<FockState>,
    q_states: Vec<FockState>,
    hp: CMatrix,
    hq: CMatrix,
    v: CMatrix,
}

impl BlockSplit {
    /// Sector indices of `|{M}, 1⟩ … |{M}, L⟩`.
    pub fn p_indices(&self) -> &[usize] {
        &self.p_indices
    }

    pub fn q_indices(&self) -> &[usize] {
        &self.q_indices
    }

    pub fn hp(&self) -> &CMatrix {
        &self.hp
    }

    pub fn hq(&self) -> &CMatrix {
        &self.hq
    }

    /// Coupling block `⟨P|H|Q⟩`.
    pub fn v(&self) -> &CMatrix {
        &self.v
    }

    /// Put the blocks back in sector order.
    pub fn reassemble(&self) -> CMatrix {
        let np = self.p_indices.len();
        let d = np + self.q_indices.len();
        let perm: Vec<usize> = self
            .p_indices
            .iter()
            .chain(&self.q_indices)
            .copied()
            .collect();
        let mut h = CMatrix::zeros(d, d);
        for (a, &ia) in perm.iter().enumerate() {
            for (b, &ib) in perm.iter().enumerate() {
                h[(ia, ib)] = match (a < np, b < np) {
                    (true, true) => self.hp[(a, b)],
                    (true, false) => self.v[(a, b - np)],
                    (false, true) => self.v[(b, a - np)].conj(),
                    (false, false) => self.hq[(a - np, b - np)],
                };
            }
        }
        h
    }
}

/// Partition `h` into bound (`P`) and unbound (`Q`) blocks.
pub fn split_blocks(h: &SectorOperator, basis: &FockBasis) -> Result<BlockSplit> {
    if h.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: h.dim(),
        });
    }
    if basis.particles() == 0 {
        return Err(Error::InvalidParameter(
            "the empty sector has no bound states".into(),
        ));
    }
    let p_indices = basis.bound_indices();
    let mut is_p = vec![false; basis.dim()];
    p_indices.iter().for_each(|&i| is_p[i] = true);
    let q_indices: Vec<usize> = (0..basis.dim()).filter(|&i| !is_p[i]).collect();
    let m = h.matrix();
    let pick = |rows: &[usize], cols: &[usize]| {
        CMatrix::from_fn(rows.len(), cols.len(), |a, b| m[(rows[a], cols[b])])
    };
    Ok(BlockSplit {
        hp: pick(&p_indices, &p_indices),
        hq: pick(&q_indices, &q_indices),
        v: pick(&p_indices, &q_indices),
        p_states: p_indices.iter().map(|&i| basis.state(i).clone()).collect(),
        q_states: q_indices.iter().map(|&i| basis.state(i).clone()).collect(),
        p_indices,
        q_indices,
    })
}

/// Truncated solution of `H_q W - W H_p = V†`.
#[derive(Debug, Clone)]
pub struct DysonSolution {
    w: CMatrix,
    order: usize,
    residual: f64,
}

impl DysonSolution {
    /// `(D-L) × L` matrix `W`.
    pub fn w(&self) -> &CMatrix {
        &self.w
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Spectral norm of `H_q W - W H_p - V†`.
    pub fn residual(&self) -> f64 {
        self.residual
    }
}

fn interaction_energies(states: &[FockState], params: &LatticeParams) -> Vec<f64> {
    let conv = params.convention();
    states
        .iter()
        .map(|s| {
            s.occupations()
                .iter()
                .zip(params.interactions())
                .map(|(&n, &u)| conv.energy(u, n))
                .sum()
        })
        .collect()
}

fn sylvester_residual(blocks: &BlockSplit, w: &CMatrix) -> f64 {
    if w.is_empty() {
        return 0.0;
    }
    let r = &blocks.hq * w - w * &blocks.hp - blocks.v.adjoint();
    r.singular_values().max()
}

/// Solve the Sylvester equation by the series
/// `W = Σ_{k≤order} (-1)^k G_l⁻¹ (G_s G_l⁻¹)^k vec(V†)`, where `G_l` is the diagonal
/// superoperator built from the on-site interaction energies and `G_s` carries the rest.
pub fn solve_sylvester_dyson(
    blocks: &BlockSplit,
    params: &LatticeParams,
    order: usize,
) -> Result<DysonSolution> {
    if params.sites() != blocks.p_indices.len() {
        return Err(Error::LengthMismatch {
            what: "lattice parameters vs bound states",
            expected: blocks.p_indices.len(),
            found: params.sites(),
        });
    }
    let hl_p = interaction_energies(&blocks.p_states, params);
    let hl_q = interaction_energies(&blocks.q_states, params);
    let (nq, np) = (hl_q.len(), hl_p.len());
    let gl = DMatrix::<f64>::from_fn(nq, np, |a, b| hl_q[a] - hl_p[b]);
    let scale = hl_p.iter().chain(&hl_q).fold(0.0f64, |m, x| m.max(x.abs()));
    for a in 0..nq {
        for b in 0..np {
            if gl[(a, b)].abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::SingularLargeBlock { row: a, col: b });
            }
        }
    }
    let mut hq_small = blocks.hq.clone();
    for (a, e) in hl_q.iter().enumerate() {
        hq_small[(a, a)] -= *e;
    }
    let mut hp_small = blocks.hp.clone();
    for (b, e) in hl_p.iter().enumerate() {
        hp_small[(b, b)] -= *e;
    }
    let divide = |m: &CMatrix| CMatrix::from_fn(nq, np, |a, b| m[(a, b)] / gl[(a, b)]);

    let mut z = blocks.v.adjoint();
    let mut acc = CMatrix::zeros(nq, np);
    for _ in 0..=order {
        acc += &z;
        let y = divide(&z);
        z = -(&hq_small * &y - &y * &hp_small);
    }
    let w = divide(&acc);
    let residual = sylvester_residual(blocks, &w);
    Ok(DysonSolution { w, order, residual })
}

/// Solve the Sylvester equation directly through its Kronecker form
/// `(1 ⊗ H_q - H_pᵗ ⊗ 1) vec(W) = vec(V†)`. Cubic in `(D-L)·L`; meant as a reference.
pub fn solve_sylvester_exact(blocks: &BlockSplit) -> Result<CMatrix> {
    let (nq, np) = (blocks.hq.nrows(), blocks.hp.nrows());
    if nq == 0 {
        return Ok(CMatrix::zeros(0, np));
    }
    let g = CMatrix::identity(np, np).kronecker(&blocks.hq)
        - blocks.hp.transpose().kronecker(&CMatrix::identity(nq, nq));
    let rhs = blocks.v.adjoint();
    let rhs = nalgebra::DVector::from_column_slice(rhs.as_slice());
    let sol = g
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularLargeBlock { row: 0, col: 0 })?;
    Ok(CMatrix::from_column_slice(nq, np, sol.as_slice()))
}

/// `(A + A†)/2` of `H_p - V W`, together with the norm of the discarded anti-Hermitian part.
pub fn effective_matrix(blocks: &BlockSplit, w: &CMatrix) -> (CMatrix, f64) {
    let raw = &blocks.hp - &blocks.v * w;
    let sym = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
    let asym = (&raw - &sym).norm();
    (sym, asym)
}

/// Second-order degenerate perturbation theory,
/// `H_p + Σ_m V|m⟩⟨m|V† / (E₀ - E_m)` with `E_m` the diagonal of `H_q`.
///
/// Only applies when `H_p = E₀·1`.
pub fn degenerate_pt_oracle(blocks: &BlockSplit) -> Result<CMatrix> {
    let np = blocks.hp.nrows();
    let e0 = blocks.hp[(0, 0)].re;
    let mut spread = 0.0f64;
    for a in 0..np {
        for b in 0..np {
            let target = if a == b { e0 } else { 0.0 };
            spread = spread.max((blocks.hp[(a, b)] - target).norm());
        }
    }
    if spread > 1e-12 * e0.abs().max(1.0) {
        return Err(Error::NonDegenerateBlock { spread });
    }
    let nq = blocks.hq.nrows();
    let mut scaled = blocks.v.clone();
    for m in 0..nq {
        let denom = e0 - blocks.hq[(m, m)].re;
        if denom.abs() < 1e-14 * e0.abs().max(1.0) {
            return Err(Error::SingularLargeBlock { row: m, col: 0 });
        }
        scaled.column_mut(m).scale_mut(1.0 / denom);
    }
    Ok(&blocks.hp + scaled * blocks.v.adjoint())
}

/// Real symmetric tridiagonal chain: `onsite` on the diagonal, `hopping` beside it.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChain {
    pub onsite: Vec<f64>,
    pub hopping: Vec<f64>,
}

impl EffectiveChain {
    pub fn new(onsite: Vec<f64>, hopping: Vec<f64>) -> Result<Self> {
        if onsite.is_empty() {
            return Err(Error::NoSites);
        }
        if hopping.len() + 1 != onsite.len() {
            return Err(Error::LengthMismatch {
                what: "effective hoppings",
                expected: onsite.len() - 1,
                found: hopping.len(),
            });
        }
        Ok(Self { onsite, hopping })
    }

    pub fn sites(&self) -> usize {
        self.onsite.len()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let l = self.sites();
        let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.onsite));
        for (j, &h) in self.hopping.iter().enumerate() {
            m[(j, j + 1)] = h;
            m[(j + 1, j)] = h;
        }
        debug_assert_eq!(m.nrows(), l);
        m
    }

    pub fn to_operator(&self) -> SectorOperator {
        SectorOperator::from_real(self.to_matrix()).expect("square by construction")
    }

    /// Onsite energy at the centre of the chain, taken as the bulk value.
    pub fn bulk_onsite(&self) -> f64 {
        self.onsite[(self.sites() - 1) / 2]
    }

    /// Shift every onsite energy so the bulk value is zero.
    pub fn subtract_bulk(&self) -> Self {
        let b = self.bulk_onsite();
        Self {
            onsite: self.onsite.iter().map(|x| x - b).collect(),
            hopping: self.hopping.clone(),
        }
    }

    /// Single-particle chain on `sites` sites with uniform hopping `j` and given end hoppings.
    pub fn single_particle(sites: usize, hopping: f64, edge_hopping: f64) -> Result<Self> {
        if sites == 0 {
            return Err(Error::NoSites);
        }
        let mut h = vec![hopping; sites - 1];
        if let Some(first) = h.first_mut() {
            *first = edge_hopping;
        }
        if let Some(last) = h.last_mut() {
            *last = edge_hopping;
        }
        Self::new(vec![0.0; sites], h)
    }
}

/// Tridiagonal reduction with bookkeeping on what was thrown away.
#[derive(Debug, Clone)]
pub struct EffectiveReduction {
    pub chain: EffectiveChain,
    /// Largest magnitude among dropped couplings beyond nearest neighbours.
    pub discarded_weight: f64,
    /// Frobenius norm of the anti-Hermitian part removed by symmetrisation.
    pub asymmetry: f64,
}

/// `H_eff = H_p - V W`, symmetrised and cut to nearest neighbours with the default threshold.
pub fn effective_hamiltonian(
    blocks: &BlockSplit,
    solution: &DysonSolution,
) -> Result<EffectiveReduction> {
    effective_hamiltonian_with(blocks, solution, DEFAULT_TRUNCATION)
}

/// As [`effective_hamiltonian`], failing with [`Error::RegimeBreakdown`] when a dropped
/// coupling reaches `rel_threshold · max|J_eff|`.
pub fn effective_hamiltonian_with(
    blocks: &BlockSplit,
    solution: &DysonSolution,
    rel_threshold: f64,
) -> Result<EffectiveReduction> {
    let (m, asymmetry) = effective_matrix(blocks, solution.w());
    tridiagonal_part(&m, asymmetry, rel_threshold)
}

fn tridiagonal_part(m: &CMatrix, asymmetry: f64, rel_threshold: f64) -> Result<EffectiveReduction> {
    let l = m.nrows();
    let onsite: Vec<f64> = (0..l).map(|j| m[(j, j)].re).collect();
    let hopping: Vec<f64> = (0..l.saturating_sub(1)).map(|j| m[(j, j + 1)].re).collect();
    let mut discarded = 0.0f64;
    for a in 0..l {
        discarded = discarded.max(m[(a, a)].im.abs());
        for b in a + 1..l {
            let x = m[(a, b)];
            if b == a + 1 {
                discarded = discarded.max(x.im.abs());
            } else {
                discarded = discarded.max(x.norm());
            }
        }
    }
    let jmax = hopping.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let threshold = rel_threshold * jmax;
    if discarded > threshold
        && discarded > 1e-12 * onsite.iter().fold(1.0f64, |a, x| a.max(x.abs()))
    {
        return Err(Error::RegimeBreakdown {
            weight: discarded,
            threshold,
        });
    }
    Ok(EffectiveReduction {
        chain: EffectiveChain::new(onsite, hopping)?,
        discarded_weight: discarded,
        asymmetry,
    })
}

/// Build, split, solve and reduce in one go at Dyson order `order` (use `M - 1` by default).
pub fn reduce(
    basis: &FockBasis,
    params: &LatticeParams,
    order: usize,
) -> Result<EffectiveReduction> {
    let h = crate::lattice::build_hamiltonian(basis, params)?;
    let blocks = split_blocks(&h, basis)?;
    let sol = solve_sylvester_dyson(&blocks, params, order)?;
    effective_hamiltonian(&blocks, &sol)
}

/// Default series order, `M - 1`, the fewest terms that connect neighbouring bound states.
pub fn default_order(particles: usize) -> usize {
    particles.saturating_sub(1)
}

/// Analytic strong-coupling chain for two or three particles, bond by bond:
///
/// * two particles: `J_eff = J_b²/2U`, `B_j = U - 2μ_j + Σ_adj J_b²/2U`
/// * three particles: `J_eff = 3J_b³/16U²`, `B_j = 3U - 3μ_j + (3/8U) Σ_adj J_b²`
///
/// Covers uniform and minimally engineered chains. Hoppings are returned as positive
/// magnitudes; the series gives them the sign `(-1)^M`, which a gauge change
/// `|j⟩ → (-1)^j |j⟩` removes without touching any probability.
pub fn closed_form_effective(particles: usize, params: &LatticeParams) -> Result<EffectiveChain> {
    if !matches!(particles, 2 | 3) {
        return Err(Error::UnsupportedParticleNumber { particles });
    }
    let u = params.uniform_interaction().ok_or_else(|| {
        Error::UnsupportedScheme("closed forms assume a uniform interaction".into())
    })?;
    if u <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "interaction U must be positive, got {u}"
        )));
    }
    let m = particles as f64;
    let bound_energy = params.convention().energy(u, particles);
    let shift = |j: f64| j * j * m / (4.0 * u * (m - 1.0));
    let hop = |j: f64| {
        if particles == 2 {
            j * j / (2.0 * u)
        } else {
            3.0 * j.powi(3) / (16.0 * u * u)
        }
    };
    let l = params.sites();
    let hoppings = params.hoppings();
    let onsite = (0..l)
        .map(|j| {
            let left = if j > 0 { shift(hoppings[j - 1]) } else { 0.0 };
            let right = if j + 1 < l { shift(hoppings[j]) } else { 0.0 };
            bound_energy - m * params.potentials()[j] + left + right
        })
        .collect();
    EffectiveChain::new(onsite, hoppings.iter().map(|&j| hop(j)).collect())
}

/// Closed-form three-particle minimally engineered matrix, in units of
/// `2J_eff = 3J³/8U²`: diagonal `8(U/J)³ + 2U/J + 16(J/U)²`, end hoppings `J₀³/2J³`,
/// bulk hoppings `1/2`, and `+β̃` on site `L/2 + 1`.
pub fn three_particle_minimal_matrix(
    sites: usize,
    hopping: f64,
    edge_hopping: f64,
    interaction: f64,
    barrier: f64,
) -> Result<DMatrix<f64>> {
    if sites < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least two sites, got {sites}"
        )));
    }
    let r = interaction / hopping;
    let diag = 8.0 * r.powi(3) + 2.0 * r + 16.0 / (r * r);
    let end = edge_hopping.powi(3) / (2.0 * hopping.powi(3));
    let mut chain = EffectiveChain::single_particle(sites, 0.5, end)?;
    chain.onsite.iter_mut().for_each(|b| *b = diag);
    chain.onsite[sites / 2] += barrier;
    Ok(chain.to_matrix())
}
