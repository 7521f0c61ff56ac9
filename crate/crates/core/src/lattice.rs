//! Site-dependent Bose-Hubbard chains and the impurity schemes layered on them.
//!
//! ```text
//! H = -Σ_j (J_j/2) [a_j a†_{j+1} + h.c.] + Σ_j (U_j/2) n_j (n_j - 1) - Σ_j μ_j n_j
//! ```
//!
//! Local fields follow the convention `μ_j = -β δ_{j,site}`, so a positive `β`
//! raises the energy of particles sitting on `site`.

use nalgebra::DMatrix;

use crate::fock::{FockBasis, SectorOperator};
use crate::{Error, Result};

/// Which on-site interaction polynomial to use.
///
/// For uniform `U` the two differ by `U·M`, a constant inside a fixed-`M` sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OnsiteConvention {
    /// `U/2 · n(n-1)`: zero energy for singly occupied sites.
    #[default]
    PairCount,
    /// `U/2 · n(n+1)`.
    Shifted,
}

impl OnsiteConvention {
    pub(crate) fn energy(self, u: f64, n: usize) -> f64 {
        let n = n as f64;
        match self {
            OnsiteConvention::PairCount => 0.5 * u * n * (n - 1.0),
            OnsiteConvention::Shifted => 0.5 * u * n * (n + 1.0),
        }
    }
}

/// Per-bond hoppings and per-site interactions and potentials.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeParams {
    hoppings: Vec<f64>,
    interactions: Vec<f64>,
    potentials: Vec<f64>,
    convention: OnsiteConvention,
    // bonds already replaced by a scheme, to catch conflicting replacements
    replaced: Vec<Option<f64>>,
}

impl LatticeParams {
    pub fn new(hoppings: Vec<f64>, interactions: Vec<f64>, potentials: Vec<f64>) -> Result<Self> {
        let sites = interactions.len();
        if sites == 0 {
            return Err(Error::NoSites);
        }
        if potentials.len() != sites {
            return Err(Error::LengthMismatch {
                what: "potentials",
                expected: sites,
                found: potentials.len(),
            });
        }
        if hoppings.len() != sites - 1 {
            return Err(Error::LengthMismatch {
                what: "hoppings",
                expected: sites - 1,
                found: hoppings.len(),
            });
        }
        let all = hoppings.iter().chain(&interactions).chain(&potentials);
        if all.into_iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "lattice parameters must be finite".into(),
            ));
        }
        Ok(Self {
            replaced: vec![None; hoppings.len()],
            hoppings,
            interactions,
            potentials,
            convention: OnsiteConvention::default(),
        })
    }

    /// `J_j = hopping`, `U_j = interaction`, `μ_j = 0`.
    pub fn uniform(sites: usize, hopping: f64, interaction: f64) -> Result<Self> {
        if sites == 0 {
            return Err(Error::NoSites);
        }
        Self::new(
            vec![hopping; sites - 1],
            vec![interaction; sites],
            vec![0.0; sites],
        )
    }

    pub fn with_convention(mut self, convention: OnsiteConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn sites(&self) -> usize {
        self.interactions.len()
    }

    pub fn hoppings(&self) -> &[f64] {
        &self.hoppings
    }

    pub fn interactions(&self) -> &[f64] {
        &self.interactions
    }

    pub fn potentials(&self) -> &[f64] {
        &self.potentials
    }

    pub fn convention(&self) -> OnsiteConvention {
        self.convention
    }

    /// The common interaction if every `U_j` agrees.
    pub fn uniform_interaction(&self) -> Option<f64> {
        let u = self.interactions[0];
        self.interactions.iter().all(|&x| x == u).then_some(u)
    }

    /// Copy with every interaction replaced (used by interaction quenches).
    pub fn with_interaction(&self, interaction: f64) -> Self {
        let mut p = self.clone();
        p.interactions.iter_mut().for_each(|u| *u = interaction);
        p
    }

    /// True when the parameters read the same from either end.
    pub fn is_palindromic(&self) -> bool {
        fn pal(v: &[f64]) -> bool {
            v.iter().eq(v.iter().rev())
        }
        pal(&self.hoppings) && pal(&self.interactions) && pal(&self.potentials)
    }

    fn add_field(&mut self, site: usize, beta: f64) -> Result<()> {
        let sites = self.sites();
        if site == 0 || site > sites {
            return Err(Error::SiteOutOfRange { site, sites });
        }
        self.potentials[site - 1] -= beta;
        Ok(())
    }

    fn replace_bond(&mut self, bond: usize, hopping: f64) -> Result<()> {
        let bonds = self.hoppings.len();
        if bond == 0 || bond > bonds {
            return Err(Error::BondOutOfRange { bond, bonds });
        }
        match self.replaced[bond - 1] {
            Some(prev) if prev != hopping => Err(Error::ConflictingBond {
                bond,
                first: prev,
                second: hopping,
            }),
            _ => {
                self.replaced[bond - 1] = Some(hopping);
                self.hoppings[bond - 1] = hopping;
                Ok(())
            }
        }
    }
}

/// Assemble the sector Hamiltonian.
pub fn build_hamiltonian(basis: &FockBasis, params: &LatticeParams) -> Result<SectorOperator> {
    if params.sites() != basis.sites() {
        return Err(Error::LengthMismatch {
            what: "lattice parameters vs basis sites",
            expected: basis.sites(),
            found: params.sites(),
        });
    }
    let n = basis.dim();
    let mut h = DMatrix::<f64>::zeros(n, n);
    for (i, state) in basis.states().iter().enumerate() {
        let occ = state.occupations();
        h[(i, i)] = occ
            .iter()
            .enumerate()
            .map(|(j, &nj)| {
                params.convention.energy(params.interactions[j], nj)
                    - params.potentials[j] * nj as f64
            })
            .sum();
        for (b, &hop) in params.hoppings.iter().enumerate() {
            if occ[b] == 0 || hop == 0.0 {
                continue;
            }
            let mut t = occ.to_vec();
            t[b] -= 1;
            t[b + 1] += 1;
            let k = basis
                .index_of(&crate::fock::FockState::new(t))
                .expect("hop stays in sector");
            let amp = -0.5 * hop * ((occ[b] * (occ[b + 1] + 1)) as f64).sqrt();
            h[(k, i)] += amp;
            h[(i, k)] += amp;
        }
    }
    SectorOperator::from_real(h)
}

fn check_closed_form(particles: usize) -> Result<()> {
    match particles {
        2 | 3 => Ok(()),
        _ => Err(Error::UnsupportedParticleNumber { particles }),
    }
}

/// Edge field `β′` that levels the boundary and bulk effective energies of a uniform chain:
/// `J²/4U` for two particles, `J²/8U` for three.
pub fn edge_unlock_field(particles: usize, hopping: f64, interaction: f64) -> Result<f64> {
    check_closed_form(particles)?;
    positive_interaction(interaction)?;
    let j2 = hopping * hopping;
    Ok(match particles {
        2 => j2 / (4.0 * interaction),
        _ => j2 / (8.0 * interaction),
    })
}

/// Nominal compensating fields `(β₁, β₂)` for minimal engineering.
///
/// Two particles: `β₁ = (J₀² - 2J²)/2U`, `β₂ = (J₀² - J²)/2U`.
/// Three particles: `β₁ = (2J² - J₀²)/8U`, `β₂ = (J² - J₀²)/8U`.
///
/// The two-particle pair has the opposite sign and twice the magnitude of what levels
/// the effective energies; see [`balanced_minimal_engineering_fields`].
pub fn minimal_engineering_fields(
    particles: usize,
    hopping: f64,
    edge_hopping: f64,
    interaction: f64,
) -> Result<(f64, f64)> {
    check_closed_form(particles)?;
    positive_interaction(interaction)?;
    let (j2, j02) = (hopping * hopping, edge_hopping * edge_hopping);
    Ok(match particles {
        2 => (
            (j02 - 2.0 * j2) / (2.0 * interaction),
            (j02 - j2) / (2.0 * interaction),
        ),
        _ => (
            (2.0 * j2 - j02) / (8.0 * interaction),
            (j2 - j02) / (8.0 * interaction),
        ),
    })
}

/// Fields that make the second-order effective energies of a minimally engineered chain
/// flat: `β₁ = (2J² - J₀²)/(4(M-1)U)`, `β₂ = (J² - J₀²)/(4(M-1)U)`.
///
/// Reduces to [`edge_unlock_field`] at `J₀ = J` and coincides with the nominal
/// three-particle pair.
pub fn balanced_minimal_engineering_fields(
    particles: usize,
    hopping: f64,
    edge_hopping: f64,
    interaction: f64,
) -> Result<(f64, f64)> {
    check_closed_form(particles)?;
    positive_interaction(interaction)?;
    let (j2, j02) = (hopping * hopping, edge_hopping * edge_hopping);
    let denom = 4.0 * (particles as f64 - 1.0) * interaction;
    Ok(((2.0 * j2 - j02) / denom, (j2 - j02) / denom))
}

/// Mid-chain barrier giving a balanced split for long chains:
/// `J²/2U` for two particles, `J³/8U²` for three.
pub fn splitting_field_asymptotic(particles: usize, hopping: f64, interaction: f64) -> Result<f64> {
    check_closed_form(particles)?;
    positive_interaction(interaction)?;
    Ok(match particles {
        2 => hopping * hopping / (2.0 * interaction),
        _ => hopping.powi(3) / (8.0 * interaction * interaction),
    })
}

/// Finite-size prefactor of the balanced splitting field for `L = 5`,
/// `β = α J^M / U^(M-1)`, as reported for the two- and three-particle fits.
pub fn splitting_prefactor_l5(particles: usize) -> Result<f64> {
    check_closed_form(particles)?;
    Ok(if particles == 2 { 0.395 } else { 0.099 })
}

/// Couplings of the even-chain splitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvenChainFields {
    pub j_mid: f64,
    pub beta1: f64,
    pub beta2: f64,
}

/// Nominal even-chain splitter: `J_{L/2} = J(√2-1)^{1/2}`, `β₁ = J/4U`,
/// `β₂ = J(2-√2)/4U`. The fields are linear in `J`, unlike every other field here.
pub fn even_chain_scheme(hopping: f64, interaction: f64) -> Result<EvenChainFields> {
    positive_interaction(interaction)?;
    Ok(EvenChainFields {
        j_mid: hopping * (2f64.sqrt() - 1.0).sqrt(),
        beta1: hopping / (4.0 * interaction),
        beta2: hopping * (2.0 - 2f64.sqrt()) / (4.0 * interaction),
    })
}

/// Even-chain splitter with fields quadratic in `J` (`β₁ = J²/4U`, `β₂ = J²(2-√2)/4U`),
/// which is what levelling the effective energies of a two-particle chain requires.
pub fn even_chain_scheme_quadratic(hopping: f64, interaction: f64) -> Result<EvenChainFields> {
    positive_interaction(interaction)?;
    let j2 = hopping * hopping;
    Ok(EvenChainFields {
        j_mid: hopping * (2f64.sqrt() - 1.0).sqrt(),
        beta1: j2 / (4.0 * interaction),
        beta2: j2 * (2.0 - 2f64.sqrt()) / (4.0 * interaction),
    })
}

fn positive_interaction(u: f64) -> Result<()> {
    if u > 0.0 && u.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "interaction U must be positive and finite, got {u}"
        )))
    }
}

/// Impurity and coupling-engineering schemes. Site and bond numbers are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    Uniform,
    /// `μ_1 = μ_L = -β′`.
    EdgeUnlocked {
        beta_prime: f64,
    },
    /// `J_1 = J_{L-1} = J₀`, `μ_{1,L} -= β₁`, `μ_{2,L-1} -= β₂`.
    MinimalEngineered {
        edge_hopping: f64,
        beta1: f64,
        beta2: f64,
    },
    /// `μ_{L/2+1} -= β`.
    SplitImpurity {
        beta: f64,
    },
    /// `J_{L/2} = J_mid`, `μ_{1,L} -= β₁`, and `β₂` on the two sites sharing the middle bond.
    EvenChain {
        j_mid: f64,
        beta1: f64,
        beta2: f64,
    },
    /// `μ_site -= β`.
    SiteField {
        site: usize,
        beta: f64,
    },
    /// `J_bond = hopping`.
    BondHopping {
        bond: usize,
        hopping: f64,
    },
    Composite(Vec<Scheme>),
}

impl Scheme {
    /// 1-based site of the splitting impurity, `L/2 + 1`.
    pub fn split_site(sites: usize) -> usize {
        sites / 2 + 1
    }
}

/// Apply a scheme to a copy of `params`. Fields add to `μ_j`; bond replacements
/// overwrite `J_j` and conflict if the same bond is later set to another value.
pub fn apply_scheme(params: &LatticeParams, scheme: &Scheme) -> Result<LatticeParams> {
    let mut out = params.clone();
    apply_in_place(&mut out, scheme)?;
    Ok(out)
}

fn apply_in_place(p: &mut LatticeParams, scheme: &Scheme) -> Result<()> {
    let l = p.sites();
    match *scheme {
        Scheme::Uniform => {}
        Scheme::EdgeUnlocked { beta_prime } => {
            p.add_field(1, beta_prime)?;
            if l > 1 {
                p.add_field(l, beta_prime)?;
            }
        }
        Scheme::MinimalEngineered {
            edge_hopping,
            beta1,
            beta2,
        } => {
            if l < 3 {
                return Err(Error::UnsupportedScheme(format!(
                    "minimal engineering needs at least 3 sites, got {l}"
                )));
            }
            p.replace_bond(1, edge_hopping)?;
            p.replace_bond(l - 1, edge_hopping)?;
            p.add_field(1, beta1)?;
            p.add_field(l, beta1)?;
            p.add_field(2, beta2)?;
            p.add_field(l - 1, beta2)?;
        }
        Scheme::SplitImpurity { beta } => p.add_field(Scheme::split_site(l), beta)?,
        Scheme::EvenChain {
            j_mid,
            beta1,
            beta2,
        } => {
            if !l.is_multiple_of(2) || l < 4 {
                return Err(Error::UnsupportedScheme(format!(
                    "even-chain splitter needs an even chain of at least 4 sites, got {l}"
                )));
            }
            p.replace_bond(l / 2, j_mid)?;
            p.add_field(1, beta1)?;
            p.add_field(l, beta1)?;
            p.add_field(l / 2, beta2)?;
            p.add_field(l / 2 + 1, beta2)?;
        }
        Scheme::SiteField { site, beta } => p.add_field(site, beta)?,
        Scheme::BondHopping { bond, hopping } => p.replace_bond(bond, hopping)?,
        Scheme::Composite(ref parts) => {
            for s in parts {
                apply_in_place(p, s)?;
            }
        }
    }
    Ok(())
}
