//! Dephasing master equation
//!
//! ```text
//! dρ/dt = -i[H, ρ] + Γ Σ_j (n_j ρ n_j - ½ n_j² ρ - ½ ρ n_j²)
//! ```
//!
//! solved either by exponentiating the vectorised Liouvillian (small sectors) or by an
//! adaptive Dormand-Prince integrator that applies the right-hand side to `ρ` directly.

use rayon::prelude::*;

use crate::dynamics::QuantumState;
use crate::fock::{number_operator, FockBasis, SectorOperator};
use crate::{CMatrix, CVector, Complex64, Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Largest sector dimension for which a dense Liouvillian may be built.
pub const LIOUVILLIAN_MAX_DIM: usize = 60;

/// Density matrix over a sector basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: CMatrix,
}

impl DensityMatrix {
    /// Checks Hermiticity (1e-10), unit trace (1e-9) and positivity (-1e-8).
    pub fn new(rho: CMatrix) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::InvalidDensityMatrix(format!(
                "{}x{} is not square",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let herm = (&rho - rho.adjoint()).camax();
        if herm > 1e-10 {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace {tr} differs from 1"
            )));
        }
        let min = rho.clone().symmetric_eigenvalues().min();
        if min < -1e-8 {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(Self { rho })
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn pure(state: &QuantumState) -> Self {
        let a = state.amplitudes();
        Self {
            rho: a * a.adjoint(),
        }
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    /// Diagonal element `ρ_ii`.
    pub fn population(&self, index: usize) -> f64 {
        self.rho[(index, index)].re
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).camax()
    }

    /// `½ Σ |λ_k(ρ - σ)|`.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        let d = &self.rho - &other.rho;
        let d = (&d + d.adjoint()) * Complex64::new(0.5, 0.0);
        0.5 * d
            .symmetric_eigenvalues()
            .iter()
            .map(|x| x.abs())
            .sum::<f64>()
    }
}

/// Column-major flattening, `v[k·D + j] = ρ[j, k]`.
pub fn vectorize(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vectorize`]; the length must be a perfect square.
pub fn devectorize(v: &[Complex64]) -> Result<CMatrix> {
    let n = v.len();
    let d = (n as f64).sqrt().round() as usize;
    if d.checked_mul(d) != Some(n) {
        return Err(Error::NonSquareLength { len: n });
    }
    Ok(CMatrix::from_column_slice(d, d, v))
}

fn number_operators(basis: &FockBasis) -> Vec<SectorOperator> {
    (1..=basis.sites())
        .map(|j| number_operator(basis, j).expect("site in range"))
        .collect()
}

fn check_dims(h: &SectorOperator, basis: &FockBasis) -> Result<()> {
    if h.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: h.dim(),
        });
    }
    Ok(())
}

/// Dense superoperator acting on `vec(ρ)`.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    matrix: CMatrix,
}

impl Liouvillian {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        devectorize((&self.matrix * vectorize(rho)).as_slice())
    }

    /// `exp(𝓛 t) vec(ρ0)`.
    pub fn evolve(&self, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        if t == 0.0 {
            return Ok(rho0.clone());
        }
        let prop = (&self.matrix * Complex64::new(t, 0.0)).exp();
        let rho = devectorize((prop * vectorize(&rho0.rho)).as_slice())?;
        Ok(DensityMatrix { rho })
    }
}

/// `𝓛 = -i(1 ⊗ H - Hᵗ ⊗ 1) + Γ Σ_j [n_jᵗ ⊗ n_j - ½(1 ⊗ n_j²) - ½((n_j²)ᵗ ⊗ 1)]`.
pub fn build_liouvillian(h: &SectorOperator, gamma: f64, basis: &FockBasis) -> Result<Liouvillian> {
    check_dims(h, basis)?;
    let d = h.dim();
    if d > LIOUVILLIAN_MAX_DIM {
        return Err(Error::LiouvillianBudget {
            dim: d,
            max: LIOUVILLIAN_MAX_DIM,
        });
    }
    let id = CMatrix::identity(d, d);
    let hm = h.matrix();
    let mut l = (id.kronecker(hm) - hm.transpose().kronecker(&id)) * (-I);
    if gamma != 0.0 {
        let g = Complex64::new(gamma, 0.0);
        let half = Complex64::new(0.5, 0.0);
        for n in number_operators(basis) {
            let n = n.matrix();
            let n2 = n * n;
            l += (n.transpose().kronecker(n)
                - id.kronecker(&n2) * half
                - n2.transpose().kronecker(&id) * half)
                * g;
        }
    }
    Ok(Liouvillian { matrix: l })
}

/// Right-hand side assembled from dense operator products, term by term.
pub fn rhs_reference(
    h: &SectorOperator,
    gamma: f64,
    basis: &FockBasis,
    rho: &CMatrix,
) -> Result<CMatrix> {
    check_dims(h, basis)?;
    let hm = h.matrix();
    let mut out = (hm * rho - rho * hm) * (-I);
    let half = Complex64::new(0.5, 0.0);
    for n in number_operators(basis) {
        let n = n.matrix();
        let n2 = n * n;
        out += (n * rho * n - &n2 * rho * half - rho * &n2 * half) * Complex64::new(gamma, 0.0);
    }
    Ok(out)
}

/// How [`evolve_density`] chooses and tunes its integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionOptions {
    /// Sectors up to this dimension exponentiate the dense Liouvillian.
    pub dense_max_dim: usize,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for EvolutionOptions {
    fn default() -> Self {
        Self {
            dense_max_dim: 20,
            rtol: 1e-8,
            atol: 1e-12,
        }
    }
}

impl EvolutionOptions {
    /// Always use the matrix-free integrator.
    pub fn matrix_free() -> Self {
        Self {
            dense_max_dim: 0,
            ..Self::default()
        }
    }
}

/// Matrix-free form of the master equation: sparse `H` and the dephasing weights
/// `w_ab = ½ Σ_j (n_j(a) - n_j(b))²`, so the dissipator is `-Γ w_ab ρ_ab`.
#[derive(Debug, Clone)]
pub struct DephasingProblem {
    dim: usize,
    hamiltonian: Vec<(usize, usize, Complex64)>,
    decay: Vec<f64>,
}

impl DephasingProblem {
    pub fn new(h: &SectorOperator, gamma: f64, basis: &FockBasis) -> Result<Self> {
        check_dims(h, basis)?;
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "dephasing rate must be non-negative, got {gamma}"
            )));
        }
        let d = h.dim();
        let hm = h.matrix();
        let mut hamiltonian = Vec::new();
        for k in 0..d {
            for i in 0..d {
                let x = hm[(i, k)];
                if x != Complex64::new(0.0, 0.0) {
                    hamiltonian.push((i, k, x));
                }
            }
        }
        let states = basis.states();
        let mut decay = vec![0.0; d * d];
        for b in 0..d {
            for a in 0..d {
                let s: f64 = states[a]
                    .occupations()
                    .iter()
                    .zip(states[b].occupations())
                    .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
                    .sum();
                decay[b * d + a] = 0.5 * gamma * s;
            }
        }
        Ok(Self {
            dim: d,
            hamiltonian,
            decay,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `dρ/dt` written into `out`.
    pub fn rhs_into(&self, rho: &CMatrix, out: &mut CMatrix) {
        let d = self.dim;
        let r = rho.as_slice();
        let o = out.as_mut_slice();
        for (x, (&w, &v)) in o.iter_mut().zip(self.decay.iter().zip(r)) {
            *x = -v * w;
        }
        // -i(Hρ - ρH), column-major: element (a, b) lives at b·d + a
        for &(i, k, h) in &self.hamiltonian {
            let mh = -I * h;
            for b in 0..d {
                o[b * d + i] += mh * r[b * d + k];
            }
            let ph = I * h;
            for a in 0..d {
                o[k * d + a] += ph * r[i * d + a];
            }
        }
    }

    pub fn rhs(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        self.rhs_into(rho, &mut out);
        out
    }

    /// Dormand-Prince 5(4) with mixed absolute/relative error control.
    pub fn integrate(&self, rho0: &CMatrix, t: f64, rtol: f64, atol: f64) -> Result<CMatrix> {
        dormand_prince(self, rho0, t, rtol, atol)
    }
}

// Dormand-Prince tableau; the right-hand side is autonomous so the nodes are not needed
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dormand_prince(
    p: &DephasingProblem,
    y0: &CMatrix,
    t_end: f64,
    rtol: f64,
    atol: f64,
) -> Result<CMatrix> {
    let d = p.dim;
    if t_end == 0.0 {
        return Ok(y0.clone());
    }
    if !(t_end > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "evolution time must be non-negative, got {t_end}"
        )));
    }
    let mut y = y0.clone();
    let mut k: Vec<CMatrix> = (0..7).map(|_| CMatrix::zeros(d, d)).collect();
    let mut stage = CMatrix::zeros(d, d);
    p.rhs_into(&y, &mut k[0]);
    let scale0 = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let slope0 = k[0].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut h = if slope0 > 0.0 {
        (0.01 * scale0.max(atol) / slope0).min(t_end)
    } else {
        t_end
    };
    let mut t = 0.0;
    let mut ynew = CMatrix::zeros(d, d);
    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        for s in 1..7 {
            stage.copy_from(&y);
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    let ha = h * a;
                    for (x, &y) in stage.as_mut_slice().iter_mut().zip(kj.as_slice()) {
                        *x += y * ha;
                    }
                }
            }
            p.rhs_into(&stage, &mut k[s]);
        }
        // 5th-order solution equals the last stage argument (FSAL)
        ynew.copy_from(&stage);
        let mut err = 0.0f64;
        for idx in 0..d * d {
            let mut e = Complex64::new(0.0, 0.0);
            for s in 0..7 {
                let w = B5[s] - B4[s];
                if w != 0.0 {
                    e += k[s].as_slice()[idx] * w;
                }
            }
            let sc = atol + rtol * y.as_slice()[idx].norm().max(ynew.as_slice()[idx].norm());
            err = err.max((e * h).norm() / sc);
        }
        if err <= 1.0 {
            t += h;
            std::mem::swap(&mut y, &mut ynew);
            k.swap(0, 6);
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < 1e-14 * t_end.max(1.0) && t < t_end {
            return Err(Error::StepSizeUnderflow { t, step: h });
        }
    }
    Ok(y)
}

/// Solve the master equation from `rho0` to time `t`.
pub fn evolve_density(
    h: &SectorOperator,
    gamma: f64,
    basis: &FockBasis,
    rho0: &DensityMatrix,
    t: f64,
    options: EvolutionOptions,
) -> Result<DensityMatrix> {
    check_dims(h, basis)?;
    if rho0.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: rho0.dim(),
        });
    }
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    if h.dim() <= options.dense_max_dim.min(LIOUVILLIAN_MAX_DIM) {
        return build_liouvillian(h, gamma, basis)?.evolve(rho0, t);
    }
    let problem = DephasingProblem::new(h, gamma, basis)?;
    let rho = problem.integrate(rho0.matrix(), t, options.rtol, options.atol)?;
    Ok(DensityMatrix { rho })
}

/// One entry of a dephasing sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingPoint {
    pub gamma: f64,
    /// Target population at the fixed time.
    pub population: f64,
    /// `|P(Γ) - P(0)| / P(0)`.
    pub relative_variation: f64,
}

/// Population of the `target` basis state at the fixed time `t` for each rate in
/// `gammas`, compared against the `Γ = 0` value. Rates are evaluated in parallel and
/// returned in input order.
pub fn dephasing_sweep(
    h: &SectorOperator,
    basis: &FockBasis,
    rho0: &DensityMatrix,
    target: usize,
    t: f64,
    gammas: &[f64],
    options: EvolutionOptions,
) -> Result<Vec<DephasingPoint>> {
    let run = |g: f64| -> Result<f64> {
        Ok(evolve_density(h, g, basis, rho0, t, options)?.population(target))
    };
    let baseline = run(0.0)?;
    gammas
        .par_iter()
        .map(|&g| {
            let p = if g == 0.0 { baseline } else { run(g)? };
            Ok(DephasingPoint {
                gamma: g,
                population: p,
                relative_variation: (p - baseline).abs() / baseline,
            })
        })
        .collect()
}
