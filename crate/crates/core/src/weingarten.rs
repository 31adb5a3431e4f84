//! Exact twirls through the commutant: `E_G[U^⊗t X U†^⊗t] = Σ_ν c_ν P_ν`
//! with `c = W⁺ b`, `W_{μν} = Tr[P_μ P_ν]` and `b_μ = Tr[P_μ X]`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::brauer::{enumerate_pairings, permutations, Pairing};
use crate::error::{Error, Result};
use crate::operator::{conjugate_by_tensor_power, Operator};
use crate::reps;
use crate::sampling::{EnsembleSpec, GroupFamily, HaarSampler};
use crate::{budget, C64};

/// Singular values below `PINV_RTOL · σ_max` are treated as zero.
pub const PINV_RTOL: f64 = 1e-10;

/// Monte-Carlo samples per random stream. Chunks are reduced in order, so
/// results do not depend on how many threads run them.
pub const MC_CHUNK: usize = 1024;

/// Commutant of `{U^⊗t : U ∈ G}` as a list of diagram operators together
/// with their Gram matrix and its pseudo-inverse.
#[derive(Clone, Debug)]
pub struct CommutantBasis {
    family: GroupFamily,
    t: usize,
    d: usize,
    diagrams: Vec<Pairing>,
    labels: Vec<String>,
    operators: Vec<Operator>,
    gram: DMatrix<f64>,
    gram_pinv: DMatrix<f64>,
    rank: usize,
}

/// Expansion of a twirl in a [`CommutantBasis`].
#[derive(Clone, Debug)]
pub struct TwirlResult {
    /// `c = W⁺ b`, one entry per basis element.
    pub coefficients: Vec<C64>,
    /// Overlaps `b_μ = Tr[P_μ X]`.
    pub overlaps: Vec<C64>,
    pub basis_labels: Vec<String>,
    pub trace_in: C64,
    pub trace_out: C64,
    /// `Σ_ν c_ν P_ν`.
    pub operator: Operator,
}

#[derive(Clone, Debug, Serialize)]
pub struct PinvResiduals {
    /// `‖W W⁺ W − W‖_F`
    pub gram: f64,
    /// `‖W⁺ W W⁺ − W⁺‖_F`
    pub pinv: f64,
}

impl CommutantBasis {
    /// Permutation operators for `U(d)` and all Brauer operators `F_d` for
    /// `SP(d/2)`. For `SO(d)` the unsigned Brauer operators (`{I}` or
    /// `{I, SWAP, P_Φ}`), plus the Levi-Civita operator when `2t = d`: at
    /// `d = 4, t = 2` it is invariant under `SO(4)` but not under `O(4)`.
    pub fn build(family: GroupFamily, t: usize, d: usize) -> Result<Self> {
        budget::tensor_dim(d, t)?;
        let diagrams: Vec<Pairing> = match family {
            GroupFamily::Unitary => permutations(t)
                .iter()
                .map(|p| Pairing::from_permutation(p))
                .collect::<Result<_>>()?,
            GroupFamily::Symplectic => {
                if !d.is_multiple_of(2) {
                    return Err(Error::Parity(d));
                }
                enumerate_pairings(t)?
            }
            GroupFamily::Orthogonal => {
                if t > 2 || d < 3 {
                    return Err(Error::Capability(format!(
                        "orthogonal commutant is only available for t <= 2 and d >= 3, got t={t}, d={d}"
                    )));
                }
                enumerate_pairings(t)?
            }
        };
        let operators = diagrams
            .iter()
            .map(|sigma| match family {
                GroupFamily::Unitary => reps::perm_rep(&sigma.to_permutation().expect("permutation"), d),
                GroupFamily::Symplectic => reps::brauer_rep(sigma, d),
                GroupFamily::Orthogonal => reps::orthogonal_brauer_rep(sigma, d),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut labels: Vec<String> = diagrams.iter().map(|p| p.to_string()).collect();
        let mut operators = operators;
        if family == GroupFamily::Orthogonal && 2 * t == d {
            operators.push(reps::levi_civita_rep(d)?);
            labels.push("eps".into());
        }
        Self::from_operators(family, t, d, diagrams, labels, operators)
    }

    fn from_operators(
        family: GroupFamily,
        t: usize,
        d: usize,
        diagrams: Vec<Pairing>,
        labels: Vec<String>,
        operators: Vec<Operator>,
    ) -> Result<Self> {
        let n = operators.len();
        let mut gram = DMatrix::<f64>::zeros(n, n);
        for mu in 0..n {
            for nu in mu..n {
                // diagram operators are real, so their overlaps are too
                let v = operators[mu].trace_product(&operators[nu])?.re;
                gram[(mu, nu)] = v;
                gram[(nu, mu)] = v;
            }
        }
        let (gram_pinv, rank) = pseudo_inverse(&gram);
        Ok(Self {
            family,
            t,
            d,
            diagrams,
            labels,
            operators,
            gram,
            gram_pinv,
            rank,
        })
    }

    pub fn family(&self) -> GroupFamily {
        self.family
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn diagrams(&self) -> &[Pairing] {
        &self.diagrams
    }

    pub fn operators(&self) -> &[Operator] {
        &self.operators
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn gram_pinv(&self) -> &DMatrix<f64> {
        &self.gram_pinv
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Number of leading basis elements that are permutations.
    pub fn permutation_count(&self) -> usize {
        self.diagrams.iter().take_while(|p| p.is_permutation()).count()
    }

    /// Diagram text for each element; `eps` for the Levi-Civita operator.
    pub fn labels(&self) -> Vec<String> {
        self.labels.clone()
    }

    pub fn pinv_residuals(&self) -> PinvResiduals {
        let w = &self.gram;
        let p = &self.gram_pinv;
        PinvResiduals {
            gram: (w * p * w - w).norm(),
            pinv: (p * w * p - p).norm(),
        }
    }

    /// `b_μ = Tr[P_μ X]`.
    pub fn overlaps(&self, x: &Operator) -> Result<Vec<C64>> {
        self.check_operand(x)?;
        self.operators.iter().map(|p| p.trace_product(x)).collect()
    }

    pub fn coefficients(&self, overlaps: &[C64]) -> Vec<C64> {
        let n = self.len();
        (0..n)
            .map(|mu| (0..n).map(|nu| overlaps[nu] * self.gram_pinv[(mu, nu)]).sum())
            .collect()
    }

    /// `Σ_ν c_ν P_ν`.
    pub fn combine(&self, coefficients: &[C64]) -> Result<Operator> {
        if coefficients.len() != self.len() {
            return Err(Error::Dimension(format!(
                "{} coefficients for a basis of {} elements",
                coefficients.len(),
                self.len()
            )));
        }
        let mut entries = Vec::new();
        for (c, p) in coefficients.iter().zip(&self.operators) {
            if *c != C64::new(0.0, 0.0) {
                entries.extend(p.entries().into_iter().map(|(r, col, v)| (r, col, v * c)));
            }
        }
        Operator::coo(self.d, self.t, entries)
    }

    pub fn twirl(&self, x: &Operator) -> Result<TwirlResult> {
        let overlaps = self.overlaps(x)?;
        let coefficients = self.coefficients(&overlaps);
        let operator = self.combine(&coefficients)?;
        Ok(TwirlResult {
            trace_in: x.trace(),
            trace_out: operator.trace(),
            basis_labels: self.labels(),
            coefficients,
            overlaps,
            operator,
        })
    }

    fn check_operand(&self, x: &Operator) -> Result<()> {
        if x.d() != self.d || x.t() != self.t {
            return Err(Error::Dimension(format!(
                "operator lives on (d={}, t={}), basis on (d={}, t={})",
                x.d(),
                x.t(),
                self.d,
                self.t
            )));
        }
        Ok(())
    }
}

pub fn build_basis(family: GroupFamily, t: usize, d: usize) -> Result<CommutantBasis> {
    CommutantBasis::build(family, t, d)
}

pub fn twirl(x: &Operator, basis: &CommutantBasis) -> Result<TwirlResult> {
    basis.twirl(x)
}

/// Pseudo-inverse of a symmetric matrix through its eigendecomposition,
/// dropping eigenvalues below `PINV_RTOL·max|λ|`; also returns the numerical
/// rank. (Gram matrices are symmetric, and the symmetric solver stays
/// accurate on the heavily degenerate spectra they have, where the general
/// SVD does not.)
pub fn pseudo_inverse(m: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let lambda_max = eig.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let cutoff = PINV_RTOL * lambda_max;
    let q = &eig.eigenvectors;
    let mut out = DMatrix::<f64>::zeros(m.ncols(), m.nrows());
    let mut rank = 0;
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l.abs() > cutoff && l != 0.0 {
            rank += 1;
            let col = q.column(k);
            out += (col * col.transpose()) / l;
        }
    }
    (out, rank)
}

/// Empirical `E[U^⊗t X U†^⊗t]` over `n` Haar samples of `spec`.
pub fn mc_twirl(x: &Operator, spec: &EnsembleSpec, n: usize) -> Result<Operator> {
    mc_twirl_with(x, spec, n, HaarSampler::sample)
}

/// [`mc_twirl`] with a caller-supplied draw, e.g. to pin `U`.
pub fn mc_twirl_with<F>(x: &Operator, spec: &EnsembleSpec, n: usize, draw: F) -> Result<Operator>
where
    F: Fn(&mut HaarSampler) -> DMatrix<C64> + Sync,
{
    if n == 0 {
        return Err(Error::Domain("Monte-Carlo sample count must be positive".into()));
    }
    spec.validate()?;
    if spec.d != x.d() {
        return Err(Error::Dimension(format!(
            "ensemble dimension {} does not match operator d={}",
            spec.d,
            x.d()
        )));
    }
    budget::check_dense(x.dim())?;
    let m = x.to_matrix()?;
    let t = x.t();
    let chunks = n.div_ceil(MC_CHUNK);
    let partial: Vec<Result<DMatrix<C64>>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut sampler = chunk_spec(spec, k as u64).sampler()?;
            let count = MC_CHUNK.min(n - k * MC_CHUNK);
            let mut acc = DMatrix::<C64>::zeros(m.nrows(), m.ncols());
            for _ in 0..count {
                let u = draw(&mut sampler);
                acc += conjugate_by_tensor_power(&u, &m, t);
            }
            Ok(acc)
        })
        .collect();
    let mut total = DMatrix::<C64>::zeros(m.nrows(), m.ncols());
    for p in partial {
        total += p?;
    }
    Operator::dense(x.d(), t, total / C64::new(n as f64, 0.0))
}

/// Random stream of Monte-Carlo chunk `k`: the low 32 bits of the ChaCha
/// stream id count chunks, the high bits carry the caller's stream id.
pub fn chunk_spec(spec: &EnsembleSpec, k: u64) -> EnsembleSpec {
    spec.with_stream((spec.stream_id << 32) | (k & 0xffff_ffff))
}

fn check_t2(x: &Operator) -> Result<()> {
    if x.t() != 2 {
        return Err(Error::Dimension(format!("closed form needs t=2, got t={}", x.t())));
    }
    Ok(())
}

/// Unitary `t = 2` twirl in closed form:
/// `[(A − B/d) I + (B − A/d) SWAP] / (d² − 1)` with `A = Tr X`, `B = Tr[X SWAP]`.
pub fn closed_form_unitary_t2(x: &Operator) -> Result<Operator> {
    check_t2(x)?;
    let d = x.d();
    if d < 2 {
        return Err(Error::Capability("closed form needs d >= 2".into()));
    }
    let df = d as f64;
    let id = Operator::identity(d, 2)?;
    let swap = reps::perm_rep(&[1, 0], d)?;
    let a = x.trace();
    let b = swap.trace_product(x)?;
    let norm = 1.0 / (df * df - 1.0);
    id.scale((a - b / df) * norm).add_scaled(&swap, (b - a / df) * norm)
}

/// Symplectic `t = 2` twirl in closed form, in the basis `(I, SWAP, Φ_s)`
/// with `Φ_s = F_d(cup–cap)`. Divides by `d − 2`, so `d >= 4`.
pub fn closed_form_symplectic_t2(x: &Operator) -> Result<Operator> {
    check_t2(x)?;
    let d = x.d();
    if !d.is_multiple_of(2) {
        return Err(Error::Parity(d));
    }
    if d < 4 {
        return Err(Error::Capability(
            "symplectic closed form is singular at d=2; use the pseudo-inverse twirl".into(),
        ));
    }
    let df = d as f64;
    let id = Operator::identity(d, 2)?;
    let swap = reps::perm_rep(&[1, 0], d)?;
    let phi = reps::brauer_rep(&Pairing::new(2, &[(0, 1), (2, 3)])?, d)?;
    let a = x.trace();
    let b = swap.trace_product(x)?;
    let f = phi.trace_product(x)?;
    let norm = 1.0 / (df * (df + 1.0) * (df - 2.0));
    let c_id = ((df - 1.0) * a - b + f) * norm;
    let c_swap = (-a + (df - 1.0) * b - f) * norm;
    let c_phi = (a - b + (df - 1.0) * f) * norm;
    id.scale(c_id)
        .add_scaled(&swap, c_swap)?
        .add_scaled(&phi, c_phi)
}
