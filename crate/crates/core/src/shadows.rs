//! Classical shadows with a global random unitary followed by a
//! computational-basis measurement.
//!
//! For any ensemble whose second moment on pure states is Haar-like the
//! measurement channel is `M(ρ) = (ρ + Tr[ρ] I)/(d+1)`, inverted by
//! `M⁻¹(A) = (d+1)A − Tr[A] I`. The channel and the estimator variance are
//! also evaluated exactly from `t = 2` and `t = 3` twirls, which is how the
//! closed form is checked.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{kron, Operator};
use crate::reps::sym_projector;
use crate::sampling::{EnsembleSpec, GroupFamily};
use crate::weingarten::{chunk_spec, CommutantBasis, MC_CHUNK};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// A randomized-measurement protocol: ensemble, computational basis, budget.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ShadowProtocol {
    pub ensemble: EnsembleSpec,
    pub n_samples: usize,
}

/// One sampled unitary, its outcome, and the snapshot `M⁻¹(U†|w⟩⟨w|U)`.
#[derive(Clone, Debug)]
pub struct ShadowRecord {
    pub unitary_index: usize,
    pub outcome: usize,
    pub snapshot: DMatrix<C64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShadowEstimate {
    pub samples: usize,
    pub mean: f64,
    /// Unbiased sample variance of the single-shot estimates.
    pub variance: f64,
    /// Standard error of the mean.
    pub stderr: f64,
    /// Standard error of `variance`, from the fourth central moment.
    pub variance_stderr: f64,
    /// `Tr[ρ O]`.
    pub exact_mean: f64,
    /// `E[ô²] − E[ô]²` from the exact twirls.
    pub exact_variance: f64,
}

fn check_square(a: &DMatrix<C64>, d: usize, what: &str) -> Result<()> {
    if a.nrows() != d || a.ncols() != d {
        return Err(Error::Dimension(format!(
            "{what} is {}x{}, expected {d}x{d}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// `(ρ + Tr[ρ] I)/(d+1)`.
pub fn measurement_channel(rho: &DMatrix<C64>) -> DMatrix<C64> {
    let d = rho.nrows();
    let id = DMatrix::<C64>::identity(d, d);
    (rho + id * rho.trace()) / C64::new((d + 1) as f64, 0.0)
}

/// `(d+1) A − Tr[A] I`.
pub fn invert_channel(a: &DMatrix<C64>) -> DMatrix<C64> {
    let d = a.nrows();
    let id = DMatrix::<C64>::identity(d, d);
    a * C64::new((d + 1) as f64, 0.0) - id * a.trace()
}

/// `Σ_w Π_w^⊗t` for the computational basis.
fn basis_moment(d: usize, t: usize) -> Result<Operator> {
    let mut entries = Vec::with_capacity(d);
    for w in 0..d {
        let idx = (0..t).fold(0, |acc, _| acc * d + w);
        entries.push((idx, idx, C64::new(1.0, 0.0)));
    }
    Operator::coo(d, t, entries)
}

/// `Σ_w E_G[U†^⊗t Π_w^⊗t U^⊗t]`, exactly.
pub fn basis_twirl(family: GroupFamily, d: usize, t: usize) -> Result<Operator> {
    let basis = CommutantBasis::build(family, t, d)?;
    Ok(basis.twirl(&basis_moment(d, t)?)?.operator)
}

/// `Tr_1[(ρ ⊗ I) T]` for `T` on two copies.
fn partial_trace_first(rho: &DMatrix<C64>, t2: &DMatrix<C64>) -> DMatrix<C64> {
    let d = rho.nrows();
    DMatrix::from_fn(d, d, |i, j| {
        let mut acc = ZERO;
        for a in 0..d {
            for b in 0..d {
                acc += rho[(a, b)] * t2[(b * d + i, a * d + j)];
            }
        }
        acc
    })
}

/// The measurement channel evaluated from the exact `t = 2` twirl of the
/// measurement basis.
pub fn measurement_channel_exact(family: GroupFamily, rho: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let d = rho.nrows();
    check_square(rho, d, "state")?;
    let t2 = basis_twirl(family, d, 2)?.to_matrix()?;
    Ok(partial_trace_first(rho, &t2))
}

/// Largest distance between the closed-form channel and the twirl-evaluated
/// one over the matrix units `|i⟩⟨j|`, which span all inputs.
pub fn channel_self_test(family: GroupFamily, d: usize) -> Result<f64> {
    let t2 = basis_twirl(family, d, 2)?.to_matrix()?;
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let mut e = DMatrix::<C64>::zeros(d, d);
            e[(i, j)] = C64::new(1.0, 0.0);
            let exact = partial_trace_first(&e, &t2);
            worst = worst.max(crate::operator::frobenius_distance(&exact, &measurement_channel(&e)));
        }
    }
    Ok(worst)
}

/// `‖M_U − M_SP‖` over the matrix units, both evaluated from twirls.
pub fn channel_distance(d: usize) -> Result<f64> {
    let tu = basis_twirl(GroupFamily::Unitary, d, 2)?.to_matrix()?;
    let ts = basis_twirl(GroupFamily::Symplectic, d, 2)?.to_matrix()?;
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let mut e = DMatrix::<C64>::zeros(d, d);
            e[(i, j)] = C64::new(1.0, 0.0);
            let diff = crate::operator::frobenius_distance(
                &partial_trace_first(&e, &tu),
                &partial_trace_first(&e, &ts),
            );
            worst = worst.max(diff);
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct ThirdMoment {
    pub d: usize,
    /// `‖T_U − T_SP‖_F` for the `t = 3` twirls of `Σ_w Π_w^⊗3`.
    pub distance: f64,
    pub trace_unitary: f64,
    pub trace_symplectic: f64,
    /// `‖T_SP − d Π_sym‖_F`
    pub distance_to_sym: f64,
}

pub fn third_moment_equality(d: usize) -> Result<ThirdMoment> {
    let tu = basis_twirl(GroupFamily::Unitary, d, 3)?;
    let ts = basis_twirl(GroupFamily::Symplectic, d, 3)?;
    let target = sym_projector(3, d)?.scale(C64::new(d as f64, 0.0));
    Ok(ThirdMoment {
        d,
        distance: tu.frobenius_distance(&ts)?,
        trace_unitary: tu.trace().re,
        trace_symplectic: ts.trace().re,
        distance_to_sym: ts.frobenius_distance(&target)?,
    })
}

/// `(E[ô], E[ô²])` for `ô = Tr[O ρ̂]`, from the exact `t = 2, 3` twirls.
pub fn exact_moments(
    family: GroupFamily,
    rho: &DMatrix<C64>,
    observable: &DMatrix<C64>,
) -> Result<(f64, f64)> {
    let d = rho.nrows();
    check_square(observable, d, "observable")?;
    let o_inv = invert_channel(observable);
    let t2 = basis_twirl(family, d, 2)?;
    let t3 = basis_twirl(family, d, 3)?;
    let first = Operator::dense(d, 2, kron(rho, &o_inv))?.trace_product(&t2)?;
    let second = Operator::dense(d, 3, kron(&kron(rho, &o_inv), &o_inv))?.trace_product(&t3)?;
    Ok((first.re, second.re))
}

/// Draws `U`, then `w` with probability `⟨w|UρU†|w⟩`.
fn draw_outcome(
    sampler: &mut crate::sampling::HaarSampler,
    rho: &DMatrix<C64>,
) -> (DMatrix<C64>, usize) {
    let u = sampler.sample();
    let rotated = &u * rho * u.adjoint();
    let r = sampler.uniform();
    let d = rho.nrows();
    let mut acc = 0.0;
    let mut outcome = d - 1;
    for w in 0..d {
        acc += rotated[(w, w)].re.max(0.0);
        if r < acc {
            outcome = w;
            break;
        }
    }
    (u, outcome)
}

/// `U†|w⟩⟨w|U`.
fn measured_projector(u: &DMatrix<C64>, w: usize) -> DMatrix<C64> {
    let row = u.row(w);
    row.adjoint() * row
}

impl ShadowProtocol {
    pub fn new(ensemble: EnsembleSpec, n_samples: usize) -> Result<Self> {
        ensemble.validate()?;
        Ok(Self { ensemble, n_samples })
    }

    pub fn d(&self) -> usize {
        self.ensemble.d
    }

    fn check_state(&self, rho: &DMatrix<C64>) -> Result<()> {
        check_square(rho, self.d(), "state")?;
        if (rho.trace().re - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("state has trace {}", rho.trace())));
        }
        Ok(())
    }

    /// The first `n` shadow records of this protocol's random stream.
    pub fn records(&self, rho: &DMatrix<C64>, n: usize) -> Result<Vec<ShadowRecord>> {
        self.check_state(rho)?;
        let mut sampler = chunk_spec(&self.ensemble, 0).sampler()?;
        Ok((0..n)
            .map(|k| {
                let (u, w) = draw_outcome(&mut sampler, rho);
                ShadowRecord {
                    unitary_index: k,
                    outcome: w,
                    snapshot: invert_channel(&measured_projector(&u, w)),
                }
            })
            .collect())
    }

    /// Single-shot estimates `Tr[O ρ̂]` for all `n_samples` draws, chunked
    /// over random streams and concatenated in stream order.
    pub fn single_shots(&self, rho: &DMatrix<C64>, observable: &DMatrix<C64>) -> Result<Vec<f64>> {
        self.check_state(rho)?;
        check_square(observable, self.d(), "observable")?;
        let n = self.n_samples;
        let o_inv = invert_channel(observable);
        let chunks: Vec<Result<Vec<f64>>> = (0..n.div_ceil(MC_CHUNK))
            .into_par_iter()
            .map(|k| {
                let mut sampler = chunk_spec(&self.ensemble, k as u64).sampler()?;
                let count = MC_CHUNK.min(n - k * MC_CHUNK);
                Ok((0..count)
                    .map(|_| {
                        let (u, w) = draw_outcome(&mut sampler, rho);
                        // Tr[O M⁻¹(V)] = Tr[M⁻¹(O) V] = ⟨w|U M⁻¹(O) U†|w⟩
                        let row = u.row(w);
                        (row * &o_inv * row.adjoint())[(0, 0)].re
                    })
                    .collect())
            })
            .collect();
        let mut out = Vec::with_capacity(n);
        for c in chunks {
            out.extend(c?);
        }
        Ok(out)
    }

    pub fn estimate_observable(
        &self,
        rho: &DMatrix<C64>,
        observable: &DMatrix<C64>,
    ) -> Result<ShadowEstimate> {
        if self.n_samples < 100 {
            return Err(Error::Domain(format!(
                "shadow estimation needs at least 100 samples, got {}",
                self.n_samples
            )));
        }
        let shots = self.single_shots(rho, observable)?;
        let n = shots.len() as f64;
        let mean = shots.iter().sum::<f64>() / n;
        let m2 = shots.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m4 = shots.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        let variance = m2 * n / (n - 1.0);
        let variance_stderr = ((m4 - m2 * m2 * (n - 3.0) / (n - 1.0)).max(0.0) / n).sqrt();
        let (e1, e2) = exact_moments(self.ensemble.family, rho, observable)?;
        Ok(ShadowEstimate {
            samples: shots.len(),
            mean,
            variance,
            stderr: (variance / n).sqrt(),
            variance_stderr,
            exact_mean: (rho * observable).trace().re,
            exact_variance: e2 - e1 * e1,
        })
    }
}
