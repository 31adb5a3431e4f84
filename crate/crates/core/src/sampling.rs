//! Haar samplers for `U(d)`, `SP(d/2)` and `SO(d)`.
//!
//! Every sampler owns a ChaCha20 generator keyed by `(seed, stream_id)`, so a
//! sample sequence is fixed by those two numbers and distinct streams are
//! independent. Nothing is shared between samplers.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupFamily {
    Unitary,
    Symplectic,
    Orthogonal,
}

impl fmt::Display for GroupFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupFamily::Unitary => "unitary",
            GroupFamily::Symplectic => "symplectic",
            GroupFamily::Orthogonal => "orthogonal",
        })
    }
}

impl FromStr for GroupFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "u" | "unitary" => Ok(GroupFamily::Unitary),
            "sp" | "symplectic" => Ok(GroupFamily::Symplectic),
            "o" | "so" | "orthogonal" => Ok(GroupFamily::Orthogonal),
            other => Err(Error::Parse(format!("unknown group family {other:?}"))),
        }
    }
}

/// Which group to sample, at which dimension, from which random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub family: GroupFamily,
    pub d: usize,
    pub seed: u64,
    pub stream_id: u64,
}

impl EnsembleSpec {
    pub fn new(family: GroupFamily, d: usize, seed: u64, stream_id: u64) -> Result<Self> {
        let spec = Self {
            family,
            d,
            seed,
            stream_id,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Domain("group dimension must be positive".into()));
        }
        if self.family == GroupFamily::Symplectic && !self.d.is_multiple_of(2) {
            return Err(Error::Parity(self.d));
        }
        Ok(())
    }

    pub fn with_stream(&self, stream_id: u64) -> Self {
        Self { stream_id, ..*self }
    }

    pub fn sampler(&self) -> Result<HaarSampler> {
        HaarSampler::new(*self)
    }
}

/// An endless stream of Haar-random `d×d` matrices.
pub struct HaarSampler {
    spec: EnsembleSpec,
    rng: ChaCha20Rng,
}

impl HaarSampler {
    pub fn new(spec: EnsembleSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
        rng.set_stream(spec.stream_id);
        Ok(Self { spec, rng })
    }

    pub fn spec(&self) -> &EnsembleSpec {
        &self.spec
    }

    pub fn sample(&mut self) -> DMatrix<C64> {
        let d = self.spec.d;
        match self.spec.family {
            GroupFamily::Unitary => haar_unitary_from(&mut self.rng, d),
            GroupFamily::Symplectic => haar_symplectic_from(&mut self.rng, d),
            GroupFamily::Orthogonal => haar_orthogonal_from(&mut self.rng, d).map(|v| C64::new(v, 0.0)),
        }
    }

    /// A standard complex Gaussian vector, drawn from the same stream.
    pub fn gaussian_vector(&mut self, len: usize) -> Vec<C64> {
        (0..len).map(|_| complex_normal(&mut self.rng)).collect()
    }

    /// Uniform draw in `[0, 1)` from the same stream.
    pub fn uniform(&mut self) -> f64 {
        rand::Rng::random::<f64>(&mut self.rng)
    }
}

fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Complex Ginibre matrix, QR, then each column of `Q` multiplied by the
/// phase of the matching diagonal entry of `R` so that the result is Haar.
pub fn haar_unitary_from<R: rand::Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<C64> {
    let z = DMatrix::from_fn(d, d, |_, _| complex_normal(rng));
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        q.column_mut(j).scale_mut(1.0);
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar on `SP(d/2)`: quaternionic Ginibre columns orthonormalized in
/// pairs `(u_j, −Ω ū_j)`, which keeps `U = Ω Ū Ωᵀ` exactly.
pub fn haar_symplectic_from<R: rand::Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<C64> {
    assert!(d.is_multiple_of(2), "symplectic dimension must be even");
    let h = d / 2;
    // Quaternionic Ginibre [[A, B], [−B̄, Ā]]; its first h columns are [A; −B̄].
    let a = DMatrix::from_fn(h, h, |_, _| complex_normal(rng));
    let b = DMatrix::from_fn(h, h, |_, _| complex_normal(rng));
    let mut u = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
    for j in 0..h {
        let mut v: Vec<C64> = (0..d)
            .map(|i| if i < h { a[(i, j)] } else { -b[(i - h, j)].conj() })
            .collect();
        // two passes of modified Gram-Schmidt against the columns so far
        for _ in 0..2 {
            for k in (0..j).chain(h..h + j) {
                let proj: C64 = (0..d).map(|i| u[(i, k)].conj() * v[i]).sum();
                for (i, vi) in v.iter_mut().enumerate() {
                    *vi -= proj * u[(i, k)];
                }
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for (i, vi) in v.iter().enumerate() {
            u[(i, j)] = vi / norm;
        }
        // partner column −Ω ū_j
        for i in 0..h {
            u[(i, j + h)] = -u[(i + h, j)].conj();
            u[(i + h, j + h)] = u[(i, j)].conj();
        }
    }
    u
}

/// Haar on `SO(d)`: real Ginibre QR with the sign fix, then the first column
/// negated when the determinant is `−1`.
pub fn haar_orthogonal_from<R: rand::Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let z = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

fn first_sample(spec: &EnsembleSpec, family: GroupFamily) -> Result<Operator> {
    if spec.family != family {
        return Err(Error::Domain(format!(
            "spec is for the {} family, sampler needs {family}",
            spec.family
        )));
    }
    Operator::from_matrix(spec.sampler()?.sample())
}

/// First sample of the stream described by `spec`, which must be unitary.
pub fn haar_unitary(spec: &EnsembleSpec) -> Result<Operator> {
    first_sample(spec, GroupFamily::Unitary)
}

pub fn haar_symplectic(spec: &EnsembleSpec) -> Result<Operator> {
    first_sample(spec, GroupFamily::Symplectic)
}

pub fn haar_orthogonal(spec: &EnsembleSpec) -> Result<Operator> {
    first_sample(spec, GroupFamily::Orthogonal)
}

/// `‖U†U − I‖_F`.
pub fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let id = DMatrix::<C64>::identity(u.nrows(), u.ncols());
    crate::operator::frobenius_distance(&(u.adjoint() * u), &id)
}

/// `‖UᵀΩU − Ω‖_F`.
pub fn symplectic_defect(u: &DMatrix<C64>) -> Result<f64> {
    let omega = crate::reps::omega(u.nrows())?.to_complex();
    Ok(crate::operator::frobenius_distance(&(u.transpose() * &omega * u), &omega))
}
