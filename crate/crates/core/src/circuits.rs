//! Second-moment operators of one-dimensional brickwork circuits.
//!
//! A layer applies two-qubit gates on pairs `(0,1), (2,3), …` and then on
//! `(1,2), (3,4), …`; its moment operator is the product of the local `t = 2`
//! twirls. Every local commutant used here (`U(4)`, `SO(4)`, `SP(2)`) lies
//! in the span of products of the per-qubit two-copy operators
//! `{I, S, Φ}` (`S` the copy swap, `Φ = |Φ⁺⟩⟨Φ⁺|` unnormalized), so the
//! moment operator maps everything into `V = ⊗_q span{I, S, Φ}` and its
//! nonzero spectrum is that of a `3^n × 3^n` reduced matrix.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{conjugate_by_tensor_power, kron, Operator};
use crate::sampling::{EnsembleSpec, GroupFamily, HaarSampler};
use crate::weingarten::CommutantBasis;
use crate::C64;

/// Largest `n` for the reduced operator (`3^n` coordinates).
pub const MAX_REDUCED_QUBITS: usize = 10;
/// Largest `n` for full-space application (`2^{4n}` entries).
pub const MAX_FULL_QUBITS: usize = 3;
/// Largest `n` for the materialized full superoperator.
pub const MAX_SUPEROPERATOR_QUBITS: usize = 2;
/// Largest `n` for a dense eigen-decomposition of the reduced operator.
pub const MAX_DENSE_SPECTRUM_QUBITS: usize = 7;

/// Eigenvalues at or above `1 − FIXED_TOL` count as fixed points.
pub const FIXED_TOL: f64 = 1e-8;
const DECOMPOSITION_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum LocalGroup {
    #[serde(rename = "SU(4)")]
    Su4,
    #[serde(rename = "SO(4)")]
    So4,
    #[serde(rename = "SP(2)")]
    Sp2,
}

impl LocalGroup {
    /// Real dimension of the group manifold.
    pub fn parameters(self) -> usize {
        match self {
            LocalGroup::Su4 => 15,
            LocalGroup::So4 => 6,
            LocalGroup::Sp2 => 10,
        }
    }

    pub fn family(self) -> GroupFamily {
        match self {
            LocalGroup::Su4 => GroupFamily::Unitary,
            LocalGroup::So4 => GroupFamily::Orthogonal,
            LocalGroup::Sp2 => GroupFamily::Symplectic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Gate {
    /// 0 for the first half-layer, 1 for the second.
    pub sublayer: usize,
    /// The gate acts on qubits `first` and `first + 1`.
    pub first: usize,
    pub group: LocalGroup,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchitectureKind {
    Unitary,
    Symplectic,
    Custom,
}

/// Brickwork gate layout. Qubit 0 is the most significant tensor factor.
#[derive(Clone, Debug, Serialize)]
pub struct BrickArchitecture {
    pub kind: ArchitectureKind,
    pub n_qubits: usize,
    pub layers: usize,
    pub gates: Vec<Gate>,
}

fn brick_pairs(n: usize) -> Vec<(usize, usize)> {
    let odd = (0..n.saturating_sub(1)).step_by(2).map(|q| (0, q));
    let even = (1..n.saturating_sub(1)).step_by(2).map(|q| (1, q));
    odd.chain(even).collect()
}

impl BrickArchitecture {
    fn check_size(n: usize) -> Result<()> {
        if n < 2 {
            return Err(Error::Domain(format!("brickwork needs at least 2 qubits, got {n}")));
        }
        Ok(())
    }

    /// `SU(4)` on every pair.
    pub fn unitary(n: usize) -> Result<Self> {
        Self::check_size(n)?;
        Ok(Self {
            kind: ArchitectureKind::Unitary,
            n_qubits: n,
            layers: 1,
            gates: brick_pairs(n)
                .into_iter()
                .map(|(sublayer, first)| Gate {
                    sublayer,
                    first,
                    group: LocalGroup::Su4,
                })
                .collect(),
        })
    }

    /// `SP(2)` on the gate touching qubit 0, `SO(4)` everywhere else. The
    /// circuit then preserves `Ω = Ω₂ ⊗ I ⊗ … ⊗ I`.
    pub fn symplectic(n: usize) -> Result<Self> {
        Self::check_size(n)?;
        Ok(Self {
            kind: ArchitectureKind::Symplectic,
            n_qubits: n,
            layers: 1,
            gates: brick_pairs(n)
                .into_iter()
                .map(|(sublayer, first)| Gate {
                    sublayer,
                    first,
                    group: if first == 0 { LocalGroup::Sp2 } else { LocalGroup::So4 },
                })
                .collect(),
        })
    }

    /// A single gate on two qubits.
    pub fn single_gate(group: LocalGroup) -> Self {
        Self {
            kind: ArchitectureKind::Custom,
            n_qubits: 2,
            layers: 1,
            gates: vec![Gate {
                sublayer: 0,
                first: 0,
                group,
            }],
        }
    }

    pub fn with_layers(mut self, layers: usize) -> Self {
        self.layers = layers;
        self
    }

    pub fn parameters_per_layer(&self) -> usize {
        self.gates.iter().map(|g| g.group.parameters()).sum()
    }

    pub fn total_parameters(&self) -> usize {
        self.layers * self.parameters_per_layer()
    }

    /// Gates in application order.
    pub fn ordered_gates(&self) -> Vec<Gate> {
        let mut g = self.gates.clone();
        g.sort_by_key(|g| (g.sublayer, g.first));
        g
    }

    pub fn validate(&self) -> Result<()> {
        Self::check_size(self.n_qubits)?;
        let mut touched = vec![false; self.n_qubits];
        for g in &self.gates {
            if g.first + 1 >= self.n_qubits {
                return Err(Error::Domain(format!(
                    "gate on ({}, {}) outside {} qubits",
                    g.first,
                    g.first + 1,
                    self.n_qubits
                )));
            }
            if g.group == LocalGroup::Sp2 && g.first != 0 {
                return Err(Error::Capability(
                    "SP(2) gates are only placed on the pair containing qubit 0".into(),
                ));
            }
            touched[g.first] = true;
            touched[g.first + 1] = true;
        }
        for sub in [0, 1] {
            let mut seen = vec![false; self.n_qubits];
            for g in self.gates.iter().filter(|g| g.sublayer == sub) {
                if seen[g.first] || seen[g.first + 1] {
                    return Err(Error::Domain("overlapping gates within a half-layer".into()));
                }
                seen[g.first] = true;
                seen[g.first + 1] = true;
            }
        }
        if let Some(q) = touched.iter().position(|t| !t) {
            return Err(Error::Domain(format!("qubit {q} is not acted on by any gate")));
        }
        Ok(())
    }

    /// The group whose `t = 2` commutant is the fixed space of the layer.
    pub fn global_family(&self) -> GroupFamily {
        if self.gates.iter().any(|g| g.group == LocalGroup::Su4) {
            GroupFamily::Unitary
        } else if self.gates.iter().any(|g| g.group == LocalGroup::Sp2) {
            GroupFamily::Symplectic
        } else {
            GroupFamily::Orthogonal
        }
    }
}

// Per-qubit two-copy operators, indexed by (copy-A bit, copy-B bit).
fn qubit_basis() -> [DMatrix<C64>; 3] {
    let one = C64::new(1.0, 0.0);
    let id = DMatrix::<C64>::identity(4, 4);
    let mut swap = DMatrix::<C64>::zeros(4, 4);
    for a in 0..2 {
        for b in 0..2 {
            swap[(2 * b + a, 2 * a + b)] = one;
        }
    }
    let mut phi = DMatrix::<C64>::zeros(4, 4);
    for r in [0, 3] {
        for c in [0, 3] {
            phi[(r, c)] = one;
        }
    }
    [id, swap, phi]
}

/// HS Gram matrix of [`qubit_basis`].
fn qubit_gram() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 2.0, 2.0, 4.0, 2.0, 2.0, 2.0, 4.0])
}

/// Two per-qubit two-copy operators as one operator on two copies of `C^4`,
/// the first qubit being the more significant one.
fn pair_to_gate(first: &DMatrix<C64>, second: &DMatrix<C64>) -> DMatrix<C64> {
    let split = |x: usize| -> (usize, usize, usize, usize) {
        // x = 4·(2a₀ + a₁) + (2b₀ + b₁)
        let (xa, xb) = (x / 4, x % 4);
        (xa / 2, xa % 2, xb / 2, xb % 2)
    };
    DMatrix::from_fn(16, 16, |r, c| {
        let (ra0, ra1, rb0, rb1) = split(r);
        let (ca0, ca1, cb0, cb1) = split(c);
        first[(2 * ra0 + rb0, 2 * ca0 + cb0)] * second[(2 * ra1 + rb1, 2 * ca1 + cb1)]
    })
}

/// The local `t = 2` twirl of `group` restricted to `span{I,S,Φ}^⊗2`, as a
/// `9 × 9` matrix on coordinates `3a + b`.
pub fn local_transfer(group: LocalGroup) -> Result<DMatrix<f64>> {
    let basis = CommutantBasis::build(group.family(), 2, 4)?;
    let q = qubit_basis();
    let products: Vec<DMatrix<C64>> = (0..9).map(|k| pair_to_gate(&q[k / 3], &q[k % 3])).collect();
    let g = qubit_gram();
    let metric = DMatrix::from_fn(9, 9, |i, j| g[(i / 3, j / 3)] * g[(i % 3, j % 3)]);
    let metric_inv = metric
        .try_inverse()
        .ok_or_else(|| Error::Domain("product basis is degenerate".into()))?;
    let mut out = DMatrix::<f64>::zeros(9, 9);
    for k in 0..9 {
        let x = Operator::dense(4, 2, products[k].clone())?;
        let y = basis.twirl(&x)?.operator.to_matrix()?;
        let overlaps = DMatrix::from_fn(9, 1, |i, _| {
            products[i]
                .iter()
                .zip(y.iter())
                .map(|(p, v)| p.conj() * v)
                .sum::<C64>()
                .re
        });
        let coords = &metric_inv * overlaps;
        let mut rebuilt = DMatrix::<C64>::zeros(16, 16);
        for i in 0..9 {
            rebuilt += &products[i] * C64::new(coords[i], 0.0);
        }
        let residual = crate::operator::frobenius_distance(&rebuilt, &y);
        if residual > DECOMPOSITION_TOL {
            return Err(Error::Capability(format!(
                "local twirl leaves the product span (residual {residual:e})"
            )));
        }
        out.set_column(k, &coords.column(0));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct GapResult {
    pub lambda: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Power-iteration settings for [`MomentOperator::spectral_gap`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GapOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for GapOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 100_000,
            seed: 0,
        }
    }
}

/// Single-layer second-moment operator of a [`BrickArchitecture`].
#[derive(Clone, Debug)]
pub struct MomentOperator {
    arch: BrickArchitecture,
    gates: Vec<(usize, DMatrix<f64>)>,
    full_bases: Vec<(usize, CommutantBasis)>,
    /// Global commutant in reduced coordinates, one column per element.
    commutant: DMatrix<f64>,
    /// `(Cᵀ G C)⁻¹ (G C)ᵀ`, so that `Π_C = C · deflator`.
    deflator: DMatrix<f64>,
}

fn pow3(n: usize) -> usize {
    3usize.pow(n as u32)
}

/// Applies `local` (9×9) to modes `q, q+1` of a `3^n` coordinate vector.
fn apply_local(v: &[f64], n: usize, q: usize, local: &DMatrix<f64>) -> Vec<f64> {
    let s0 = pow3(n - 1 - q);
    let s1 = pow3(n - 2 - q);
    let mut out = v.to_vec();
    let mut buf = [0.0; 9];
    for base in 0..v.len() {
        if !(base / s0).is_multiple_of(3) || !(base / s1).is_multiple_of(3) {
            continue;
        }
        for (k, slot) in buf.iter_mut().enumerate() {
            *slot = v[base + (k / 3) * s0 + (k % 3) * s1];
        }
        for k in 0..9 {
            out[base + (k / 3) * s0 + (k % 3) * s1] = (0..9).map(|j| local[(k, j)] * buf[j]).sum();
        }
    }
    out
}

/// `⊗_q g` applied to each column.
fn apply_metric(c: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let g = qubit_gram();
    let mut out = c.clone();
    for q in 0..n {
        let stride = pow3(n - 1 - q);
        for col in 0..c.ncols() {
            let v: Vec<f64> = out.column(col).iter().cloned().collect();
            for base in 0..v.len() {
                if !(base / stride).is_multiple_of(3) {
                    continue;
                }
                for a in 0..3 {
                    out[(base + a * stride, col)] =
                        (0..3).map(|b| g[(a, b)] * v[base + b * stride]).sum();
                }
            }
        }
    }
    out
}

/// Reduced coordinates of `⊗_q x_q` for per-qubit coordinate triples.
fn product_coords(factors: &[[f64; 3]]) -> Vec<f64> {
    let mut v = vec![1.0];
    for f in factors {
        v = v.iter().flat_map(|&a| f.iter().map(move |&b| a * b)).collect();
    }
    v
}

impl MomentOperator {
    pub fn new(arch: &BrickArchitecture) -> Result<Self> {
        arch.validate()?;
        let n = arch.n_qubits;
        if n > MAX_REDUCED_QUBITS {
            return Err(Error::Budget {
                what: "reduced moment operator (3^n coordinates)".into(),
                needed: pow3(n),
                budget: pow3(MAX_REDUCED_QUBITS),
            });
        }
        let mut cache: Vec<(LocalGroup, DMatrix<f64>)> = Vec::new();
        let mut gates = Vec::new();
        for g in arch.ordered_gates() {
            let local = match cache.iter().find(|(k, _)| *k == g.group) {
                Some((_, m)) => m.clone(),
                None => {
                    let m = local_transfer(g.group)?;
                    cache.push((g.group, m.clone()));
                    m
                }
            };
            gates.push((g.first, local));
        }
        let full_bases = arch
            .ordered_gates()
            .iter()
            .map(|g| Ok((g.first, CommutantBasis::build(g.group.family(), 2, 4)?)))
            .collect::<Result<Vec<_>>>()?;
        let commutant = Self::global_commutant(arch);
        let gc = apply_metric(&commutant, n);
        let small = commutant.transpose() * &gc;
        let small_inv = small
            .try_inverse()
            .ok_or_else(|| Error::Domain("global commutant is degenerate".into()))?;
        let deflator = small_inv * gc.transpose();
        let op = Self {
            arch: arch.clone(),
            gates,
            full_bases,
            commutant,
            deflator,
        };
        let fixed = op.commutant_residual();
        if fixed > 1e-9 {
            return Err(Error::Capability(format!(
                "global commutant is not fixed by the layer (residual {fixed:e})"
            )));
        }
        Ok(op)
    }

    fn global_commutant(arch: &BrickArchitecture) -> DMatrix<f64> {
        let n = arch.n_qubits;
        let id = [1.0, 0.0, 0.0];
        let s = [0.0, 1.0, 0.0];
        let phi = [0.0, 0.0, 1.0];
        let mut cols = vec![product_coords(&vec![id; n]), product_coords(&vec![s; n])];
        match arch.global_family() {
            GroupFamily::Unitary => {}
            GroupFamily::Symplectic => {
                // Φ_s = (S − I) on qubit 0, Φ on the rest
                let mut f = vec![phi; n];
                f[0] = [-1.0, 1.0, 0.0];
                cols.push(product_coords(&f));
            }
            GroupFamily::Orthogonal => {
                cols.push(product_coords(&vec![phi; n]));
                if n == 2 {
                    // SO(4) also fixes the Levi-Civita operator
                    cols.push(levi_civita_coords());
                }
            }
        }
        let len = cols[0].len();
        DMatrix::from_fn(len, cols.len(), |i, j| cols[j][i])
    }

    pub fn architecture(&self) -> &BrickArchitecture {
        &self.arch
    }

    pub fn n_qubits(&self) -> usize {
        self.arch.n_qubits
    }

    /// `3^n`.
    pub fn reduced_dim(&self) -> usize {
        pow3(self.arch.n_qubits)
    }

    pub fn commutant(&self) -> &DMatrix<f64> {
        &self.commutant
    }

    /// Applies the layer to reduced coordinates.
    pub fn apply_reduced(&self, v: &[f64]) -> Vec<f64> {
        let n = self.arch.n_qubits;
        self.gates
            .iter()
            .fold(v.to_vec(), |acc, (q, local)| apply_local(&acc, n, *q, local))
    }

    /// `Π_C v`, the HS-orthogonal projection onto the global commutant.
    pub fn project_commutant(&self, v: &[f64]) -> Vec<f64> {
        let coeffs = &self.deflator * DMatrix::from_column_slice(v.len(), 1, v);
        (&self.commutant * coeffs).column(0).iter().cloned().collect()
    }

    /// `max_k ‖T c_k − c_k‖` over the commutant columns.
    pub fn commutant_residual(&self) -> f64 {
        (0..self.commutant.ncols())
            .map(|k| {
                let c: Vec<f64> = self.commutant.column(k).iter().cloned().collect();
                let tc = self.apply_reduced(&c);
                tc.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Dense `3^n × 3^n` reduced matrix.
    pub fn reduced_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.arch.n_qubits;
        if n > MAX_DENSE_SPECTRUM_QUBITS {
            return Err(Error::Budget {
                what: "dense reduced moment operator".into(),
                needed: pow3(n),
                budget: pow3(MAX_DENSE_SPECTRUM_QUBITS),
            });
        }
        let dim = pow3(n);
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        let mut e = vec![0.0; dim];
        for j in 0..dim {
            e[j] = 1.0;
            let col = self.apply_reduced(&e);
            m.set_column(j, &DMatrix::from_column_slice(dim, 1, &col).column(0));
            e[j] = 0.0;
        }
        Ok(m)
    }

    /// Eigenvalues of the reduced matrix (the nonzero spectrum of the full
    /// moment operator, padded with zeros), sorted by decreasing real part.
    pub fn spectrum(&self) -> Result<Vec<C64>> {
        let m = self.reduced_matrix()?;
        let mut ev: Vec<C64> = m.complex_eigenvalues().iter().cloned().collect();
        ev.sort_by(|a, b| b.re.total_cmp(&a.re));
        Ok(ev)
    }

    /// Largest eigenvalue below `1 − FIXED_TOL`, by power iteration on
    /// `T − Π_C` from a seeded random start.
    pub fn spectral_gap(&self, opts: &GapOptions) -> Result<GapResult> {
        let dim = self.reduced_dim();
        let mut sampler = EnsembleSpec::new(GroupFamily::Unitary, 1, opts.seed, 0)?.sampler()?;
        let start: Vec<f64> = sampler.gaussian_vector(dim).iter().map(|z| z.re).collect();
        let deflate = |v: Vec<f64>| -> Vec<f64> {
            let p = self.project_commutant(&v);
            v.iter().zip(&p).map(|(a, b)| a - b).collect()
        };
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut v = deflate(start);
        let n0 = norm(&v);
        v.iter_mut().for_each(|x| *x /= n0);
        let mut residual = f64::INFINITY;
        for it in 1..=opts.max_iterations {
            let w = deflate(self.apply_reduced(&v));
            let lambda = norm(&w);
            if lambda <= f64::EPSILON {
                return Ok(GapResult {
                    lambda: 0.0,
                    iterations: it,
                    residual: lambda,
                });
            }
            residual = w.iter().zip(&v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
            v = w.into_iter().map(|x| x / lambda).collect();
            if residual <= opts.tolerance {
                if lambda >= 1.0 - FIXED_TOL {
                    return Err(Error::Capability(format!(
                        "the layer fixes more than the global commutant (eigenvalue {lambda})"
                    )));
                }
                return Ok(GapResult {
                    lambda,
                    iterations: it,
                    residual,
                });
            }
        }
        Err(Error::Convergence {
            iterations: opts.max_iterations,
            residual,
        })
    }

    /// Full two-copy operator `⊗_q x_q` for reduced coordinates `v`.
    pub fn embed(&self, v: &[f64]) -> Result<DMatrix<C64>> {
        let n = self.arch.n_qubits;
        self.check_full(n)?;
        let q = qubit_basis();
        let dd = 1usize << (2 * n);
        let mut out = DMatrix::<C64>::zeros(dd, dd);
        for (idx, &coef) in v.iter().enumerate() {
            if coef == 0.0 {
                continue;
            }
            let digits: Vec<usize> = (0..n).map(|k| (idx / pow3(n - 1 - k)) % 3).collect();
            for r in 0..dd {
                for c in 0..dd {
                    let mut val = C64::new(coef, 0.0);
                    for (k, &a) in digits.iter().enumerate() {
                        let (ra, rb) = qubit_bits(r, n, k);
                        let (ca, cb) = qubit_bits(c, n, k);
                        val *= q[a][(2 * ra + rb, 2 * ca + cb)];
                        if val == C64::new(0.0, 0.0) {
                            break;
                        }
                    }
                    out[(r, c)] += val;
                }
            }
        }
        Ok(out)
    }

    fn check_full(&self, n: usize) -> Result<()> {
        if n > MAX_FULL_QUBITS {
            return Err(Error::Budget {
                what: "full-space moment operator (2^{4n} entries)".into(),
                needed: 1 << (4 * n),
                budget: 1 << (4 * MAX_FULL_QUBITS),
            });
        }
        Ok(())
    }

    /// Applies the layer to an operator on two copies of `n` qubits
    /// (`4^n × 4^n`, copy A the more significant factor).
    pub fn apply_full(&self, x: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        let n = self.arch.n_qubits;
        self.check_full(n)?;
        let dd = 1usize << (2 * n);
        if x.nrows() != dd || x.ncols() != dd {
            return Err(Error::Dimension(format!(
                "operator is {}x{}, expected {dd}x{dd}",
                x.nrows(),
                x.ncols()
            )));
        }
        let mut cur = x.clone();
        for (q, basis) in &self.full_bases {
            cur = twirl_on_pair(&cur, n, *q, basis)?;
        }
        Ok(cur)
    }

    /// The layer as a `16^n × 16^n` matrix on row-major vectorized operators.
    pub fn full_superoperator(&self) -> Result<DMatrix<C64>> {
        let n = self.arch.n_qubits;
        if n > MAX_SUPEROPERATOR_QUBITS {
            return Err(Error::Budget {
                what: "full superoperator".into(),
                needed: 1 << (8 * n),
                budget: 1 << (8 * MAX_SUPEROPERATOR_QUBITS),
            });
        }
        let dd = 1usize << (2 * n);
        let big = dd * dd;
        let mut out = DMatrix::<C64>::zeros(big, big);
        for k in 0..big {
            let mut e = DMatrix::<C64>::zeros(dd, dd);
            e[(k / dd, k % dd)] = C64::new(1.0, 0.0);
            let y = self.apply_full(&e)?;
            for r in 0..dd {
                for c in 0..dd {
                    out[(r * dd + c, k)] = y[(r, c)];
                }
            }
        }
        Ok(out)
    }

    /// Monte-Carlo estimate of [`apply_full`](Self::apply_full): every gate is
    /// drawn from its Haar ensemble, `n_samples` times.
    pub fn mc_apply_full(&self, x: &DMatrix<C64>, n_samples: usize, seed: u64) -> Result<DMatrix<C64>> {
        let n = self.arch.n_qubits;
        self.check_full(n)?;
        if n_samples == 0 {
            return Err(Error::Domain("sample count must be positive".into()));
        }
        let mut samplers: Vec<(LocalGroup, HaarSampler)> = [LocalGroup::Su4, LocalGroup::So4, LocalGroup::Sp2]
            .iter()
            .enumerate()
            .map(|(k, g)| Ok((*g, EnsembleSpec::new(g.family(), 4, seed, k as u64)?.sampler()?)))
            .collect::<Result<_>>()?;
        let gates = self.arch.ordered_gates();
        let mut acc = DMatrix::<C64>::zeros(x.nrows(), x.ncols());
        for _ in 0..n_samples {
            let mut u = DMatrix::<C64>::identity(1 << n, 1 << n);
            for sub in [0, 1] {
                let mut layer = DMatrix::<C64>::identity(1, 1);
                let mut q = 0;
                while q < n {
                    match gates.iter().find(|g| g.sublayer == sub && g.first == q) {
                        Some(g) => {
                            let s = &mut samplers.iter_mut().find(|(k, _)| *k == g.group).unwrap().1;
                            layer = kron(&layer, &s.sample());
                            q += 2;
                        }
                        None => {
                            layer = kron(&layer, &DMatrix::identity(2, 2));
                            q += 1;
                        }
                    }
                }
                u = layer * u;
            }
            acc += conjugate_by_tensor_power(&u, x, 2);
        }
        Ok(acc / C64::new(n_samples as f64, 0.0))
    }
}

/// Copy-A and copy-B bits of qubit `k` in a two-copy index `i = i_A·2^n + i_B`.
fn qubit_bits(i: usize, n: usize, k: usize) -> (usize, usize) {
    let (ia, ib) = (i >> n, i & ((1 << n) - 1));
    ((ia >> (n - 1 - k)) & 1, (ib >> (n - 1 - k)) & 1)
}

/// Exact local twirl on qubits `q, q+1` of both copies, through the partial
/// traces `Tr_g[(P_μ ⊗ I) X]`.
fn twirl_on_pair(x: &DMatrix<C64>, n: usize, q: usize, basis: &CommutantBasis) -> Result<DMatrix<C64>> {
    let dd = 1usize << (2 * n);
    let rest = dd / 16;
    // full index <-> (gate index, rest index)
    let mut split = vec![(0usize, 0usize); dd];
    let mut join = vec![vec![0usize; rest]; 16];
    for (i, slot) in split.iter_mut().enumerate() {
        let (a0, b0) = qubit_bits(i, n, q);
        let (a1, b1) = qubit_bits(i, n, q + 1);
        let g = 4 * (2 * a0 + a1) + (2 * b0 + b1);
        let mut r = 0;
        for k in (0..n).filter(|&k| k != q && k != q + 1) {
            let (a, b) = qubit_bits(i, n, k);
            r = (r << 2) | (a << 1) | b;
        }
        *slot = (g, r);
        join[g][r] = i;
    }
    let ops: Vec<Vec<(usize, usize, C64)>> = basis.operators().iter().map(|o| o.entries()).collect();
    let pinv = basis.gram_pinv();
    let mut out = DMatrix::<C64>::zeros(dd, dd);
    for r in 0..rest {
        for rp in 0..rest {
            let b: Vec<C64> = ops
                .iter()
                .map(|e| e.iter().map(|&(h, hp, v)| v * x[(join[hp][r], join[h][rp])]).sum())
                .collect();
            for (nu, e) in ops.iter().enumerate() {
                let c: C64 = (0..ops.len()).map(|mu| b[mu] * pinv[(nu, mu)]).sum();
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                for &(g, gp, v) in e {
                    out[(join[g][r], join[gp][rp])] += c * v;
                }
            }
        }
    }
    Ok(out)
}

/// Reduced coordinates of the `d = 4, t = 2` Levi-Civita operator on two
/// qubits.
fn levi_civita_coords() -> Vec<f64> {
    let eps = crate::reps::levi_civita_rep(4)
        .and_then(|o| o.to_matrix())
        .expect("levi-civita operator at d=4");
    let q = qubit_basis();
    let g = qubit_gram();
    let metric = DMatrix::from_fn(9, 9, |i, j| g[(i / 3, j / 3)] * g[(i % 3, j % 3)]);
    let overlaps = DMatrix::from_fn(9, 1, |k, _| {
        pair_to_gate(&q[k / 3], &q[k % 3])
            .iter()
            .zip(eps.iter())
            .map(|(p, v)| p.conj() * v)
            .sum::<C64>()
            .re
    });
    let coords = metric.try_inverse().expect("product metric is invertible") * overlaps;
    coords.iter().cloned().collect()
}

/// `N_SP / N_U = [ln(1/λ_U) / ln(1/λ_SP)] · (n_SP / n_U)`: total parameter
/// ratio at equal design quality, from per-layer gaps and per-gate counts.
pub fn parameter_ratio(lambda_u: f64, lambda_sp: f64, params_u: usize, params_sp: usize) -> Result<f64> {
    for (name, l) in [("λ_U", lambda_u), ("λ_SP", lambda_sp)] {
        if !(l > 0.0 && l < 1.0) {
            return Err(Error::Domain(format!("{name} must lie in (0, 1), got {l}")));
        }
    }
    if params_u == 0 || params_sp == 0 {
        return Err(Error::Domain("parameter counts must be positive".into()));
    }
    Ok((1.0 / lambda_u).ln() / (1.0 / lambda_sp).ln() * params_sp as f64 / params_u as f64)
}

/// Smallest `L ≥ 0` with `λ^L ≤ ε / 2^n`.
pub fn design_depth(lambda: f64, epsilon: f64, n: usize) -> Result<u64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("λ must lie in (0, 1), got {lambda}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("ε must lie in (0, 1), got {epsilon}")));
    }
    let log_target = epsilon.ln() - n as f64 * std::f64::consts::LN_2;
    let log_l = lambda.ln();
    let holds = |l: u64| l as f64 * log_l <= log_target;
    let mut l = (log_target / log_l).ceil().max(0.0) as u64;
    while !holds(l) {
        l += 1;
    }
    while l > 0 && holds(l - 1) {
        l -= 1;
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rank(m: &DMatrix<C64>) -> usize {
        let sv = m.clone().svd(false, false).singular_values;
        let max = sv.iter().cloned().fold(0.0, f64::max);
        sv.iter().filter(|&&s| s > 1e-9 * max).count()
    }

    #[test]
    fn brick_layout() {
        let a = BrickArchitecture::unitary(5).unwrap();
        let pairs: Vec<_> = a.ordered_gates().iter().map(|g| (g.sublayer, g.first)).collect();
        assert_eq!(pairs, vec![(0, 0), (0, 2), (1, 1), (1, 3)]);
        let s = BrickArchitecture::symplectic(4).unwrap();
        assert_eq!(s.gates.iter().filter(|g| g.group == LocalGroup::Sp2).count(), 1);
        assert_eq!(s.parameters_per_layer(), 10 + 6 + 6);
        assert!(BrickArchitecture::unitary(1).is_err());
    }

    #[test]
    fn single_gates_are_projectors() {
        for (group, fixed) in [(LocalGroup::Su4, 2), (LocalGroup::Sp2, 3), (LocalGroup::So4, 4)] {
            let op = MomentOperator::new(&BrickArchitecture::single_gate(group)).unwrap();
            let s = op.full_superoperator().unwrap();
            assert!(crate::operator::frobenius_distance(&(&s * &s), &s) < 1e-10);
            assert_eq!(rank(&s), fixed);
            let gap = op.spectral_gap(&GapOptions::default()).unwrap();
            assert!(gap.lambda.abs() < 1e-12, "{group:?}: {}", gap.lambda);
        }
    }

    #[test]
    fn reduced_matches_full_space() {
        for arch in [BrickArchitecture::unitary(3).unwrap(), BrickArchitecture::symplectic(3).unwrap()] {
            let op = MomentOperator::new(&arch).unwrap();
            let mut s = EnsembleSpec::new(GroupFamily::Unitary, 1, 3, 0).unwrap().sampler().unwrap();
            let v: Vec<f64> = s.gaussian_vector(27).iter().map(|z| z.re).collect();
            let full = op.apply_full(&op.embed(&v).unwrap()).unwrap();
            let reduced = op.embed(&op.apply_reduced(&v)).unwrap();
            assert!(crate::operator::frobenius_distance(&full, &reduced) < 1e-10);
        }
    }

    #[test]
    fn spectra_in_unit_interval_and_gap_agrees() {
        for n in 2..=4 {
            for arch in [BrickArchitecture::unitary(n).unwrap(), BrickArchitecture::symplectic(n).unwrap()] {
                let op = MomentOperator::new(&arch).unwrap();
                let spec = op.spectrum().unwrap();
                for z in &spec {
                    assert!(z.im.abs() < 1e-8 && z.re > -1e-10 && z.re < 1.0 + 1e-10);
                }
                let dense_gap = spec.iter().map(|z| z.re).find(|&x| x < 1.0 - FIXED_TOL).unwrap();
                let gap = op.spectral_gap(&GapOptions::default()).unwrap();
                assert!((gap.lambda - dense_gap).abs() < 1e-8, "n={n}: {} vs {dense_gap}", gap.lambda);
            }
        }
    }

    #[test]
    fn monte_carlo_layer() {
        let n_samples = 10_000;
        for arch in [BrickArchitecture::unitary(2).unwrap(), BrickArchitecture::symplectic(3).unwrap()] {
            let op = MomentOperator::new(&arch).unwrap();
            let dd = 1 << (2 * arch.n_qubits);
            let mut s = EnsembleSpec::new(GroupFamily::Unitary, 1, 8, 0).unwrap().sampler().unwrap();
            let g = s.gaussian_vector(dd * dd);
            let x = DMatrix::from_fn(dd, dd, |i, j| g[i * dd + j]);
            let exact = op.apply_full(&x).unwrap();
            let mc = op.mc_apply_full(&x, n_samples, 5).unwrap();
            let scale = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let dist = crate::operator::frobenius_distance(&exact, &mc);
            assert!(dist <= 5.0 * scale / (n_samples as f64).sqrt(), "{dist}");
        }
    }

    #[test]
    fn ratio_and_depth() {
        assert!((parameter_ratio(0.5, 0.5, 7, 7).unwrap() - 1.0).abs() < 1e-15);
        let r = parameter_ratio(0.64, 0.6461, 15, 15).unwrap();
        assert!((r - (1.0f64 / 0.64).ln() / (1.0f64 / 0.6461).ln()).abs() < 1e-15);
        assert!(
            (parameter_ratio(0.64, 0.6461, 30, 12).unwrap() - parameter_ratio(0.64, 0.6461, 15, 6).unwrap()).abs()
                < 1e-15
        );
        assert!(parameter_ratio(1.0, 0.5, 1, 1).is_err());
        assert_eq!(design_depth(0.5, 0.5, 1).unwrap(), 2);
        let expect = ((100.0f64).ln() + 8.0 * 2f64.ln()) / (1.0f64 / 0.64).ln();
        assert_eq!(design_depth(0.64, 0.01, 8).unwrap(), expect.ceil() as u64);
        assert_eq!(design_depth(0.5, 0.999, 0).unwrap(), 1);
        assert!(design_depth(0.5, 1.0, 0).is_err());
    }
}
