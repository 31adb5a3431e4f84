//! Matrix realizations on `(C^d)^⊗t`: the symplectic form `Ω`, the
//! permutation representation `P_d`, the Brauer representation `F_d` and the
//! normalized symmetric projector.
//!
//! Basis kets `|i_1 … i_t⟩` are indexed by `Σ_k i_k d^{t−1−k}`, so the first
//! copy is the most significant digit.
//!
//! `F_d(σ)` puts `Ω` on every same-row pair and leaves propagating strands
//! as deltas, so `F_d(π) = P_d(π)` on permutations. With that convention
//! the map is a representation of the Brauer algebra only up to a sign:
//!
//! ```text
//! F_d(a) F_d(b) = s(a) s(b) s(a∘b) (−d)^L F_d(a∘b),   s = crossing sign
//! ```
//!
//! [`signed_brauer_rep`] absorbs the sign and is an honest representation of
//! `B_t(−d)`; it spans the same commutant.

use nalgebra::DMatrix;

use crate::brauer::{self, Pairing};
use crate::budget;
use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::C64;

/// The canonical `Ω = [[0, I], [−I, 0]]` on `C^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticForm {
    d: usize,
    matrix: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn to_complex(&self) -> DMatrix<C64> {
        self.matrix.map(|v| C64::new(v, 0.0))
    }

    /// Largest of `‖Ω² + I‖_F`, `‖ΩᵀΩ − I‖_F`, `‖ΩΩᵀ − I‖_F`, `‖Ωᵀ + Ω‖_F`.
    pub fn defect(&self) -> f64 {
        let o = &self.matrix;
        let id = DMatrix::<f64>::identity(self.d, self.d);
        [
            (o * o + &id).norm(),
            (o.transpose() * o - &id).norm(),
            (o * o.transpose() - &id).norm(),
            (o.transpose() + o).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn omega(d: usize) -> Result<SymplecticForm> {
    if d < 2 || !d.is_multiple_of(2) {
        return Err(Error::Parity(d));
    }
    let h = d / 2;
    let matrix = DMatrix::from_fn(d, d, |i, j| {
        if j == i + h {
            1.0
        } else if i == j + h {
            -1.0
        } else {
            0.0
        }
    });
    Ok(SymplecticForm { d, matrix })
}

/// How same-row pairs are weighted when a diagram is realized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CupForm {
    /// `Ω` on caps and cups: the symplectic commutant.
    Symplectic,
    /// Plain `δ_{xy}`: the orthogonal commutant.
    Euclidean,
}

/// The digit paired with `x` by a cup (bottom pair `(k, l)`, entry `Ω_{x y}`)
/// and the entry value.
fn cup_partner(form: CupForm, x: usize, d: usize) -> (usize, f64) {
    match form {
        CupForm::Euclidean => (x, 1.0),
        CupForm::Symplectic => {
            let h = d / 2;
            if x < h {
                (x + h, 1.0)
            } else {
                (x - h, -1.0)
            }
        }
    }
}

/// Same for a cap (top pair `(k, l)`, entry `Ω_{y x}`).
fn cap_partner(form: CupForm, x: usize, d: usize) -> (usize, f64) {
    match form {
        CupForm::Euclidean => (x, 1.0),
        CupForm::Symplectic => {
            let h = d / 2;
            if x < h {
                (x + h, -1.0)
            } else {
                (x - h, 1.0)
            }
        }
    }
}

fn realize(sigma: &Pairing, d: usize, form: CupForm) -> Result<Operator> {
    let t = sigma.t();
    let dim = budget::tensor_dim(d, t)?;
    let pairs = sigma.pairs();
    let place = |digits: &[usize]| digits.iter().fold(0usize, |acc, &x| acc * d + x);
    let mut entries = Vec::with_capacity(dim);
    let mut free = vec![0usize; t];
    let mut out = vec![0usize; t];
    let mut inp = vec![0usize; t];
    for _ in 0..dim {
        let mut weight = 1.0;
        for (&(a, b), &x) in pairs.iter().zip(&free) {
            if b < t {
                let (y, w) = cup_partner(form, x, d);
                inp[a] = x;
                inp[b] = y;
                weight *= w;
            } else if a >= t {
                let (y, w) = cap_partner(form, x, d);
                out[a - t] = x;
                out[b - t] = y;
                weight *= w;
            } else {
                inp[a] = x;
                out[b - t] = x;
            }
        }
        entries.push((place(&out), place(&inp), C64::new(weight, 0.0)));
        // odometer over the free digits
        for digit in free.iter_mut().rev() {
            *digit += 1;
            if *digit < d {
                break;
            }
            *digit = 0;
        }
    }
    Operator::coo(d, t, entries)
}

/// `P_d(π)`: sends `|i_1 … i_t⟩` to the ket whose slot `π(a)` holds `i_a`.
/// `perm` is 0-based one-line notation.
pub fn perm_rep(perm: &[usize], d: usize) -> Result<Operator> {
    let sigma = Pairing::from_permutation(perm)?;
    realize(&sigma, d, CupForm::Euclidean)
}

/// `F_d(σ)` with `Ω` on same-row pairs. Agrees with [`perm_rep`] on permutations.
pub fn brauer_rep(sigma: &Pairing, d: usize) -> Result<Operator> {
    if !d.is_multiple_of(2) {
        return Err(Error::Parity(d));
    }
    realize(sigma, d, CupForm::Symplectic)
}

/// `s(σ) F_d(σ)` with `s` the crossing sign: a representation of `B_t(−d)`.
pub fn signed_brauer_rep(sigma: &Pairing, d: usize) -> Result<Operator> {
    let f = brauer_rep(sigma, d)?;
    Ok(f.scale(C64::new(f64::from(sigma.crossing_sign()), 0.0)))
}

/// Diagram operator with plain deltas on same-row pairs (`δ = d` Brauer
/// representation, the orthogonal commutant).
pub fn orthogonal_brauer_rep(sigma: &Pairing, d: usize) -> Result<Operator> {
    realize(sigma, d, CupForm::Euclidean)
}

/// `Σ sign(p) |p_1 … p_t⟩⟨p_{t+1} … p_d|` over permutations `p` of `0..d`,
/// for even `d` and `t = d/2`. Commutes with `U^⊗t` for `U ∈ SO(d)`.
pub fn levi_civita_rep(d: usize) -> Result<Operator> {
    if !d.is_multiple_of(2) || d == 0 {
        return Err(Error::Parity(d));
    }
    let t = d / 2;
    budget::tensor_dim(d, t)?;
    let index = |digits: &[usize]| digits.iter().fold(0, |acc, &x| acc * d + x);
    let entries = brauer::permutations(d)
        .into_iter()
        .map(|p| {
            // parity by counting inversions
            let inversions = (0..d)
                .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
                .filter(|&(i, j)| p[i] > p[j])
                .count();
            let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
            (index(&p[..t]), index(&p[t..]), C64::new(sign, 0.0))
        })
        .collect();
    Operator::coo(d, t, entries)
}

/// `d (d+1) ⋯ (d+t−1)`.
pub fn rising_factorial(d: usize, t: usize) -> f64 {
    (0..t).map(|k| (d + k) as f64).product()
}

/// `Π_sym = Σ_π P_d(π) / (d (d+1) ⋯ (d+t−1))`, of unit trace.
pub fn sym_projector(t: usize, d: usize) -> Result<Operator> {
    if t == 0 || t > brauer::MAX_ENUMERATION_T {
        return Err(Error::SizeLimit(format!("symmetric projector needs 1 <= t <= 8, got {t}")));
    }
    budget::tensor_dim(d, t)?;
    let norm = C64::new(1.0 / rising_factorial(d, t), 0.0);
    let mut entries = Vec::new();
    for perm in brauer::permutations(t) {
        let p = perm_rep(&perm, d)?;
        entries.extend(p.entries().into_iter().map(|(r, c, v)| (r, c, v * norm)));
    }
    Operator::coo(d, t, entries)
}

/// `‖[A, U^⊗t]‖_F` for a single-copy unitary `u`.
pub fn commutator_norm(a: &Operator, u: &DMatrix<C64>) -> Result<f64> {
    if u.nrows() != a.d() {
        return Err(Error::Dimension(format!(
            "unitary is {}x{}, operator has d={}",
            u.nrows(),
            u.ncols(),
            a.d()
        )));
    }
    let m = a.to_matrix()?;
    let left = crate::operator::apply_tensor_power(u, &m, a.t());
    // A U^⊗t = (U^⊗t† A†)†
    let u_dag = u.adjoint();
    let right = crate::operator::apply_tensor_power(&u_dag, &m.adjoint(), a.t()).adjoint();
    Ok(crate::operator::frobenius_distance(&left, &right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brauer::{compose, enumerate_pairings};

    fn r(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    #[test]
    fn omega_examples() {
        let o = omega(2).unwrap();
        assert_eq!(o.matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        for d in [2, 4, 6] {
            assert!(omega(d).unwrap().defect() <= 1e-15);
        }
        assert_eq!(omega(3).unwrap_err(), Error::Parity(3));
        assert_eq!(omega(0).unwrap_err(), Error::Parity(0));
    }

    #[test]
    fn perm_rep_examples() {
        let id = perm_rep(&[0, 1, 2], 3).unwrap();
        assert_eq!(id, Operator::identity(3, 3).unwrap());
        let swap = perm_rep(&[1, 0], 2).unwrap();
        // SWAP|01⟩ = |10⟩
        assert_eq!(swap.get(2, 1), r(1.0));
        assert_eq!(swap.nnz(), 4);
        let cycle = perm_rep(&[1, 2, 0], 3).unwrap();
        assert_eq!(cycle.trace(), r(3.0));
        assert_eq!(cycle.nnz(), 27);
    }

    #[test]
    fn perm_rep_is_a_homomorphism_on_s3() {
        let perms = brauer::permutations(3);
        for p in &perms {
            for q in &perms {
                // (p∘q)(a) = p(q(a))
                let pq: Vec<usize> = (0..3).map(|a| p[q[a]]).collect();
                let lhs = perm_rep(p, 2).unwrap().matmul(&perm_rep(q, 2).unwrap()).unwrap();
                assert_eq!(lhs, perm_rep(&pq, 2).unwrap());
            }
        }
    }

    #[test]
    fn trace_counts_cycles() {
        // three transpositions have 2 cycles, the 3-cycles have 1
        for (perm, cycles) in [([0, 1, 2], 3), ([1, 0, 2], 2), ([1, 2, 0], 1), ([2, 1, 0], 2)] {
            assert_eq!(perm_rep(&perm, 2).unwrap().trace(), r(2f64.powi(cycles)));
        }
    }

    #[test]
    fn cup_cap_realization() {
        let cc = Pairing::new(2, &[(0, 1), (2, 3)]).unwrap();
        let f = brauer_rep(&cc, 2).unwrap().to_matrix().unwrap();
        // |s⟩ = |01⟩ − |10⟩; F(cup-cap) = −|s⟩⟨s|
        let s = [0.0, 1.0, -1.0, 0.0];
        let expected = DMatrix::from_fn(4, 4, |i, j| r(-s[i] * s[j]));
        assert_eq!(f, expected);
        for d in [2, 4, 6] {
            let op = brauer_rep(&cc, d).unwrap();
            assert_eq!(op.trace(), r(-(d as f64)));
        }
        assert_eq!(brauer_rep(&cc, 3).unwrap_err(), Error::Parity(3));
    }

    #[test]
    fn brauer_rep_matches_perm_rep_on_permutations() {
        for sigma in enumerate_pairings(3).unwrap() {
            if let Some(p) = sigma.to_permutation() {
                assert_eq!(brauer_rep(&sigma, 4).unwrap(), perm_rep(&p, 4).unwrap());
            }
        }
    }

    #[test]
    fn every_diagram_has_d_to_the_t_entries() {
        for sigma in enumerate_pairings(3).unwrap() {
            assert_eq!(brauer_rep(&sigma, 4).unwrap().nnz(), 64);
        }
    }

    #[test]
    fn signed_rep_is_exact_homomorphism_at_t2() {
        for d in [2usize, 4] {
            let diagrams = enumerate_pairings(2).unwrap();
            for a in &diagrams {
                for b in &diagrams {
                    let c = compose(a, b).unwrap();
                    let lhs = signed_brauer_rep(a, d).unwrap().matmul(&signed_brauer_rep(b, d).unwrap()).unwrap();
                    let rhs = signed_brauer_rep(&c.diagram, d)
                        .unwrap()
                        .scale(r((-(d as f64)).powi(c.loop_power as i32)));
                    assert!(lhs.frobenius_distance(&rhs).unwrap() < 1e-12, "{a} * {b}");
                }
            }
        }
    }

    #[test]
    fn sym_projector_examples() {
        let p1 = sym_projector(1, 3).unwrap();
        assert_eq!(p1, Operator::identity(3, 1).unwrap().scale(r(1.0 / 3.0)));
        let p2 = sym_projector(2, 2).unwrap();
        let swap = perm_rep(&[1, 0], 2).unwrap();
        let expected = Operator::identity(2, 2).unwrap().add_scaled(&swap, r(1.0)).unwrap().scale(r(1.0 / 6.0));
        assert!(p2.frobenius_distance(&expected).unwrap() < 1e-15);
        assert!((p2.trace() - r(1.0)).norm() < 1e-15);
        let m = p2.to_matrix().unwrap();
        let mut eig: Vec<f64> = m.map(|v| v.re).symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let want = [0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
        for (a, b) in eig.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sym_projector_squares_to_scaled_copy() {
        for (t, d) in [(2usize, 3usize), (3, 2), (3, 3)] {
            let p = sym_projector(t, d).unwrap();
            let factor = (1..=t).product::<usize>() as f64 / rising_factorial(d, t);
            let sq = p.matmul(&p).unwrap();
            assert!(sq.frobenius_distance(&p.scale(r(factor))).unwrap() < 1e-12);
            for perm in brauer::permutations(t) {
                let pp = p.matmul(&perm_rep(&perm, d).unwrap()).unwrap();
                assert!(pp.frobenius_distance(&p).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(perm_rep(&[], 2), Err(Error::Domain(_))));
        let big = Pairing::identity(8);
        assert!(matches!(brauer_rep(&big, 8), Err(Error::Budget { .. })));
    }
}
