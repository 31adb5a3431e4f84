//! State-design verdicts: annihilation residuals of non-permutation
//! diagrams, distances of group moments to the symmetric projector, and the
//! rank-two mixed-state counterexample.

use serde::Serialize;

use crate::brauer::enumerate_pairings;
use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::reps::{self, sym_projector};
use crate::sampling::{EnsembleSpec, GroupFamily};
use crate::weingarten::{self, CommutantBasis};
use crate::C64;

/// Exact-mode design tolerance (Frobenius).
pub const EXACT_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-10;

/// `|0⟩` in dimension `d`.
pub fn reference_state(d: usize) -> Vec<C64> {
    basis_state(d, 0)
}

fn basis_state(d: usize, k: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); d];
    v[k] = C64::new(1.0, 0.0);
    v
}

fn check_normalized(psi: &[C64]) -> Result<()> {
    let norm = psi.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::Normalization(norm));
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct Lemma1Entry {
    pub diagram: String,
    pub is_permutation: bool,
    /// `‖F(σ) |ψ⟩⟨ψ|^⊗t‖_F`
    pub state_left: f64,
    /// `‖|ψ⟩⟨ψ|^⊗t F(σ)‖_F`
    pub state_right: f64,
    /// `‖F(σ) Π_sym‖_F`
    pub sym_left: f64,
    /// `‖Π_sym F(σ)‖_F`
    pub sym_right: f64,
}

impl Lemma1Entry {
    pub fn max_residual(&self) -> f64 {
        self.state_left
            .max(self.state_right)
            .max(self.sym_left)
            .max(self.sym_right)
    }
}

/// Residuals of every diagram operator against `|ψ⟩⟨ψ|^⊗t` and `Π_sym`.
/// Non-permutation diagrams annihilate both; permutations are the control.
pub fn lemma1_residuals(t: usize, d: usize, psi: &[C64]) -> Result<Vec<Lemma1Entry>> {
    if psi.len() != d {
        return Err(Error::Dimension(format!("state has length {}, expected {d}", psi.len())));
    }
    check_normalized(psi)?;
    let x = Operator::pure_tensor_power(psi, t)?;
    let pi = sym_projector(t, d)?;
    enumerate_pairings(t)?
        .iter()
        .map(|sigma| {
            let f = reps::brauer_rep(sigma, d)?;
            Ok(Lemma1Entry {
                diagram: sigma.to_string(),
                is_permutation: sigma.is_permutation(),
                state_left: f.matmul(&x)?.frobenius_norm(),
                state_right: x.matmul(&f)?.frobenius_norm(),
                sym_left: f.matmul(&pi)?.frobenius_norm(),
                sym_right: pi.matmul(&f)?.frobenius_norm(),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignMode {
    Exact,
    MonteCarlo,
}

#[derive(Clone, Debug, Serialize)]
pub struct DesignReport {
    pub family: GroupFamily,
    pub t: usize,
    pub d: usize,
    pub mode: DesignMode,
    /// `‖E_G[(U|ψ⟩⟨ψ|U†)^⊗t] − Π_sym‖_F`
    pub distance: f64,
    pub samples: Option<usize>,
    pub tolerance: f64,
    pub verdict: bool,
}

/// Statistical tolerance for a Monte-Carlo moment at `n` samples:
/// `5/√N` for `t ≤ 2` and `10/√N` beyond.
pub fn mc_tolerance(t: usize, n: usize) -> f64 {
    let k = if t <= 2 { 5.0 } else { 10.0 };
    k / (n as f64).sqrt()
}

/// Exact design test from `|0⟩`.
pub fn state_design_exact(family: GroupFamily, t: usize, d: usize) -> Result<DesignReport> {
    state_design_exact_from(family, t, d, &reference_state(d))
}

pub fn state_design_exact_from(
    family: GroupFamily,
    t: usize,
    d: usize,
    psi: &[C64],
) -> Result<DesignReport> {
    check_normalized(psi)?;
    let basis = CommutantBasis::build(family, t, d)?;
    let x = Operator::pure_tensor_power(psi, t)?;
    let out = basis.twirl(&x)?.operator;
    let distance = out.frobenius_distance(&sym_projector(t, d)?)?;
    Ok(DesignReport {
        family,
        t,
        d,
        mode: DesignMode::Exact,
        distance,
        samples: None,
        tolerance: EXACT_TOL,
        verdict: distance <= EXACT_TOL,
    })
}

/// Monte-Carlo design test from `|0⟩` over `n` samples of `spec`.
pub fn state_design_mc(spec: &EnsembleSpec, t: usize, n: usize) -> Result<DesignReport> {
    let d = spec.d;
    let x = Operator::pure_tensor_power(&reference_state(d), t)?;
    let mc = weingarten::mc_twirl(&x, spec, n)?;
    let distance = mc.frobenius_distance(&sym_projector(t, d)?)?;
    let tolerance = mc_tolerance(t, n);
    Ok(DesignReport {
        family: spec.family,
        t,
        d,
        mode: DesignMode::MonteCarlo,
        distance,
        samples: Some(n),
        tolerance,
        verdict: distance <= tolerance,
    })
}

/// Dispatches on `mode`; `n` and `seed` only matter for Monte-Carlo.
pub fn state_design_test(
    family: GroupFamily,
    t: usize,
    d: usize,
    mode: DesignMode,
    n: usize,
    seed: u64,
) -> Result<DesignReport> {
    match mode {
        DesignMode::Exact => state_design_exact(family, t, d),
        DesignMode::MonteCarlo => state_design_mc(&EnsembleSpec::new(family, d, seed, 0)?, t, n),
    }
}

/// Both evaluations of the symplectic moment of a pure tensor power.
#[derive(Clone, Debug, Serialize)]
pub struct TwoRoutes {
    /// `Σ_π c_π` over the permutation block of the coefficients.
    pub permutation_coefficient_sum: f64,
    /// `t!/D_t`, what that sum must equal.
    pub expected_sum: f64,
    /// Largest `|c_σ|` over non-permutation diagrams.
    pub max_non_permutation_coefficient: f64,
    /// `‖Σ_ν c_ν F_ν − (Σ_π c_π) Q‖_F` with `Q = Σ_π P_π / t!`.
    pub route_distance: f64,
}

/// Coefficient route vs annihilation route. Sandwiching the twirl between
/// the symmetric projector `Q` kills every non-permutation diagram and sends
/// every permutation to `Q`, so the moment equals `(Σ_π c_π) Q`.
pub fn two_routes(t: usize, d: usize, psi: &[C64]) -> Result<TwoRoutes> {
    check_normalized(psi)?;
    let basis = CommutantBasis::build(GroupFamily::Symplectic, t, d)?;
    let x = Operator::pure_tensor_power(psi, t)?;
    let tw = basis.twirl(&x)?;
    let s = basis.permutation_count();
    let sum: f64 = tw.coefficients[..s].iter().map(|c| c.re).sum();
    let max_np = tw.coefficients[s..].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let t_fact: f64 = (1..=t).map(|k| k as f64).product();
    let q = sym_projector(t, d)?.scale(C64::new(reps::rising_factorial(d, t) / t_fact, 0.0));
    let route = q.scale(C64::new(sum, 0.0));
    Ok(TwoRoutes {
        permutation_coefficient_sum: sum,
        expected_sum: t_fact / reps::rising_factorial(d, t),
        max_non_permutation_coefficient: max_np,
        route_distance: tw.operator.frobenius_distance(&route)?,
    })
}

/// Where the two pure components of the rank-two state sit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Embedding {
    /// `|0⟩` and `|1⟩`.
    FirstTwo,
    /// `|0⟩` and its `Ω`-partner `|d/2⟩`; for one qubit this is the same
    /// as [`Embedding::FirstTwo`].
    OmegaPartners,
}

impl Embedding {
    fn second_index(self, d: usize) -> usize {
        match self {
            Embedding::FirstTwo => 1,
            Embedding::OmegaPartners => d / 2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MixedGapReport {
    pub spectrum: (f64, f64),
    pub d: usize,
    pub embedding: Embedding,
    pub unitary_labels: Vec<String>,
    pub unitary_coefficients: Vec<f64>,
    pub symplectic_labels: Vec<String>,
    pub symplectic_coefficients: Vec<f64>,
    /// `‖E_U[ρ^⊗2] − E_SP[ρ^⊗2]‖_F`
    pub gap: f64,
    /// False at `d = 2`, where the symplectic closed form divides by zero.
    pub closed_form_applicable: bool,
    pub unitary_closed_form_error: Option<f64>,
    pub symplectic_closed_form_error: Option<f64>,
    /// Closed forms with `Tr[ρ^⊗2 SWAP] = λ₀² + λ₁²` and
    /// `Tr[ρ^⊗2 Φ_s] = −2λ₀λ₁` substituted; the latter holds only for
    /// `Ω`-partner components, so this is `None` for other embeddings.
    pub substituted_form_error: Option<f64>,
}

/// The `t = 2` moments of `ρ = λ₀|a⟩⟨a| + λ₁|b⟩⟨b|` under `U(d)` and
/// `SP(d/2)`, their distance, and the closed forms checked against the
/// generic pseudo-inverse path.
pub fn mixed_state_gap(lambda0: f64, d: usize, embedding: Embedding) -> Result<MixedGapReport> {
    if !(0.0..=1.0).contains(&lambda0) || !lambda0.is_finite() {
        return Err(Error::Domain(format!("λ₀ must lie in [0, 1], got {lambda0}")));
    }
    if !d.is_multiple_of(2) {
        return Err(Error::Parity(d));
    }
    if d < 2 {
        return Err(Error::Domain("dimension must be at least 2".into()));
    }
    let lambda1 = 1.0 - lambda0;
    let a = basis_state(d, 0);
    let b = basis_state(d, embedding.second_index(d));
    let rho = Operator::pure_tensor_power(&a, 1)?
        .scale(C64::new(lambda0, 0.0))
        .add_scaled(&Operator::pure_tensor_power(&b, 1)?, C64::new(lambda1, 0.0))?;
    let rho_m = rho.to_matrix()?;
    let x = Operator::dense(d, 2, crate::operator::kron(&rho_m, &rho_m))?;

    let bu = CommutantBasis::build(GroupFamily::Unitary, 2, d)?;
    let bs = CommutantBasis::build(GroupFamily::Symplectic, 2, d)?;
    let tu = bu.twirl(&x)?;
    let ts = bs.twirl(&x)?;
    let gap = tu.operator.frobenius_distance(&ts.operator)?;

    let applicable = d >= 4;
    let (cu, cs, subst) = if applicable {
        let cu = weingarten::closed_form_unitary_t2(&x)?.frobenius_distance(&tu.operator)?;
        let cs = weingarten::closed_form_symplectic_t2(&x)?.frobenius_distance(&ts.operator)?;
        let subst = if embedding == Embedding::OmegaPartners {
            Some(substituted_forms_error(lambda0, lambda1, d, &tu.operator, &ts.operator)?)
        } else {
            None
        };
        (Some(cu), Some(cs), subst)
    } else {
        (None, None, None)
    };

    Ok(MixedGapReport {
        spectrum: (lambda0, lambda1),
        d,
        embedding,
        unitary_labels: tu.basis_labels,
        unitary_coefficients: tu.coefficients.iter().map(|c| c.re).collect(),
        symplectic_labels: ts.basis_labels,
        symplectic_coefficients: ts.coefficients.iter().map(|c| c.re).collect(),
        gap,
        closed_form_applicable: applicable,
        unitary_closed_form_error: cu,
        symplectic_closed_form_error: cs,
        substituted_form_error: subst,
    })
}

/// Larger of the two distances between the `λ`-substituted closed forms and
/// the given twirls.
fn substituted_forms_error(l0: f64, l1: f64, d: usize, tu: &Operator, ts: &Operator) -> Result<f64> {
    let df = d as f64;
    let p = l0 * l0 + l1 * l1;
    let id = Operator::identity(d, 2)?;
    let swap = reps::perm_rep(&[1, 0], d)?;
    let phi = reps::brauer_rep(&crate::Pairing::new(2, &[(0, 1), (2, 3)])?, d)?;
    let r = |v: f64| C64::new(v, 0.0);
    let u = id
        .scale(r((1.0 - p / df) / (df * df - 1.0)))
        .add_scaled(&swap, r((p - 1.0 / df) / (df * df - 1.0)))?;
    let den = df * (df + 1.0) * (df - 2.0);
    let s = id
        .scale(r(1.0 / (df * (df + 1.0))))
        .add_scaled(&swap, r((-1.0 + (df - 1.0) * p + 2.0 * l0 * l1) / den))?
        .add_scaled(&phi, r((1.0 - p - 2.0 * (df - 1.0) * l0 * l1) / den))?;
    Ok(u.frobenius_distance(tu)?.max(s.frobenius_distance(ts)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use GroupFamily::*;

    fn random_state(d: usize, seed: u64) -> Vec<C64> {
        let mut s = EnsembleSpec::new(Unitary, d, seed, 5).unwrap().sampler().unwrap();
        let v = s.gaussian_vector(d);
        let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / n).collect()
    }

    #[test]
    fn lemma1_small_cases() {
        let psi = reference_state(2);
        let entries = lemma1_residuals(2, 2, &psi).unwrap();
        let cup_cap = entries.iter().find(|e| e.diagram == "2; (1,2)(3,4)").unwrap();
        assert!(cup_cap.max_residual() <= 1e-12);
        let swap = entries.iter().find(|e| e.diagram == "2; (1,4)(2,3)").unwrap();
        assert!((swap.state_left - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lemma1_random_state_t3() {
        let entries = lemma1_residuals(3, 4, &random_state(4, 1)).unwrap();
        let non_perm: Vec<_> = entries.iter().filter(|e| !e.is_permutation).collect();
        assert_eq!(non_perm.len(), 9);
        assert!(non_perm.iter().all(|e| e.max_residual() <= 1e-10));
    }

    #[test]
    fn lemma1_rejects_unnormalized() {
        let psi = vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
        assert!(matches!(lemma1_residuals(2, 2, &psi), Err(Error::Normalization(_))));
    }

    #[test]
    fn exact_designs() {
        let r = state_design_exact(Symplectic, 3, 4).unwrap();
        assert!(r.verdict, "distance {}", r.distance);
        let r = state_design_exact(Unitary, 3, 3).unwrap();
        assert!(r.verdict);
    }

    #[test]
    fn reference_state_is_irrelevant() {
        let base = state_design_exact(Symplectic, 2, 4).unwrap().distance;
        for seed in 0..5 {
            let r = state_design_exact_from(Symplectic, 2, 4, &random_state(4, seed)).unwrap();
            assert!((r.distance - base).abs() <= 1e-10);
        }
    }

    #[test]
    fn routes_agree() {
        for (t, d) in [(2, 4), (3, 4), (2, 6)] {
            let r = two_routes(t, d, &random_state(d, 3)).unwrap();
            assert!(r.route_distance <= 1e-10);
            assert!((r.permutation_coefficient_sum - r.expected_sum).abs() <= 1e-12);
            assert!(r.max_non_permutation_coefficient <= 1e-12);
        }
    }

    #[test]
    fn mixed_gap_behaviour() {
        for emb in [Embedding::FirstTwo, Embedding::OmegaPartners] {
            let pure = mixed_state_gap(1.0, 4, emb).unwrap();
            assert!(pure.gap <= 1e-10);
            let half = mixed_state_gap(0.5, 4, emb).unwrap();
            assert!(half.gap > 1e-3);
            assert!(half.unitary_closed_form_error.unwrap() <= 1e-10);
            assert!(half.symplectic_closed_form_error.unwrap() <= 1e-10);
        }
        let r = mixed_state_gap(0.5, 6, Embedding::OmegaPartners).unwrap();
        assert!(r.substituted_form_error.unwrap() <= 1e-10);
        let small = mixed_state_gap(0.5, 2, Embedding::FirstTwo).unwrap();
        assert!(!small.closed_form_applicable);
        assert!(mixed_state_gap(1.5, 4, Embedding::FirstTwo).is_err());
    }

    #[test]
    fn mc_design_small() {
        let spec = EnsembleSpec::new(Symplectic, 4, 1, 0).unwrap();
        let r = state_design_mc(&spec, 2, 4000).unwrap();
        assert!(r.verdict, "distance {} > {}", r.distance, r.tolerance);
    }
}
