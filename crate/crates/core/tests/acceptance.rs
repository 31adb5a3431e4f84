//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion (with
//! indented detail lines underneath) and exits non-zero if any criterion
//! fails. Tolerances are pinned here, not taken from library constants.

use std::process::ExitCode;
use std::time::Instant;

use designlab::brauer::{compose, double_factorial_odd, enumerate_pairings, Pairing};
use designlab::circuits::{parameter_ratio, BrickArchitecture, GapOptions, LocalGroup, MomentOperator};
use designlab::designs::{self, Embedding};
use designlab::reps::{self, rising_factorial, signed_brauer_rep};
use designlab::sampling::{haar_symplectic, haar_unitary};
use designlab::shadows::{self, ShadowProtocol};
use designlab::weingarten::CommutantBasis;
use designlab::{EnsembleSpec, GroupFamily, C64};
use nalgebra::{DMatrix, DVector};

const TOL_EXACT: f64 = 1e-10;
const TOL_LEMMA: f64 = 1e-12;
const TOL_GAP_ZERO: f64 = 1e-10;
const GAP_MIN: f64 = 1e-3;
const RATIO_LO: f64 = 0.395;
const RATIO_HI: f64 = 0.405;
const SOFT_LAMBDA: f64 = 0.64;
const SOFT_LAMBDA_TOL: f64 = 0.05;
const SEED: u64 = 20240611;

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { pass: true, summary: String::new(), details: Vec::new() }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.details.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, line: String) {
        self.details.push(format!("note {line}"));
    }
}

fn random_state(d: usize, seed: u64, stream: u64) -> Vec<C64> {
    let mut s = EnsembleSpec::new(GroupFamily::Unitary, d, seed, stream).unwrap().sampler().unwrap();
    let v = s.gaussian_vector(d);
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

fn pure(psi: &[C64]) -> DMatrix<C64> {
    let v = DVector::from_column_slice(psi);
    &v * v.adjoint()
}

fn c1_symplectic_design() -> Outcome {
    let mut o = Outcome::new();
    let mut cases: Vec<(usize, usize)> = [4, 6, 8].iter().flat_map(|&d| (1..=3).map(move |t| (d, t))).collect();
    cases.push((4, 4));
    let mut worst: f64 = 0.0;
    for (d, t) in cases {
        let start = Instant::now();
        let r = designs::state_design_exact(GroupFamily::Symplectic, t, d).unwrap();
        worst = worst.max(r.distance);
        o.check(
            r.distance <= TOL_EXACT,
            format!("d={d} t={t}: ‖E_SP − Π_sym‖_F = {:.3e} ({:.2?})", r.distance, start.elapsed()),
        );
    }
    o.summary = format!("exact symplectic moments of |0⟩ equal Π_sym, worst {worst:.3e} ≤ {TOL_EXACT:e}");
    o
}

fn c2_annihilation() -> Outcome {
    let mut o = Outcome::new();
    let mut worst: f64 = 0.0;
    let mut control_min = f64::INFINITY;
    for t in [2, 3] {
        for d in [2, 4, 6] {
            let mut case_worst: f64 = 0.0;
            for k in 0..5 {
                let psi = random_state(d, SEED, (100 * t + 10 * d + k) as u64);
                for e in designs::lemma1_residuals(t, d, &psi).unwrap() {
                    if e.is_permutation {
                        control_min = control_min.min(e.state_left);
                    } else {
                        case_worst = case_worst.max(e.max_residual());
                    }
                }
            }
            worst = worst.max(case_worst);
            o.check(case_worst <= TOL_LEMMA, format!("t={t} d={d}: max non-permutation residual {case_worst:.3e}"));
        }
    }
    o.check(control_min > 0.5, format!("permutation control norms stay at 1 (min {control_min:.6})"));
    o.summary = format!("non-permutation diagrams annihilate ψ^⊗t and Π_sym, worst {worst:.3e} ≤ {TOL_LEMMA:e}");
    o
}

fn c3_mixed_gap() -> Outcome {
    let mut o = Outcome::new();
    for embedding in [Embedding::FirstTwo, Embedding::OmegaPartners] {
        let half = designs::mixed_state_gap(0.5, 4, embedding).unwrap();
        o.check(half.gap > GAP_MIN, format!("{embedding:?} λ₀=1/2 d=4: gap {:.6}", half.gap));
        let one = designs::mixed_state_gap(1.0, 4, embedding).unwrap();
        o.check(one.gap <= TOL_GAP_ZERO, format!("{embedding:?} λ₀=1 d=4: gap {:.3e}", one.gap));
    }
    for d in [4, 6] {
        for lambda0 in [0.5, 0.8] {
            for embedding in [Embedding::FirstTwo, Embedding::OmegaPartners] {
                let r = designs::mixed_state_gap(lambda0, d, embedding).unwrap();
                let cu = r.unitary_closed_form_error.unwrap();
                let cs = r.symplectic_closed_form_error.unwrap();
                o.check(
                    cu <= TOL_EXACT && cs <= TOL_EXACT,
                    format!("{embedding:?} d={d} λ₀={lambda0}: closed forms off by {cu:.3e} (U), {cs:.3e} (SP)"),
                );
                if let Some(s) = r.substituted_form_error {
                    o.check(s <= TOL_EXACT, format!("{embedding:?} d={d} λ₀={lambda0}: spectral substitution off by {s:.3e}"));
                }
            }
        }
    }
    let two = designs::mixed_state_gap(0.5, 2, Embedding::FirstTwo).unwrap();
    o.check(!two.closed_form_applicable, format!("d=2: closed form flagged not applicable, gap {:.3e}", two.gap));
    o.summary = "mixed states separate U from SP; pure states do not; closed forms match".into();
    o
}

fn c4_monte_carlo() -> Outcome {
    let mut o = Outcome::new();
    let n = 100_000;
    let tol = 5.0 / (n as f64).sqrt();
    let start = Instant::now();
    let spec = EnsembleSpec::new(GroupFamily::Symplectic, 4, SEED, 0).unwrap();
    let r = designs::state_design_mc(&spec, 2, n).unwrap();
    o.check(
        r.distance <= tol,
        format!("d=4 t=2 N={n}: distance {:.3e} vs 5/√N = {tol:.3e} ({:.2?})", r.distance, start.elapsed()),
    );
    o.summary = format!("Monte-Carlo symplectic moment within {tol:.3e} of Π_sym");
    o
}

fn c5_shadows() -> Outcome {
    let mut o = Outcome::new();
    for d in [2, 4, 6] {
        let dist = shadows::channel_distance(d).unwrap();
        o.check(dist <= TOL_EXACT, format!("d={d}: ‖M_U − M_SP‖ = {dist:.3e}"));
    }
    for d in [2, 4] {
        let m = shadows::third_moment_equality(d).unwrap();
        o.check(m.distance <= TOL_EXACT, format!("d={d}: third moments differ by {:.3e}", m.distance));
    }
    let d = 4;
    let n = 100_000;
    let z = DMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]));
    let mut xx = DMatrix::zeros(d, d);
    for (a, b) in [(0, 3), (1, 2)] {
        xx[(a, b)] = C64::new(1.0, 0.0);
        xx[(b, a)] = C64::new(1.0, 0.0);
    }
    let proj1 = pure(&random_state(d, SEED, 901));
    let pairs = [
        ("ψ_a, Z⊗I", pure(&random_state(d, SEED, 900)), z.clone()),
        ("ψ_b, X⊗X", pure(&random_state(d, SEED, 902)), xx),
        ("mixed, |φ⟩⟨φ|", {
            let p = pure(&random_state(d, SEED, 903));
            p * C64::new(0.7, 0.0) + DMatrix::identity(d, d) * C64::new(0.3 / d as f64, 0.0)
        }, proj1),
    ];
    for (k, (name, rho, obs)) in pairs.iter().enumerate() {
        let eu = ShadowProtocol::new(EnsembleSpec::new(GroupFamily::Unitary, d, SEED, 10 + k as u64).unwrap(), n)
            .unwrap()
            .estimate_observable(rho, obs)
            .unwrap();
        let es = ShadowProtocol::new(EnsembleSpec::new(GroupFamily::Symplectic, d, SEED, 20 + k as u64).unwrap(), n)
            .unwrap()
            .estimate_observable(rho, obs)
            .unwrap();
        let se = (eu.stderr.powi(2) + es.stderr.powi(2)).sqrt();
        let diff = (eu.mean - es.mean).abs();
        o.check(
            diff <= 3.0 * se,
            format!(
                "{name}: U {:.5} SP {:.5} (exact {:.5}), |Δ| = {diff:.2e} ≤ 3σ = {:.2e}",
                eu.mean,
                es.mean,
                eu.exact_mean,
                3.0 * se
            ),
        );
        o.note(format!(
            "{name}: variances U {:.4} (exact {:.4}), SP {:.4} (exact {:.4})",
            eu.variance, eu.exact_variance, es.variance, es.exact_variance
        ));
    }
    o.summary = "shadow channels and third moments coincide; estimators agree".into();
    o
}

fn sym_indicator(basis: &CommutantBasis) -> DVector<f64> {
    let s = basis.permutation_count();
    DVector::from_fn(basis.len(), |i, _| if i < s { 1.0 } else { 0.0 })
}

fn c6_gram_eigenvector() -> Outcome {
    let mut o = Outcome::new();
    for (d, t) in [(4, 2), (4, 3), (6, 2), (6, 3)] {
        let basis = CommutantBasis::build(GroupFamily::Symplectic, t, d).unwrap();
        let w = basis.gram();
        let v = sym_indicator(&basis);
        let wv = w * &v;
        let scale = w.norm();
        let literal = (&wv - &v).norm();
        o.check(
            literal <= TOL_EXACT * scale,
            format!("d={d} t={t}: ‖W(1_S,0) − (1_S,0)‖ = {literal:.6e} (relative {:.3e})", literal / scale),
        );
        let dt = rising_factorial(d, t);
        let eig = (&wv - &v * dt).norm();
        o.note(format!("d={d} t={t}: ‖W(1_S,0) − D_t(1_S,0)‖ = {eig:.3e} with D_t = {dt}"));
        let res = basis.pinv_residuals();
        let pinv_scale = basis.gram_pinv().norm();
        o.check(
            res.gram <= TOL_EXACT * scale && res.pinv <= TOL_EXACT * pinv_scale,
            format!("d={d} t={t}: pinv identities {:.3e}, {:.3e} (relative)", res.gram / scale, res.pinv / pinv_scale),
        );
        let psi = designs::reference_state(d);
        let routes = designs::two_routes(t, d, &psi).unwrap();
        o.note(format!(
            "d={d} t={t}: Σ c_π = {:.12} (t!/D_t = {:.12}), route distance {:.3e}",
            routes.permutation_coefficient_sum, routes.expected_sum, routes.route_distance
        ));
    }
    o.summary = "W(1_S,0) = (1_S,0) and pseudo-inverse identities".into();
    o
}

fn c7_ratio() -> Outcome {
    let mut o = Outcome::new();
    let r = parameter_ratio(0.64, 0.6461, 15, 6).unwrap();
    o.check(
        (RATIO_LO..=RATIO_HI).contains(&r),
        format!("parameter_ratio(0.64, 0.6461, 15, 6) = {r:.17} vs [{RATIO_LO}, {RATIO_HI}]"),
    );
    let depth_ratio = (1.0 / 0.6461f64).ln().recip() / (1.0 / 0.64f64).ln().recip();
    o.note(format!("depth ratio alone {depth_ratio:.6}, parameter ratio 6/15 = {:.6}", 6.0 / 15.0));
    o.summary = format!("parameter ratio {r:.6}");
    o
}

fn c8_circuits() -> Outcome {
    let mut o = Outcome::new();
    let opts = GapOptions::default();
    for g in [LocalGroup::Su4, LocalGroup::Sp2, LocalGroup::So4] {
        let m = MomentOperator::new(&BrickArchitecture::single_gate(g)).unwrap();
        let spec = m.spectrum().unwrap();
        let lambda = spec
            .iter()
            .map(|z| z.norm())
            .filter(|&x| x < 1.0 - 1e-8)
            .fold(0.0, f64::max);
        o.check(lambda <= 1e-12, format!("single {g:?} gate: largest non-fixed eigenvalue {lambda:.3e}"));
    }
    for n in 2..=5 {
        for arch in [BrickArchitecture::unitary(n).unwrap(), BrickArchitecture::symplectic(n).unwrap()] {
            let m = MomentOperator::new(&arch).unwrap();
            let spec = m.spectrum().unwrap();
            let inside = spec.iter().all(|z| z.im.abs() <= 1e-8 && z.re >= -1e-10 && z.re <= 1.0 + 1e-10);
            let lo = spec.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
            let hi = spec.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
            o.check(inside, format!("{:?} n={n}: spectrum in [{lo:.3e}, {hi:.12}]", arch.kind));
        }
    }
    let m = MomentOperator::new(&BrickArchitecture::unitary(5).unwrap()).unwrap();
    let gap = m.spectral_gap(&opts).unwrap();
    let off = (gap.lambda - SOFT_LAMBDA).abs();
    o.note(format!(
        "soft: λ(n=5, unitary) = {:.6}, |λ − {SOFT_LAMBDA}| = {off:.4} {} {SOFT_LAMBDA_TOL} (non-fatal)",
        gap.lambda,
        if off <= SOFT_LAMBDA_TOL { "≤" } else { ">" }
    ));
    let ms = MomentOperator::new(&BrickArchitecture::symplectic(5).unwrap()).unwrap();
    let gs = ms.spectral_gap(&opts).unwrap();
    o.note(format!("soft: λ(n=5, symplectic) = {:.6}", gs.lambda));
    o.summary = "single gates project; brickwork spectra lie in [0, 1]".into();
    o
}

/// Independent matching enumerator: always pair the lowest free point.
fn oracle_matchings(free: u32, n: usize) -> Vec<Vec<(usize, usize)>> {
    if free == 0 {
        return vec![Vec::new()];
    }
    let i = free.trailing_zeros() as usize;
    let mut out = Vec::new();
    for j in (i + 1)..n {
        if free & (1 << j) != 0 {
            for mut rest in oracle_matchings(free & !(1 << i) & !(1 << j), n) {
                rest.push((i, j));
                rest.sort_unstable();
                out.push(rest);
            }
        }
    }
    out
}

fn homomorphism_defect(a: &Pairing, b: &Pairing, d: usize) -> f64 {
    let ab = compose(a, b).unwrap();
    let lhs = signed_brauer_rep(a, d).unwrap().matmul(&signed_brauer_rep(b, d).unwrap()).unwrap();
    let w = (-(d as f64)).powi(ab.loop_power as i32);
    let rhs = signed_brauer_rep(&ab.diagram, d).unwrap().scale(C64::new(w, 0.0));
    lhs.frobenius_distance(&rhs).unwrap()
}

fn c9_brauer() -> Outcome {
    let mut o = Outcome::new();
    for t in 1..=6 {
        let n = 2 * t;
        let mut oracle = oracle_matchings((1u32 << n) - 1, n);
        oracle.sort();
        let mut ours: Vec<_> = enumerate_pairings(t).unwrap().iter().map(Pairing::pairs).collect();
        ours.sort();
        o.check(
            ours == oracle && ours.len() as u128 == double_factorial_odd(t),
            format!("t={t}: {} pairings, oracle {}, (2t−1)!! = {}", ours.len(), oracle.len(), double_factorial_odd(t)),
        );
    }
    let all2 = enumerate_pairings(2).unwrap();
    for d in [2, 4] {
        let worst = all2
            .iter()
            .flat_map(|a| all2.iter().map(move |b| (a, b)))
            .map(|(a, b)| homomorphism_defect(a, b, d))
            .fold(0.0, f64::max);
        o.check(worst <= TOL_EXACT, format!("t=2 d={d} exhaustive ({} products): worst {worst:.3e}", all2.len().pow(2)));
    }
    let all3 = enumerate_pairings(3).unwrap();
    let mut s = EnsembleSpec::new(GroupFamily::Unitary, 2, SEED, 9).unwrap().sampler().unwrap();
    let mut worst3: f64 = 0.0;
    for _ in 0..60 {
        let i = (s.uniform() * all3.len() as f64) as usize;
        let j = (s.uniform() * all3.len() as f64) as usize;
        worst3 = worst3.max(homomorphism_defect(&all3[i], &all3[j], 4));
    }
    o.check(worst3 <= TOL_EXACT, format!("t=3 d=4 random (60 products): worst {worst3:.3e}"));
    let sign_flips = all2
        .iter()
        .flat_map(|a| all2.iter().map(move |b| (a, b)))
        .filter(|(a, b)| a.crossing_sign() * b.crossing_sign() * compose(a, b).unwrap().diagram.crossing_sign() < 0)
        .count();
    o.note(format!(
        "checked on s(σ)F_d(σ) with s the crossing sign; F_d itself picks up s(a)s(b)s(a∘b) on {sign_flips} of 9 products at t=2"
    ));
    o.summary = "pairing counts against an independent enumerator and the (−d)^loops homomorphism".into();
    o
}

fn c10_commutation() -> Outcome {
    let mut o = Outcome::new();
    let d = 4;
    let mut worst: f64 = 0.0;
    for family in [GroupFamily::Unitary, GroupFamily::Symplectic] {
        let spec = EnsembleSpec::new(family, d, SEED, 0).unwrap();
        for t in [2, 3] {
            let basis = CommutantBasis::build(family, t, d).unwrap();
            let mut case: f64 = 0.0;
            for k in 0..20 {
                let u = match family {
                    GroupFamily::Symplectic => haar_symplectic(&spec.with_stream(k)),
                    _ => haar_unitary(&spec.with_stream(k)),
                }
                .unwrap()
                .to_matrix()
                .unwrap();
                for f in basis.operators() {
                    case = case.max(reps::commutator_norm(f, &u).unwrap());
                }
            }
            worst = worst.max(case);
            o.check(
                case <= TOL_EXACT,
                format!("{family} t={t}: max ‖[A, U^⊗t]‖ over 20 samples, {} operators = {case:.3e}", basis.len()),
            );
        }
    }
    o.summary = format!("commutant operators commute with U(4) and SP(2) tensor powers, worst {worst:.3e}");
    o
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("1", c1_symplectic_design),
        ("2", c2_annihilation),
        ("3", c3_mixed_gap),
        ("4", c4_monte_carlo),
        ("5", c5_shadows),
        ("6", c6_gram_eigenvector),
        ("7", c7_ratio),
        ("8", c8_circuits),
        ("9", c9_brauer),
        ("10", c10_commutation),
    ];
    let mut failed = Vec::new();
    for (id, run) in criteria {
        let start = Instant::now();
        let out = run();
        println!(
            "{} criterion {id}: {} [{:.2?}]",
            if out.pass { "PASS" } else { "FAIL" },
            out.summary,
            start.elapsed()
        );
        for line in &out.details {
            println!("    {line}");
        }
        if !out.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
