use std::path::Path;

use anyhow::Context;
use designlab::brauer::{self, compose, double_factorial_odd, enumerate_pairings};
use designlab::circuits::{self, BrickArchitecture, GapOptions, LocalGroup, MomentOperator};
use designlab::designs::{self, DesignMode};
use designlab::reps::{self, rising_factorial, signed_brauer_rep};
use designlab::shadows::{self, ShadowProtocol};
use designlab::weingarten::{self, CommutantBasis};
use designlab::{EnsembleSpec, Error, GroupFamily, Operator, C64};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::output::{self, Table};
use crate::{Command, GlobalOpts};

pub struct Outcome {
    pub result: Value,
    pub table: Option<Table>,
    /// False only when a self-test check fails.
    pub ok: bool,
}

impl Outcome {
    fn value(result: Value) -> Self {
        Self { result, table: None, ok: true }
    }
}

fn complex(z: C64) -> Value {
    json!({"re": z.re, "im": z.im})
}

fn check_samples(n: usize, g: &GlobalOpts) -> anyhow::Result<()> {
    if n > g.max_samples {
        return Err(Error::Budget { what: "Monte-Carlo samples".into(), needed: n, budget: g.max_samples }.into());
    }
    if n == 0 {
        return Err(Error::Domain("sample count must be positive".into()).into());
    }
    Ok(())
}

fn read_operator(path: &Path, d: usize, t: usize) -> anyhow::Result<Operator> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Domain(format!("cannot read {}: {e}", path.display())))?;
    let op = Operator::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    if op.d() != d || op.t() != t {
        return Err(Error::Dimension(format!(
            "{} holds an operator on (d={}, t={}), expected (d={d}, t={t})",
            path.display(),
            op.d(),
            op.t()
        ))
        .into());
    }
    Ok(op)
}

pub fn dispatch(cmd: &Command, g: &GlobalOpts) -> anyhow::Result<Outcome> {
    match *cmd {
        Command::Pairings { t, count_only } => pairings(t, count_only),
        Command::Twirl { family, t, d, ref input, state, samples, ref dump } => {
            twirl(family, t, d, input.as_deref(), state, samples, dump.as_deref(), g)
        }
        Command::DesignTest { family, t, d, mode, samples, ref sweep } => {
            design_test(family, t, d, mode.into(), samples, sweep, g)
        }
        Command::Lemma1 { t, d, random_states } => lemma1(t, d, random_states, g),
        Command::MixedGap { lambda0, d, embedding } => {
            Ok(Outcome::value(serde_json::to_value(designs::mixed_state_gap(lambda0, d, embedding.into())?)?))
        }
        Command::Shadows { d, ensemble, samples, ref observable, ref state } => {
            shadow_estimate(d, ensemble, samples, observable.as_deref(), state.as_deref(), g)
        }
        Command::Gap { n, n_max, architecture, tolerance, max_iters } => {
            gap(n, n_max, architecture.into(), tolerance, max_iters, g)
        }
        Command::Ratio { lambda_u, lambda_sp, params_u, params_sp, epsilon, n } => {
            ratio(lambda_u, lambda_sp, params_u, params_sp, epsilon, n)
        }
        Command::Selftest => selftest(g),
    }
}

fn pairings(t: usize, count_only: bool) -> anyhow::Result<Outcome> {
    let all = enumerate_pairings(t)?;
    let mut result = json!({
        "t": t,
        "count": all.len(),
        "expected": u64::try_from(double_factorial_odd(t))?,
        "permutations": all.iter().filter(|p| p.is_permutation()).count(),
    });
    if !count_only {
        result["diagrams"] = all.iter().map(|p| p.to_string()).collect();
    }
    Ok(Outcome::value(result))
}

#[allow(clippy::too_many_arguments)]
fn twirl(
    family: GroupFamily,
    t: usize,
    d: usize,
    input: Option<&Path>,
    state: usize,
    samples: Option<usize>,
    dump: Option<&Path>,
    g: &GlobalOpts,
) -> anyhow::Result<Outcome> {
    let x = match input {
        Some(path) => read_operator(path, d, t)?,
        None => {
            if state >= d {
                return Err(Error::Domain(format!("basis state {state} out of range for d={d}")).into());
            }
            let mut psi = vec![C64::new(0.0, 0.0); d];
            psi[state] = C64::new(1.0, 0.0);
            Operator::pure_tensor_power(&psi, t)?
        }
    };
    let basis = CommutantBasis::build(family, t, d)?;
    let tw = basis.twirl(&x)?;
    let mut result = json!({
        "family": family,
        "t": t,
        "d": d,
        "basis_labels": tw.basis_labels,
        "coefficients": tw.coefficients.iter().copied().map(complex).collect::<Vec<_>>(),
        "trace_in": complex(tw.trace_in),
        "trace_out": complex(tw.trace_out),
        "gram_rank": basis.rank(),
    });
    if let Some(n) = samples {
        check_samples(n, g)?;
        let spec = EnsembleSpec::new(family, d, g.seed, 0)?;
        let mc = weingarten::mc_twirl(&x, &spec, n)?;
        result["monte_carlo"] = json!({
            "samples": n,
            "distance": mc.frobenius_distance(&tw.operator)?,
        });
    }
    if let Some(path) = dump {
        std::fs::write(path, output::to_json_string(&tw.operator.dump())?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(Outcome::value(result))
}

fn design_test(
    family: GroupFamily,
    t: usize,
    d: usize,
    mode: DesignMode,
    samples: usize,
    sweep: &[usize],
    g: &GlobalOpts,
) -> anyhow::Result<Outcome> {
    if !sweep.is_empty() {
        if mode != DesignMode::MonteCarlo {
            return Err(Error::Domain("--sweep needs --mode mc".into()).into());
        }
        let spec = EnsembleSpec::new(family, d, g.seed, 0)?;
        let mut table = Table::new(&["samples", "distance", "tolerance", "verdict"]);
        let mut rows = Vec::new();
        for &n in sweep {
            check_samples(n, g)?;
            let r = designs::state_design_mc(&spec, t, n)?;
            table.push(vec![json!(n), json!(r.distance), json!(r.tolerance), json!(r.verdict)]);
            rows.push(serde_json::to_value(r)?);
        }
        return Ok(Outcome { result: json!({ "sweep": rows }), table: Some(table), ok: true });
    }
    if mode == DesignMode::MonteCarlo {
        check_samples(samples, g)?;
    }
    let r = designs::state_design_test(family, t, d, mode, samples, g.seed)?;
    Ok(Outcome::value(serde_json::to_value(r)?))
}

fn lemma1(t: usize, d: usize, random_states: usize, g: &GlobalOpts) -> anyhow::Result<Outcome> {
    let mut states = vec![("reference".to_string(), designs::reference_state(d))];
    for k in 0..random_states {
        let mut s = EnsembleSpec::new(GroupFamily::Unitary, d, g.seed, k as u64)?.sampler()?;
        let v = s.gaussian_vector(d);
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        states.push((format!("random-{k}"), v.into_iter().map(|z| z / norm).collect()));
    }
    let mut worst: f64 = 0.0;
    let mut out = Vec::new();
    for (label, psi) in states {
        let entries = designs::lemma1_residuals(t, d, &psi)?;
        let m = entries.iter().filter(|e| !e.is_permutation).map(|e| e.max_residual()).fold(0.0, f64::max);
        worst = worst.max(m);
        out.push(json!({"state": label, "max_non_permutation_residual": m, "entries": entries}));
    }
    Ok(Outcome::value(json!({
        "t": t,
        "d": d,
        "max_non_permutation_residual": worst,
        "states": out,
    })))
}

fn z_first_qubit(d: usize) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |i, j| {
        if i != j {
            C64::new(0.0, 0.0)
        } else if i < d / 2 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(-1.0, 0.0)
        }
    })
}

fn shadow_estimate(
    d: usize,
    ensemble: GroupFamily,
    samples: usize,
    observable: Option<&Path>,
    state: Option<&Path>,
    g: &GlobalOpts,
) -> anyhow::Result<Outcome> {
    check_samples(samples, g)?;
    let spec = EnsembleSpec::new(ensemble, d, g.seed, 0)?;
    let obs = match observable {
        Some(p) => read_operator(p, d, 1)?.to_matrix()?,
        None => z_first_qubit(d),
    };
    let rho = match state {
        Some(p) => read_operator(p, d, 1)?.to_matrix()?,
        None => {
            let mut r = DMatrix::zeros(d, d);
            r[(0, 0)] = C64::new(1.0, 0.0);
            r
        }
    };
    let est = ShadowProtocol::new(spec, samples)?.estimate_observable(&rho, &obs)?;
    let mut result = serde_json::to_value(&est)?;
    result["d"] = d.into();
    result["ensemble"] = serde_json::to_value(ensemble)?;
    result["channel_distance"] = shadows::channel_distance(d)?.into();
    Ok(Outcome::value(result))
}

fn gap(
    n: usize,
    n_max: Option<usize>,
    kind: circuits::ArchitectureKind,
    tolerance: f64,
    max_iters: usize,
    g: &GlobalOpts,
) -> anyhow::Result<Outcome> {
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Error::Domain(format!("tolerance must be positive, got {tolerance}")).into());
    }
    let last = n_max.unwrap_or(n);
    if last < n {
        return Err(Error::Domain(format!("--n-max {last} is below --n {n}")).into());
    }
    let opts = GapOptions { tolerance, max_iterations: max_iters, seed: g.seed };
    let mut table = Table::new(&["n", "architecture", "lambda", "iterations", "residual", "parameters_per_layer"]);
    let mut rows = Vec::new();
    for size in n..=last {
        let arch = match kind {
            circuits::ArchitectureKind::Unitary => BrickArchitecture::unitary(size)?,
            _ => BrickArchitecture::symplectic(size)?,
        };
        let r = MomentOperator::new(&arch)?.spectral_gap(&opts)?;
        let name = serde_json::to_value(arch.kind)?;
        table.push(vec![
            json!(size),
            name.clone(),
            json!(r.lambda),
            json!(r.iterations),
            json!(r.residual),
            json!(arch.parameters_per_layer()),
        ]);
        rows.push(json!({
            "n": size,
            "architecture": name,
            "lambda": r.lambda,
            "iterations": r.iterations,
            "residual": r.residual,
            "parameters_per_layer": arch.parameters_per_layer(),
        }));
    }
    let result = if n_max.is_some() { json!({ "sweep": rows }) } else { rows.remove(0) };
    Ok(Outcome { result, table: n_max.map(|_| table), ok: true })
}

fn ratio(
    lambda_u: f64,
    lambda_sp: f64,
    params_u: usize,
    params_sp: usize,
    epsilon: Option<f64>,
    n: Option<usize>,
) -> anyhow::Result<Outcome> {
    let r = circuits::parameter_ratio(lambda_u, lambda_sp, params_u, params_sp)?;
    let mut result = json!({ "ratio": r });
    match (epsilon, n) {
        (Some(eps), Some(n)) => {
            let lu = circuits::design_depth(lambda_u, eps, n)?;
            let ls = circuits::design_depth(lambda_sp, eps, n)?;
            result["depth_u"] = lu.into();
            result["depth_sp"] = ls.into();
        }
        (None, None) => {}
        _ => return Err(Error::Domain("--epsilon and --n go together".into()).into()),
    }
    Ok(Outcome::value(result))
}

struct Checks(Vec<Value>, bool);

impl Checks {
    fn add(&mut self, name: &str, value: f64, tolerance: f64) {
        let pass = value <= tolerance;
        self.1 &= pass;
        self.0.push(json!({"check": name, "value": value, "tolerance": tolerance, "pass": pass}));
    }
}

/// Invariants that must hold on any correct build; each is a residual
/// compared against a tolerance.
fn selftest(g: &GlobalOpts) -> anyhow::Result<Outcome> {
    let mut c = Checks(Vec::new(), true);

    let count_err = (1..=6)
        .map(|t| Ok((enumerate_pairings(t)?.len() as f64 - double_factorial_odd(t) as f64).abs()))
        .collect::<designlab::Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    c.add("pairing counts equal (2t-1)!!", count_err, 0.0);
    let table_fail = (1..=4)
        .map(|t| brauer::composition_table_check(t).map(|r| if r.holds { 0.0 } else { 1.0 }))
        .collect::<designlab::Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    c.add("composition table, t <= 4", table_fail, 0.0);

    let d = 4;
    let all2 = enumerate_pairings(2)?;
    let mut hom: f64 = 0.0;
    for a in &all2 {
        for b in &all2 {
            let ab = compose(a, b)?;
            let lhs = signed_brauer_rep(a, d)?.matmul(&signed_brauer_rep(b, d)?)?;
            let w = (-(d as f64)).powi(ab.loop_power as i32);
            hom = hom.max(lhs.frobenius_distance(&signed_brauer_rep(&ab.diagram, d)?.scale(C64::new(w, 0.0)))?);
        }
    }
    c.add("signed Brauer homomorphism, t = 2", hom, 1e-12);

    let spec = EnsembleSpec::new(GroupFamily::Symplectic, d, g.seed, 0)?;
    let mut comm: f64 = 0.0;
    for t in [2, 3] {
        let basis = CommutantBasis::build(GroupFamily::Symplectic, t, d)?;
        for k in 0..5 {
            let u = designlab::sampling::haar_symplectic(&spec.with_stream(k))?.to_matrix()?;
            for f in basis.operators() {
                comm = comm.max(reps::commutator_norm(f, &u)?);
            }
        }
    }
    c.add("Brauer operators commute with SP tensor powers", comm, 1e-10);

    let mut design: f64 = 0.0;
    for (d, t) in [(4, 1), (4, 2), (4, 3), (6, 2)] {
        design = design.max(designs::state_design_exact(GroupFamily::Symplectic, t, d)?.distance);
    }
    c.add("symplectic state designs, exact", design, 1e-10);

    let lemma = designs::lemma1_residuals(3, 4, &designs::reference_state(4))?
        .iter()
        .filter(|e| !e.is_permutation)
        .map(|e| e.max_residual())
        .fold(0.0, f64::max);
    c.add("non-permutation diagrams annihilate symmetric states", lemma, 1e-12);

    let mut pinv: f64 = 0.0;
    let mut eig: f64 = 0.0;
    let mut sums: f64 = 0.0;
    for (d, t) in [(4, 2), (4, 3), (6, 3)] {
        let basis = CommutantBasis::build(GroupFamily::Symplectic, t, d)?;
        let r = basis.pinv_residuals();
        pinv = pinv.max(r.gram / basis.gram().norm()).max(r.pinv / basis.gram_pinv().norm());
        let s = basis.permutation_count();
        let v = nalgebra::DVector::from_fn(basis.len(), |i, _| if i < s { 1.0 } else { 0.0 });
        eig = eig.max((basis.gram() * &v - &v * rising_factorial(d, t)).norm() / basis.gram().norm());
        let routes = designs::two_routes(t, d, &designs::reference_state(d))?;
        sums = sums.max((routes.permutation_coefficient_sum - routes.expected_sum).abs());
    }
    c.add("Gram pseudo-inverse identities (relative)", pinv, 1e-10);
    c.add("Gram eigenvector (1_S, 0) with eigenvalue D_t (relative)", eig, 1e-12);
    c.add("permutation coefficients sum to t!/D_t", sums, 1e-12);

    let mut chan: f64 = 0.0;
    for fam in [GroupFamily::Unitary, GroupFamily::Symplectic] {
        chan = chan.max(shadows::channel_self_test(fam, 4)?);
    }
    c.add("shadow channel closed form", chan, 1e-10);
    c.add("shadow channels agree, d = 4", shadows::channel_distance(4)?, 1e-10);
    c.add("third moments agree, d = 4", shadows::third_moment_equality(4)?.distance, 1e-10);

    let pure_gap = designs::mixed_state_gap(1.0, 4, designs::Embedding::FirstTwo)?.gap;
    c.add("pure states: no U/SP gap", pure_gap, 1e-10);
    let mixed_gap = designs::mixed_state_gap(0.5, 4, designs::Embedding::FirstTwo)?.gap;
    c.add("mixed states: U/SP gap exceeds 1e-3 (value is 1e-3/gap)", 1e-3 / mixed_gap, 1.0);

    let mut single: f64 = 0.0;
    for gate in [LocalGroup::Su4, LocalGroup::Sp2, LocalGroup::So4] {
        let spec = MomentOperator::new(&BrickArchitecture::single_gate(gate))?.spectrum()?;
        single = single.max(spec.iter().map(|z| z.norm()).filter(|&x| x < 1.0 - 1e-8).fold(0.0, f64::max));
    }
    c.add("single gates are projectors", single, 1e-12);
    let mut outside: f64 = 0.0;
    for n in 2..=4 {
        for arch in [BrickArchitecture::unitary(n)?, BrickArchitecture::symplectic(n)?] {
            for z in MomentOperator::new(&arch)?.spectrum()? {
                outside = outside.max(z.im.abs()).max(-z.re).max(z.re - 1.0);
            }
        }
    }
    c.add("brickwork spectra in [0, 1], n <= 4", outside, 1e-10);

    let mut defect: f64 = 0.0;
    let mut s = EnsembleSpec::new(GroupFamily::Symplectic, 6, g.seed, 1)?.sampler()?;
    for _ in 0..10 {
        let u = s.sample();
        defect = defect.max(designlab::sampling::unitarity_defect(&u)).max(designlab::sampling::symplectic_defect(&u)?);
    }
    c.add("symplectic sampler stays in SP", defect, 1e-12);

    let Checks(checks, ok) = c;
    Ok(Outcome { result: json!({"passed": ok, "checks": checks}), table: None, ok })
}
