//! The `extsym` command line: loads JSON inputs, runs the verification
//! suites and prints a [`RunReport`].

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::Zero;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::codim2::{sample_solutions_tagged, tally, CandidateKind, Codim2Instance, ScalarMode};
use crate::error::{Error, Result};
use crate::exact::{format_rational, parse_rational, q, Matrix, MultiPoly, Rational, Vector};
use crate::generate::{self, rng};
use crate::io::{b_struct_json, mat_json, parse_poly_arg, poly_json, rat, vec_json, InputDoc};
use crate::lambda::{
    build_lambda, check_condition_1, check_condition_2, check_condition_3, curvature_at_base,
    curvature_wedge_terms, lambda_group_algebra, phi_of_wedge, psi_of_wedge, solve_b_structure, BStruct,
    LambdaMap, ShapeFamily,
};
use crate::moyal::{
    affine_pullback, build_projection, derivation_property_check, moyal_star, poisson_bracket,
    transvection_invariance_check, FoliationProjection, StarSeries,
};
use crate::orbit::{
    check_flat_iff_isotropic, default_group_law_pairs, flat_graph_form, geodesic_symmetry_check,
    nilpotency_degree, orbit_point, transvection,
};
use crate::sigma::SurfaceSpec;
use crate::symplectic::Block;

#[derive(Debug, Parser)]
#[command(name = "extsym", version, about = "Exact checks for extrinsic symplectic symmetric spaces")]
pub struct Cli {
    /// Seed for every random choice
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Scalar arithmetic; `float` is only accepted by classify-codim2
    #[arg(long, global = true, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    #[arg(long, global = true, value_enum, default_value_t = Output::Json)]
    pub output: Output,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StarCheck {
    Assoc,
    Derivation,
    Invariance,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Conditions on Λ, curvature, flatness, nilpotency and structure constants
    CheckLambda {
        input: PathBuf,
        /// Random directions for the nilpotency degrees
        #[arg(long, default_value_t = 8)]
        samples: usize,
    },
    /// Build the surface and verify its symmetries on random point pairs
    Surface {
        input: PathBuf,
        #[arg(long, default_value_t = 50)]
        verify_symmetry: usize,
    },
    /// Orbit points γ(t) = exp t(Λ(x), x)·0
    Orbit {
        input: PathBuf,
        /// Direction, comma separated rationals
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Option<Vec<String>>,
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        t: String,
        /// Random (x, t) samples used when no points are given
        #[arg(long, default_value_t = 10)]
        random: usize,
    },
    /// Sample codimension-2 solutions and classify them
    ClassifyCodim2 {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
    /// Moyal product of two polynomials, or the induced product on the surface
    Star {
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        f: String,
        #[arg(long, allow_hyphen_values = true)]
        g: String,
        /// Third factor for the associativity check (defaults to f)
        #[arg(long, allow_hyphen_values = true)]
        h: Option<String>,
        /// Treat f, g as functions of the graph coordinates of the surface
        #[arg(long)]
        on_sigma: bool,
        #[arg(long, value_enum)]
        check: Vec<StarCheck>,
        /// Random transvections for the invariance check
        #[arg(long, default_value_t = 3)]
        samples: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CheckLambda { .. } => "check-lambda",
            Command::Surface { .. } => "surface",
            Command::Orbit { .. } => "orbit",
            Command::ClassifyCodim2 { .. } => "classify-codim2",
            Command::Star { .. } => "star",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckVerdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    /// sha256 of the input file, or of the canonical arguments when there is none
    pub input_digest: String,
    pub seed: u64,
    pub mode: String,
    pub checks: Vec<CheckVerdict>,
    pub data: Value,
    pub passed: bool,
    pub wall_time_ms: u64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} (seed {}, {} mode)\ninput sha256:{}\n",
            self.command, self.seed, self.mode, self.input_digest
        );
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            out += &format!("{tag} {}: {}\n", c.name, c.detail);
        }
        out += &format!(
            "data:\n{}\n{} in {} ms\n",
            serde_json::to_string_pretty(&self.data).expect("data serializes"),
            if self.passed { "all checks passed" } else { "some checks failed" },
            self.wall_time_ms
        );
        out
    }
}

#[derive(Default)]
struct Checks(Vec<CheckVerdict>);

impl Checks {
    fn push(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.0.push(CheckVerdict {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    /// Records an error as a failed check.
    fn record<T>(&mut self, name: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(name, false, e.to_string());
                None
            }
        }
    }

    fn tally(&mut self, name: &str, ok: usize, total: usize, what: &str) {
        self.push(name, ok == total, format!("{ok}/{total} {what}"));
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn read_input(path: &Path) -> Result<(InputDoc, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let doc = InputDoc::parse(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })?;
    Ok((doc, sha256_hex(text.as_bytes())))
}

fn require_family(doc: &InputDoc, command: &str) -> Result<ShapeFamily> {
    doc.family()?.ok_or_else(|| {
        Error::Parse(format!("{command} needs a shape family (`C`, or block-diagonal `generators` with a_i = f_i)"))
    })
}

fn parse_rational_arg(field: &str, s: &str) -> Result<Rational> {
    parse_rational(s).map_err(|e| Error::Parse(format!("{field}: {e}")))
}

/// `"A3A4 = -A2"` lines for the nonzero products `M_iM_j = Σ_k B^k_{ij} M_k`;
/// products not listed vanish. Terms with `M_k = 0` are dropped.
fn relation_lines(b: &BStruct, mats: &[Matrix], label: &str) -> Vec<String> {
    let mut out = Vec::new();
    for (i, bi) in b.iter().enumerate() {
        for (j, bij) in bi.iter().enumerate() {
            if (&mats[i] * &mats[j]).is_zero() {
                continue;
            }
            let mut rhs = String::new();
            for (k, c) in bij.iter().enumerate() {
                if c.is_zero() || mats[k].is_zero() {
                    continue;
                }
                let neg = *c < Rational::zero();
                let mag = if neg { -c.clone() } else { c.clone() };
                let coef = if mag == q(1, 1) { String::new() } else { format!("{} ", format_rational(&mag)) };
                let sign = match (rhs.is_empty(), neg) {
                    (true, true) => "-",
                    (true, false) => "",
                    (false, true) => " - ",
                    (false, false) => " + ",
                };
                rhs += &format!("{sign}{coef}{label}{}", k + 1);
            }
            if rhs.is_empty() {
                rhs.push('0');
            }
            out.push(format!("{label}{}{label}{} = {rhs}", i + 1, j + 1));
        }
    }
    out
}

pub fn run(cli: &Cli) -> Result<RunReport> {
    let start = Instant::now();
    if cli.mode == Mode::Float && !matches!(cli.command, Command::ClassifyCodim2 { .. }) {
        return Err(Error::Parse(format!(
            "--mode float is only available for classify-codim2, not {}",
            cli.command.name()
        )));
    }
    let mut checks = Checks::default();
    let (digest, data) = match &cli.command {
        Command::CheckLambda { input, samples } => {
            let (doc, digest) = read_input(input)?;
            let fam = require_family(&doc, "check-lambda")?;
            (digest, check_lambda(&fam, cli.seed, *samples, &mut checks))
        }
        Command::Surface { input, verify_symmetry } => {
            let (doc, digest) = read_input(input)?;
            doc.space()?;
            (digest, surface(&doc, cli.seed, *verify_symmetry, &mut checks))
        }
        Command::Orbit { input, x, t, random } => {
            let (doc, digest) = read_input(input)?;
            let fam = require_family(&doc, "orbit")?;
            let d = fam.space().tangent_dim();
            let mut requests = doc.orbit_requests(d)?;
            if let Some(xs) = x {
                if xs.len() != d {
                    return Err(Error::Parse(format!("--x: expected {d} entries, found {}", xs.len())));
                }
                let x = xs.iter().map(|s| parse_rational_arg("--x", s)).collect::<Result<Vector>>()?;
                requests.push((x, parse_rational_arg("--t", t)?));
            }
            if requests.is_empty() {
                let mut r = rng(cli.seed, 1);
                for _ in 0..*random {
                    let x = generate::random_vector(&mut r, d, 3);
                    requests.push((x, generate::small_rational(&mut r, 3, 2)));
                }
            }
            (digest, orbit(&fam, &requests, &mut checks))
        }
        Command::ClassifyCodim2 { n, count } => {
            if *n == 0 {
                return Err(Error::Parse("--n must be positive".into()));
            }
            let mode = match cli.mode {
                Mode::Exact => ScalarMode::Exact,
                Mode::Float => ScalarMode::float(),
            };
            let digest = sha256_hex(format!("classify-codim2 n={n} count={count}").as_bytes());
            (digest, classify_codim2(*n, *count, cli.seed, mode, &mut checks))
        }
        Command::Star {
            input,
            f,
            g,
            h,
            on_sigma,
            check,
            samples,
        } => {
            let (doc, digest) = read_input(input)?;
            let space = doc.space()?;
            let vars = if *on_sigma { space.tangent_dim() } else { space.dim() };
            let f = parse_poly_arg("--f", f, vars)?;
            let g = parse_poly_arg("--g", g, vars)?;
            let h = match h {
                Some(h) => parse_poly_arg("--h", h, vars)?,
                None => f.clone(),
            };
            let req = StarRequest {
                f,
                g,
                h,
                on_sigma: *on_sigma,
                checks: check.clone(),
                samples: *samples,
                seed: cli.seed,
            };
            (digest, star(&doc, &req, &mut checks))
        }
    };
    let passed = checks.0.iter().all(|c| c.passed);
    Ok(RunReport {
        command: cli.command.name().into(),
        input_digest: digest,
        seed: cli.seed,
        mode: match cli.mode {
            Mode::Exact => "exact".into(),
            Mode::Float => "float".into(),
        },
        checks: checks.0,
        data,
        passed,
        wall_time_ms: start.elapsed().as_millis() as u64,
    })
}

fn check_lambda(fam: &ShapeFamily, seed: u64, samples: usize, checks: &mut Checks) -> Value {
    let lm = build_lambda(fam);
    let space = fam.space();
    let c1 = check_condition_1(&lm);
    let c2 = check_condition_2(&lm);
    checks.push("condition_1", c1.holds, c1.summary());
    checks.push("condition_2", c2.holds, c2.summary());
    if let Some(c3) = checks.record("condition_3_forms_agree", check_condition_3(&lm)) {
        checks.push("condition_3", c3.holds(), c3.lambda_form.summary());
        checks.push(
            "condition_3_forms_agree",
            c3.lambda_form.holds == c3.c_form.holds,
            format!("C form: {}", c3.c_form.summary()),
        );
    }

    let mut data = serde_json::Map::new();
    if c1.holds && c2.holds {
        if let Some(r) = checks.record("curvature_dual_formula", curvature_at_base(&lm)) {
            let nonzero = r.components().iter().filter(|v| !v.is_zero()).count();
            checks.push("curvature_dual_formula", true, format!("{nonzero} nonzero components"));
            let terms = curvature_wedge_terms(space);
            if let Some(phi) = checks.record("curvature_wedge_form", phi_of_wedge(fam, &terms)) {
                checks.push("curvature_wedge_form", phi == r, "R₀ = φ(Σ −½Ω^{ji} C_i∧C_j)");
            }
            let ric = space.ricci(&r);
            let rhs = space.form_of(&psi_of_wedge(fam, &terms), Block::Tangent);
            checks.push("ricci_identity", (&ric + &rhs).is_zero(), "ric(R₀) = −ω(ψ·,·)");
            data.insert("flat".into(), json!(r.is_zero()));
            data.insert("curvature_nonzero_components".into(), json!(nonzero));
            if let Some(ok) = checks.record("flat_iff_isotropic", check_flat_iff_isotropic(&lm)) {
                checks.push("flat_iff_isotropic", ok, "α₀-image isotropic ⟺ R₀ = 0");
            }
        }
    } else {
        checks.push("curvature_dual_formula", false, "needs conditions 1 and 2");
    }

    let d = space.tangent_dim();
    let mut dirs: Vec<Vector> = (0..d).map(|a| space.e(a)[..d].to_vec()).collect();
    let mut r = rng(seed, 0);
    dirs.extend((0..samples).map(|_| generate::random_vector(&mut r, d, 3)));
    let degrees: Vec<Option<usize>> = dirs.iter().map(|x| nilpotency_degree(&lm, x).ok()).collect();
    data.insert(
        "nilpotency_degrees".into(),
        Value::Array(
            dirs.iter()
                .zip(&degrees)
                .map(|(x, k)| json!({"x": vec_json(x), "degree": k}))
                .collect(),
        ),
    );
    if fam.b_struct().is_some() {
        let ok = degrees.iter().filter(|k| matches!(k, Some(k) if *k <= 5)).count();
        checks.tally("nilpotency_degree_at_most_5", ok, degrees.len(), "directions with Λ(x)⁵ = 0");
    }

    let (b, source) = match fam.b_struct() {
        Some(b) => (Some(b.clone()), "given"),
        None => match solve_b_structure(fam.c()) {
            Some(b) => (Some(b), "solved"),
            None => (None, "none"),
        },
    };
    data.insert("b_struct_source".into(), json!(source));
    if let Some(b) = &b {
        data.insert("b_struct".into(), b_struct_json(b));
        let (label, mats): (_, Vec<Matrix>) = match fam.b_ops() {
            Some(ops) => ("A", fam.c().iter().zip(ops).map(|(c, b)| Matrix::block_diag(c, b)).collect()),
            None => ("C", fam.c().to_vec()),
        };
        data.insert("relations".into(), json!(relation_lines(b, &mats, label)));
    }
    if fam.b_struct().is_some() {
        if let Some(surf) = checks.record("surface_closure", SurfaceSpec::from_family(fam)) {
            checks.push("surface_closure", true, "A_i = C_i ⊕ B_i, a_i = f_i");
            let rep = surf.verify_product_identities();
            checks.push(
                "product_identities",
                rep.passed(),
                format!(
                    "anticommutation failures {:?}, nonzero triple products {:?}",
                    rep.anticommute_violations, rep.triple_violations
                ),
            );
        }
    }
    if let Ok(alg) = lambda_group_algebra(&lm) {
        data.insert(
            "lambda_algebra".into(),
            json!({
                "dim": alg.dim,
                "k1_dim": alg.k1_dim,
                "lower_central_dims": alg.lower_central_dims,
                "nilpotent": alg.nilpotent,
            }),
        );
    }
    Value::Object(data)
}

fn surface(doc: &InputDoc, seed: u64, pairs: usize, checks: &mut Checks) -> Value {
    let Some(surf) = checks.record("build_surface", doc.surface()) else {
        return json!({});
    };
    let dim = surf.space().dim();
    checks.push("build_surface", true, format!("{} generators on ℝ^{dim}", surf.generators().len()));
    let origin = vec![Rational::zero(); dim];
    if let Some(ok) = checks.record("origin_on_surface", surf.membership(&origin)) {
        checks.push("origin_on_surface", ok, "F_i(0) = 0");
    }
    let rep = surf.verify_product_identities();
    checks.push(
        "product_identities",
        rep.passed(),
        format!(
            "anticommutation failures {:?}, nonzero triple products {:?}",
            rep.anticommute_violations, rep.triple_violations
        ),
    );
    if pairs > 0 {
        if let Some(pts) = checks.record("extrinsic_symmetry", surf.random_points(seed, 2 * pairs, 3, 2)) {
            let mut ok = 0;
            let mut first_failure = None;
            for k in 0..pairs {
                match surf.verify_extrinsic_symmetry(&pts[2 * k], &pts[2 * k + 1]) {
                    Ok(true) => ok += 1,
                    Ok(false) => {
                        first_failure.get_or_insert_with(|| format!("pair {k}: S_x y leaves the surface"));
                    }
                    Err(e) => {
                        first_failure.get_or_insert_with(|| format!("pair {k}: {e}"));
                    }
                }
            }
            let mut detail = format!("{ok}/{pairs} random pairs with F_i(S_x y) = 0");
            if let Some(f) = first_failure {
                detail += &format!("; {f}");
            }
            checks.push("extrinsic_symmetry", ok == pairs, detail);
        }
    }
    json!({
        "b_struct": b_struct_json(surf.b_struct()),
        "relations": relation_lines(
            surf.b_struct(),
            &surf.generators().iter().map(|g| g.mat.clone()).collect::<Vec<_>>(),
            "A"
        ),
        "gram": mat_json(surf.gram()),
        "hamiltonians": surf.hamiltonians().iter().map(|f| f.to_string()).collect::<Vec<_>>(),
        "tangent_at_origin": surf.tangent_at_origin().iter().map(|v| vec_json(v)).collect::<Vec<_>>(),
    })
}

fn orbit(fam: &ShapeFamily, requests: &[(Vector, Rational)], checks: &mut Checks) -> Value {
    let lm = build_lambda(fam);
    let surf = SurfaceSpec::from_family(fam);
    let graph = flat_graph_form(&lm).ok();
    let mut points = Vec::new();
    let (mut routes_ok, mut on_surface, mut group_ok, mut graph_ok) = (0, 0, 0, 0);
    let mut failures: Vec<String> = Vec::new();
    for (k, (x, t)) in requests.iter().enumerate() {
        let degree = nilpotency_degree(&lm, x).ok();
        let pt = match orbit_point(&lm, x, t) {
            Ok(pt) => pt,
            Err(e) => {
                failures.push(format!("point {k}: {e}"));
                points.push(json!({"x": vec_json(x), "t": rat(t), "degree": degree, "error": e.to_string()}));
                continue;
            }
        };
        routes_ok += 1;
        let z = pt.ambient();
        if let Ok(s) = &surf {
            if s.membership(&z) == Ok(true) {
                on_surface += 1;
            }
            match geodesic_symmetry_check(&lm, s, x, t, &default_group_law_pairs()) {
                Ok(rep) if rep.passed() => group_ok += 1,
                Ok(_) => failures.push(format!("point {k}: symmetry product or group law fails")),
                Err(e) => failures.push(format!("point {k}: {e}")),
            }
        }
        if let Some(g) = &graph {
            let u: Option<Vector> = g.iter().map(|p| p.eval(&pt.x_tilde, &Rational::zero()).ok()).collect();
            if u.as_deref() == Some(&pt.u_tilde[..]) {
                graph_ok += 1;
            }
        }
        points.push(json!({
            "x": vec_json(x),
            "t": rat(t),
            "degree": degree,
            "x_tilde": vec_json(&pt.x_tilde),
            "u_tilde": vec_json(&pt.u_tilde),
        }));
    }
    let total = requests.len();
    checks.tally("orbit_routes_agree", routes_ok, total, "points with exponential and closed-form routes equal");
    match &surf {
        Ok(_) => {
            checks.tally("orbit_on_surface", on_surface, total, "points satisfying F_i = 0");
            checks.tally("transvection_group_law", group_ok, total, "directions with ψ_t = S_{γ(t/2)}S₀ and ψ_sψ_t = ψ_{s+t}");
        }
        Err(e) => checks.push("orbit_on_surface", false, format!("surface: {e}")),
    }
    if graph.is_some() {
        checks.tally("flat_graph", graph_ok, total, "points on the quadratic graph");
    }
    json!({
        "flat": graph.is_some(),
        "points": points,
        "failures": failures,
    })
}

fn classify_codim2(n: usize, count: usize, seed: u64, mode: ScalarMode, checks: &mut Checks) -> Value {
    let tagged = sample_solutions_tagged(n, count, seed, mode);
    let mut kinds = std::collections::BTreeMap::<CandidateKind, usize>::new();
    for (k, _) in &tagged {
        *kinds.entry(*k).or_default() += 1;
    }
    let insts: Vec<Codim2Instance> = tagged.into_iter().map(|(_, i)| i).collect();
    let Some(t) = checks.record("classification", tally(&insts)) else {
        return json!({"n": n, "count": count});
    };
    checks.push("no_violations", t.violation == 0, format!("{} of {} samples violate the dichotomy", t.violation, t.instances));
    checks.push("proof_lemmas", t.lemma_failures == 0, format!("{} samples fail a lemma conclusion", t.lemma_failures));
    checks.push(
        "formulations_agree",
        t.formulation_mismatches == 0,
        format!("{} samples where the direct equations and the Λ form disagree", t.formulation_mismatches),
    );
    let violations: Vec<Value> = t
        .violations
        .iter()
        .map(|&k| json!({"index": k, "C1": mat_json(&insts[k].c1), "C2": mat_json(&insts[k].c2)}))
        .collect();
    json!({
        "n": n,
        "count": count,
        "histogram": {"flat": t.flat, "products_zero": t.products_zero, "violation": t.violation},
        "span_dim_two": t.span_dim_two,
        "candidate_kinds": kinds,
        "violations": violations,
        "scope": "the dichotomy is checked on the sampled instances only",
    })
}

struct StarRequest {
    f: MultiPoly,
    g: MultiPoly,
    h: MultiPoly,
    on_sigma: bool,
    checks: Vec<StarCheck>,
    samples: usize,
    seed: u64,
}

/// The product and bracket in use: ambient Moyal, or induced on the surface.
enum Product<'a> {
    Ambient(&'a crate::symplectic::SympSpace),
    Induced(&'a FoliationProjection),
}

impl Product<'_> {
    fn star(&self, f: &MultiPoly, g: &MultiPoly) -> Result<StarSeries> {
        match self {
            Product::Ambient(s) => moyal_star(s, f, g),
            Product::Induced(p) => p.induced_star(f, g),
        }
    }

    fn bracket(&self, f: &MultiPoly, g: &MultiPoly) -> Result<MultiPoly> {
        match self {
            Product::Ambient(s) => poisson_bracket(s, f, g),
            Product::Induced(p) => p.sigma_bracket(f, g),
        }
    }
}

fn star(doc: &InputDoc, req: &StarRequest, checks: &mut Checks) -> Value {
    let space = doc.space().expect("space already validated");
    let surf = doc.surface();
    let proj = match (&surf, req.on_sigma) {
        (Ok(s), true) => checks.record("projection", build_projection(s)),
        (Err(e), true) => {
            checks.push("projection", false, format!("surface: {e}"));
            None
        }
        (_, false) => None,
    };
    let product = match (&proj, req.on_sigma) {
        (Some(p), true) => Product::Induced(p),
        (None, true) => return json!({}),
        _ => Product::Ambient(&space),
    };
    let (f, g) = (&req.f, &req.g);
    let Some(fg) = checks.record("star", product.star(f, g)) else {
        return json!({});
    };
    checks.push("leading_term", fg.series.nu_coefficient(0) == f * g, "C₀(f, g) = fg");
    let bracket = checks.record("commutator_is_bracket", product.bracket(f, g));
    if let (Some(br), Some(gf)) = (&bracket, checks.record("commutator_is_bracket", product.star(g, f))) {
        checks.push(
            "commutator_is_bracket",
            (&fg.series - &gf.series).nu_coefficient(1) == *br,
            "ν¹ part of f⋆g − g⋆f is {f, g}",
        );
    }
    for check in &req.checks {
        match check {
            StarCheck::Assoc => {
                let r = (|| {
                    let left = product.star(&fg.series, &req.h)?;
                    let gh = product.star(g, &req.h)?;
                    Ok(left.series == product.star(f, &gh.series)?.series)
                })();
                if let Some(ok) = checks.record("associativity", r) {
                    checks.push("associativity", ok, "(f⋆g)⋆h = f⋆(g⋆h)");
                }
            }
            StarCheck::Derivation => {
                let r = surf.clone().and_then(|s| match &proj {
                    Some(p) => derivation_property_check(&s, &p.pullback(f)?, &p.pullback(g)?),
                    None => derivation_property_check(&s, f, g),
                });
                if let Some(ok) = checks.record("derivation", r) {
                    checks.push("derivation", ok, "X_{F_i}(f⋆g) = X_{F_i}f⋆g + f⋆X_{F_i}g for every i");
                }
            }
            StarCheck::Invariance => {
                let r = (|| {
                    let fam = require_family(doc, "the invariance check")?;
                    let lm = build_lambda(&fam);
                    let d = fam.space().tangent_dim();
                    let mut r = rng(req.seed, 2);
                    let mut ok = 0;
                    for _ in 0..req.samples {
                        let x = generate::random_vector(&mut r, d, 2);
                        let t = generate::small_rational(&mut r, 2, 2);
                        if invariance_holds(&product, &lm, f, g, &x, &t)? {
                            ok += 1;
                        }
                    }
                    Ok(ok)
                })();
                if let Some(ok) = checks.record("transvection_invariance", r) {
                    checks.tally("transvection_invariance", ok, req.samples, "transvections ψ with (f∘ψ)⋆(g∘ψ) = (f⋆g)∘ψ");
                }
            }
        }
    }
    json!({
        "on_sigma": req.on_sigma,
        "f": f.to_string(),
        "g": g.to_string(),
        "max_order": fg.max_order,
        "terms": fg.terms_by_order(),
        "series": poly_json(&fg.series),
        "bracket": bracket.map(|b| b.to_string()),
    })
}

fn invariance_holds(
    product: &Product<'_>,
    lm: &LambdaMap,
    f: &MultiPoly,
    g: &MultiPoly,
    x: &[Rational],
    t: &Rational,
) -> Result<bool> {
    match product {
        Product::Induced(p) => transvection_invariance_check(p, lm, f, g, x, t),
        Product::Ambient(s) => {
            let psi = transvection(lm, x, t)?;
            let lhs = moyal_star(s, &affine_pullback(&psi, f)?, &affine_pullback(&psi, g)?)?;
            Ok(lhs.series == affine_pullback(&psi, &moyal_star(s, f, g)?.series)?)
        }
    }
}

/// Runs the parsed command line: 0 when every check passes, 1 when one
/// fails, 2 on unreadable or invalid input.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            match cli.output {
                Output::Json => println!("{}", report.to_json()),
                Output::Text => print!("{}", report.to_text()),
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::zero_b;

    #[test]
    fn relation_text() {
        let a = crate::generate::r8_generators();
        let b = crate::sigma::SurfaceSpec::from_family(&crate::generate::r8_family())
            .unwrap()
            .b_struct()
            .clone();
        assert_eq!(relation_lines(&b, &a, "A"), vec!["A3A4 = A2", "A4A3 = -A2"]);
        let mut b = zero_b(3);
        b[0][1] = vec![q(1, 2), q(0, 1), q(-1, 1)];
        let m = [Matrix::identity(2), Matrix::identity(2), Matrix::identity(2)];
        assert!(relation_lines(&b, &m, "M")[1].starts_with("M1M2 = 1/2 M1 - M3"));
    }

    #[test]
    fn float_mode_is_rejected_outside_codim2() {
        let cli = Cli::parse_from(["extsym", "--mode", "float", "surface", "missing.json"]);
        assert!(matches!(run(&cli), Err(Error::Parse(m)) if m.contains("classify-codim2")));
    }
}
