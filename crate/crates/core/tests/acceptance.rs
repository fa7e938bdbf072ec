//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use extsym::codim2::{sample_solutions, tally};
use extsym::exact::{Matrix, Monomial, MultiPoly, Rational};
use extsym::generate::{self, rng};
use extsym::io::InputDoc;
use extsym::lambda::*;
use extsym::moyal::*;
use extsym::orbit::*;
use extsym::sigma::{build_surface, SurfaceSpec};
use extsym::symplectic::{standard_form, AffineSympElement, Block, CurvatureTensor, SympSpace};
use num_traits::Zero;
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn load_family(name: &str) -> ShapeFamily {
    let text = std::fs::read_to_string(data(name)).expect("bundled data file");
    InputDoc::parse(&text).unwrap().family().unwrap().expect("file holds a family")
}

fn random_space<R: Rng>(r: &mut R, n: usize, p: usize) -> SympSpace {
    if r.gen_bool(0.5) {
        SympSpace::standard(n, p)
    } else {
        let o0 = generate::random_skew_form(r, n);
        let on = generate::random_skew_form(r, p);
        SympSpace::new(n, p, o0, on, None).unwrap()
    }
}

/// Families with n ≤ 3, p ≤ 2: arbitrary, proportional, rank-one, Lagrangian
/// block and twisted copies of the ℝ⁸ example.
fn families(seed: u64, count: usize) -> Vec<ShapeFamily> {
    let mut r = rng(seed, 0);
    (0..count)
        .map(|k| {
            let n = 1 + k % 3;
            let p = 1 + (k / 3) % 2;
            let space = random_space(&mut r, n, p);
            match k % 5 {
                0 => generate::random_family(&mut r, &space, 2).unwrap(),
                1 => generate::proportional_family(&mut r, &space, 2).unwrap(),
                2 => generate::rank_one_family(&mut r, &space, 2).unwrap(),
                3 => generate::lagrangian_block_family(&mut r, &space, 2).unwrap(),
                _ => {
                    let s = generate::random_symplectic(&mut r, &standard_form(2), 3);
                    let pn = generate::random_symplectic(&mut r, &standard_form(2), 2);
                    generate::r8_family()
                        .conjugate_tangent(&s)
                        .unwrap()
                        .change_normal_basis(&pn)
                        .unwrap()
                }
            }
        })
        .collect()
}

fn random_poly<R: Rng>(r: &mut R, vars: usize, max_deg: u32, terms: usize) -> MultiPoly {
    let mut p = MultiPoly::zero(vars);
    for _ in 0..terms {
        let deg = r.gen_range(0..=max_deg);
        let mut exps = vec![0u32; vars];
        for _ in 0..deg {
            exps[r.gen_range(0..vars)] += 1;
        }
        p.add_term(Monomial { exps, nu: 0 }, generate::small_rational(r, 3, 2));
    }
    p
}

fn ambient(fam: &ShapeFamily) -> Vec<Matrix> {
    let np = fam.space().normal_dim();
    fam.c()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let b = fam.b_ops().map(|ops| ops[i].clone()).unwrap_or_else(|| Matrix::zeros(np, np));
            Matrix::block_diag(c, &b)
        })
        .collect()
}

fn r8_fidelity() -> Outcome {
    let fam = load_family("r8_example.json");
    let a = ambient(&fam);
    ensure(a == generate::r8_generators(), || "data file differs from the built-in generators".into())?;
    ensure(&a[2] * &a[3] == a[1], || "A3A4 ≠ A2".into())?;
    ensure(&a[3] * &a[2] == -&a[1], || "A4A3 ≠ −A2".into())?;
    let mut nonzero = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            let ij = &a[i] * &a[j];
            if !ij.is_zero() && !matches!((i, j), (2, 3) | (3, 2)) {
                nonzero.push(format!("A{}A{}", i + 1, j + 1));
            }
            for (k, ak) in a.iter().enumerate() {
                if !(&ij * ak).is_zero() {
                    nonzero.push(format!("A{}A{}A{}", i + 1, j + 1, k + 1));
                }
            }
        }
    }
    ensure(nonzero.is_empty(), || format!("unexpected nonzero products {nonzero:?}"))?;
    let space = fam.space();
    let gens = a
        .iter()
        .enumerate()
        .map(|(i, m)| AffineSympElement::new(space, m.clone(), space.f(i)).unwrap())
        .collect();
    let surf = build_surface(space, gens).map_err(|e| format!("build_surface: {e}"))?;
    let pts = surf.random_points(1, 100, 3, 2).map_err(|e| e.to_string())?;
    for k in 0..50 {
        let (x, y) = (&pts[2 * k], &pts[2 * k + 1]);
        let sy = surf.symmetry_at(x).map_err(|e| e.to_string())?.apply(y);
        let (fs, fy) = (surf.eval_f(&sy).unwrap(), surf.eval_f(y).unwrap());
        ensure(fs == fy, || format!("pair {k}: F(S_x y) = {fs:?} but F(y) = {fy:?}"))?;
    }
    Ok("products exact; surface built; 50/50 symmetry pairs".into())
}

fn condition_forms(fams: &[ShapeFamily]) -> Outcome {
    let mut verdicts = [0usize; 2];
    for (k, fam) in fams.iter().enumerate() {
        let lm = build_lambda(fam);
        let a = condition_3_lambda_form(&lm);
        let b = condition_3_c_form(fam);
        ensure(a.holds == b.holds, || format!("family {k}: {} vs {}", a.summary(), b.summary()))?;
        verdicts[usize::from(a.holds)] += 1;
    }
    ensure(verdicts[0] > 0 && verdicts[1] > 0, || format!("one-sided sample {verdicts:?}"))?;
    Ok(format!("{} families, {} hold, {} fail, 0 disagreements", fams.len(), verdicts[1], verdicts[0]))
}

/// `R(x, y, z, t) = −ω([Λ(e_x), Λ(e_y)] e_z, e_t)`.
fn bracket_curvature(lm: &LambdaMap) -> CurvatureTensor {
    let s = lm.space();
    let d = s.tangent_dim();
    let om = s.omega0();
    let br: Vec<Vec<Matrix>> = (0..d)
        .map(|x| (0..d).map(|y| lm.basis_image(x).commutator(lm.basis_image(y))).collect())
        .collect();
    CurvatureTensor::from_fn(d, |x, y, z, t| {
        let mut v = Rational::zero();
        for r in 0..d {
            v -= &br[x][y][(r, z)] * &om[(r, t)];
        }
        v
    })
}

fn curvature_identity(fams: &[ShapeFamily]) -> Outcome {
    for (k, fam) in fams.iter().enumerate() {
        let lm = build_lambda(fam);
        ensure(bracket_curvature(&lm) == curvature_from_c(fam), || format!("family {k}: formulas differ"))?;
    }
    let space = SympSpace::standard(2, 1);
    let mut r = rng(3, 0);
    for k in 0..100 {
        let a = generate::random_sp(&mut r, space.omega0(), 2);
        let b = generate::random_sp(&mut r, space.omega0(), 2);
        let ric = space.ricci(&space.phi(&a, &b).unwrap());
        let rhs = space.form_of(&a.commutator(&b), Block::Tangent);
        ensure((&ric + &rhs).is_zero(), || format!("sp(2) pair {k}: ric(φ(A∧B)) ≠ −ω([A,B]·,·)"))?;
    }
    Ok(format!("{} families componentwise; 100 sp(2) pairs", fams.len()))
}

fn flatness(fams: &[ShapeFamily]) -> Outcome {
    let mut r = rng(4, 0);
    let (mut flat, mut graphed, mut points) = (0, 0, 0);
    for (k, fam) in fams.iter().enumerate() {
        let lm = build_lambda(fam);
        let curv = curvature_at_base(&lm).map_err(|e| format!("family {k}: {e}"))?;
        ensure(alpha_image_isotropic(&lm) == curv.is_zero(), || format!("family {k}: counterexample"))?;
        if !curv.is_zero() {
            continue;
        }
        flat += 1;
        // orbits are only defined under the product relation
        if fam.b_struct().is_none() {
            continue;
        }
        graphed += 1;
        let graph = flat_graph_form(&lm).map_err(|e| e.to_string())?;
        let d = fam.space().tangent_dim();
        for _ in 0..3 {
            let x = generate::random_vector(&mut r, d, 3);
            let t = generate::small_rational(&mut r, 3, 2);
            let pt = orbit_point(&lm, &x, &t).map_err(|e| format!("family {k}: {e}"))?;
            let u: Vec<Rational> = graph.iter().map(|g| g.eval(&pt.x_tilde, &Rational::zero()).unwrap()).collect();
            ensure(u == pt.u_tilde, || format!("family {k}: orbit point off the graph"))?;
            points += 1;
        }
    }
    ensure(graphed > 0, || "no flat family with structure constants".into())?;
    Ok(format!(
        "{} families, {flat} flat, 0 counterexamples; {points} orbit points of {graphed} flat families on their graphs",
        fams.len()
    ))
}

fn orbit_correctness() -> Outcome {
    let mut r = rng(5, 0);
    let mut fams = vec![
        load_family("r8_example.json"),
        load_family("nonzero_b_family.json"),
        load_family("parabola.json"),
    ];
    fams.push(generate::rank_one_family(&mut r, &SympSpace::standard(2, 1), 2).unwrap());
    fams.push(generate::lagrangian_block_family(&mut r, &SympSpace::standard(3, 1), 2).unwrap());
    ensure(fams[1].b_struct().is_some_and(|b| b.iter().flatten().flatten().any(|v| !v.is_zero())), || {
        "second family has no nonzero structure constants".into()
    })?;
    let mut max_degree = 0;
    for (k, fam) in fams.iter().enumerate() {
        let lm = build_lambda(fam);
        let surf = SurfaceSpec::from_family(fam).map_err(|e| format!("family {k}: {e}"))?;
        let d = fam.space().tangent_dim();
        for _ in 0..50 {
            let x = generate::random_vector(&mut r, d, 3);
            let t = generate::small_rational(&mut r, 3, 2);
            let deg = nilpotency_degree(&lm, &x).map_err(|e| e.to_string())?;
            ensure(deg <= 5, || format!("family {k}: Λ(x) has degree {deg}"))?;
            max_degree = max_degree.max(deg);
            let generic = orbit_generic(&lm, &x, &t).map_err(|e| e.to_string())?;
            let closed = orbit_closed_form(&lm, &x, &t);
            ensure(closed.ambient() == generic, || format!("family {k}: closed form differs"))?;
            ensure(surf.membership(&generic) == Ok(true), || format!("family {k}: orbit point off the surface"))?;
        }
    }
    for k in 0..20 {
        let fam = &fams[k % fams.len()];
        let lm = build_lambda(fam);
        let x = generate::random_vector(&mut r, fam.space().tangent_dim(), 3);
        let s = generate::small_rational(&mut r, 3, 2);
        let t = generate::small_rational(&mut r, 3, 2);
        let st = &s + &t;
        let composed = transvection(&lm, &x, &s).unwrap().compose(&transvection(&lm, &x, &t).unwrap());
        ensure(composed == transvection(&lm, &x, &st).unwrap(), || format!("sample {k}: ψ_sψ_t ≠ ψ_(s+t)"))?;
        let moved = transvection(&lm, &x, &s).unwrap().apply(&orbit_generic(&lm, &x, &t).unwrap());
        ensure(moved == orbit_generic(&lm, &x, &st).unwrap(), || format!("sample {k}: ψ_s(γ(t)) ≠ γ(s+t)"))?;
    }
    Ok(format!("{} families × 50 directions (max degree {max_degree}); 20 group-law samples", fams.len()))
}

fn codim2_dichotomy() -> Outcome {
    let mut parts = Vec::new();
    for (n, count, seed) in [(2, 1000, 7), (3, 300, 8)] {
        let t = tally(&sample_solutions(n, count, seed)).map_err(|e| e.to_string())?;
        ensure(t.instances == count, || format!("n={n}: {} instances", t.instances))?;
        ensure(t.violation == 0, || format!("n={n}: violations at {:?}", t.violations))?;
        ensure(t.lemma_failures == 0, || format!("n={n}: {} lemma failures", t.lemma_failures))?;
        ensure(t.formulation_mismatches == 0, || format!("n={n}: formulations disagree"))?;
        parts.push(format!(
            "n={n}: {} flat, {} products_zero, 0 violations, {} with span dimension 2",
            t.flat, t.products_zero, t.span_dim_two
        ));
    }
    Ok(parts.join("; "))
}

fn product_free_families(seed: u64) -> Vec<ShapeFamily> {
    let mut r = rng(seed, 0);
    let mut out = vec![generate::parabola_family()];
    for k in 0..4 {
        let space = random_space(&mut r, 1 + k / 2, 1);
        out.push(if k < 2 {
            generate::rank_one_family(&mut r, &space, 2).unwrap()
        } else {
            generate::lagrangian_block_family(&mut r, &space, 1).unwrap()
        });
    }
    out
}

fn quantization() -> Outcome {
    let mut r = rng(6, 0);
    let star = |s: &SympSpace, a: &MultiPoly, b: &MultiPoly| moyal_star(s, a, b).unwrap().series;
    for k in 0..30 {
        let space = random_space(&mut r, 1, 1);
        let [a, b, c] = [0, 1, 2].map(|_| random_poly(&mut r, 4, 3, 3));
        let (ab, bc) = (star(&space, &a, &b), star(&space, &b, &c));
        ensure(star(&space, &ab, &c) == star(&space, &a, &bc), || format!("triple {k}: not associative"))?;
        let ba = star(&space, &b, &a);
        ensure(ab.nu_coefficient(0) == &a * &b, || format!("pair {k}: C₀ ≠ product"))?;
        let br = poisson_bracket(&space, &a, &b).unwrap();
        ensure((&ab - &ba).nu_coefficient(1) == br, || format!("pair {k}: ν¹ commutator ≠ bracket"))?;
    }
    let fams = product_free_families(6);
    let mut projs = Vec::new();
    for (k, fam) in fams.iter().enumerate() {
        let surf = SurfaceSpec::from_family(fam).unwrap();
        let proj = build_projection(&surf).map_err(|e| format!("family {k}: {e}"))?;
        ensure(proj.idempotence_defect().unwrap().iter().all(MultiPoly::is_zero), || {
            format!("family {k}: π∘π ≠ π")
        })?;
        ensure(proj.hamiltonians_on_image().unwrap().iter().all(MultiPoly::is_zero), || {
            format!("family {k}: F_i∘π ≢ 0")
        })?;
        projs.push((surf, proj, build_lambda(fam)));
    }
    for k in 0..30 {
        let (surf, _, _) = &projs[k % projs.len()];
        let n = surf.space().dim();
        let (u, v) = (random_poly(&mut r, n, 3, 3), random_poly(&mut r, n, 3, 3));
        ensure(derivation_property_check(surf, &u, &v).unwrap(), || format!("pair {k}: not a derivation"))?;
    }
    for k in 0..20 {
        let (_, proj, _) = &projs[k % projs.len()];
        let d = proj.surface().space().tangent_dim();
        // pullbacks along the quadratic projection double degrees
        let [a, b, c] = [0, 1, 2].map(|_| random_poly(&mut r, d, 2, 2));
        let ab = proj.induced_star(&a, &b).unwrap().series;
        let bc = proj.induced_star(&b, &c).unwrap().series;
        ensure(
            proj.induced_star(&ab, &c).unwrap().series == proj.induced_star(&a, &bc).unwrap().series,
            || format!("triple {k}: ⋆_Σ not associative"),
        )?;
    }
    for k in 0..10 {
        let (_, proj, lm) = &projs[k % projs.len()];
        let d = proj.surface().space().tangent_dim();
        let (f, g) = (random_poly(&mut r, d, 2, 3), random_poly(&mut r, d, 2, 3));
        let x = generate::random_vector(&mut r, d, 2);
        let t = generate::small_rational(&mut r, 2, 2);
        ensure(transvection_invariance_check(proj, lm, &f, &g, &x, &t).unwrap(), || {
            format!("tuple {k}: ⋆_Σ not invariant")
        })?;
    }
    Ok(format!(
        "30 associativity triples, 30 pairs, {} projections, 30 derivations, 20 ⋆_Σ triples, 10 invariance tuples",
        projs.len()
    ))
}

/// Exit code and stdout with the wall-time lines removed.
fn run_cli(args: &[&str]) -> Result<(Option<i32>, String), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_extsym"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    let kept: Vec<&str> = text
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"wall_time_ms\"") && !l.ends_with(" ms"))
        .collect();
    Ok((out.status.code(), kept.join("\n")))
}

fn determinism() -> Outcome {
    let (r8, para, twisted) = (data("r8_example.json"), data("parabola.json"), data("nonzero_b_family.json"));
    // the last run fails its derivation check on purpose: reports of failing
    // checks must be reproducible too
    let runs: Vec<(Vec<&str>, i32)> = vec![
        (vec!["--seed", "11", "check-lambda", &r8], 0),
        (vec!["--seed", "11", "surface", &para, "--verify-symmetry", "20"], 0),
        (vec!["--seed", "11", "orbit", &twisted], 0),
        (vec!["--seed", "11", "classify-codim2", "--n", "2", "--count", "40"], 0),
        (vec!["--seed", "11", "--mode", "float", "classify-codim2", "--n", "3", "--count", "12"], 0),
        (vec!["--seed", "11", "star", &para, "--on-sigma", "--f", "x1^2", "--g", "x2", "--check", "assoc", "--check", "invariance"], 0),
        (vec!["--seed", "11", "--output", "text", "star", &r8, "--f", "z1*z5", "--g", "z2^2", "--check", "derivation"], 1),
    ];
    for (args, code) in &runs {
        let first = run_cli(args)?;
        ensure(first.0 == Some(*code), || format!("{args:?} exited with {:?}", first.0))?;
        ensure(first == run_cli(args)?, || format!("{args:?}: reports differ"))?;
    }
    Ok(format!("{} commands rerun with identical reports and exit codes", runs.len()))
}

fn criterion(n: usize, title: &str, budget: Option<u64>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
    let elapsed = start.elapsed();
    let in_budget = budget.is_none_or(|b| elapsed <= Duration::from_secs(b));
    let (ok, detail) = match outcome {
        Ok(d) => (in_budget, d),
        Err(e) => (false, e),
    };
    let limit = budget.map(|b| format!(" (budget {b} s)")).unwrap_or_default();
    println!(
        "criterion {n}: {} {title}: {detail} [{:.2} s{limit}]",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    ok
}

fn main() {
    let fams = families(2026, 250);
    let results = [
        criterion(1, "ℝ⁸ example fidelity", Some(5), r8_fidelity),
        criterion(2, "condition-form agreement", None, || condition_forms(&fams)),
        criterion(3, "curvature dual formula", None, || curvature_identity(&fams)),
        criterion(4, "flatness equivalence", None, || flatness(&fams)),
        criterion(5, "orbit correctness", Some(10), orbit_correctness),
        criterion(6, "codimension-2 dichotomy", Some(60), codim2_dichotomy),
        criterion(7, "quantization suite", Some(30), quantization),
        criterion(8, "CLI determinism", None, determinism),
    ];
    let passed = results.iter().filter(|ok| **ok).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
