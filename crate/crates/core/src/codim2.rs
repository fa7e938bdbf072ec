//! Codimension two (`p = 1`): the cubic condition written directly in
//! `C₁, C₂`, the flat / vanishing-products dichotomy, and a seeded sampler of
//! solutions.

use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{qi, to_f64, Matrix, Rational, Vector};
use crate::generate::{self, rng};
use crate::lambda::{build_lambda, check_condition_3, curvature_at_base, LambdaMap, ShapeFamily};
use crate::symplectic::{standard_form, Block, SympSpace};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ScalarMode {
    Exact,
    /// Floating-point prefilter; accepted candidates are re-verified exactly.
    Float { tolerance: f64 },
}

impl ScalarMode {
    pub fn float() -> Self {
        ScalarMode::Float { tolerance: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Codim2Instance {
    pub n: usize,
    pub c1: Matrix,
    pub c2: Matrix,
    pub mode: ScalarMode,
}

impl Codim2Instance {
    /// `C₁, C₂ ∈ sp(n)` for the standard form on `ℝ²ⁿ`.
    pub fn new(n: usize, c1: Matrix, c2: Matrix, mode: ScalarMode) -> Result<Self> {
        let space = SympSpace::standard(n, 1);
        for (name, c) in [("C1", &c1), ("C2", &c2)] {
            if c.rows() != 2 * n || c.cols() != 2 * n {
                return Err(Error::DimensionMismatch {
                    context: "C_i size",
                    expected: 2 * n,
                    found: c.rows().max(c.cols()),
                });
            }
            if !space.is_in_sp(c, Block::Tangent)? {
                return Err(Error::NotInSp { what: name.into() });
            }
        }
        Ok(Codim2Instance { n, c1, c2, mode })
    }

    pub fn with_mode(mut self, mode: ScalarMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn c(&self) -> [&Matrix; 2] {
        [&self.c1, &self.c2]
    }

    /// The `p = 1` family with `Ω^N` the standard form on `ℝ²`.
    pub fn family(&self) -> ShapeFamily {
        ShapeFamily::new_unchecked(SympSpace::standard(self.n, 1), vec![self.c1.clone(), self.c2.clone()])
            .expect("shapes checked on construction")
    }

    pub fn lambda_map(&self) -> LambdaMap {
        build_lambda(&self.family())
    }

    /// `dim span{C₁, C₂}`.
    pub fn span_dim(&self) -> usize {
        let rows = vec![self.c1.entries().to_vec(), self.c2.entries().to_vec()];
        Matrix::from_rows(rows).expect("equal lengths").rank()
    }

    pub fn products_zero(&self) -> bool {
        self.c()
            .iter()
            .all(|a| self.c().iter().all(|b| (*a * *b).is_zero()))
    }
}

/// Generic scalar for the two residual evaluations.
trait Scalar: Clone {
    fn zero() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn from_q(q: &Rational) -> Self;
}

impl Scalar for Rational {
    fn zero() -> Self {
        qi(0)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn from_q(q: &Rational) -> Self {
        q.clone()
    }
}

/// Only used on inputs bounded so that no intermediate can overflow.
impl Scalar for i128 {
    fn zero() -> Self {
        0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn from_q(q: &Rational) -> Self {
        debug_assert!(q.is_integer());
        q.numer().to_i128().expect("bounded entry")
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn from_q(q: &Rational) -> Self {
        to_f64(q)
    }
}

struct Dense<S> {
    d: usize,
    data: Vec<S>,
}

impl<S: Scalar> Dense<S> {
    fn from(m: &Matrix) -> Self {
        Dense {
            d: m.rows(),
            data: m.entries().iter().map(S::from_q).collect(),
        }
    }
    fn get(&self, r: usize, c: usize) -> &S {
        &self.data[r * self.d + c]
    }
    fn mul(&self, o: &Self) -> Self {
        let d = self.d;
        let mut data = vec![S::zero(); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                for j in 0..d {
                    data[i * d + j] = data[i * d + j].add(&a.mul(o.get(k, j)));
                }
            }
        }
        Dense { d, data }
    }
    fn add(&self, o: &Self) -> Self {
        Dense {
            d: self.d,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.add(b)).collect(),
        }
    }
    fn column(&self, c: usize) -> Vec<S> {
        (0..self.d).map(|r| self.get(r, c).clone()).collect()
    }
}

fn dot<S: Scalar>(u: &[S], v: &[S]) -> S {
    u.iter().zip(v).fold(S::zero(), |acc, (a, b)| acc.add(&a.mul(b)))
}

/// Residual matrices of the two `p = 1` identities at basis vectors `e_x, e_y`.
struct P1Eval<S> {
    d: usize,
    /// `ω₀ᵀ`, so that `u̲ = ω₀ᵀ u` as a covector
    omega_t: Dense<S>,
    c1: Dense<S>,
    c2: Dense<S>,
    c11: Dense<S>,
    c12: Dense<S>,
    c21: Dense<S>,
    c22: Dense<S>,
    anti: Dense<S>,
}

impl<S: Scalar> P1Eval<S> {
    fn new(inst: &Codim2Instance) -> Self {
        let c1 = Dense::from(&inst.c1);
        let c2 = Dense::from(&inst.c2);
        let c12 = c1.mul(&c2);
        let c21 = c2.mul(&c1);
        P1Eval {
            d: 2 * inst.n,
            omega_t: Dense::from(&standard_form(inst.n).transpose()),
            c11: c1.mul(&c1),
            c22: c2.mul(&c2),
            anti: c12.add(&c21),
            c12,
            c21,
            c1,
            c2,
        }
    }

    fn under(&self, u: &[S]) -> Vec<S> {
        (0..self.d)
            .map(|j| dot(u, &self.omega_t.column(j)))
            .collect()
    }

    /// `ω(A e_y, e_x)`
    fn omega_col(&self, a: &Dense<S>, y: usize, x: usize) -> S {
        let ay = a.column(y);
        // ω(u, e_x) = (ω₀ᵀ u)_x
        self.under(&ay)[x].clone()
    }

    /// Accumulates `s · (u ∘ v)` into `acc`.
    fn add_circ(&self, acc: &mut [S], s: &S, u: &[S], v: &[S]) {
        let (uu, vu) = (self.under(u), self.under(v));
        for r in 0..self.d {
            for c in 0..self.d {
                let t = u[r].mul(&vu[c]).add(&v[r].mul(&uu[c]));
                acc[r * self.d + c] = acc[r * self.d + c].add(&s.mul(&t));
            }
        }
    }

    fn add_scaled(&self, acc: &mut [S], s: &S, m: &Dense<S>) {
        for (a, b) in acc.iter_mut().zip(&m.data) {
            *a = a.add(&s.mul(b));
        }
    }

    /// `(first, second)` residual at `(e_x, e_y)`.
    fn residuals(&self, x: usize, y: usize, one: &S, neg: &S) -> (Vec<S>, Vec<S>) {
        let two = one.add(one);
        let neg2 = neg.add(neg);
        let col = |m: &Dense<S>, i: usize| m.column(i);
        let mut a = vec![S::zero(); self.d * self.d];
        self.add_circ(&mut a, one, &col(&self.c11, x), &col(&self.c2, y));
        self.add_circ(&mut a, neg, &col(&self.c12, x), &col(&self.c1, y));
        self.add_circ(&mut a, neg, &col(&self.c11, y), &col(&self.c2, x));
        self.add_circ(&mut a, one, &col(&self.c12, y), &col(&self.c1, x));
        self.add_scaled(&mut a, &self.omega_col(&self.anti, y, x), &self.c1);
        self.add_scaled(&mut a, &neg2.mul(&self.omega_col(&self.c11, y, x)), &self.c2);

        let mut b = vec![S::zero(); self.d * self.d];
        self.add_circ(&mut b, one, &col(&self.c21, x), &col(&self.c2, y));
        self.add_circ(&mut b, neg, &col(&self.c22, x), &col(&self.c1, y));
        self.add_circ(&mut b, neg, &col(&self.c21, y), &col(&self.c2, x));
        self.add_circ(&mut b, one, &col(&self.c22, y), &col(&self.c1, x));
        self.add_scaled(&mut b, &two.mul(&self.omega_col(&self.c22, y, x)), &self.c1);
        self.add_scaled(&mut b, &neg.mul(&self.omega_col(&self.anti, y, x)), &self.c2);
        (a, b)
    }

    /// Both sides are antisymmetric in `(x, y)`, so only `x < y` is evaluated.
    fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.d)
            .flat_map(|x| ((x + 1)..self.d).map(move |y| (x, y)))
            .collect()
    }
}

/// Entries at most this large (after clearing denominators) keep every
/// intermediate of the residuals below `2⁹⁰` for `2n ≤ 64`.
const INT_ENTRY_BOUND: i64 = 1 << 20;

/// Both identities are homogeneous cubics in `(C₁, C₂)`, so clearing a common
/// denominator does not change where they vanish.
fn integer_scaled(inst: &Codim2Instance) -> Option<Codim2Instance> {
    if 2 * inst.n > 64 {
        return None;
    }
    let mut den = num_bigint::BigInt::one();
    for v in inst.c1.entries().iter().chain(inst.c2.entries()) {
        den = den.lcm(v.denom());
    }
    let s = Rational::from_integer(den);
    let (c1, c2) = (inst.c1.scale(&s), inst.c2.scale(&s));
    let bounded = c1
        .entries()
        .iter()
        .chain(c2.entries())
        .all(|v| v.numer().to_i64().is_some_and(|x| x.abs() <= INT_ENTRY_BOUND));
    bounded.then(|| Codim2Instance { c1, c2, ..inst.clone() })
}

fn exact_p1(inst: &Codim2Instance) -> bool {
    if let Some(scaled) = integer_scaled(inst) {
        let ev = P1Eval::<i128>::new(&scaled);
        return ev.pairs().into_iter().all(|(x, y)| {
            let (a, b) = ev.residuals(x, y, &1, &-1);
            a.iter().chain(&b).all(|v| *v == 0)
        });
    }
    exact_p1_rational(inst)
}

fn exact_p1_rational(inst: &Codim2Instance) -> bool {
    let ev = P1Eval::<Rational>::new(inst);
    let (one, neg) = (qi(1), qi(-1));
    ev.pairs().into_iter().all(|(x, y)| {
        let (a, b) = ev.residuals(x, y, &one, &neg);
        a.iter().chain(&b).all(|v| *v == qi(0))
    })
}

fn float_p1(inst: &Codim2Instance, tolerance: f64) -> bool {
    let ev = P1Eval::<f64>::new(inst);
    let norm = (inst.c1.frobenius_f64().powi(2) + inst.c2.frobenius_f64().powi(2)).sqrt();
    let bound = tolerance * (1.0 + norm);
    ev.pairs().into_iter().all(|(x, y)| {
        let (a, b) = ev.residuals(x, y, &1.0, &-1.0);
        let r = a.iter().chain(&b).map(|v| v * v).sum::<f64>().sqrt();
        r <= bound
    })
}

/// Both `p = 1` identities on all basis pairs. In float mode a floating
/// rejection is final and an acceptance is confirmed exactly.
pub fn check_p1_equations(inst: &Codim2Instance) -> bool {
    match inst.mode {
        ScalarMode::Exact => exact_p1(inst),
        ScalarMode::Float { tolerance } => float_p1(inst, tolerance) && exact_p1(inst),
    }
}

/// The same verdict through the general cubic condition on `Λ`.
pub fn check_p1_via_lambda(inst: &Codim2Instance) -> Result<bool> {
    Ok(check_condition_3(&inst.lambda_map())?.holds())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Flat,
    ProductsZero,
    Violation,
}

/// Flat takes precedence when both branches hold.
pub fn classify(inst: &Codim2Instance) -> Result<Verdict> {
    if curvature_at_base(&inst.lambda_map())?.is_zero() {
        Ok(Verdict::Flat)
    } else if inst.products_zero() {
        Ok(Verdict::ProductsZero)
    } else {
        Ok(Verdict::Violation)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LemmaReport {
    /// The lemmas assume `dim span{C₁, C₂} = 2`; otherwise nothing is checked.
    pub applicable: bool,
    /// Every `aC₁ + bC₂` on the sample grid has characteristic polynomial `λ²ⁿ`.
    pub pencil_nilpotent: Option<bool>,
    pub pencil_samples: usize,
    /// `ker C ⊂ ker C'` for each `C ∈ {C₁, C₂}` with `C² ≠ 0`; `None` if no
    /// generator squares to something nonzero.
    pub kernel_inclusion: Option<bool>,
    /// `C₁² = C₂² = C₁C₂ + C₂C₁ = 0`, i.e. `C² = 0` on the whole pencil.
    pub squares_zero: Option<bool>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        [self.pencil_nilpotent, self.kernel_inclusion, self.squares_zero]
            .iter()
            .all(|v| v.unwrap_or(true))
    }
}

const LEMMA_SEED: u64 = 0x1e33a;

fn pencil_coefficients() -> Vec<(Rational, Rational)> {
    let mut out: Vec<(Rational, Rational)> = (-3..=3)
        .flat_map(|a| (-3..=3).map(move |b| (a, b)))
        .filter(|&(a, b)| (a, b) != (0, 0))
        .map(|(a, b)| (qi(a), qi(b)))
        .collect();
    let mut r = rng(LEMMA_SEED, 0);
    while out.len() < 48 + 20 {
        let a = generate::small_rational(&mut r, 7, 5);
        let b = generate::small_rational(&mut r, 7, 5);
        if a != qi(0) || b != qi(0) {
            out.push((a, b));
        }
    }
    out
}

fn kernel_contained(c: &Matrix, other: &Matrix) -> bool {
    c.nullspace().iter().all(|v| other.apply(v).iter().all(|x| *x == qi(0)))
}

pub fn verify_proof_lemmas(inst: &Codim2Instance) -> LemmaReport {
    if inst.span_dim() < 2 {
        return LemmaReport {
            applicable: false,
            pencil_nilpotent: None,
            pencil_samples: 0,
            kernel_inclusion: None,
            squares_zero: None,
        };
    }
    let coeffs = pencil_coefficients();
    let nilpotent = coeffs
        .par_iter()
        .all(|(a, b)| (&inst.c1.scale(a) + &inst.c2.scale(b)).is_nilpotent());
    let [c1, c2] = inst.c();
    let mut inclusion = None;
    for (c, other) in [(c1, c2), (c2, c1)] {
        if !(c * c).is_zero() {
            let ok = kernel_contained(c, other);
            inclusion = Some(inclusion.unwrap_or(true) && ok);
        }
    }
    let squares = (c1 * c1).is_zero() && (c2 * c2).is_zero() && (&(c1 * c2) + &(c2 * c1)).is_zero();
    LemmaReport {
        applicable: true,
        pencil_nilpotent: Some(nilpotent),
        pencil_samples: coeffs.len(),
        kernel_inclusion: inclusion,
        squares_zero: Some(squares),
    }
}

/// Sampling strategies, cycled by instance index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateKind {
    /// `C₁ = ±x₁∘x₁`, `C₂ = ±x₂∘x₂` with `x₂` often made `ω`-orthogonal to `x₁`
    RankOnePair,
    /// Both maps send everything into a Lagrangian `L` and kill `L`
    LagrangianBlock,
    /// Upper block-triangular nilpotent elements `[[N, S], [0, −Nᵀ]]`
    TriangularBlock,
    /// `C₂ = λ C₁`, or `C₂ = 0`
    Proportional,
}

const KINDS: [CandidateKind; 4] = [
    CandidateKind::RankOnePair,
    CandidateKind::LagrangianBlock,
    CandidateKind::TriangularBlock,
    CandidateKind::Proportional,
];

const MAX_ATTEMPTS: usize = 64;

fn circ(n: usize, u: &[Rational], v: &[Rational]) -> Matrix {
    let w = standard_form(n).transpose();
    &Matrix::outer(u, &w.apply(v)) + &Matrix::outer(v, &w.apply(u))
}

fn nonzero_vector<R: Rng>(r: &mut R, d: usize, range: i64) -> Vector {
    loop {
        let v = generate::random_vector(r, d, range);
        if v.iter().any(|x| *x != qi(0)) {
            return v;
        }
    }
}

fn candidate<R: Rng>(r: &mut R, n: usize, kind: CandidateKind) -> (Matrix, Matrix) {
    let d = 2 * n;
    let form = standard_form(n);
    match kind {
        CandidateKind::RankOnePair => {
            let x1 = nonzero_vector(r, d, 2);
            let mut x2 = nonzero_vector(r, d, 2);
            if r.gen_bool(0.7) {
                // x₂ ← x₂ − (ω(x₁,x₂)/ω(x₁,y)) y for some y with ω(x₁,y) ≠ 0
                let w = form.apply(&x2);
                let o12 = crate::exact::dot(&x1, &w);
                let y = (0..d)
                    .map(|i| {
                        let mut e = vec![qi(0); d];
                        e[i] = qi(1);
                        e
                    })
                    .find(|e| crate::exact::dot(&x1, &form.apply(e)) != qi(0))
                    .expect("x₁ nonzero");
                let o1y = crate::exact::dot(&x1, &form.apply(&y));
                let s = o12 / o1y;
                x2 = x2.iter().zip(&y).map(|(a, b)| a - &s * b).collect();
            }
            let s1 = if r.gen_bool(0.5) { qi(1) } else { qi(-1) };
            let s2 = if r.gen_bool(0.5) { qi(1) } else { qi(-1) };
            (circ(n, &x1, &x1).scale(&s1), circ(n, &x2, &x2).scale(&s2))
        }
        CandidateKind::LagrangianBlock => {
            let twist = generate::random_symplectic(r, &form, d);
            let twist_inv = twist.inverse().expect("symplectic");
            let mut pick = || {
                let s = generate::random_symmetric(r, n, 2);
                let mut m = Matrix::zeros(d, d);
                m.set_block(0, n, &s);
                &(&twist * &m) * &twist_inv
            };
            (pick(), pick())
        }
        CandidateKind::TriangularBlock => {
            // sparse entries; dense pairs almost never solve the equations
            let entry = |r: &mut R| if r.gen_bool(0.3) { generate::small_int(r, 1) } else { qi(0) };
            let mut pick = || {
                let mut nmat = Matrix::zeros(n, n);
                let mut s = Matrix::zeros(n, n);
                for i in 0..n {
                    for j in i..n {
                        if j > i {
                            nmat[(i, j)] = entry(r);
                        }
                        let v = entry(r);
                        s[(i, j)] = v.clone();
                        s[(j, i)] = v;
                    }
                }
                let mut m = Matrix::zeros(d, d);
                m.set_block(0, 0, &nmat);
                m.set_block(0, n, &s);
                m.set_block(n, n, &-&nmat.transpose());
                m
            };
            (pick(), pick())
        }
        CandidateKind::Proportional => {
            let c1 = generate::random_sp(r, &form, 2);
            let c2 = c1.scale(&generate::small_int(r, 2));
            (c1, c2)
        }
    }
}

/// A solution for instance `index`: candidates of the index's kind drawn from
/// the stream `(seed, index)` until one passes; falls back to `(C, 0)`.
fn sample_one(n: usize, seed: u64, index: usize, mode: ScalarMode) -> (CandidateKind, Codim2Instance) {
    let kind = KINDS[index % KINDS.len()];
    let mut r = rng(seed, index as u64);
    for _ in 0..MAX_ATTEMPTS {
        let (c1, c2) = candidate(&mut r, n, kind);
        let inst = Codim2Instance::new(n, c1, c2, mode).expect("candidates lie in sp(n)");
        if check_p1_equations(&inst) {
            return (kind, inst);
        }
    }
    let c1 = generate::random_sp(&mut r, &standard_form(n), 2);
    let inst = Codim2Instance::new(n, c1, Matrix::zeros(2 * n, 2 * n), mode).expect("sp(n)");
    (CandidateKind::Proportional, inst)
}

pub fn sample_solutions_tagged(n: usize, count: usize, seed: u64, mode: ScalarMode) -> Vec<(CandidateKind, Codim2Instance)> {
    assert!(n >= 1, "half-dimension must be positive");
    (0..count)
        .into_par_iter()
        .map(|i| sample_one(n, seed, i, mode))
        .collect()
}

pub fn sample_solutions(n: usize, count: usize, seed: u64) -> Vec<Codim2Instance> {
    sample_solutions_tagged(n, count, seed, ScalarMode::Exact)
        .into_iter()
        .map(|(_, inst)| inst)
        .collect()
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Tally {
    pub instances: usize,
    pub flat: usize,
    pub products_zero: usize,
    pub violation: usize,
    pub lemma_failures: usize,
    /// Instances where the direct equations and the `Λ` form disagree.
    pub formulation_mismatches: usize,
    pub span_dim_two: usize,
    pub violations: Vec<usize>,
}

/// Classifies and checks every instance; returns the aggregated counts.
pub fn tally(instances: &[Codim2Instance]) -> Result<Tally> {
    let rows = instances
        .par_iter()
        .map(|inst| -> Result<(Verdict, bool, bool, bool)> {
            let direct = check_p1_equations(inst);
            let via = check_p1_via_lambda(inst)?;
            let verdict = classify(inst)?;
            let lemmas = verify_proof_lemmas(inst);
            Ok((verdict, lemmas.passed(), direct == via, lemmas.applicable))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Tally {
        instances: instances.len(),
        ..Tally::default()
    };
    for (i, (verdict, lemmas_ok, agree, two)) in rows.into_iter().enumerate() {
        match verdict {
            Verdict::Flat => t.flat += 1,
            Verdict::ProductsZero => t.products_zero += 1,
            Verdict::Violation => {
                t.violation += 1;
                t.violations.push(i);
            }
        }
        t.lemma_failures += usize::from(!lemmas_ok);
        t.formulation_mismatches += usize::from(!agree);
        t.span_dim_two += usize::from(two);
    }
    Ok(t)
}
