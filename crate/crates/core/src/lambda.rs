//! Shape data `C_i ∈ sp(n)`, the associated map `Λ : ℝ^{2n} → sp(n+p)`, and
//! the algebraic conditions an extrinsic symmetric space imposes on it.
//!
//! Conventions: `Ω_{N₀}^{ik}` is `space.omega_n_inv()[(i, k)]` and
//! `Λ(x) = Σ_{ik} Ω_{N₀}^{ik} (C_i x ⊗ f̲_k + f_k ⊗ C̲_i̲x̲)`, so `Λ(x) f_i = C_i x`.

use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{q, Matrix, Rational, Span, Vector};
use crate::symplectic::{AffineSympElement, Block, CurvatureTensor, SympSpace};

/// Structure constants, `b[i][j][k] = B^k_{ij}`.
pub type BStruct = Vec<Vec<Vec<Rational>>>;

/// Failures beyond this many are counted but not stored.
const MAX_STORED_FAILURES: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShapeFamily {
    space: SympSpace,
    c: Vec<Matrix>,
    b_struct: Option<BStruct>,
    b_ops: Option<Vec<Matrix>>,
}

impl ShapeFamily {
    /// Validates `C_i ∈ sp(n)` and, when structure constants are supplied,
    /// `C_i C_j = Σ_k B^k_{ij} C_k` together with `B_i ∈ sp` of the normal block.
    pub fn new(
        space: SympSpace,
        c: Vec<Matrix>,
        b_struct: Option<BStruct>,
        b_ops: Option<Vec<Matrix>>,
    ) -> Result<Self> {
        let fam = Self::new_unchecked(space, c)?;
        for (i, ci) in fam.c.iter().enumerate() {
            if !fam.space.is_in_sp(ci, Block::Tangent)? {
                return Err(Error::NotInSp {
                    what: format!("C_{}", i + 1),
                });
            }
        }
        let np = fam.space.normal_dim();
        let (b_struct, b_ops) = match (b_struct, b_ops) {
            (None, None) => (None, None),
            (Some(b), None) => {
                check_b_shape(&b, np)?;
                let ops = b_ops_from_struct(&b);
                (Some(b), Some(ops))
            }
            (None, Some(ops)) => {
                check_ops_shape(&ops, np)?;
                (Some(b_struct_from_ops(&ops)), Some(ops))
            }
            (Some(b), Some(ops)) => {
                check_b_shape(&b, np)?;
                check_ops_shape(&ops, np)?;
                if b != b_struct_from_ops(&ops) {
                    return Err(Error::Hypothesis(
                        "B_ops do not act on f_j by the given structure constants".into(),
                    ));
                }
                (Some(b), Some(ops))
            }
        };
        if let (Some(b), Some(ops)) = (&b_struct, &b_ops) {
            for (i, bi) in ops.iter().enumerate() {
                if !fam.space.is_in_sp(bi, Block::Normal)? {
                    return Err(Error::Hypothesis(format!(
                        "structure constants of B_{} are not compatible with the normal form",
                        i + 1
                    )));
                }
            }
            if let Some((i, j)) = product_relation_violation(&fam.c, b) {
                return Err(Error::Hypothesis(format!(
                    "C_{}C_{} is not Σ_k B^k_{{ij}} C_k",
                    i + 1,
                    j + 1
                )));
            }
        }
        Ok(ShapeFamily {
            b_struct,
            b_ops,
            ..fam
        })
    }

    /// Only shapes are checked; `C_i` need not lie in `sp(n)`. Used to feed
    /// deliberately invalid data to the condition checks.
    pub fn new_unchecked(space: SympSpace, c: Vec<Matrix>) -> Result<Self> {
        if space.p() == 0 {
            return Err(Error::Degenerate("codimension zero (p = 0)".into()));
        }
        if c.len() != space.normal_dim() {
            return Err(Error::DimensionMismatch {
                context: "number of C_i",
                expected: space.normal_dim(),
                found: c.len(),
            });
        }
        let d = space.tangent_dim();
        if let Some(m) = c.iter().find(|m| m.rows() != d || m.cols() != d) {
            return Err(Error::DimensionMismatch {
                context: "C_i size",
                expected: d,
                found: m.rows().max(m.cols()),
            });
        }
        Ok(ShapeFamily {
            space,
            c,
            b_struct: None,
            b_ops: None,
        })
    }

    pub fn space(&self) -> &SympSpace {
        &self.space
    }

    pub fn c(&self) -> &[Matrix] {
        &self.c
    }

    pub fn b_struct(&self) -> Option<&BStruct> {
        self.b_struct.as_ref()
    }

    pub fn b_ops(&self) -> Option<&[Matrix]> {
        self.b_ops.as_deref()
    }

    pub fn n(&self) -> usize {
        self.space.n()
    }

    pub fn p(&self) -> usize {
        self.space.p()
    }

    /// Same family written in the normal basis `f′_i = Σ_j P_{ji} f_j`:
    /// `C′_i = Σ_j P_{ji} C_j`, `Ω′^{N₀} = Pᵀ Ω^{N₀} P`.
    pub fn change_normal_basis(&self, p: &Matrix) -> Result<Self> {
        let np = self.space.normal_dim();
        if p.rows() != np || p.cols() != np {
            return Err(Error::DimensionMismatch {
                context: "normal change of basis",
                expected: np,
                found: p.rows(),
            });
        }
        let p_inv = p.inverse()?;
        let omega_n = &(&p.transpose() * self.space.omega_n()) * p;
        let space = SympSpace::new(self.n(), self.p(), self.space.omega0().clone(), omega_n, None)?;
        let c = (0..np)
            .map(|i| lin_comb(&self.c, &p.column(i)))
            .collect::<Vec<_>>();
        let b_struct = self.b_struct.as_ref().map(|b| {
            // B′^k_{ij} = Σ P_{ai} P_{bj} B^c_{ab} (P⁻¹)_{kc}
            let mut out = vec![vec![vec![Rational::zero(); np]; np]; np];
            for (i, out_i) in out.iter_mut().enumerate() {
                for (j, out_ij) in out_i.iter_mut().enumerate() {
                    for a in 0..np {
                        for bb in 0..np {
                            let w = &p[(a, i)] * &p[(bb, j)];
                            if w.is_zero() {
                                continue;
                            }
                            for cc in 0..np {
                                let bv = &b[a][bb][cc];
                                if bv.is_zero() {
                                    continue;
                                }
                                for (k, slot) in out_ij.iter_mut().enumerate() {
                                    *slot += &w * bv * &p_inv[(k, cc)];
                                }
                            }
                        }
                    }
                }
            }
            out
        });
        ShapeFamily::new(space, c, b_struct, None)
    }

    /// `C_i ↦ S C_i S⁻¹` for `S` symplectic on the tangent block.
    pub fn conjugate_tangent(&self, s: &Matrix) -> Result<Self> {
        let s_inv = s.inverse()?;
        let c = self.c.iter().map(|ci| &(s * ci) * &s_inv).collect();
        ShapeFamily::new(self.space.clone(), c, self.b_struct.clone(), None)
    }
}

fn check_b_shape(b: &BStruct, np: usize) -> Result<()> {
    let ok = b.len() == np && b.iter().all(|bi| bi.len() == np && bi.iter().all(|bij| bij.len() == np));
    if ok {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context: "B_struct shape",
            expected: np,
            found: b.len(),
        })
    }
}

fn check_ops_shape(ops: &[Matrix], np: usize) -> Result<()> {
    if ops.len() != np || ops.iter().any(|m| m.rows() != np || m.cols() != np) {
        return Err(Error::DimensionMismatch {
            context: "B_ops shape",
            expected: np,
            found: ops.len(),
        });
    }
    Ok(())
}

/// `B_i f_j = Σ_k B^k_{ij} f_k`, i.e. `(B_i)_{kj} = B^k_{ij}`.
pub fn b_ops_from_struct(b: &BStruct) -> Vec<Matrix> {
    let np = b.len();
    b.iter()
        .map(|bi| {
            let mut m = Matrix::zeros(np, np);
            for (j, bij) in bi.iter().enumerate() {
                for (k, v) in bij.iter().enumerate() {
                    m[(k, j)] = v.clone();
                }
            }
            m
        })
        .collect()
}

pub fn b_struct_from_ops(ops: &[Matrix]) -> BStruct {
    let np = ops.len();
    ops.iter()
        .map(|m| (0..np).map(|j| (0..np).map(|k| m[(k, j)].clone()).collect()).collect())
        .collect()
}

fn lin_comb(ms: &[Matrix], coeffs: &[Rational]) -> Matrix {
    let mut acc = Matrix::zeros(ms[0].rows(), ms[0].cols());
    for (m, c) in ms.iter().zip(coeffs) {
        if !c.is_zero() {
            acc = &acc + &m.scale(c);
        }
    }
    acc
}

fn product_relation_violation(c: &[Matrix], b: &BStruct) -> Option<(usize, usize)> {
    for i in 0..c.len() {
        for j in 0..c.len() {
            if &c[i] * &c[j] != lin_comb(c, &b[i][j]) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Some `B^k_{ij}` with `C_i C_j = Σ_k B^k_{ij} C_k`, if one exists. Unique
/// when the `C_i` are linearly independent.
pub fn solve_b_structure(c: &[Matrix]) -> Option<BStruct> {
    let np = c.len();
    let flat: Vec<Vector> = c.iter().map(|m| m.entries().to_vec()).collect();
    let system = Matrix::from_columns(&flat).ok()?;
    let mut out = Vec::with_capacity(np);
    for ci in c {
        let mut row = Vec::with_capacity(np);
        for cj in c {
            row.push(system.solve_any((ci * cj).entries())?);
        }
        out.push(row);
    }
    Some(out)
}

/// `Λ` cached on the tangent basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LambdaMap {
    family: ShapeFamily,
    basis: Vec<Matrix>,
}

pub fn build_lambda(family: &ShapeFamily) -> LambdaMap {
    let space = family.space();
    let np = space.normal_dim();
    let basis = (0..space.tangent_dim())
        .map(|alpha| {
            let x = space.e(alpha);
            let mut m = Matrix::zeros(space.dim(), space.dim());
            for (i, ci) in family.c().iter().enumerate() {
                let cix = space.embed_tangent(&ci.apply(&space.tangent_part(&x)));
                let cix_under = space.underline(&cix);
                for k in 0..np {
                    let w = &space.omega_n_inv()[(i, k)];
                    if w.is_zero() {
                        continue;
                    }
                    let fk = space.f(k);
                    let term = &Matrix::outer(&cix, &space.underline(&fk)) + &Matrix::outer(&fk, &cix_under);
                    m = &m + &term.scale(w);
                }
            }
            m
        })
        .collect();
    LambdaMap {
        family: family.clone(),
        basis,
    }
}

impl LambdaMap {
    /// Arbitrary basis images; no structure is assumed.
    pub fn from_basis_images(family: ShapeFamily, basis: Vec<Matrix>) -> Result<Self> {
        let space = family.space();
        if basis.len() != space.tangent_dim() {
            return Err(Error::DimensionMismatch {
                context: "number of basis images",
                expected: space.tangent_dim(),
                found: basis.len(),
            });
        }
        if let Some(m) = basis.iter().find(|m| m.rows() != space.dim() || m.cols() != space.dim()) {
            return Err(Error::DimensionMismatch {
                context: "basis image size",
                expected: space.dim(),
                found: m.rows(),
            });
        }
        Ok(LambdaMap { family, basis })
    }

    pub fn family(&self) -> &ShapeFamily {
        &self.family
    }

    pub fn space(&self) -> &SympSpace {
        self.family.space()
    }

    pub fn basis_image(&self, alpha: usize) -> &Matrix {
        &self.basis[alpha]
    }

    pub fn basis_images(&self) -> &[Matrix] {
        &self.basis
    }

    /// `Λ(x)` for a tangent vector `x` (length `2n`).
    pub fn lambda(&self, x: &[Rational]) -> Matrix {
        assert_eq!(x.len(), self.basis.len(), "tangent vector length");
        lin_comb(&self.basis, x)
    }

    pub fn is_zero(&self) -> bool {
        self.basis.iter().all(Matrix::is_zero)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionFailure {
    /// Basis indices of the failing tuple.
    pub indices: Vec<usize>,
    pub residual: Matrix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionReport {
    pub holds: bool,
    pub checked: usize,
    pub failure_count: usize,
    /// The first few failures in basis order.
    pub failures: Vec<ConditionFailure>,
}

impl ConditionReport {
    fn from_results(results: Vec<Option<ConditionFailure>>) -> Self {
        let checked = results.len();
        let all: Vec<ConditionFailure> = results.into_iter().flatten().collect();
        ConditionReport {
            holds: all.is_empty(),
            checked,
            failure_count: all.len(),
            failures: all.into_iter().take(MAX_STORED_FAILURES).collect(),
        }
    }

    pub fn summary(&self) -> String {
        match self.failures.first() {
            None => format!("{} tuples checked", self.checked),
            Some(f) => format!(
                "{} of {} tuples fail; first at basis indices {:?}",
                self.failure_count, self.checked, f.indices
            ),
        }
    }
}

fn column(v: Vector) -> Matrix {
    let n = v.len();
    Matrix::new(n, 1, v).expect("column shape")
}

/// `S₀ Λ(e_α) S₀ = −Λ(e_α)` for every tangent basis vector.
pub fn check_condition_1(lm: &LambdaMap) -> ConditionReport {
    let s0 = lm.space().s0();
    let results = lm
        .basis
        .iter()
        .enumerate()
        .map(|(alpha, l)| {
            let residual = &(&(&s0 * l) * &s0) + l;
            (!residual.is_zero()).then(|| ConditionFailure {
                indices: vec![alpha],
                residual,
            })
        })
        .collect();
    ConditionReport::from_results(results)
}

/// `Λ(e_α) e_β = Λ(e_β) e_α` for all tangent basis pairs.
pub fn check_condition_2(lm: &LambdaMap) -> ConditionReport {
    let d = lm.basis.len();
    let mut results = Vec::new();
    for a in 0..d {
        for b in (a + 1)..d {
            let r: Vector = lm.basis[a]
                .column(b)
                .into_iter()
                .zip(lm.basis[b].column(a))
                .map(|(u, v)| u - v)
                .collect();
            let bad = r.iter().any(|v| !v.is_zero());
            results.push(bad.then(|| ConditionFailure {
                indices: vec![a, b],
                residual: column(r),
            }));
        }
    }
    ConditionReport::from_results(results)
}

fn ordered_pairs(d: usize) -> Vec<(usize, usize)> {
    (0..d).flat_map(|a| ((a + 1)..d).map(move |b| (a, b))).collect()
}

/// `Λ([Λ(x),Λ(y)]z) = [[Λ(x),Λ(y)],Λ(z)]` on basis triples. Both sides are
/// antisymmetric in `(x, y)`, so only `x < y` is enumerated.
pub fn condition_3_lambda_form(lm: &LambdaMap) -> ConditionReport {
    let d = lm.basis.len();
    let pairs = ordered_pairs(d);
    let brackets: Vec<Matrix> = pairs
        .par_iter()
        .map(|&(a, b)| lm.basis[a].commutator(&lm.basis[b]))
        .collect();
    let tasks: Vec<(usize, usize)> = (0..pairs.len()).flat_map(|k| (0..d).map(move |z| (k, z))).collect();
    let results = tasks
        .par_iter()
        .map(|&(k, z)| {
            let kxy = &brackets[k];
            let kz = kxy.column(z);
            let lhs = lm.lambda(&kz[..d]);
            let rhs = kxy.commutator(&lm.basis[z]);
            let residual = &lhs - &rhs;
            (!residual.is_zero()).then(|| ConditionFailure {
                indices: vec![pairs[k].0, pairs[k].1, z],
                residual,
            })
        })
        .collect();
    ConditionReport::from_results(results)
}

/// Precomputed tangent data for sums over the `C_i`.
struct CTables {
    /// `cx[i][α] = C_i e_α`
    cx: Vec<Vec<Vector>>,
    /// `w[i][α][β] = ω(C_i e_α, e_β)`
    w: Vec<Matrix>,
}

impl CTables {
    fn new(space: &SympSpace, c: &[Matrix]) -> Self {
        let d = space.tangent_dim();
        let cx = c.iter().map(|ci| (0..d).map(|a| ci.column(a)).collect()).collect();
        let w = c.iter().map(|ci| space.form_of(ci, Block::Tangent)).collect();
        CTables { cx, w }
    }
}

fn axpy(acc: &mut [Rational], s: &Rational, v: &[Rational]) {
    if s.is_zero() {
        return;
    }
    for (a, b) in acc.iter_mut().zip(v) {
        if !b.is_zero() {
            *a += s * b;
        }
    }
}

/// The same condition written through the `C_i`: for every `l` and basis
/// triple,
/// `Σ Ω^{ji}[ω(C_jy,z)C_lC_ix − ω(C_jx,z)C_lC_iy]
///  = Σ Ω^{ji}[ω(C_jy,C_lz)C_ix − ω(C_jx,C_lz)C_iy + ω(C_jy,C_lx)C_iz − ω(C_jx,C_ly)C_iz]`.
/// The residual of a triple has one column per `l`.
pub fn condition_3_c_form(family: &ShapeFamily) -> ConditionReport {
    let space = family.space();
    let d = space.tangent_dim();
    let np = space.normal_dim();
    let c = family.c();
    let t = CTables::new(space, c);
    let oinv = space.omega_n_inv();
    // clc[l][i][α] = C_l C_i e_α
    let clc: Vec<Vec<Vec<Vector>>> = c
        .iter()
        .map(|cl| (0..np).map(|i| (0..d).map(|a| cl.apply(&t.cx[i][a])).collect()).collect())
        .collect();
    // wc[j][l][α][β] = ω(C_j e_α, C_l e_β)
    let wc: Vec<Vec<Matrix>> = c
        .iter()
        .map(|cj| c.iter().map(|cl| &cj.transpose() * &(space.omega0() * cl)).collect())
        .collect();
    let pairs = ordered_pairs(d);
    let tasks: Vec<(usize, usize, usize)> = pairs.iter().flat_map(|&(x, y)| (0..d).map(move |z| (x, y, z))).collect();
    let results = tasks
        .par_iter()
        .map(|&(x, y, z)| {
            let mut residual = Matrix::zeros(d, np);
            for l in 0..np {
                let mut r = vec![Rational::zero(); d];
                for j in 0..np {
                    for i in 0..np {
                        let o = &oinv[(j, i)];
                        if o.is_zero() {
                            continue;
                        }
                        axpy(&mut r, &(o * &t.w[j][(y, z)]), &clc[l][i][x]);
                        axpy(&mut r, &-(o * &t.w[j][(x, z)]), &clc[l][i][y]);
                        axpy(&mut r, &-(o * &wc[j][l][(y, z)]), &t.cx[i][x]);
                        axpy(&mut r, &(o * &wc[j][l][(x, z)]), &t.cx[i][y]);
                        let s = &wc[j][l][(y, x)] - &wc[j][l][(x, y)];
                        axpy(&mut r, &-(o * s), &t.cx[i][z]);
                    }
                }
                for (row, v) in r.into_iter().enumerate() {
                    residual[(row, l)] = v;
                }
            }
            (!residual.is_zero()).then(|| ConditionFailure {
                indices: vec![x, y, z],
                residual,
            })
        })
        .collect();
    ConditionReport::from_results(results)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Condition3Report {
    pub lambda_form: ConditionReport,
    pub c_form: ConditionReport,
}

impl Condition3Report {
    pub fn holds(&self) -> bool {
        self.lambda_form.holds
    }
}

/// Evaluates both forms. When `Λ` comes from `build_lambda` and the `C_i` lie
/// in `sp(n)`, the two must fail on exactly the same triples; anything else
/// is reported as an internal inconsistency.
pub fn check_condition_3(lm: &LambdaMap) -> Result<Condition3Report> {
    let lambda_form = condition_3_lambda_form(lm);
    let c_form = condition_3_c_form(&lm.family);
    let comparable = lm.basis == build_lambda(&lm.family).basis && check_condition_2(lm).holds;
    if comparable {
        let failing = |r: &ConditionReport| r.failure_count;
        let first = |r: &ConditionReport| r.failures.iter().map(|f| f.indices.clone()).collect::<Vec<_>>();
        if lambda_form.holds != c_form.holds
            || failing(&lambda_form) != failing(&c_form)
            || first(&lambda_form) != first(&c_form)
        {
            return Err(Error::Inconsistent(format!(
                "condition 3 forms disagree: {} vs {}",
                lambda_form.summary(),
                c_form.summary()
            )));
        }
    }
    Ok(Condition3Report { lambda_form, c_form })
}

/// `α₀(x, y) = Λ(y) x`, returned as normal-block coordinates.
pub fn second_fundamental_form(lm: &LambdaMap, x: &[Rational], y: &[Rational]) -> Result<Vector> {
    let d = lm.space().tangent_dim();
    for v in [x, y] {
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                context: "second fundamental form argument",
                expected: d,
                found: v.len(),
            });
        }
    }
    let image = lm.lambda(y).apply(&lm.space().embed_tangent(x));
    Ok(lm.space().normal_part(&image))
}

/// True iff `Ω^{N₀}(α₀(a,b), α₀(c,d)) = 0` on all basis tuples.
pub fn alpha_image_isotropic(lm: &LambdaMap) -> bool {
    let space = lm.space();
    let d = space.tangent_dim();
    let mut span = Span::new(space.normal_dim());
    let mut gens = Vec::new();
    for a in 0..d {
        for b in a..d {
            let v = space.normal_part(&lm.basis[b].column(a));
            if span.insert(&v) {
                gens.push(v);
            }
        }
    }
    gens.iter()
        .enumerate()
        .all(|(k, u)| gens[k + 1..].iter().all(|v| space.form_normal(u, v).is_zero()))
}

/// Curvature at the base point computed as `−ω([Λ(x),Λ(y)]z, t)` and again
/// from the `C_i` as
/// `R(x,y)z = Σ Ω^{ji}(ω(C_iy,z)C_jx − ω(C_ix,z)C_jy)`; the two must agree.
pub fn curvature_at_base(lm: &LambdaMap) -> Result<CurvatureTensor> {
    let c1 = check_condition_1(lm);
    let c2 = check_condition_2(lm);
    if !c1.holds || !c2.holds {
        return Err(Error::Hypothesis(format!(
            "curvature needs conditions 1 and 2 ({}; {})",
            c1.summary(),
            c2.summary()
        )));
    }
    let space = lm.space();
    let d = space.tangent_dim();
    let om = space.omega0();
    let brackets: Vec<Vec<Matrix>> = (0..d)
        .map(|x| (0..d).map(|y| lm.basis[x].commutator(&lm.basis[y])).collect())
        .collect();
    let from_brackets = CurvatureTensor::from_fn(d, |x, y, z, t| -{
        let v = brackets[x][y].column(z);
        let mut s = Rational::zero();
        for (r, vr) in v[..d].iter().enumerate() {
            if !vr.is_zero() {
                s += vr * &om[(r, t)];
            }
        }
        s
    });
    let from_c = curvature_from_c(&lm.family);
    if from_brackets != from_c {
        return Err(Error::Inconsistent(
            "bracket and C-sum curvature formulas disagree".into(),
        ));
    }
    Ok(from_c)
}

/// `R(x,y,z,t) = ω(R(x,y)z, t)` with `R(x,y)z` from the `C_i`.
pub fn curvature_from_c(family: &ShapeFamily) -> CurvatureTensor {
    let space = family.space();
    let d = space.tangent_dim();
    let np = space.normal_dim();
    let t = CTables::new(space, family.c());
    let oinv = space.omega_n_inv();
    let om = space.omega0();
    let mut rxyz = vec![vec![vec![Vec::new(); d]; d]; d];
    for (x, rx) in rxyz.iter_mut().enumerate() {
        for (y, rxy) in rx.iter_mut().enumerate() {
            for (z, slot) in rxy.iter_mut().enumerate() {
                let mut v = vec![Rational::zero(); d];
                for j in 0..np {
                    for i in 0..np {
                        let o = &oinv[(j, i)];
                        if o.is_zero() {
                            continue;
                        }
                        axpy(&mut v, &(o * &t.w[i][(y, z)]), &t.cx[j][x]);
                        axpy(&mut v, &-(o * &t.w[i][(x, z)]), &t.cx[j][y]);
                    }
                }
                *slot = v;
            }
        }
    }
    CurvatureTensor::from_fn(d, |x, y, z, tt| {
        let v: &Vector = &rxyz[x][y][z];
        let mut s = Rational::zero();
        for (r, vr) in v.iter().enumerate() {
            if !vr.is_zero() {
                s += vr * &om[(r, tt)];
            }
        }
        s
    })
}

/// Terms `(coefficient, i, j)` of the element `Σ coefficient · C_i ∧ C_j` of
/// `Λ²sp(n)` that `φ` sends to the base-point curvature:
/// coefficient `−½ Ω^{ji}`.
pub fn curvature_wedge_terms(space: &SympSpace) -> Vec<(Rational, usize, usize)> {
    let np = space.normal_dim();
    let half = q(-1, 2);
    let mut out = Vec::new();
    for i in 0..np {
        for j in 0..np {
            let o = &space.omega_n_inv()[(j, i)];
            if !o.is_zero() {
                out.push((o * &half, i, j));
            }
        }
    }
    out
}

/// `φ(Σ c · C_i ∧ C_j)`.
pub fn phi_of_wedge(family: &ShapeFamily, terms: &[(Rational, usize, usize)]) -> Result<CurvatureTensor> {
    let space = family.space();
    let mut acc = CurvatureTensor::zeros(space.tangent_dim());
    for (coef, i, j) in terms {
        acc = acc.add(&space.phi(&family.c()[*i], &family.c()[*j])?.scale(coef));
    }
    Ok(acc)
}

/// `ψ(Σ c · C_i ∧ C_j) = Σ c [C_i, C_j]`.
pub fn psi_of_wedge(family: &ShapeFamily, terms: &[(Rational, usize, usize)]) -> Matrix {
    let d = family.space().tangent_dim();
    let mut acc = Matrix::zeros(d, d);
    for (coef, i, j) in terms {
        acc = &acc + &family.c()[*i].commutator(&family.c()[*j]).scale(coef);
    }
    acc
}

/// Spanning set of `𝔤₁ = 𝒫₁ ⊕ 𝒦₁` with closure and nilpotency data.
#[derive(Clone, Debug)]
pub struct LambdaAlgebra {
    /// `(Λ(e_α), e_α)` for each α, then `([Λ(e_α),Λ(e_β)], 0)` for α < β.
    pub generators: Vec<AffineSympElement>,
    pub labels: Vec<String>,
    pub dim: usize,
    pub k1_dim: usize,
    /// Dimensions of `𝔤 ⊇ [𝔤,𝔤] ⊇ [𝔤,[𝔤,𝔤]] ⊇ …`, ending in 0 when nilpotent.
    pub lower_central_dims: Vec<usize>,
    pub nilpotent: bool,
}

fn span_basis(elems: impl IntoIterator<Item = AffineSympElement>, ambient: usize) -> Vec<AffineSympElement> {
    let mut span = Span::new(ambient);
    elems.into_iter().filter(|e| span.insert(&e.flatten())).collect()
}

pub fn lambda_group_algebra(lm: &LambdaMap) -> Result<LambdaAlgebra> {
    let space = lm.space();
    let d = space.tangent_dim();
    let mut generators = Vec::new();
    let mut labels = Vec::new();
    for alpha in 0..d {
        generators.push(AffineSympElement {
            mat: lm.basis[alpha].clone(),
            vec: space.e(alpha),
        });
        labels.push(format!("P{}", alpha + 1));
    }
    for (a, b) in ordered_pairs(d) {
        generators.push(AffineSympElement {
            mat: lm.basis[a].commutator(&lm.basis[b]),
            vec: vec![Rational::zero(); space.dim()],
        });
        labels.push(format!("K{},{}", a + 1, b + 1));
    }
    let ambient = space.dim() * space.dim() + space.dim();
    let mut span = Span::new(ambient);
    for g in &generators {
        span.insert(&g.flatten());
    }
    let dim = span.dim();
    let k1_dim = span_basis(generators[d..].iter().cloned(), ambient).len();
    let pairs: Vec<(usize, usize)> = ordered_pairs(generators.len());
    let bad = pairs
        .par_iter()
        .find_first(|&&(a, b)| !span.contains(&generators[a].bracket(&generators[b]).flatten()));
    if let Some(&(a, b)) = bad {
        return Err(Error::NotClosed(format!(
            "[{}, {}] leaves the span of the generators",
            labels[a], labels[b]
        )));
    }
    let basis = span_basis(generators.iter().cloned(), ambient);
    let mut lower_central_dims = vec![basis.len()];
    let mut current = basis.clone();
    let mut nilpotent = current.is_empty();
    while !current.is_empty() {
        let brackets: Vec<AffineSympElement> = basis
            .iter()
            .flat_map(|g| current.iter().map(move |h| g.bracket(h)))
            .collect();
        let next = span_basis(brackets, ambient);
        lower_central_dims.push(next.len());
        if next.is_empty() {
            nilpotent = true;
            break;
        }
        if next.len() == current.len() {
            break;
        }
        current = next;
    }
    Ok(LambdaAlgebra {
        generators,
        labels,
        dim,
        k1_dim,
        lower_central_dims,
        nilpotent,
    })
}
