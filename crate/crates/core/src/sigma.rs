//! Quadric surfaces `Σ = {F_i = 0}` cut out by the hamiltonians of `2p`
//! affine symplectic generators `(A_i, a_i)`.

use num_traits::Zero;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{dot, format_rational, q, Matrix, MultiPoly, Rational, Span, Vector};
use crate::generate::{self, rng};
use crate::lambda::{b_ops_from_struct, BStruct, ShapeFamily};
use crate::symplectic::{AffineMap, AffineSympElement, Block, SympSpace};

fn fmt_vec(v: &[Rational]) -> String {
    let parts: Vec<String> = v.iter().map(format_rational).collect();
    format!("[{}]", parts.join(", "))
}

#[derive(Clone, Debug)]
pub struct SurfaceSpec {
    space: SympSpace,
    generators: Vec<AffineSympElement>,
    /// `ΩA_i`, so that `Ω(z, A_i z) = zᵀ (ΩA_i) z`.
    omega_a: Vec<Matrix>,
    /// `a_iᵀΩ`, so that `Ω(a_i, z) = (a_iᵀΩ)·z`.
    a_under: Vec<Vector>,
    f: Vec<MultiPoly>,
    gram: Matrix,
    gram_inv: Matrix,
    b_struct: BStruct,
    tangent0: Vec<Vector>,
}

/// Validates the generators and solves the stabilization constants
/// `A_i a_j = Σ_k B^k_{ij} a_k`, then checks `A_i A_j = Σ_k B^k_{ij} A_k`.
pub fn build_surface(space: &SympSpace, generators: Vec<AffineSympElement>) -> Result<SurfaceSpec> {
    let np = space.normal_dim();
    if generators.len() != np {
        return Err(Error::DimensionMismatch {
            context: "number of generators",
            expected: np,
            found: generators.len(),
        });
    }
    for (i, g) in generators.iter().enumerate() {
        if g.vec.len() != space.dim() || g.mat.rows() != space.dim() {
            return Err(Error::DimensionMismatch {
                context: "generator size",
                expected: space.dim(),
                found: g.vec.len(),
            });
        }
        if !space.is_in_sp(&g.mat, Block::Ambient)? {
            return Err(Error::NotInSp {
                what: format!("A_{}", i + 1),
            });
        }
    }
    let a: Vec<&Vector> = generators.iter().map(|g| &g.vec).collect();
    let mut gram = Matrix::zeros(np, np);
    for i in 0..np {
        for j in 0..np {
            gram[(i, j)] = space.form(a[i], a[j]);
        }
    }
    let gram_inv = gram.inverse().map_err(|_| {
        Error::Degenerate(format!(
            "normal space degenerate: Gram matrix of the a_i has rank {} < {}",
            gram.rank(),
            np
        ))
    })?;
    // Ω(a_l, A_i a_j) = Σ_k B^k_{ij} G_{lk}
    let mut b_struct = vec![vec![vec![Rational::zero(); np]; np]; np];
    for i in 0..np {
        for j in 0..np {
            let aij = generators[i].mat.apply(a[j]);
            let rhs: Vector = (0..np).map(|l| space.form(a[l], &aij)).collect();
            let coeffs = gram_inv.apply(&rhs);
            let mut recon = vec![Rational::zero(); space.dim()];
            for (k, c) in coeffs.iter().enumerate() {
                for (r, v) in recon.iter_mut().zip(a[k]) {
                    *r += c * v;
                }
            }
            if recon != aij {
                let residual: Vector = aij.iter().zip(&recon).map(|(x, y)| x - y).collect();
                return Err(Error::NotClosed(format!(
                    "A_{}a_{} leaves span(a); residual {}",
                    i + 1,
                    j + 1,
                    fmt_vec(&residual)
                )));
            }
            b_struct[i][j] = coeffs;
        }
    }
    for i in 0..np {
        for j in 0..np {
            let mut rhs = Matrix::zeros(space.dim(), space.dim());
            for k in 0..np {
                let c = &b_struct[i][j][k];
                if !c.is_zero() {
                    rhs = &rhs + &generators[k].mat.scale(c);
                }
            }
            let residual = &(&generators[i].mat * &generators[j].mat) - &rhs;
            if !residual.is_zero() {
                let nonzero = residual.entries().iter().filter(|v| !v.is_zero()).count();
                return Err(Error::NotClosed(format!(
                    "A_{}A_{} ≠ Σ_k B^k A_k ({} nonzero residual entries, Frobenius {:.3e})",
                    i + 1,
                    j + 1,
                    nonzero,
                    residual.frobenius_f64()
                )));
            }
        }
    }
    let omega_a: Vec<Matrix> = generators.iter().map(|g| space.omega() * &g.mat).collect();
    let a_under: Vec<Vector> = a.iter().map(|v| space.underline(v)).collect();
    let half = q(1, 2);
    let f = omega_a
        .iter()
        .zip(&a_under)
        .map(|(oa, au)| {
            let quad = MultiPoly::quadratic(&oa.scale(&half));
            let lin = MultiPoly::linear(au);
            &quad - &lin
        })
        .collect();
    let tangent0 = space.omega_perp(&a.iter().map(|v| (*v).clone()).collect::<Vec<_>>());
    Ok(SurfaceSpec {
        space: space.clone(),
        generators,
        omega_a,
        a_under,
        f,
        gram,
        gram_inv,
        b_struct,
        tangent0,
    })
}

impl SurfaceSpec {
    /// `A_i = C_i ⊕ B_i`, `a_i = f_i`; `B_i = 0` when the family has none.
    pub fn from_family(family: &ShapeFamily) -> Result<Self> {
        let space = family.space();
        let np = space.normal_dim();
        let gens = family
            .c()
            .iter()
            .enumerate()
            .map(|(i, ci)| {
                let bi = family
                    .b_ops()
                    .map(|ops| ops[i].clone())
                    .unwrap_or_else(|| Matrix::zeros(np, np));
                AffineSympElement::new(space, Matrix::block_diag(ci, &bi), space.f(i))
            })
            .collect::<Result<Vec<_>>>()?;
        build_surface(space, gens)
    }

    pub fn space(&self) -> &SympSpace {
        &self.space
    }

    pub fn generators(&self) -> &[AffineSympElement] {
        &self.generators
    }

    /// `F_i(z) = ½Ω(z, A_i z) − Ω(a_i, z)` as polynomials in the ambient coordinates.
    pub fn hamiltonians(&self) -> &[MultiPoly] {
        &self.f
    }

    /// `Ω(a_i, a_j)`.
    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn b_struct(&self) -> &BStruct {
        &self.b_struct
    }

    /// Basis of `T₀Σ = span(a_i)^⊥`.
    pub fn tangent_at_origin(&self) -> &[Vector] {
        &self.tangent0
    }

    fn check_point(&self, z: &[Rational]) -> Result<()> {
        if z.len() != self.space.dim() {
            return Err(Error::DimensionMismatch {
                context: "ambient point",
                expected: self.space.dim(),
                found: z.len(),
            });
        }
        Ok(())
    }

    /// `F_i(z)` from the matrices (no polynomial evaluation).
    pub fn eval_f(&self, z: &[Rational]) -> Result<Vector> {
        self.check_point(z)?;
        let half = q(1, 2);
        Ok(self
            .omega_a
            .iter()
            .zip(&self.a_under)
            .map(|(oa, au)| dot(z, &oa.apply(z)) * &half - dot(au, z))
            .collect())
    }

    pub fn membership(&self, z: &[Rational]) -> Result<bool> {
        Ok(self.eval_f(z)?.iter().all(Zero::is_zero))
    }

    fn require_member(&self, z: &[Rational]) -> Result<()> {
        if !self.membership(z)? {
            return Err(Error::Hypothesis(format!("point {} is not on the surface", fmt_vec(z))));
        }
        Ok(())
    }

    /// `A_i z + a_i`; these span the normal space at `z`.
    pub fn normal_vectors(&self, z: &[Rational]) -> Vec<Vector> {
        self.generators
            .iter()
            .map(|g| g.mat.apply(z).into_iter().zip(&g.vec).map(|(x, y)| x + y).collect())
            .collect()
    }

    /// `(tangent basis, normal basis)` at a point of the surface.
    pub fn tangent_normal_split(&self, z: &[Rational]) -> Result<(Vec<Vector>, Vec<Vector>)> {
        self.check_point(z)?;
        self.require_member(z)?;
        let normal = self.normal_vectors(z);
        let tangent = self.space.omega_perp(&normal);
        Ok((tangent, normal))
    }

    /// `Ω(A_j z + a_j, A_k z + a_k)`.
    pub fn normal_gram(&self, z: &[Rational]) -> Result<Matrix> {
        self.check_point(z)?;
        let nv = self.normal_vectors(z);
        let np = nv.len();
        let mut g = Matrix::zeros(np, np);
        for j in 0..np {
            for k in 0..np {
                g[(j, k)] = self.space.form(&nv[j], &nv[k]);
            }
        }
        Ok(g)
    }

    /// The symmetry at `x` relative to `T_xΣ`.
    pub fn symmetry_at(&self, x: &[Rational]) -> Result<AffineMap> {
        let (tangent, _) = self.tangent_normal_split(x)?;
        self.space.symmetry(x, &tangent)
    }

    /// `F_i(S_x y) = 0` for all `i`.
    pub fn verify_extrinsic_symmetry(&self, x: &[Rational], y: &[Rational]) -> Result<bool> {
        self.check_point(y)?;
        self.require_member(y)?;
        let s = self.symmetry_at(x)?;
        self.membership(&s.apply(y))
    }

    /// Point `y + Σ u^k a_k` of the surface over `y ∈ T₀Σ`, found by iterating
    /// `u ← G⁻¹(½ q(y) + ½ β(u))` with `q_i = Ω(y, A_i y)`, `β_i(u) = Ω(u, A_i u)`
    /// until it is stationary. The iteration is exact and terminates because
    /// all triple products of the `A_i` vanish.
    pub fn point_over(&self, y: &[Rational]) -> Result<Vector> {
        self.check_point(y)?;
        let np = self.space.normal_dim();
        let half = q(1, 2);
        let qy: Vector = self.omega_a.iter().map(|oa| dot(y, &oa.apply(y)) * &half).collect();
        let a: Vec<&Vector> = self.generators.iter().map(|g| &g.vec).collect();
        let combine = |u: &[Rational]| -> Vector {
            let mut z = y.to_vec();
            for (k, c) in u.iter().enumerate() {
                if !c.is_zero() {
                    for (r, v) in z.iter_mut().zip(a[k]) {
                        *r += c * v;
                    }
                }
            }
            z
        };
        // F_i(y + u) = ½q_i + ½β_i(u) − (G u)_i, using the block structure
        let mut u = vec![Rational::zero(); np];
        for _ in 0..(2 * np + 4) {
            let ua = combine(&u);
            let nu: Vector = {
                let w: Vec<Rational> = (0..np)
                    .map(|i| {
                        let un: Vector = ua.iter().zip(y).map(|(p, t)| p - t).collect();
                        &qy[i] + dot(&un, &self.omega_a[i].apply(&un)) * &half
                    })
                    .collect();
                // Ω(a_i, Σ u^k a_k) = (G u)_i
                self.gram_inv.apply(&w)
            };
            if nu == u {
                let z = combine(&u);
                return if self.membership(&z)? {
                    Ok(z)
                } else {
                    Err(Error::Inconsistent(format!(
                        "stationary point {} is not on the surface; is y tangent at 0?",
                        fmt_vec(&z)
                    )))
                };
            }
            u = nu;
        }
        Err(Error::Inconsistent("normal-coordinate iteration did not stabilize".into()))
    }

    /// Seeded points of the surface over random tangent coordinates.
    pub fn random_points(&self, seed: u64, count: usize, range: i64, max_den: i64) -> Result<Vec<Vector>> {
        (0..count)
            .map(|k| {
                let mut r = rng(seed, k as u64);
                let mut y = vec![Rational::zero(); self.space.dim()];
                for b in &self.tangent0 {
                    let t = generate::small_rational(&mut r, range, max_den);
                    for (acc, v) in y.iter_mut().zip(b) {
                        *acc += &t * v;
                    }
                }
                self.point_over(&y)
            })
            .collect()
    }

    /// Anticommutation and triple-product identities of the `A_i`.
    pub fn verify_product_identities(&self) -> ProductReport {
        let a: Vec<&Matrix> = self.generators.iter().map(|g| &g.mat).collect();
        let np = a.len();
        let mut anticommute = Vec::new();
        let mut products = Vec::new();
        for i in 0..np {
            for j in 0..np {
                let p = a[i] * a[j];
                if !p.is_zero() {
                    products.push((i, j));
                }
                if i <= j && !(&p + &(a[j] * a[i])).is_zero() {
                    anticommute.push((i, j));
                }
            }
        }
        let mut triple = Vec::new();
        for i in 0..np {
            for j in 0..np {
                let ij = a[i] * a[j];
                if ij.is_zero() {
                    continue;
                }
                for (k, ak) in a.iter().enumerate() {
                    if !(&ij * *ak).is_zero() {
                        triple.push((i, j, k));
                    }
                }
            }
        }
        let mut span = Span::new(self.space.dim() * self.space.dim());
        let independent = a.iter().all(|m| span.insert(m.entries()));
        let independent_violations = if independent { products } else { Vec::new() };
        ProductReport {
            anticommute_violations: anticommute,
            triple_violations: triple,
            independent,
            independent_violations,
        }
    }

    pub fn bullet_product(&self) -> Result<BulletAlgebra> {
        let alg = BulletAlgebra {
            ops: b_ops_from_struct(&self.b_struct),
            omega_n: self.gram.clone(),
        };
        alg.verify()?;
        Ok(alg)
    }

    /// `u^j = ½ Σ_i Ω^{ji} Ω(x, C_i x)`, valid when every `A_i A_j = 0` and the
    /// `a_i` are the normal basis vectors `f_i`.
    pub fn graph_value(&self, x: &[Rational]) -> Vector {
        let half = q(1, 2);
        let z = self.space.embed_tangent(x);
        let qx: Vector = self.omega_a.iter().map(|oa| dot(&z, &oa.apply(&z)) * &half).collect();
        self.gram_inv.apply(&qx)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductReport {
    /// Pairs `i ≤ j` with `A_iA_j + A_jA_i ≠ 0`.
    pub anticommute_violations: Vec<(usize, usize)>,
    pub triple_violations: Vec<(usize, usize, usize)>,
    pub independent: bool,
    /// Nonzero products `A_iA_j` when the `A_i` are linearly independent.
    pub independent_violations: Vec<(usize, usize)>,
}

impl ProductReport {
    pub fn passed(&self) -> bool {
        self.anticommute_violations.is_empty()
            && self.triple_violations.is_empty()
            && self.independent_violations.is_empty()
    }
}

/// `u • v = B(u) v` on the normal block, `B(e_i) = ops[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BulletAlgebra {
    pub ops: Vec<Matrix>,
    pub omega_n: Matrix,
}

impl BulletAlgebra {
    /// `B(g_k) = 0`, `B(g_{p+k}) = [[0, D_k], [0, 0]]` with `D_k` symmetric, in
    /// a basis where the form is standard.
    pub fn from_symmetric_blocks(d: &[Matrix]) -> Result<Self> {
        let p = d.len();
        if let Some(m) = d.iter().find(|m| !m.is_symmetric() || m.rows() != p) {
            return Err(Error::Hypothesis(format!(
                "D_k must be symmetric {p}×{p}, got {}×{}",
                m.rows(),
                m.cols()
            )));
        }
        let mut ops = vec![Matrix::zeros(2 * p, 2 * p); p];
        for dk in d {
            let mut m = Matrix::zeros(2 * p, 2 * p);
            m.set_block(0, p, dk);
            ops.push(m);
        }
        Ok(BulletAlgebra {
            ops,
            omega_n: crate::symplectic::standard_form(p),
        })
    }

    pub fn b_of(&self, u: &[Rational]) -> Matrix {
        let d = self.omega_n.rows();
        let mut m = Matrix::zeros(d, d);
        for (c, op) in u.iter().zip(&self.ops) {
            if !c.is_zero() {
                m = &m + &op.scale(c);
            }
        }
        m
    }

    pub fn product(&self, u: &[Rational], v: &[Rational]) -> Vector {
        self.b_of(u).apply(v)
    }

    /// Associativity `B(B(e_i)e_j) = B(e_i)B(e_j)` and `B(e_i) ∈ sp`.
    pub fn verify(&self) -> Result<()> {
        let d = self.omega_n.rows();
        for (i, bi) in self.ops.iter().enumerate() {
            if !(&self.omega_n * bi).is_symmetric() {
                return Err(Error::Inconsistent(format!("B(e_{}) does not preserve the form", i + 1)));
            }
            for (j, bj) in self.ops.iter().enumerate() {
                let ej: Vector = (0..d).map(|k| if k == j { Rational::from_integer(1.into()) } else { Rational::zero() }).collect();
                if self.b_of(&bi.apply(&ej)) != bi * bj {
                    return Err(Error::Inconsistent(format!(
                        "bullet product not associative at (e_{}, e_{})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Maps `B : ℝ^{2p} → sp(p)` and `C : ℝ^{2p} → sp(n)` given on basis vectors.
#[derive(Clone, Debug)]
pub struct LemmaMN {
    pub space: SympSpace,
    pub b: Vec<Matrix>,
    pub c: Vec<Matrix>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LemmaMNReport {
    pub holds: bool,
    pub points_checked: usize,
    pub m_points_constructed: usize,
    pub counterexample: Option<String>,
}

impl LemmaMN {
    pub fn new(space: SympSpace, b: Vec<Matrix>, c: Vec<Matrix>) -> Result<Self> {
        let np = space.normal_dim();
        let nt = space.tangent_dim();
        if b.len() != np || c.len() != np {
            return Err(Error::DimensionMismatch {
                context: "lemma maps",
                expected: np,
                found: b.len().min(c.len()),
            });
        }
        for (i, (bi, ci)) in b.iter().zip(&c).enumerate() {
            if bi.rows() != np || ci.rows() != nt {
                return Err(Error::DimensionMismatch {
                    context: "lemma map values",
                    expected: np,
                    found: bi.rows(),
                });
            }
            if !space.is_in_sp(bi, Block::Normal)? || !space.is_in_sp(ci, Block::Tangent)? {
                return Err(Error::Hypothesis(format!("B(e_{0}) or C(e_{0}) not symplectic", i + 1)));
            }
        }
        let lemma = LemmaMN { space, b, c };
        lemma.check_hypotheses()?;
        Ok(lemma)
    }

    fn lin(ms: &[Matrix], u: &[Rational]) -> Matrix {
        let mut m = Matrix::zeros(ms[0].rows(), ms[0].cols());
        for (c, op) in u.iter().zip(ms) {
            if !c.is_zero() {
                m = &m + &op.scale(c);
            }
        }
        m
    }

    /// `B(B(ξ)η) = B(ξ)B(η)`, `C(B(ξ)η) = 0`, `C(ξ)C(η) = 0` on basis pairs.
    fn check_hypotheses(&self) -> Result<()> {
        let np = self.space.normal_dim();
        for i in 0..np {
            for j in 0..np {
                let bij = self.b[i].column(j);
                if Self::lin(&self.b, &bij) != &self.b[i] * &self.b[j] {
                    return Err(Error::Hypothesis(format!("B(B(e_{0})e_{1}) ≠ B(e_{0})B(e_{1})", i + 1, j + 1)));
                }
                if !Self::lin(&self.c, &bij).is_zero() {
                    return Err(Error::Hypothesis(format!("C(B(e_{})e_{}) ≠ 0", i + 1, j + 1)));
                }
                if !(&self.c[i] * &self.c[j]).is_zero() {
                    return Err(Error::Hypothesis(format!("C(e_{})C(e_{}) ≠ 0", i + 1, j + 1)));
                }
            }
        }
        Ok(())
    }

    /// `½ω(x, C(e_i)x)` for each `i`.
    fn quad_x(&self, x: &[Rational]) -> Vector {
        let half = q(1, 2);
        self.c
            .iter()
            .map(|ci| self.space.form_tangent(x, &ci.apply(x)) * &half)
            .collect()
    }

    fn pairing(&self, u: &[Rational]) -> Vector {
        // Ω(u, e_i) for each basis vector e_i
        self.space.omega_n().transpose().apply(u)
    }

    pub fn in_m(&self, x: &[Rational], u: &[Rational]) -> bool {
        let half = q(1, 2);
        let qx = self.quad_x(x);
        let pu = self.pairing(u);
        (0..qx.len()).all(|i| {
            let bu = self.space.form_normal(u, &self.b[i].apply(u)) * &half;
            (&qx[i] + bu - &pu[i]).is_zero()
        })
    }

    pub fn in_n(&self, x: &[Rational], u: &[Rational]) -> bool {
        self.quad_x(x) == self.pairing(u)
    }

    /// The unique `u` with `(x, u) ∈ N`.
    pub fn solve_n(&self, x: &[Rational]) -> Vector {
        self.space
            .omega_n()
            .transpose()
            .solve_any(&self.quad_x(x))
            .expect("nondegenerate normal form")
    }

    /// A `u` with `(x, u) ∈ M`, by iterating `Ω(u, e_i) = q_i + ½Ω(u, B(e_i)u)`
    /// from `u = 0`.
    pub fn solve_m(&self, x: &[Rational]) -> Option<Vector> {
        let half = q(1, 2);
        let qx = self.quad_x(x);
        let ot = self.space.omega_n().transpose();
        let mut u = vec![Rational::zero(); self.space.normal_dim()];
        for _ in 0..(2 * self.space.normal_dim() + 4) {
            let rhs: Vector = (0..qx.len())
                .map(|i| &qx[i] + self.space.form_normal(&u, &self.b[i].apply(&u)) * &half)
                .collect();
            let next = ot.solve_any(&rhs)?;
            if next == u {
                return self.in_m(x, &u).then_some(u);
            }
            u = next;
        }
        None
    }

    /// Tangent grid `{−2..2}^{2n}` (evenly thinned to at most `grid_cap`
    /// points) plus `random` seeded rational points. At each `x` the N- and
    /// M-solutions and their unit perturbations are tested against both
    /// predicates, and `B(e_i)u = 0` is checked at every M-point.
    pub fn verify(&self, seed: u64, grid_cap: usize, random: usize) -> LemmaMNReport {
        let d = self.space.tangent_dim();
        let full = 5usize.saturating_pow(d as u32);
        let stride = full.div_ceil(grid_cap.max(1)).max(1);
        let mut xs: Vec<Vector> = (0..full)
            .step_by(stride)
            .map(|mut k| {
                (0..d)
                    .map(|_| {
                        let v = (k % 5) as i64 - 2;
                        k /= 5;
                        Rational::from_integer(v.into())
                    })
                    .collect()
            })
            .collect();
        for k in 0..random {
            let mut r = rng(seed, k as u64);
            xs.push((0..d).map(|_| generate::small_rational(&mut r, 3, 4)).collect());
        }
        let results: Vec<(usize, usize, Option<String>)> = xs
            .par_iter()
            .map(|x| self.check_at(x))
            .collect();
        let points_checked = results.iter().map(|r| r.0).sum();
        let m_points_constructed = results.iter().map(|r| r.1).sum();
        let counterexample = results.into_iter().find_map(|r| r.2);
        LemmaMNReport {
            holds: counterexample.is_none(),
            points_checked,
            m_points_constructed,
            counterexample,
        }
    }

    fn check_at(&self, x: &[Rational]) -> (usize, usize, Option<String>) {
        let un = self.solve_n(x);
        let um = self.solve_m(x);
        let mut candidates = vec![un.clone()];
        if let Some(u) = um.as_ref().filter(|u| **u != un) {
            candidates.push(u.clone());
        }
        for k in 0..un.len() {
            let mut v = un.clone();
            v[k] += Rational::from_integer(1.into());
            candidates.push(v);
        }
        let mut checked = 0;
        let mut m_points = 0;
        for u in &candidates {
            checked += 1;
            let m = self.in_m(x, u);
            let n = self.in_n(x, u);
            if m != n {
                return (
                    checked,
                    m_points,
                    Some(format!("x = {}, u = {}: in M = {m}, in N = {n}", fmt_vec(x), fmt_vec(u))),
                );
            }
            if m {
                m_points += 1;
                if let Some(i) = self.b.iter().position(|bi| bi.apply(u).iter().any(|v| !v.is_zero())) {
                    return (
                        checked,
                        m_points,
                        Some(format!("B(e_{})u ≠ 0 at x = {}, u = {}", i + 1, fmt_vec(x), fmt_vec(u))),
                    );
                }
            }
        }
        if um.is_none() {
            return (checked, m_points, Some(format!("no M-solution constructed at x = {}", fmt_vec(x))));
        }
        (checked, m_points, None)
    }
}

/// Random `y ∈ span(tangent)` with integer coordinates in `[−range, range]`.
pub fn random_tangent<R: Rng>(r: &mut R, tangent: &[Vector], dim: usize, range: i64) -> Vector {
    let mut y = vec![Rational::zero(); dim];
    for b in tangent {
        let t = generate::small_int(r, range);
        for (acc, v) in y.iter_mut().zip(b) {
            *acc += &t * v;
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::qi;
    use crate::generate::{parabola_family, r8_family, r8_generators};

    fn v(xs: &[i64]) -> Vector {
        xs.iter().map(|&x| qi(x)).collect()
    }

    #[test]
    fn parabola_membership_and_split() {
        let s = SurfaceSpec::from_family(&parabola_family()).unwrap();
        assert!(s.membership(&v(&[0, 0, 0, 0])).unwrap());
        assert!(s.membership(&v(&[0, 2, 0, -2])).unwrap());
        assert!(!s.membership(&v(&[0, 2, 0, 0])).unwrap());
        assert_eq!(s.eval_f(&v(&[0, 2, 0, 0])).unwrap()[0], qi(-2));
        for z in [v(&[0, 2, 0, 0]), v(&[1, -3, 2, 5])] {
            let poly: Vec<Rational> = s.hamiltonians().iter().map(|f| f.eval(&z, &qi(0)).unwrap()).collect();
            assert_eq!(poly, s.eval_f(&z).unwrap());
        }
        // A₁z + a₁ with A₁ = C₁ ⊕ 0, z = (0,2,0,−2): (2, 0, 1, 0)
        let (_, normal) = s.tangent_normal_split(&v(&[0, 2, 0, -2])).unwrap();
        assert_eq!(normal, vec![v(&[2, 0, 1, 0]), v(&[0, 0, 0, 1])]);
        let (_, normal0) = s.tangent_normal_split(&v(&[0, 0, 0, 0])).unwrap();
        assert_eq!(normal0, vec![v(&[0, 0, 1, 0]), v(&[0, 0, 0, 1])]);
        assert!(s.tangent_normal_split(&v(&[0, 2, 0, 0])).is_err());
    }

    #[test]
    fn parabola_symmetry_at_origin() {
        let s = SurfaceSpec::from_family(&parabola_family()).unwrap();
        let sym = s.symmetry_at(&v(&[0, 0, 0, 0])).unwrap();
        assert_eq!(sym.apply(&v(&[0, 2, 0, -2])), v(&[0, -2, 0, -2]));
        assert!(s.verify_extrinsic_symmetry(&v(&[0, 0, 0, 0]), &v(&[0, 2, 0, -2])).unwrap());
    }

    #[test]
    fn zero_generators_give_a_plane() {
        let space = SympSpace::standard(1, 1);
        let gens = (0..2)
            .map(|i| AffineSympElement::new(&space, Matrix::zeros(4, 4), space.f(i)).unwrap())
            .collect();
        let s = build_surface(&space, gens).unwrap();
        assert!(s.membership(&v(&[3, -1, 0, 0])).unwrap());
        assert!(!s.membership(&v(&[0, 0, 1, 0])).unwrap());
        assert!(s.verify_product_identities().passed());
        assert!(s.bullet_product().unwrap().ops.iter().all(Matrix::is_zero));
    }

    #[test]
    fn degenerate_normal_space_rejected() {
        let space = SympSpace::standard(1, 1);
        let gens = vec![
            AffineSympElement::new(&space, Matrix::zeros(4, 4), space.f(0)).unwrap(),
            AffineSympElement::new(&space, Matrix::zeros(4, 4), space.f(0)).unwrap(),
        ];
        assert!(matches!(build_surface(&space, gens), Err(Error::Degenerate(_))));
    }

    #[test]
    fn unclosed_family_rejected() {
        let space = SympSpace::standard(1, 1);
        // A₁ = diag(1, −1) ⊕ 0 kills span(a) but A₁² ≠ 0 = Σ_k B^k A_k
        let mut rot = Matrix::zeros(4, 4);
        rot[(0, 0)] = qi(1);
        rot[(1, 1)] = qi(-1);
        let gens = vec![
            AffineSympElement::new(&space, rot, space.f(0)).unwrap(),
            AffineSympElement::new(&space, Matrix::zeros(4, 4), space.f(1)).unwrap(),
        ];
        assert!(matches!(build_surface(&space, gens), Err(Error::NotClosed(_))));
    }

    #[test]
    fn r8_family_is_accepted() {
        let space = SympSpace::standard(2, 2);
        let gens: Vec<_> = r8_generators()
            .into_iter()
            .enumerate()
            .map(|(i, a)| AffineSympElement::new(&space, a, space.f(i)).unwrap())
            .collect();
        let s = build_surface(&space, gens).unwrap();
        assert_eq!(s.b_struct()[2][3][1], qi(1));
        assert_eq!(s.b_struct()[3][2][1], qi(-1));
        let rep = s.verify_product_identities();
        assert!(rep.passed(), "{rep:?}");
        assert!(!rep.independent);
        s.bullet_product().unwrap();
        let pts = s.random_points(5, 10, 3, 2).unwrap();
        for p in &pts {
            assert!(s.membership(p).unwrap());
            assert_eq!(s.normal_gram(p).unwrap(), *s.gram());
        }
        assert_eq!(SurfaceSpec::from_family(&r8_family()).unwrap().b_struct(), s.b_struct());
    }

    #[test]
    fn bullet_from_symmetric_blocks() {
        let d = vec![Matrix::from_i64(&[&[1, 2], &[2, 0]]), Matrix::from_i64(&[&[0, 1], &[1, 3]])];
        let alg = BulletAlgebra::from_symmetric_blocks(&d).unwrap();
        alg.verify().unwrap();
        assert!(BulletAlgebra::from_symmetric_blocks(&[Matrix::from_i64(&[&[0, 1], &[0, 0]])]).is_err());
    }

    #[test]
    fn lemma_mn_small_cases() {
        let space = SympSpace::standard(1, 1);
        let b = vec![Matrix::zeros(2, 2), Matrix::from_i64(&[&[0, 1], &[0, 0]])];
        let lemma = LemmaMN::new(space.clone(), b, vec![Matrix::zeros(2, 2); 2]).unwrap();
        let rep = lemma.verify(1, 10_000, 50);
        assert!(rep.holds, "{rep:?}");
        assert_eq!(rep.m_points_constructed, 25 + 50);

        let c = parabola_family().c().to_vec();
        let lemma = LemmaMN::new(space.clone(), vec![Matrix::zeros(2, 2); 2], c).unwrap();
        assert!(lemma.verify(2, 10_000, 50).holds);

        // hypothesis failure: C(B(e₂)e₂) = C(e₁) ≠ 0
        let n = Matrix::from_i64(&[&[0, 1], &[0, 0]]);
        let c = vec![Matrix::from_i64(&[&[0, 1], &[0, 0]]), Matrix::zeros(2, 2)];
        assert!(LemmaMN::new(space, vec![Matrix::zeros(2, 2), n], c).is_err());
    }
}
