//! Moyal star product on the ambient space, the projection along the leaves
//! spanned by the hamiltonian fields `X_{F_i}`, and the star product it
//! induces on a surface with `C_i C_j = 0`.
//!
//! Convention: `Ω^{ij}` is the `(i, j)` entry of the inverse of the matrix
//! `Ω_{ij} = Ω(e_i, e_j)`, and `{u, v} = Σ Ω^{ij} ∂_i u ∂_j v`. With it the
//! hamiltonian field of `F` acts as `X_F(f) = {F, f}`.

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{inv_factorial, q, Matrix, Monomial, MultiPoly, Rational, Vector};
use crate::lambda::LambdaMap;
use crate::orbit::transvection;
use crate::sigma::SurfaceSpec;
use crate::symplectic::{AffineMap, SympSpace};

/// `Σ_r νʳ/(r! 2ʳ) C_r(u, v)`, a finite series for polynomial inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StarSeries {
    pub series: MultiPoly,
    /// Largest `r` with `C_r(u, v) ≠ 0`
    pub max_order: u32,
}

impl StarSeries {
    pub fn nu_degree(&self) -> u32 {
        self.series.nu_degree()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StarTerm {
    pub nu_power: u32,
    pub polynomial: String,
}

impl StarSeries {
    pub fn terms_by_order(&self) -> Vec<StarTerm> {
        (0..=self.series.nu_degree())
            .map(|k| StarTerm {
                nu_power: k,
                polynomial: self.series.nu_coefficient(k).to_string(),
            })
            .filter(|t| t.polynomial != "0")
            .collect()
    }
}

fn nonzero_entries(m: &Matrix) -> Vec<(usize, usize, Rational)> {
    let mut out = Vec::new();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if !m[(i, j)].is_zero() {
                out.push((i, j, m[(i, j)].clone()));
            }
        }
    }
    out
}

fn check_vars(context: &'static str, expected: usize, p: &MultiPoly) -> Result<()> {
    if p.num_vars() != expected {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found: p.num_vars(),
        });
    }
    Ok(())
}

/// `C_0, C_1, …` for the bivector `omega_inv`, computed by applying
/// `P = Σ Ω^{ij} ∂_{y_i} ∂_{z_j}` to `u(y) v(z)` and restricting to `y = z`.
pub fn moyal_cochains(omega_inv: &Matrix, u: &MultiPoly, v: &MultiPoly) -> Result<Vec<MultiPoly>> {
    let n = omega_inv.rows();
    check_vars("left factor variables", n, u)?;
    check_vars("right factor variables", n, v)?;
    let pairs = nonzero_entries(omega_inv);
    let mut current = u.tensor(v);
    let mut out = vec![current.diagonal()?];
    loop {
        let terms: Vec<(&Monomial, &Rational)> = current.terms().collect();
        let pieces: Vec<Vec<(Monomial, Rational)>> = terms
            .par_iter()
            .map(|(m, c)| {
                let mut acc = Vec::new();
                for (i, j, w) in &pairs {
                    let (ei, ej) = (m.exps[*i], m.exps[n + *j]);
                    if ei == 0 || ej == 0 {
                        continue;
                    }
                    let mut m2 = (*m).clone();
                    m2.exps[*i] -= 1;
                    m2.exps[n + *j] -= 1;
                    acc.push((m2, *c * w * Rational::from_integer((ei * ej).into())));
                }
                acc
            })
            .collect();
        let next = MultiPoly::from_terms(2 * n, pieces.into_iter().flatten())?;
        if next.is_zero() {
            break;
        }
        out.push(next.diagonal()?);
        current = next;
    }
    Ok(out)
}

pub fn star_with(omega_inv: &Matrix, u: &MultiPoly, v: &MultiPoly) -> Result<StarSeries> {
    let cochains = moyal_cochains(omega_inv, u, v)?;
    let mut series = MultiPoly::zero(u.num_vars());
    let mut two_r = Rational::from_integer(1.into());
    for (r, c) in cochains.iter().enumerate() {
        let coef = inv_factorial(r) / &two_r;
        series.add_scaled(&c.shift_nu(r as u32), &coef);
        two_r *= Rational::from_integer(2.into());
    }
    Ok(StarSeries {
        series,
        max_order: cochains.len() as u32 - 1,
    })
}

/// Moyal product for the ambient form of `space`.
pub fn moyal_star(space: &SympSpace, u: &MultiPoly, v: &MultiPoly) -> Result<StarSeries> {
    star_with(space.omega_inv(), u, v)
}

pub fn poisson_with(omega_inv: &Matrix, u: &MultiPoly, v: &MultiPoly) -> Result<MultiPoly> {
    let n = omega_inv.rows();
    check_vars("bracket variables", n, u)?;
    check_vars("bracket variables", n, v)?;
    let du: Vec<MultiPoly> = (0..n).map(|i| u.diff(i)).collect::<Result<_>>()?;
    let dv: Vec<MultiPoly> = (0..n).map(|j| v.diff(j)).collect::<Result<_>>()?;
    let mut out = MultiPoly::zero(n);
    for (i, j, w) in nonzero_entries(omega_inv) {
        if du[i].is_zero() || dv[j].is_zero() {
            continue;
        }
        out.add_scaled(&(&du[i] * &dv[j]), &w);
    }
    Ok(out)
}

pub fn poisson_bracket(space: &SympSpace, u: &MultiPoly, v: &MultiPoly) -> Result<MultiPoly> {
    poisson_with(space.omega_inv(), u, v)
}

/// `f ∘ Φ` for an affine map `Φ(z) = Lz + b`.
pub fn affine_pullback(map: &AffineMap, f: &MultiPoly) -> Result<MultiPoly> {
    let n = f.num_vars();
    let subs: Vec<MultiPoly> = (0..n)
        .map(|k| {
            let mut p = MultiPoly::linear(map.linear.row(k));
            p.add_scaled(&MultiPoly::one(n), &map.translation[k]);
            p
        })
        .collect();
    f.compose(&subs)
}

/// The vector field `z ↦ Mz + b` acting as a derivation.
pub fn apply_affine_field(m: &Matrix, b: &[Rational], f: &MultiPoly) -> Result<MultiPoly> {
    let n = f.num_vars();
    let mut out = MultiPoly::zero(n);
    for k in 0..n {
        let df = f.diff(k)?;
        if df.is_zero() {
            continue;
        }
        let mut comp = MultiPoly::linear(m.row(k));
        comp.add_scaled(&MultiPoly::one(n), &b[k]);
        out.add_scaled(&(&comp * &df), &Rational::from_integer(1.into()));
    }
    Ok(out)
}

/// `X_{F_i}(z) = −(A_i z + a_i)`, as `(matrix, translation)`.
pub fn hamiltonian_field(surf: &SurfaceSpec, i: usize) -> (Matrix, Vector) {
    let g = &surf.generators()[i];
    (-&g.mat, g.vec.iter().map(|v| -v).collect())
}

/// The surface must be a graph over the tangent space with `A_i = C_i ⊕ 0`,
/// `a_i` normal and all `C_i C_j = 0`.
fn check_product_free(surf: &SurfaceSpec) -> Result<Vec<Matrix>> {
    let space = surf.space();
    let d = space.tangent_dim();
    let np = space.normal_dim();
    let mut c = Vec::with_capacity(np);
    for (i, g) in surf.generators().iter().enumerate() {
        let off_diagonal = !g.mat.block(0, d, d, np).is_zero() || !g.mat.block(d, 0, np, d).is_zero();
        if off_diagonal || !g.mat.block(d, d, np, np).is_zero() {
            return Err(Error::OutsideClass(format!(
                "A_{} is not of the form C ⊕ 0 on tangent ⊕ normal",
                i + 1
            )));
        }
        if space.tangent_part(&g.vec).iter().any(|v| !v.is_zero()) {
            return Err(Error::OutsideClass(format!("a_{} has a tangent component", i + 1)));
        }
        c.push(g.mat.block(0, 0, d, d));
    }
    for i in 0..np {
        for j in 0..np {
            if !(&c[i] * &c[j]).is_zero() {
                return Err(Error::OutsideClass(format!(
                    "C_{}C_{} ≠ 0; the induced product needs all C_iC_j = 0",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(c)
}

/// `π : V → Σ` along the leaves of the (commuting) fields `X_{F_i}`.
#[derive(Clone, Debug)]
pub struct FoliationProjection {
    surf: SurfaceSpec,
    c: Vec<Matrix>,
    /// `Ω(a_i, a_j)`
    gram: Matrix,
    /// its inverse
    gram_inv: Matrix,
    /// ambient coordinates of `π(z)`
    components: Vec<MultiPoly>,
    /// `x ↦ (x, Σ_k u^k(x) a_k)` in ambient coordinates
    embedding: Vec<MultiPoly>,
    /// `u^k(x) = ½ Σ_i (Ω(a,a)⁻¹)^{ki} Ω(x, C_i x)`
    graph_u: Vec<MultiPoly>,
}

/// The flow of `X_{F_i}` for time `t` is `(x − tC_ix, u − ta_i)` and moves
/// `F_j` by `−t Ω(a_i, a_j)`; the times reaching `F = 0` are `t = F(z)·Ω(a,a)⁻¹`.
pub fn build_projection(surf: &SurfaceSpec) -> Result<FoliationProjection> {
    let c = check_product_free(surf)?;
    let space = surf.space();
    let n_amb = space.dim();
    let d = space.tangent_dim();
    let np = space.normal_dim();
    let a: Vec<&Vector> = surf.generators().iter().map(|g| &g.vec).collect();
    let gram = surf.gram().clone();
    let gram_inv = gram.inverse()?;
    let f = surf.hamiltonians();
    let times: Vec<MultiPoly> = (0..np)
        .map(|i| {
            let mut t = MultiPoly::zero(n_amb);
            for (j, fj) in f.iter().enumerate() {
                t.add_scaled(fj, &gram_inv[(j, i)]);
            }
            t
        })
        .collect();
    let x_vars: Vec<MultiPoly> = (0..n_amb).map(|k| MultiPoly::var(n_amb, k)).collect();
    let cx: Vec<Vec<MultiPoly>> = c
        .iter()
        .map(|ci| {
            (0..d)
                .map(|k| {
                    let mut row = ci.row(k).to_vec();
                    row.resize(n_amb, Rational::zero());
                    MultiPoly::linear(&row)
                })
                .collect()
        })
        .collect();
    let one = Rational::from_integer(1.into());
    let minus = -one.clone();
    let components: Vec<MultiPoly> = (0..n_amb)
        .map(|k| {
            let mut p = x_vars[k].clone();
            for i in 0..np {
                if k < d {
                    if !cx[i][k].is_zero() {
                        p.add_scaled(&(&times[i] * &cx[i][k]), &minus);
                    }
                } else {
                    p.add_scaled(&times[i], &-&a[i][k]);
                }
            }
            p
        })
        .collect();
    // graph: u^k(x) = ½ Σ_i (G⁻¹)^{ki} Ω(x, C_i x)
    let half = q(1, 2);
    let quads: Vec<MultiPoly> = c
        .iter()
        .map(|ci| MultiPoly::quadratic(&(space.omega0() * ci)))
        .collect();
    let graph_u: Vec<MultiPoly> = (0..np)
        .map(|k| {
            let mut p = MultiPoly::zero(d);
            for (i, qi) in quads.iter().enumerate() {
                p.add_scaled(qi, &(&gram_inv[(k, i)] * &half));
            }
            p
        })
        .collect();
    let embedding: Vec<MultiPoly> = (0..n_amb)
        .map(|k| {
            if k < d {
                MultiPoly::var(d, k)
            } else {
                let mut p = MultiPoly::zero(d);
                for (j, uj) in graph_u.iter().enumerate() {
                    p.add_scaled(uj, &a[j][k]);
                }
                p
            }
        })
        .collect();
    Ok(FoliationProjection {
        surf: surf.clone(),
        c,
        gram,
        gram_inv,
        components,
        embedding,
        graph_u,
    })
}

impl FoliationProjection {
    pub fn surface(&self) -> &SurfaceSpec {
        &self.surf
    }

    pub fn c(&self) -> &[Matrix] {
        &self.c
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn gram_inv(&self) -> &Matrix {
        &self.gram_inv
    }

    pub fn components(&self) -> &[MultiPoly] {
        &self.components
    }

    pub fn embedding(&self) -> &[MultiPoly] {
        &self.embedding
    }

    pub fn graph_u(&self) -> &[MultiPoly] {
        &self.graph_u
    }

    fn space(&self) -> &SympSpace {
        self.surf.space()
    }

    /// `π ∘ π − π`, componentwise; zero when idempotent.
    pub fn idempotence_defect(&self) -> Result<Vec<MultiPoly>> {
        self.components
            .iter()
            .zip(0..)
            .map(|(p, k)| Ok(&p.compose(&self.components)? - &self.components[k]))
            .collect()
    }

    /// `F_i ∘ π`, which vanishes identically when `π` lands in `Σ`.
    pub fn hamiltonians_on_image(&self) -> Result<Vec<MultiPoly>> {
        self.surf
            .hamiltonians()
            .iter()
            .map(|f| f.compose(&self.components))
            .collect()
    }

    /// `π*f = f ∘ π` for `f` in the graph coordinates `x`.
    pub fn pullback(&self, f: &MultiPoly) -> Result<MultiPoly> {
        check_vars("graph coordinates", self.space().tangent_dim(), f)?;
        f.compose(&self.components[..self.space().tangent_dim()])
    }

    /// `h|_Σ` in graph coordinates.
    pub fn restrict(&self, h: &MultiPoly) -> Result<MultiPoly> {
        check_vars("ambient coordinates", self.space().dim(), h)?;
        h.compose(&self.embedding)
    }

    /// `X_{F_i}(h)` for every `i`.
    pub fn leaf_derivatives(&self, h: &MultiPoly) -> Result<Vec<MultiPoly>> {
        (0..self.space().normal_dim())
            .map(|i| {
                let (m, b) = hamiltonian_field(&self.surf, i);
                apply_affine_field(&m, &b, h)
            })
            .collect()
    }

    /// `f ⋆_Σ g = (π*f ⋆ π*g)|_Σ` in graph coordinates.
    pub fn induced_star(&self, f: &MultiPoly, g: &MultiPoly) -> Result<StarSeries> {
        let s = moyal_star(self.space(), &self.pullback(f)?, &self.pullback(g)?)?;
        Ok(StarSeries {
            series: self.restrict(&s.series)?,
            max_order: s.max_order,
        })
    }

    /// `{f, g}_Σ`, defined by `{π*f, π*g}_V = π*{f, g}_Σ`.
    pub fn sigma_bracket(&self, f: &MultiPoly, g: &MultiPoly) -> Result<MultiPoly> {
        let b = poisson_bracket(self.space(), &self.pullback(f)?, &self.pullback(g)?)?;
        self.restrict(&b)
    }

    /// The affine map `ψ` read in graph coordinates: `x ↦ tangent part of ψ(x, u(x))`.
    /// Errors if `ψ` does not carry `Σ` into itself.
    pub fn graph_action(&self, psi: &AffineMap) -> Result<Vec<MultiPoly>> {
        let d = self.space().tangent_dim();
        let image: Vec<MultiPoly> = (0..self.space().dim())
            .map(|k| {
                let mut p = MultiPoly::constant(d, psi.translation[k].clone());
                for (l, e) in self.embedding.iter().enumerate() {
                    p.add_scaled(e, &psi.linear[(k, l)]);
                }
                p
            })
            .collect();
        let tangent = image[..d].to_vec();
        for (k, comp) in image.iter().enumerate().skip(d) {
            if *comp != self.embedding[k].compose(&tangent)? {
                return Err(Error::Inconsistent(
                    "the affine map does not preserve the surface".into(),
                ));
            }
        }
        Ok(tangent)
    }
}

/// `X_{F_i}(u ⋆ v) = X_{F_i}u ⋆ v + u ⋆ X_{F_i}v` for each `i`.
pub fn derivation_property_check(surf: &SurfaceSpec, u: &MultiPoly, v: &MultiPoly) -> Result<bool> {
    check_product_free(surf)?;
    let space = surf.space();
    for i in 0..space.normal_dim() {
        let (m, b) = hamiltonian_field(surf, i);
        let x = |p: &MultiPoly| apply_affine_field(&m, &b, p);
        let lhs = x(&moyal_star(space, u, v)?.series)?;
        let rhs = &moyal_star(space, &x(u)?, v)?.series + &moyal_star(space, u, &x(v)?)?.series;
        if lhs != rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `(f∘ψ) ⋆_Σ (g∘ψ) = (f ⋆_Σ g)∘ψ` with `ψ = exp t(Λ(x), x)` on `Σ`.
pub fn transvection_invariance_check(
    proj: &FoliationProjection,
    lm: &LambdaMap,
    f: &MultiPoly,
    g: &MultiPoly,
    x: &[Rational],
    t: &Rational,
) -> Result<bool> {
    let psi = transvection(lm, x, t)?;
    let on_graph = proj.graph_action(&psi)?;
    let lhs = proj.induced_star(&f.compose(&on_graph)?, &g.compose(&on_graph)?)?;
    let rhs = proj.induced_star(f, g)?.series.compose(&on_graph)?;
    Ok(lhs.series == rhs)
}
