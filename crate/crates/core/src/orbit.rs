//! Orbits of the origin under `exp t(Λ(x), x)`, one-parameter transvection
//! groups, and the flat (graph) case.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exact::{inv_factorial, q, Matrix, MultiPoly, Rational, Vector};
use crate::lambda::{alpha_image_isotropic, curvature_at_base, LambdaMap};
use crate::sigma::SurfaceSpec;
use crate::symplectic::{AffineMap, AffineSympElement, Block};

/// `Σ_k Aᵏ/k!` for nilpotent `A`; errors instead of truncating otherwise.
pub fn nilpotent_exp(a: &Matrix) -> Result<Matrix> {
    let k = nilpotency_index(a)?;
    let mut acc = Matrix::identity(a.rows());
    let mut power = Matrix::identity(a.rows());
    for j in 1..k {
        power = &power * a;
        acc = &acc + &power.scale(&inv_factorial(j));
    }
    Ok(acc)
}

/// Least `k ≥ 1` with `Aᵏ = 0`.
pub fn nilpotency_index(a: &Matrix) -> Result<usize> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            context: "nilpotency of a non-square matrix",
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let d = a.rows().max(1);
    let mut power = a.clone();
    for k in 1..=d {
        if power.is_zero() {
            return Ok(k);
        }
        power = &power * a;
    }
    Err(Error::NotNilpotent { power: d })
}

/// Least `k` with `Λ(x)ᵏ = 0` (1 when `Λ(x) = 0`).
pub fn nilpotency_degree(lm: &LambdaMap, x: &[Rational]) -> Result<usize> {
    nilpotency_index(&lm.lambda(x))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitPoint {
    pub t: Rational,
    pub x_tilde: Vector,
    pub u_tilde: Vector,
}

impl OrbitPoint {
    pub fn ambient(&self) -> Vector {
        let mut v = self.x_tilde.clone();
        v.extend(self.u_tilde.iter().cloned());
        v
    }
}

/// `((e^{tΛ} − 1)/Λ) x = Σ_{k≥1} tᵏ Λᵏ⁻¹ x / k!` in ambient coordinates.
pub fn orbit_generic(lm: &LambdaMap, x: &[Rational], t: &Rational) -> Result<Vector> {
    let l = lm.lambda(x);
    let k = nilpotency_index(&l)?;
    let mut term = lm.space().embed_tangent(x);
    let mut acc = vec![Rational::zero(); term.len()];
    let mut tk = Rational::from_integer(1.into());
    for j in 1..=k {
        tk *= t;
        let c = &tk * inv_factorial(j);
        for (a, v) in acc.iter_mut().zip(&term) {
            *a += &c * v;
        }
        term = l.apply(&term);
    }
    Ok(acc)
}

/// Scalars shared by the closed-form expansions.
struct OrbitScalars {
    cx: Vec<Vector>,
    /// `w_i = ω(C_i x, x)`
    w: Vector,
    /// `W_{ij} = ω(C_i x, C_j x)`
    ww: Matrix,
}

impl OrbitScalars {
    fn new(lm: &LambdaMap, x: &[Rational]) -> Self {
        let s = lm.space();
        let cx: Vec<Vector> = lm.family().c().iter().map(|c| c.apply(x)).collect();
        let w = cx.iter().map(|v| s.form_tangent(v, x)).collect();
        let np = cx.len();
        let mut ww = Matrix::zeros(np, np);
        for i in 0..np {
            for j in 0..np {
                ww[(i, j)] = s.form_tangent(&cx[i], &cx[j]);
            }
        }
        OrbitScalars { cx, w, ww }
    }
}

/// Expansion through `t⁵` written with the `C_i`:
/// `x̃ = tx − t³/6 Σ Ω^{ij} C_ix ω(C_jx,x) + t⁵/5! Σ ω(C_jx,C_kx) Ω^{ij} Ω^{kr} C_ix ω(C_rx,x)`,
/// `ũ = Σ_i f^i [t²/2 ω(C_ix,x) − t⁴/4! Σ ω(C_ix,C_jx) Ω^{jk} ω(C_kx,x)]`.
pub fn orbit_closed_form(lm: &LambdaMap, x: &[Rational], t: &Rational) -> OrbitPoint {
    let s = lm.space();
    let oi = s.omega_n_inv();
    let np = s.normal_dim();
    let sc = OrbitScalars::new(lm, x);
    let t2 = t * t;
    let t3 = &t2 * t;
    let t4 = &t3 * t;
    let t5 = &t4 * t;
    let mut xt: Vector = x.iter().map(|v| v * t).collect();
    let c3 = -&t3 * inv_factorial(3);
    let c5 = &t5 * inv_factorial(5);
    for i in 0..np {
        let mut coef = Rational::zero();
        for j in 0..np {
            coef += &oi[(i, j)] * &sc.w[j] * &c3;
            for k in 0..np {
                for r in 0..np {
                    coef += &sc.ww[(j, k)] * &oi[(i, j)] * &oi[(k, r)] * &sc.w[r] * &c5;
                }
            }
        }
        if !coef.is_zero() {
            for (a, v) in xt.iter_mut().zip(&sc.cx[i]) {
                *a += &coef * v;
            }
        }
    }
    let u_coef: Vector = (0..np)
        .map(|i| {
            let mut c4 = Rational::zero();
            for j in 0..np {
                for k in 0..np {
                    c4 += &sc.ww[(i, j)] * &oi[(j, k)] * &sc.w[k];
                }
            }
            &t2 * q(1, 2) * &sc.w[i] - &t4 * inv_factorial(4) * c4
        })
        .collect();
    OrbitPoint {
        t: t.clone(),
        x_tilde: xt,
        u_tilde: dual_combination(lm, &u_coef),
    }
}

/// `Σ_i c_i f^i` in normal coordinates.
fn dual_combination(lm: &LambdaMap, c: &[Rational]) -> Vector {
    let s = lm.space();
    let np = s.normal_dim();
    let mut u = vec![Rational::zero(); np];
    for (i, ci) in c.iter().enumerate() {
        for (k, uk) in u.iter_mut().enumerate() {
            *uk += ci * &s.omega_n_inv()[(i, k)];
        }
    }
    u
}

/// `ũ` with the `t⁴` term rewritten through the structure constants, using
/// `ω(C_ix, C_jx) = Σ_r B^r_{ij} ω(C_rx, x)`:
/// `ũ = Σ_i f^i [t²/2 ω(C_ix,x) − t⁴/4! Σ B^r_{ij} Ω^{jk} ω(C_rx,x) ω(C_kx,x)]`.
pub fn orbit_u_structure_form(lm: &LambdaMap, x: &[Rational], t: &Rational) -> Option<Vector> {
    let b = lm.family().b_struct()?;
    let s = lm.space();
    let oi = s.omega_n_inv();
    let np = s.normal_dim();
    let sc = OrbitScalars::new(lm, x);
    let t2 = t * t;
    let t4 = &t2 * &t2;
    let coef: Vector = (0..np)
        .map(|i| {
            let mut c4 = Rational::zero();
            for j in 0..np {
                for k in 0..np {
                    for r in 0..np {
                        c4 += &b[i][j][r] * &oi[(j, k)] * &sc.w[r] * &sc.w[k];
                    }
                }
            }
            &t2 * q(1, 2) * &sc.w[i] - &t4 * inv_factorial(4) * c4
        })
        .collect();
    Some(dual_combination(lm, &coef))
}

/// The orbit point by the generic exponential route, cross-checked against
/// the closed forms. Requires `Λ(x)⁵ = 0`.
pub fn orbit_point(lm: &LambdaMap, x: &[Rational], t: &Rational) -> Result<OrbitPoint> {
    let d = lm.space().tangent_dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            context: "orbit direction",
            expected: d,
            found: x.len(),
        });
    }
    let degree = nilpotency_degree(lm, x)?;
    if degree > 5 {
        return Err(Error::Hypothesis(format!("Λ(x) has nilpotency degree {degree} > 5")));
    }
    let generic = orbit_generic(lm, x, t)?;
    let point = OrbitPoint {
        t: t.clone(),
        x_tilde: generic[..d].to_vec(),
        u_tilde: generic[d..].to_vec(),
    };
    let closed = orbit_closed_form(lm, x, t);
    if closed != point {
        return Err(Error::Inconsistent(
            "closed-form orbit disagrees with the exponential route".into(),
        ));
    }
    if let Some(u) = orbit_u_structure_form(lm, x, t) {
        if u != point.u_tilde {
            return Err(Error::Inconsistent(
                "structure-constant form of the normal component disagrees".into(),
            ));
        }
    }
    Ok(point)
}

/// `ψ_t = exp t(Λ(x), x)` as an affine map.
pub fn transvection(lm: &LambdaMap, x: &[Rational], t: &Rational) -> Result<AffineMap> {
    let el = AffineSympElement {
        mat: lm.lambda(x),
        vec: lm.space().embed_tangent(x),
    };
    el.exp(t)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeodesicReport {
    /// `ψ_t = S_{γ(t/2)} ∘ S₀`
    pub symmetry_product: bool,
    /// `ψ_t ∘ ψ_s = ψ_{t+s}` on each sampled pair
    pub group_law: Vec<((Rational, Rational), bool)>,
}

impl GeodesicReport {
    pub fn passed(&self) -> bool {
        self.symmetry_product && self.group_law.iter().all(|(_, ok)| *ok)
    }
}

/// Default parameter pairs for the group-law check.
pub fn default_group_law_pairs() -> Vec<(Rational, Rational)> {
    vec![(q(1, 1), q(1, 1)), (q(1, 1), q(-1, 1)), (q(1, 2), q(1, 2))]
}

pub fn geodesic_symmetry_check(
    lm: &LambdaMap,
    surf: &SurfaceSpec,
    x: &[Rational],
    t: &Rational,
    pairs: &[(Rational, Rational)],
) -> Result<GeodesicReport> {
    let psi = transvection(lm, x, t)?;
    let origin = vec![Rational::zero(); lm.space().dim()];
    let mid = orbit_point(lm, x, &(t * q(1, 2)))?.ambient();
    let product = surf.symmetry_at(&mid)?.compose(&surf.symmetry_at(&origin)?);
    let group_law = pairs
        .iter()
        .map(|(a, b)| {
            let lhs = transvection(lm, x, a)?.compose(&transvection(lm, x, b)?);
            let rhs = transvection(lm, x, &(a + b))?;
            Ok(((a.clone(), b.clone()), lhs == rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GeodesicReport {
        symmetry_product: product == psi,
        group_law,
    })
}

/// Agreement of "α₀-image isotropic" with "curvature at the base vanishes".
pub fn check_flat_iff_isotropic(lm: &LambdaMap) -> Result<bool> {
    Ok(alpha_image_isotropic(lm) == curvature_at_base(lm)?.is_zero())
}

/// For a flat family, `u^k(x) = ½ Σ_i Ω^{ik} ω(C_i x, x)`, the quadratic
/// functions whose graph is the surface (normal coordinates `f_k`).
pub fn flat_graph_form(lm: &LambdaMap) -> Result<Vec<MultiPoly>> {
    if !curvature_at_base(lm)?.is_zero() {
        return Err(Error::Hypothesis("the family is not flat".into()));
    }
    let s = lm.space();
    let half = q(1, 2);
    let quads: Vec<MultiPoly> = lm
        .family()
        .c()
        .iter()
        .map(|c| MultiPoly::quadratic(&s.form_of(c, Block::Tangent)))
        .collect();
    let d = s.tangent_dim();
    Ok((0..s.normal_dim())
        .map(|k| {
            let mut acc = MultiPoly::zero(d);
            for (i, qi) in quads.iter().enumerate() {
                let c = &s.omega_n_inv()[(i, k)] * &half;
                if !c.is_zero() {
                    acc = &acc + &qi.scale(&c);
                }
            }
            acc
        })
        .collect())
}
