//! The ambient symplectic model: block forms, the symplectic algebra, affine
//! symmetries and projections, and algebraic curvature tensors.
//!
//! Coordinates on `ℝ^{2(n+p)}` are ordered tangent block first (`e_1…e_{2n}`),
//! then normal block (`f_1…f_{2p}`). A form is stored as its Gram matrix, so
//! `Ω(u, v) = uᵀ Ω v`, and `u̲ := Ω(u, ·)` is the row vector `uᵀ Ω`.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{dot, inv_factorial, qi, Matrix, Rational, Vector};

/// Which block of the ambient space a matrix acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    Tangent,
    Normal,
    Ambient,
}

/// `[[0, I_k], [−I_k, 0]]`.
pub fn standard_form(k: usize) -> Matrix {
    let mut m = Matrix::zeros(2 * k, 2 * k);
    for i in 0..k {
        m[(i, k + i)] = Rational::one();
        m[(k + i, i)] = -Rational::one();
    }
    m
}

/// Bilinear form `uᵀ M v`.
pub fn bilinear(m: &Matrix, u: &[Rational], v: &[Rational]) -> Rational {
    dot(u, &m.apply(v))
}

fn check_form(m: &Matrix, what: &str) -> Result<Matrix> {
    if !m.is_skew() {
        return Err(Error::Degenerate(format!("{what} is not skew-symmetric")));
    }
    m.inverse()
        .map_err(|e| Error::Degenerate(format!("{what} is not invertible ({e})")))
}

/// Dimension data and forms of `(ℝ^{2(n+p)}, Ω = ω₀ ⊕ Ω^{N₀})`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SympSpace {
    n: usize,
    p: usize,
    omega0: Matrix,
    omega_n: Matrix,
    omega: Matrix,
    omega0_inv: Matrix,
    omega_n_inv: Matrix,
    omega_inv: Matrix,
    a_basis: Option<Vec<Vector>>,
    dual_normal: Vec<Vector>,
}

impl SympSpace {
    /// Standard blocks on both factors.
    pub fn standard(n: usize, p: usize) -> Self {
        Self::new(n, p, standard_form(n), standard_form(p), None).expect("standard forms are valid")
    }

    pub fn new(
        n: usize,
        p: usize,
        omega0: Matrix,
        omega_n: Matrix,
        a_basis: Option<Vec<Vector>>,
    ) -> Result<Self> {
        if omega0.rows() != 2 * n || !omega0.is_square() {
            return Err(Error::DimensionMismatch {
                context: "omega0 size",
                expected: 2 * n,
                found: omega0.rows(),
            });
        }
        if omega_n.rows() != 2 * p || !omega_n.is_square() {
            return Err(Error::DimensionMismatch {
                context: "omegaN0 size",
                expected: 2 * p,
                found: omega_n.rows(),
            });
        }
        let omega0_inv = check_form(&omega0, "omega0")?;
        let omega_n_inv = check_form(&omega_n, "omegaN0")?;
        let omega = Matrix::block_diag(&omega0, &omega_n);
        let omega_inv = Matrix::block_diag(&omega0_inv, &omega_n_inv);
        let dim = 2 * (n + p);
        if let Some(a) = &a_basis {
            if a.len() != 2 * p {
                return Err(Error::DimensionMismatch {
                    context: "a_basis length",
                    expected: 2 * p,
                    found: a.len(),
                });
            }
            if let Some(v) = a.iter().find(|v| v.len() != dim) {
                return Err(Error::DimensionMismatch {
                    context: "a_basis vector length",
                    expected: dim,
                    found: v.len(),
                });
            }
        }
        // f^i = Σ_k (Ω^{N₀})^{-1}_{ik} f_k, so that Ω(f^i, f_j) = δ^i_j.
        let dual_normal = (0..2 * p)
            .map(|i| {
                let mut v = vec![Rational::zero(); dim];
                for k in 0..2 * p {
                    v[2 * n + k] = omega_n_inv[(i, k)].clone();
                }
                v
            })
            .collect();
        Ok(SympSpace {
            n,
            p,
            omega0,
            omega_n,
            omega,
            omega0_inv,
            omega_n_inv,
            omega_inv,
            a_basis,
            dual_normal,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn dim(&self) -> usize {
        2 * (self.n + self.p)
    }

    pub fn tangent_dim(&self) -> usize {
        2 * self.n
    }

    pub fn normal_dim(&self) -> usize {
        2 * self.p
    }

    pub fn omega0(&self) -> &Matrix {
        &self.omega0
    }

    pub fn omega_n(&self) -> &Matrix {
        &self.omega_n
    }

    /// Ambient Gram matrix `ω₀ ⊕ Ω^{N₀}`.
    pub fn omega(&self) -> &Matrix {
        &self.omega
    }

    pub fn omega0_inv(&self) -> &Matrix {
        &self.omega0_inv
    }

    /// `Ω_{N₀}^{ik}` with `Σ_r Ω^{N₀}_{ir} Ω_{N₀}^{rk} = δ_i^k`.
    pub fn omega_n_inv(&self) -> &Matrix {
        &self.omega_n_inv
    }

    /// Components `Ω^{ij}` of `Ω⁻¹`; the single raising convention used by
    /// the Poisson bracket and the Moyal product.
    pub fn omega_inv(&self) -> &Matrix {
        &self.omega_inv
    }

    pub fn a_basis(&self) -> Option<&[Vector]> {
        self.a_basis.as_deref()
    }

    pub fn dual_normal(&self) -> &[Vector] {
        &self.dual_normal
    }

    pub fn form(&self, u: &[Rational], v: &[Rational]) -> Rational {
        bilinear(&self.omega, u, v)
    }

    pub fn form_tangent(&self, u: &[Rational], v: &[Rational]) -> Rational {
        bilinear(&self.omega0, u, v)
    }

    pub fn form_normal(&self, u: &[Rational], v: &[Rational]) -> Rational {
        bilinear(&self.omega_n, u, v)
    }

    /// Row vector of `u̲ = Ω(u, ·)`.
    pub fn underline(&self, u: &[Rational]) -> Vector {
        self.omega.transpose().apply(u)
    }

    /// `u ∘ v = u ⊗ v̲ + v ⊗ u̲` on the ambient space.
    pub fn circ(&self, u: &[Rational], v: &[Rational]) -> Matrix {
        &Matrix::outer(u, &self.underline(v)) + &Matrix::outer(v, &self.underline(u))
    }

    pub fn embed_tangent(&self, x: &[Rational]) -> Vector {
        let mut v = x.to_vec();
        v.resize(self.dim(), Rational::zero());
        v
    }

    pub fn embed_normal(&self, u: &[Rational]) -> Vector {
        let mut v = vec![Rational::zero(); self.tangent_dim()];
        v.extend_from_slice(u);
        v
    }

    pub fn tangent_part(&self, v: &[Rational]) -> Vector {
        v[..self.tangent_dim()].to_vec()
    }

    pub fn normal_part(&self, v: &[Rational]) -> Vector {
        v[self.tangent_dim()..].to_vec()
    }

    /// Ambient basis vector `f_i`.
    pub fn f(&self, i: usize) -> Vector {
        let mut v = vec![Rational::zero(); self.dim()];
        v[self.tangent_dim() + i] = Rational::one();
        v
    }

    /// Ambient basis vector `e_α`.
    pub fn e(&self, alpha: usize) -> Vector {
        let mut v = vec![Rational::zero(); self.dim()];
        v[alpha] = Rational::one();
        v
    }

    /// `S₀ = diag(−I_{2n}, I_{2p})`.
    pub fn s0(&self) -> Matrix {
        let mut m = Matrix::identity(self.dim());
        for i in 0..self.tangent_dim() {
            m[(i, i)] = -Rational::one();
        }
        m
    }

    fn block_form(&self, block: Block) -> &Matrix {
        match block {
            Block::Tangent => &self.omega0,
            Block::Normal => &self.omega_n,
            Block::Ambient => &self.omega,
        }
    }

    /// True iff `Ω_block · A` is symmetric, i.e. `A` preserves the form
    /// infinitesimally.
    pub fn is_in_sp(&self, a: &Matrix, block: Block) -> Result<bool> {
        let form = self.block_form(block);
        if !a.is_square() || a.rows() != form.rows() {
            return Err(Error::DimensionMismatch {
                context: "sp membership",
                expected: form.rows(),
                found: a.rows(),
            });
        }
        Ok((form * a).is_symmetric())
    }

    /// `A ↦ Ω(A·, ·)` as a matrix: entry `(a, b)` is `Ω(A e_a, e_b)`.
    pub fn form_of(&self, a: &Matrix, block: Block) -> Matrix {
        &a.transpose() * self.block_form(block)
    }

    /// Vectors spanning the Ω-orthogonal complement of `span(basis)`.
    pub fn omega_perp(&self, basis: &[Vector]) -> Vec<Vector> {
        if basis.is_empty() {
            return (0..self.dim()).map(|i| self.e(i)).collect();
        }
        let rows: Vec<Vector> = basis.iter().map(|w| self.underline(w)).collect();
        Matrix::from_rows(rows).expect("uniform vector lengths").nullspace()
    }

    /// Idempotent `P` with image `W = span(w_basis)` and kernel `W^⊥`.
    pub fn symp_projection(&self, w_basis: &[Vector]) -> Result<Matrix> {
        let dim = self.dim();
        if let Some(v) = w_basis.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                context: "projection basis vector",
                expected: dim,
                found: v.len(),
            });
        }
        if w_basis.is_empty() {
            return Ok(Matrix::zeros(dim, dim));
        }
        let w = Matrix::from_columns(w_basis)?;
        let wt_omega = &w.transpose() * &self.omega;
        let gram = &wt_omega * &w;
        // P v = W c with Gram·c = Wᵀ Ω v
        let coeffs = gram.solve(&wt_omega).map_err(|e| {
            Error::Degenerate(format!("subspace is not symplectic: Gram matrix {e}"))
        })?;
        Ok(&w * &coeffs)
    }

    /// The affine involution `y ↦ y − 2 p^W (y − x)`.
    pub fn symmetry(&self, x: &[Rational], w_basis: &[Vector]) -> Result<AffineMap> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "symmetry center",
                expected: self.dim(),
                found: x.len(),
            });
        }
        let proj = self.symp_projection(w_basis)?;
        let linear = &Matrix::identity(self.dim()) - &proj.scale(&qi(2));
        let translation = proj.apply(x).into_iter().map(|v| v * qi(2)).collect();
        Ok(AffineMap {
            linear,
            translation,
        })
    }

    /// `φ(A∧B)` on the tangent block.
    pub fn phi(&self, a: &Matrix, b: &Matrix) -> Result<CurvatureTensor> {
        for (m, name) in [(a, "A"), (b, "B")] {
            if !self.is_in_sp(m, Block::Tangent)? {
                return Err(Error::NotInSp {
                    what: format!("phi argument {name}"),
                });
            }
        }
        Ok(phi_unchecked(&self.form_of(a, Block::Tangent), &self.form_of(b, Block::Tangent)))
    }

    /// `ric(X, Y) = Tr[Z ↦ R(X, Z) Y]`, where `ω(R(X,Z)Y, T) = R(X,Z,Y,T)`.
    pub fn ricci(&self, r: &CurvatureTensor) -> Matrix {
        let d = r.dim();
        // R(X,Z)Y = (ω₀ᵀ)⁻¹ (R(X,Z,Y,·))
        let w = self.omega0_inv.transpose();
        let mut ric = Matrix::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                let mut s = Rational::zero();
                for c in 0..d {
                    for t in 0..d {
                        let wv = &w[(c, t)];
                        if !wv.is_zero() {
                            s += wv * r.get(a, c, b, t);
                        }
                    }
                }
                ric[(a, b)] = s;
            }
        }
        ric
    }
}

/// `φ(A∧B)` given `MA[a][b] = ω(A e_a, e_b)` and likewise `MB`.
pub(crate) fn phi_unchecked(ma: &Matrix, mb: &Matrix) -> CurvatureTensor {
    let d = ma.rows();
    CurvatureTensor::from_fn(d, |x, y, z, t| {
        &mb[(y, z)] * &ma[(x, t)] - &ma[(y, z)] * &mb[(x, t)] - &mb[(x, z)] * &ma[(y, t)]
            + &ma[(x, z)] * &mb[(y, t)]
    })
}

/// Affine map `y ↦ L y + b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineMap {
    pub linear: Matrix,
    pub translation: Vector,
}

impl AffineMap {
    pub fn identity(dim: usize) -> Self {
        AffineMap {
            linear: Matrix::identity(dim),
            translation: vec![Rational::zero(); dim],
        }
    }

    pub fn apply(&self, y: &[Rational]) -> Vector {
        self.linear
            .apply(y)
            .into_iter()
            .zip(&self.translation)
            .map(|(a, b)| a + b)
            .collect()
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        AffineMap {
            linear: &self.linear * &other.linear,
            translation: self.apply(&other.translation),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.linear == Matrix::identity(self.linear.rows()) && self.translation.iter().all(Zero::is_zero)
    }

    /// `Lᵀ Ω L = Ω`.
    pub fn is_symplectic(&self, omega: &Matrix) -> bool {
        &(&self.linear.transpose() * omega) * &self.linear == *omega
    }
}

/// `(A, a)` in the affine symplectic algebra `sp(n+p) ⋉ ℝ^{2(n+p)}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineSympElement {
    pub mat: Matrix,
    pub vec: Vector,
}

impl AffineSympElement {
    pub fn new(space: &SympSpace, mat: Matrix, vec: Vector) -> Result<Self> {
        if vec.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                context: "affine translation part",
                expected: space.dim(),
                found: vec.len(),
            });
        }
        if !space.is_in_sp(&mat, Block::Ambient)? {
            return Err(Error::NotInSp {
                what: "affine element linear part".into(),
            });
        }
        Ok(AffineSympElement { mat, vec })
    }

    /// `[(Y,y), (Y′,y′)] = ([Y,Y′], Y y′ − Y′ y)`.
    pub fn bracket(&self, other: &Self) -> Self {
        let vec = self
            .mat
            .apply(&other.vec)
            .into_iter()
            .zip(other.mat.apply(&self.vec))
            .map(|(a, b)| a - b)
            .collect();
        AffineSympElement {
            mat: self.mat.commutator(&other.mat),
            vec,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mat.is_zero() && self.vec.iter().all(Zero::is_zero)
    }

    /// Entries of the linear part followed by the translation.
    pub fn flatten(&self) -> Vector {
        let mut v = self.mat.entries().to_vec();
        v.extend(self.vec.iter().cloned());
        v
    }

    /// `exp(t(A, a)) = (e^{tA}, ((e^{tA} − 1)/A) a)` for nilpotent `A`,
    /// as the finite sums `Σ tᵏAᵏ/k!` and `Σ_{k≥1} tᵏAᵏ⁻¹a/k!`.
    pub fn exp(&self, t: &Rational) -> Result<AffineMap> {
        let dim = self.mat.rows();
        let ta = self.mat.scale(t);
        let mut translation = vec![Rational::zero(); dim];
        let mut power = Matrix::identity(dim); // (tA)^{k-1}
        for k in 1..=dim + 1 {
            let term_vec = power.apply(&self.vec);
            let c = t * inv_factorial(k);
            for (acc, v) in translation.iter_mut().zip(term_vec) {
                *acc += v * &c;
            }
            power = &power * &ta;
            if power.is_zero() {
                return Ok(AffineMap {
                    linear: nilpotent_exp_sum(&ta, k),
                    translation,
                });
            }
        }
        Err(Error::NotNilpotent { power: dim + 1 })
    }
}

/// `Σ_{j<k} Mʲ/j!` where `Mᵏ = 0`.
fn nilpotent_exp_sum(m: &Matrix, k: usize) -> Matrix {
    let dim = m.rows();
    let mut acc = Matrix::identity(dim);
    let mut power = Matrix::identity(dim);
    for j in 1..k {
        power = &power * m;
        acc = &acc + &power.scale(&inv_factorial(j));
    }
    acc
}

/// Four-index tensor `R(x, y, z, t)` over a basis of dimension `dim`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurvatureTensor {
    dim: usize,
    data: Vec<Rational>,
}

impl CurvatureTensor {
    pub fn zeros(dim: usize) -> Self {
        CurvatureTensor {
            dim,
            data: vec![Rational::zero(); dim.pow(4)],
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize, usize) -> Rational) -> Self {
        let mut data = Vec::with_capacity(dim.pow(4));
        for x in 0..dim {
            for y in 0..dim {
                for z in 0..dim {
                    for t in 0..dim {
                        data.push(f(x, y, z, t));
                    }
                }
            }
        }
        CurvatureTensor { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn idx(&self, x: usize, y: usize, z: usize, t: usize) -> usize {
        ((x * self.dim + y) * self.dim + z) * self.dim + t
    }

    pub fn get(&self, x: usize, y: usize, z: usize, t: usize) -> &Rational {
        &self.data[self.idx(x, y, z, t)]
    }

    pub fn components(&self) -> &[Rational] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn scale(&self, s: &Rational) -> Self {
        CurvatureTensor {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "tensor dimension mismatch");
        CurvatureTensor {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    /// Evaluates on arbitrary vectors (multilinear extension).
    pub fn eval(&self, x: &[Rational], y: &[Rational], z: &[Rational], t: &[Rational]) -> Rational {
        let mut s = Rational::zero();
        for (a, xa) in x.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
            for (b, yb) in y.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
                let xy = xa * yb;
                for (c, zc) in z.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
                    let xyz = &xy * zc;
                    for (d, td) in t.iter().enumerate().filter(|(_, v)| !v.is_zero()) {
                        s += &xyz * td * self.get(a, b, c, d);
                    }
                }
            }
        }
        s
    }

    /// `(X,Y,Z,T) ↦ R(MX, MY, MZ, MT)`.
    pub fn pullback(&self, m: &Matrix) -> Self {
        let cols: Vec<Vector> = (0..self.dim).map(|i| m.column(i)).collect();
        CurvatureTensor::from_fn(self.dim, |x, y, z, t| self.eval(&cols[x], &cols[y], &cols[z], &cols[t]))
    }

    /// First symmetry violated, if any: antisymmetry in `(x,y)`, symmetry in
    /// `(z,t)`, and the cyclic sum over `(x,y,z)`.
    pub fn invariant_violation(&self) -> Option<String> {
        let d = self.dim;
        for x in 0..d {
            for y in 0..d {
                for z in 0..d {
                    for t in 0..d {
                        let v = self.get(x, y, z, t);
                        if *v != -self.get(y, x, z, t).clone() {
                            return Some(format!("not antisymmetric in (x,y) at {:?}", (x, y, z, t)));
                        }
                        if v != self.get(x, y, t, z) {
                            return Some(format!("not symmetric in (z,t) at {:?}", (x, y, z, t)));
                        }
                        let cyc = v + self.get(y, z, x, t) + self.get(z, x, y, t);
                        if !cyc.is_zero() {
                            return Some(format!("first Bianchi fails at {:?}", (x, y, z, t)));
                        }
                    }
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;

    fn sp2_from_symmetric(space: &SympSpace, s: &Matrix) -> Matrix {
        // ω₀ A = S  ⇒  A = ω₀⁻¹ S
        space.omega0_inv() * s
    }

    fn sym(entries: &[i64]) -> Matrix {
        // upper triangle of a 4x4 symmetric matrix, row by row
        let mut m = Matrix::zeros(4, 4);
        let mut k = 0;
        for i in 0..4 {
            for j in i..4 {
                m[(i, j)] = qi(entries[k]);
                m[(j, i)] = qi(entries[k]);
                k += 1;
            }
        }
        m
    }

    #[test]
    fn sp_membership_examples() {
        let s = SympSpace::standard(1, 1);
        assert!(s.is_in_sp(&Matrix::zeros(2, 2), Block::Tangent).unwrap());
        assert!(s.is_in_sp(&Matrix::from_i64(&[&[0, 1], &[0, 0]]), Block::Tangent).unwrap());
        assert!(!s.is_in_sp(&Matrix::identity(2), Block::Tangent).unwrap());
        assert!(s.is_in_sp(&Matrix::identity(3), Block::Tangent).is_err());
    }

    #[test]
    fn forms_are_skew_and_nondegenerate() {
        let s = SympSpace::standard(2, 1);
        assert!(s.omega().is_skew());
        assert!(!s.omega().determinant().is_zero());
        assert!(SympSpace::new(1, 1, Matrix::identity(2), standard_form(1), None).is_err());
        assert!(SympSpace::new(1, 1, Matrix::zeros(2, 2), standard_form(1), None).is_err());
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { qi(1) } else { qi(0) };
                assert_eq!(s.form(&s.dual_normal()[i], &s.f(j)), expect);
            }
        }
    }

    #[test]
    fn symmetry_at_origin_of_tangent_block() {
        let s = SympSpace::standard(1, 1);
        let w: Vec<Vector> = (0..2).map(|a| s.e(a)).collect();
        let sym = s.symmetry(&vec![qi(0); 4], &w).unwrap();
        assert_eq!(sym.linear, s.s0());
        assert!(sym.translation.iter().all(Zero::is_zero));
    }

    #[test]
    fn symmetry_fixes_center_and_is_involutive() {
        let s = SympSpace::standard(2, 1);
        let w = vec![
            vec![qi(1), qi(0), qi(1), qi(0), qi(2), qi(0)],
            vec![qi(0), qi(1), qi(0), qi(3), qi(0), qi(1)],
        ];
        assert!(!s.form(&w[0], &w[1]).is_zero());
        let x = vec![q(1, 2), qi(-1), qi(3), qi(0), q(2, 3), qi(1)];
        let sym = s.symmetry(&x, &w).unwrap();
        assert_eq!(sym.apply(&x), x);
        assert!(sym.compose(&sym).is_identity());
        assert!(sym.is_symplectic(s.omega()));
        for k in 0..10i64 {
            let y: Vector = (0..6).map(|i| q(k * 3 - i * 2, 1 + i % 3)).collect();
            assert_eq!(sym.apply(&sym.apply(&y)), y);
        }
    }

    #[test]
    fn degenerate_subspace_rejected() {
        let s = SympSpace::standard(1, 1);
        let w = vec![s.e(0), s.f(0)]; // isotropic pair
        assert!(matches!(s.symp_projection(&w), Err(Error::Degenerate(_))));
    }

    #[test]
    fn projection_examples() {
        let s = SympSpace::standard(1, 1);
        let all: Vec<Vector> = (0..4).map(|i| s.e(i)).collect();
        assert_eq!(s.symp_projection(&all).unwrap(), Matrix::identity(4));
        let p = s.symp_projection(&[s.e(0), s.e(1)]).unwrap();
        let mut expect = Matrix::zeros(4, 4);
        expect[(0, 0)] = qi(1);
        expect[(1, 1)] = qi(1);
        assert_eq!(p, expect);

        // a symplectic 2-plane in general position
        let w = vec![
            vec![qi(1), qi(2), qi(0), qi(1)],
            vec![qi(1), qi(0), qi(2), q(1, 2)],
        ];
        let p = s.symp_projection(&w).unwrap();
        assert_eq!(&p * &p, p);
        let qm = &Matrix::identity(4) - &p;
        for i in 0..4 {
            for j in 0..4 {
                assert!(s.form(&p.column(i), &qm.column(j)).is_zero());
            }
        }
    }

    #[test]
    fn phi_examples() {
        let s = SympSpace::standard(2, 1);
        let a = sp2_from_symmetric(&s, &sym(&[1, 0, 2, 0, 1, 0, 3, -1, 0, 2]));
        let b = sp2_from_symmetric(&s, &sym(&[0, 1, 0, 1, 2, 1, 0, 0, 1, -1]));
        assert!(s.phi(&a, &a).unwrap().is_zero());
        let ab = s.phi(&a, &b).unwrap();
        assert_eq!(ab, s.phi(&b, &a).unwrap().scale(&qi(-1)));
        assert_eq!(ab.invariant_violation(), None);
        assert!(s.phi(&Matrix::identity(4), &b).is_err());
    }

    /// Trace of `Z ↦ R(X,Z)Y` with the endomorphism assembled explicitly.
    fn ricci_oracle(s: &SympSpace, r: &CurvatureTensor) -> Matrix {
        let d = r.dim();
        let mut ric = Matrix::zeros(d, d);
        for x in 0..d {
            for y in 0..d {
                let mut endo = Matrix::zeros(d, d);
                for z in 0..d {
                    // v = R(x,z)y solves ω(v, e_t) = R(x,z,y,t) for all t
                    let rhs = Matrix::new(d, 1, (0..d).map(|t| r.get(x, z, y, t).clone()).collect()).unwrap();
                    let v = s.omega0().transpose().solve(&rhs).unwrap();
                    for c in 0..d {
                        endo[(c, z)] = v[(c, 0)].clone();
                    }
                }
                ric[(x, y)] = endo.trace();
            }
        }
        ric
    }

    #[test]
    fn ricci_of_phi_is_minus_bracket_form() {
        let s = SympSpace::standard(2, 1);
        let pairs = [
            (sym(&[1, 0, 2, 0, 1, 0, 3, -1, 0, 2]), sym(&[0, 1, 0, 1, 2, 1, 0, 0, 1, -1])),
            (sym(&[2, -1, 0, 0, 0, 1, 1, 3, 0, 0]), sym(&[1, 1, 1, 1, 1, 1, 1, 1, 1, 1])),
        ];
        for (sa, sb) in pairs {
            let a = sp2_from_symmetric(&s, &sa);
            let b = sp2_from_symmetric(&s, &sb);
            let r = s.phi(&a, &b).unwrap();
            let ric = s.ricci(&r);
            assert_eq!(ric, ricci_oracle(&s, &r));
            let bracket_form = s.form_of(&a.commutator(&b), Block::Tangent);
            assert_eq!(&ric + &bracket_form, Matrix::zeros(4, 4));
        }
        assert!(s.ricci(&CurvatureTensor::zeros(4)).is_zero());
    }

    #[test]
    fn commuting_pair_has_zero_ricci() {
        let s = SympSpace::standard(1, 1);
        let a = Matrix::from_i64(&[&[0, 1], &[0, 0]]);
        let b = a.scale(&qi(3));
        assert!(s.ricci(&s.phi(&a, &b).unwrap()).is_zero());
    }

    #[test]
    fn affine_bracket_and_exp() {
        let s = SympSpace::standard(1, 0);
        let x = AffineSympElement::new(&s, Matrix::from_i64(&[&[0, 1], &[0, 0]]), vec![qi(0), qi(1)]).unwrap();
        let e = x.exp(&qi(1)).unwrap();
        assert_eq!(e.linear, Matrix::from_i64(&[&[1, 1], &[0, 1]]));
        // ((e^A − 1)/A) a = a + A a / 2
        assert_eq!(e.translation, vec![q(1, 2), qi(1)]);
        assert!(x.exp(&qi(0)).unwrap().is_identity());
        let y = AffineSympElement::new(&s, Matrix::zeros(2, 2), vec![qi(0), qi(1)]).unwrap();
        assert_eq!(x.bracket(&y).vec, vec![qi(1), qi(0)]);
        assert_eq!(y.bracket(&x).vec, vec![qi(-1), qi(0)]);
        assert!(AffineSympElement::new(&s, Matrix::identity(2), vec![qi(0); 2]).is_err());
    }
}
