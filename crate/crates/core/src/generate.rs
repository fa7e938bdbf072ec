//! Seeded generators for symplectic data and the bundled example families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::exact::{q, qi, Matrix, Rational, Vector};
use crate::lambda::{BStruct, ShapeFamily};
use crate::symplectic::{standard_form, SympSpace};

/// Deterministic generator for `(seed, stream)`; independent streams let
/// parallel workers draw without sharing state.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// `a / b` with `|a| ≤ range`, `1 ≤ b ≤ max_den`.
pub fn small_rational<R: Rng>(rng: &mut R, range: i64, max_den: i64) -> Rational {
    q(rng.gen_range(-range..=range), rng.gen_range(1..=max_den))
}

pub fn small_int<R: Rng>(rng: &mut R, range: i64) -> Rational {
    qi(rng.gen_range(-range..=range))
}

pub fn random_vector<R: Rng>(rng: &mut R, len: usize, range: i64) -> Vector {
    (0..len).map(|_| small_int(rng, range)).collect()
}

pub fn random_symmetric<R: Rng>(rng: &mut R, d: usize, range: i64) -> Matrix {
    let mut m = Matrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = small_int(rng, range);
            m[(i, j)] = v.clone();
            m[(j, i)] = v;
        }
    }
    m
}

/// Element of the symplectic algebra of `form`: `form⁻¹ S` with `S` symmetric.
pub fn random_sp<R: Rng>(rng: &mut R, form: &Matrix, range: i64) -> Matrix {
    let s = random_symmetric(rng, form.rows(), range);
    &form.inverse().expect("nondegenerate form") * &s
}

/// Product of `count` transvections `y ↦ y + c Ω(v, y) v`.
pub fn random_symplectic<R: Rng>(rng: &mut R, form: &Matrix, count: usize) -> Matrix {
    let d = form.rows();
    let mut m = Matrix::identity(d);
    for _ in 0..count {
        let v = random_vector(rng, d, 1);
        let c = small_int(rng, 1);
        let under = form.transpose().apply(&v);
        let t = &Matrix::identity(d) + &Matrix::outer(&v, &under).scale(&c);
        m = &t * &m;
    }
    m
}

/// Unit upper-triangular integer matrix, hence invertible.
pub fn random_unitriangular<R: Rng>(rng: &mut R, d: usize, range: i64) -> Matrix {
    let mut m = Matrix::identity(d);
    for i in 0..d {
        for j in (i + 1)..d {
            m[(i, j)] = small_int(rng, range);
        }
    }
    m
}

/// A nonstandard nondegenerate skew form `Pᵀ J P`.
pub fn random_skew_form<R: Rng>(rng: &mut R, k: usize) -> Matrix {
    let p = random_unitriangular(rng, 2 * k, 1);
    &(&p.transpose() * &standard_form(k)) * &p
}

/// Arbitrary `C_i ∈ sp(n)`; generically not a solution of the cubic condition.
pub fn random_family<R: Rng>(rng: &mut R, space: &SympSpace, range: i64) -> Result<ShapeFamily> {
    let c = (0..space.normal_dim())
        .map(|_| random_sp(rng, space.omega0(), range))
        .collect();
    ShapeFamily::new(space.clone(), c, None, None)
}

/// `C_i = λ_i C` for one `C ∈ sp(n)`: the image of the second fundamental
/// form is a line, so the family is flat.
pub fn proportional_family<R: Rng>(rng: &mut R, space: &SympSpace, range: i64) -> Result<ShapeFamily> {
    let base = random_sp(rng, space.omega0(), range);
    let c = (0..space.normal_dim())
        .map(|_| base.scale(&small_int(rng, 2)))
        .collect();
    ShapeFamily::new(space.clone(), c, None, None)
}

/// `C_i = λ_i v ⊗ Ω(v, ·)`: flat, and every product `C_i C_j` vanishes.
pub fn rank_one_family<R: Rng>(rng: &mut R, space: &SympSpace, range: i64) -> Result<ShapeFamily> {
    let v = loop {
        let v = random_vector(rng, space.tangent_dim(), range);
        if v.iter().any(|x| *x != qi(0)) {
            break v;
        }
    };
    let base = Matrix::outer(&v, &space.omega0().transpose().apply(&v));
    let c = (0..space.normal_dim())
        .map(|_| base.scale(&small_int(rng, 2)))
        .collect();
    ShapeFamily::new(space.clone(), c, Some(zero_b(space.normal_dim())), None)
}

/// `C_i` mapping into a Lagrangian `L` and vanishing on it, so all products
/// `C_i C_j` are zero. Built as `[[0, S_i], [0, 0]]` in a symplectic basis of
/// the standard form and then carried to `space.omega0()`.
pub fn lagrangian_block_family<R: Rng>(rng: &mut R, space: &SympSpace, range: i64) -> Result<ShapeFamily> {
    let n = space.n();
    let to_space = standard_basis_change(space.omega0())?;
    let to_space_inv = to_space.inverse()?;
    let twist = random_symplectic(rng, &standard_form(n), 2 * n);
    let twist_inv = twist.inverse()?;
    let c = (0..space.normal_dim())
        .map(|_| {
            let s = random_symmetric(rng, n, range);
            let mut m = Matrix::zeros(2 * n, 2 * n);
            m.set_block(0, n, &s);
            let m = &(&twist * &m) * &twist_inv;
            &(&to_space_inv * &m) * &to_space
        })
        .collect();
    ShapeFamily::new(space.clone(), c, Some(zero_b(space.normal_dim())), None)
}

/// Some `P` with `Pᵀ J P = form`, found by symplectic Gram–Schmidt.
pub fn standard_basis_change(form: &Matrix) -> Result<Matrix> {
    let d = form.rows();
    let k = d / 2;
    let omega = |u: &[Rational], v: &[Rational]| crate::exact::dot(u, &form.apply(v));
    let mut remaining: Vec<Vector> = (0..d)
        .map(|i| {
            let mut v = vec![qi(0); d];
            v[i] = qi(1);
            v
        })
        .collect();
    let mut es = Vec::with_capacity(k);
    let mut fs = Vec::with_capacity(k);
    while let Some(e) = remaining.first().cloned() {
        let Some(pos) = remaining.iter().position(|v| omega(&e, v) != qi(0)) else {
            return Err(crate::Error::Degenerate("form is degenerate".into()));
        };
        let f0 = remaining[pos].clone();
        let s = omega(&e, &f0);
        let f: Vector = f0.iter().map(|v| v / &s).collect();
        remaining = remaining
            .into_iter()
            .enumerate()
            .filter(|(i, _)| *i != 0 && *i != pos)
            .map(|(_, v)| {
                // v − ω(v, f) e + ω(v, e) f is ω-orthogonal to e and f
                let a = omega(&v, &f);
                let b = omega(&v, &e);
                v.iter()
                    .zip(&e)
                    .zip(&f)
                    .map(|((vi, ei), fi)| vi - &a * ei + &b * fi)
                    .collect()
            })
            .filter(|v: &Vector| v.iter().any(|x| *x != qi(0)))
            .collect();
        es.push(e);
        fs.push(f);
    }
    // columns e_1..e_k, f_1..f_k give Qᵀ form Q = J; P = Q⁻¹
    let mut cols = es;
    cols.extend(fs);
    Matrix::from_columns(&cols)?.inverse()
}

pub fn zero_b(np: usize) -> BStruct {
    vec![vec![vec![qi(0); np]; np]; np]
}

/// `n = p = 1`, `C₁ = [[0,1],[0,0]]`, `C₂ = 0`: the surface `u² = −x₂²/2`.
pub fn parabola_family() -> ShapeFamily {
    ShapeFamily::new(
        SympSpace::standard(1, 1),
        vec![Matrix::from_i64(&[&[0, 1], &[0, 0]]), Matrix::zeros(2, 2)],
        Some(zero_b(2)),
        None,
    )
    .expect("valid family")
}

fn unit_matrix(d: usize, entries: &[(usize, usize, i64)]) -> Matrix {
    let mut m = Matrix::zeros(d, d);
    for &(r, c, v) in entries {
        m[(r - 1, c - 1)] = qi(v);
    }
    m
}

/// The four `8×8` generators on `ℝ⁴ ⊕ ℝ⁴` with `A₃A₄ = −A₄A₃ = A₂` and all
/// other products zero (1-based entries).
pub fn r8_generators() -> Vec<Matrix> {
    vec![
        Matrix::zeros(8, 8),
        unit_matrix(8, &[(2, 4, 1)]),
        unit_matrix(8, &[(2, 1, 1), (3, 4, -1), (6, 8, 1)]),
        unit_matrix(8, &[(1, 4, 1), (2, 1, -1), (2, 3, 1), (3, 4, 1), (5, 8, -1), (6, 7, -1)]),
    ]
}

/// Tangent and normal blocks of [`r8_generators`] as a shape family with
/// nonzero structure constants.
pub fn r8_family() -> ShapeFamily {
    let a = r8_generators();
    let c = a.iter().map(|m| m.block(0, 0, 4, 4)).collect();
    let b = a.iter().map(|m| m.block(4, 4, 4, 4)).collect();
    ShapeFamily::new(SympSpace::standard(2, 2), c, None, Some(b)).expect("valid family")
}
