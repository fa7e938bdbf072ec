use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::{format_rational, qi, Rational};
use crate::error::{Error, Result};

/// Exponent vector over the coordinates plus the power of the formal
/// deformation parameter ν.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub exps: Vec<u32>,
    pub nu: u32,
}

impl Monomial {
    pub fn constant(num_vars: usize) -> Self {
        Monomial {
            exps: vec![0; num_vars],
            nu: 0,
        }
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            exps: self.exps.iter().zip(&other.exps).map(|(a, b)| a + b).collect(),
            nu: self.nu + other.nu,
        }
    }
}

/// Sparse polynomial over the rationals in `num_vars` coordinates, graded by
/// a formal parameter ν. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiPoly {
    num_vars: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", format_rational(c))?;
            if m.nu > 0 {
                write!(f, "*nu^{}", m.nu)?;
            }
            for (i, e) in m.exps.iter().enumerate() {
                if *e > 0 {
                    write!(f, "*z{}^{}", i + 1, e)?;
                }
            }
        }
        Ok(())
    }
}

impl MultiPoly {
    pub fn zero(num_vars: usize) -> Self {
        MultiPoly {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, c: Rational) -> Self {
        let mut p = Self::zero(num_vars);
        p.add_term(Monomial::constant(num_vars), c);
        p
    }

    pub fn one(num_vars: usize) -> Self {
        Self::constant(num_vars, Rational::one())
    }

    /// The coordinate `z_var` (zero-based).
    pub fn var(num_vars: usize, var: usize) -> Self {
        assert!(var < num_vars, "variable index out of range");
        let mut m = Monomial::constant(num_vars);
        m.exps[var] = 1;
        let mut p = Self::zero(num_vars);
        p.add_term(m, Rational::one());
        p
    }

    /// The formal parameter ν itself.
    pub fn nu(num_vars: usize) -> Self {
        let mut m = Monomial::constant(num_vars);
        m.nu = 1;
        let mut p = Self::zero(num_vars);
        p.add_term(m, Rational::one());
        p
    }

    /// Linear form `Σ cᵢ zᵢ`.
    pub fn linear(coeffs: &[Rational]) -> Self {
        let n = coeffs.len();
        let mut p = Self::zero(n);
        for (i, c) in coeffs.iter().enumerate() {
            let mut m = Monomial::constant(n);
            m.exps[i] = 1;
            p.add_term(m, c.clone());
        }
        p
    }

    /// Quadratic form `zᵀ M z`.
    pub fn quadratic(m: &super::Matrix) -> Self {
        let n = m.rows();
        let mut p = Self::zero(n);
        for i in 0..n {
            for j in 0..n {
                let c = &m[(i, j)];
                if c.is_zero() {
                    continue;
                }
                let mut mono = Monomial::constant(n);
                mono.exps[i] += 1;
                mono.exps[j] += 1;
                p.add_term(mono, c.clone());
            }
        }
        p
    }

    pub fn from_terms<I>(num_vars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Monomial, Rational)>,
    {
        let mut p = Self::zero(num_vars);
        for (m, c) in terms {
            if m.exps.len() != num_vars {
                return Err(Error::DimensionMismatch {
                    context: "monomial exponent vector",
                    expected: num_vars,
                    found: m.exps.len(),
                });
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    /// Adds `c·m` in place, dropping the monomial if it cancels.
    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// `self += s·other` in place.
    pub fn add_scaled(&mut self, other: &Self, s: &Rational) {
        assert_eq!(self.num_vars, other.num_vars, "polynomial variable count mismatch");
        if s.is_zero() {
            return;
        }
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c * s);
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    /// Total degree in the coordinates (ν excluded); 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Highest power of ν present; 0 for the zero polynomial.
    pub fn nu_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.nu).max().unwrap_or(0)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.num_vars != other.num_vars {
            return Err(Error::DimensionMismatch {
                context: "polynomial variable count",
                expected: self.num_vars,
                found: other.num_vars,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = Self::zero(self.num_vars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: &Rational) -> Self {
        if s.is_zero() {
            return Self::zero(self.num_vars);
        }
        MultiPoly {
            num_vars: self.num_vars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.num_vars);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Exact partial derivative with respect to `z_var`.
    pub fn diff(&self, var: usize) -> Result<Self> {
        if var >= self.num_vars {
            return Err(Error::DimensionMismatch {
                context: "derivative variable index",
                expected: self.num_vars,
                found: var,
            });
        }
        let mut out = Self::zero(self.num_vars);
        for (m, c) in &self.terms {
            let e = m.exps[var];
            if e == 0 {
                continue;
            }
            let mut m2 = m.clone();
            m2.exps[var] -= 1;
            out.add_term(m2, c * qi(e as i64));
        }
        Ok(out)
    }

    /// Evaluates at `point`, substituting `nu` for the formal parameter.
    pub fn eval(&self, point: &[Rational], nu: &Rational) -> Result<Rational> {
        if point.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                context: "evaluation point",
                expected: self.num_vars,
                found: point.len(),
            });
        }
        let mut total = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (x, &e) in point.iter().zip(&m.exps) {
                for _ in 0..e {
                    t *= x;
                }
            }
            for _ in 0..m.nu {
                t *= nu;
            }
            total += t;
        }
        Ok(total)
    }

    /// The coefficient of νᵏ as a ν-free polynomial.
    pub fn nu_coefficient(&self, k: u32) -> Self {
        MultiPoly {
            num_vars: self.num_vars,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.nu == k)
                .map(|(m, c)| {
                    (
                        Monomial {
                            exps: m.exps.clone(),
                            nu: 0,
                        },
                        c.clone(),
                    )
                })
                .collect(),
        }
    }

    /// Drops every term with ν-degree above `max_nu`.
    pub fn truncate_nu(&self, max_nu: u32) -> Self {
        MultiPoly {
            num_vars: self.num_vars,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.nu <= max_nu)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Multiplies by νᵏ.
    pub fn shift_nu(&self, k: u32) -> Self {
        MultiPoly {
            num_vars: self.num_vars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    (
                        Monomial {
                            exps: m.exps.clone(),
                            nu: m.nu + k,
                        },
                        c.clone(),
                    )
                })
                .collect(),
        }
    }

    /// Substitutes `subs[i]` for `z_i`. All substitutes must share one
    /// variable count, which becomes the variable count of the result.
    pub fn compose(&self, subs: &[MultiPoly]) -> Result<Self> {
        if subs.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                context: "composition substitutes",
                expected: self.num_vars,
                found: subs.len(),
            });
        }
        let target = subs.first().map_or(0, MultiPoly::num_vars);
        if let Some(bad) = subs.iter().find(|s| s.num_vars != target) {
            return Err(Error::DimensionMismatch {
                context: "composition substitute variable count",
                expected: target,
                found: bad.num_vars,
            });
        }
        // power cache per variable
        let mut powers: Vec<Vec<MultiPoly>> = subs.iter().map(|s| vec![Self::one(target), s.clone()]).collect();
        let mut out = Self::zero(target);
        for (m, c) in &self.terms {
            let mut t = Self::constant(target, c.clone()).shift_nu(m.nu);
            for (i, &e) in m.exps.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e as usize {
                    let next = &powers[i][powers[i].len() - 1] * &subs[i];
                    powers[i].push(next);
                }
                t = &t * &powers[i][e as usize];
            }
            out.add_scaled(&t, &Rational::one());
        }
        Ok(out)
    }

    /// `self(y)·other(z)` as a polynomial in the concatenated variables `(y, z)`.
    pub fn tensor(&self, other: &Self) -> Self {
        let n = self.num_vars + other.num_vars;
        let mut out = Self::zero(n);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut exps = ma.exps.clone();
                exps.extend_from_slice(&mb.exps);
                out.add_term(
                    Monomial {
                        exps,
                        nu: ma.nu + mb.nu,
                    },
                    ca * cb,
                );
            }
        }
        out
    }

    /// Restricts a polynomial in `(y, z)` (2N variables) to the diagonal `y = z`.
    pub fn diagonal(&self) -> Result<Self> {
        if self.num_vars % 2 != 0 {
            return Err(Error::DimensionMismatch {
                context: "diagonal restriction needs an even variable count",
                expected: self.num_vars + 1,
                found: self.num_vars,
            });
        }
        let n = self.num_vars / 2;
        let mut out = Self::zero(n);
        for (m, c) in &self.terms {
            let exps = (0..n).map(|i| m.exps[i] + m.exps[n + i]).collect();
            out.add_term(Monomial { exps, nu: m.nu }, c.clone());
        }
        Ok(out)
    }

    /// Re-indexes into `new_vars` variables, mapping `z_i` to `z_{offset+i}`.
    pub fn embed(&self, new_vars: usize, offset: usize) -> Self {
        assert!(offset + self.num_vars <= new_vars, "embedding out of range");
        let mut out = Self::zero(new_vars);
        for (m, c) in &self.terms {
            let mut exps = vec![0; new_vars];
            exps[offset..offset + self.num_vars].copy_from_slice(&m.exps);
            out.add_term(Monomial { exps, nu: m.nu }, c.clone());
        }
        out
    }
}

/// Reads sums of products such as `3/2*z1^2*z3 - nu*x2 + 4`. Variables are
/// `z<k>` or `x<k>` (1-based) and `nu`; this accepts the `Display` output.
pub fn parse_poly(src: &str, num_vars: usize) -> Result<MultiPoly> {
    let chars: Vec<char> = src.chars().filter(|c| !c.is_whitespace()).collect();
    let err = |pos: usize, what: &str| Error::Parse(format!("polynomial {src:?}: {what} at offset {pos}"));
    let digits = |pos: &mut usize| -> Option<String> {
        let start = *pos;
        while *pos < chars.len() && chars[*pos].is_ascii_digit() {
            *pos += 1;
        }
        (*pos > start).then(|| chars[start..*pos].iter().collect())
    };
    let mut out = MultiPoly::zero(num_vars);
    let mut pos = 0;
    if chars.is_empty() {
        return Err(err(0, "empty input"));
    }
    while pos < chars.len() {
        let mut negative = false;
        let mut saw_sign = false;
        while pos < chars.len() && (chars[pos] == '+' || chars[pos] == '-') {
            negative ^= chars[pos] == '-';
            saw_sign = true;
            pos += 1;
        }
        if pos > 0 && !saw_sign {
            return Err(err(pos, "expected + or -"));
        }
        let mut coeff = Rational::one();
        let mut mono = Monomial::constant(num_vars);
        loop {
            let c = *chars.get(pos).ok_or_else(|| err(pos, "missing factor"))?;
            if c.is_ascii_digit() {
                let num = digits(&mut pos).expect("digit present");
                let mut r: Rational = Rational::from_integer(num.parse().expect("digits"));
                if chars.get(pos) == Some(&'/') {
                    pos += 1;
                    let den = digits(&mut pos).ok_or_else(|| err(pos, "missing denominator"))?;
                    let den: num_bigint::BigInt = den.parse().expect("digits");
                    if den.is_zero() {
                        return Err(err(pos, "zero denominator"));
                    }
                    r /= Rational::from_integer(den);
                }
                coeff *= r;
            } else {
                let is_nu = chars[pos..].starts_with(&['n', 'u']);
                let var = if is_nu {
                    pos += 2;
                    None
                } else if c == 'z' || c == 'x' {
                    pos += 1;
                    let k: usize = digits(&mut pos)
                        .ok_or_else(|| err(pos, "missing variable index"))?
                        .parse()
                        .map_err(|_| err(pos, "variable index too large"))?;
                    if k == 0 || k > num_vars {
                        return Err(err(pos, &format!("variable index {k} outside 1..={num_vars}")));
                    }
                    Some(k - 1)
                } else {
                    return Err(err(pos, &format!("unexpected {c:?}")));
                };
                let mut e = 1u32;
                if chars.get(pos) == Some(&'^') {
                    pos += 1;
                    e = digits(&mut pos)
                        .ok_or_else(|| err(pos, "missing exponent"))?
                        .parse()
                        .map_err(|_| err(pos, "exponent too large"))?;
                }
                match var {
                    Some(k) => mono.exps[k] += e,
                    None => mono.nu += e,
                }
            }
            if chars.get(pos) == Some(&'*') {
                pos += 1;
            } else {
                break;
            }
        }
        if negative {
            coeff = -coeff;
        }
        out.add_term(mono, coeff);
    }
    Ok(out)
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        self.try_add(rhs).expect("polynomial variable count mismatch")
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        self.try_add(&-rhs).expect("polynomial variable count mismatch")
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        self.try_mul(rhs).expect("polynomial variable count mismatch")
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(&-Rational::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;
    use proptest::prelude::*;

    #[test]
    fn parser_examples() {
        let p = parse_poly("3/2*z1^2*z3 - nu*x2 + 4", 3).unwrap();
        let z = |i| MultiPoly::var(3, i);
        let expect = &(&(&z(0) * &z(0)) * &z(2)).scale(&q(3, 2)) - &z(1).shift_nu(1);
        assert_eq!(p, &expect + &MultiPoly::constant(3, qi(4)));
        assert_eq!(parse_poly("-x1 + -2*x1", 1).unwrap(), MultiPoly::var(1, 0).scale(&qi(-3)));
        for bad in ["", "z4", "z0", "1/0", "2 z1", "z1^", "y1", "3+"] {
            assert!(parse_poly(bad, 3).is_err(), "{bad:?}");
        }
    }

    fn z(n: usize, i: usize) -> MultiPoly {
        MultiPoly::var(n, i)
    }

    #[test]
    fn trivial_arithmetic() {
        let p = &z(2, 0) + &MultiPoly::constant(2, qi(3));
        assert_eq!(&p + &MultiPoly::zero(2), p);
        let prod = &z(2, 0) * &z(2, 1);
        let mut m = Monomial::constant(2);
        m.exps = vec![1, 1];
        assert_eq!(prod.len(), 1);
        assert_eq!(prod.coeff(&m), qi(1));
        assert!(z(2, 0).try_add(&z(3, 0)).is_err());
    }

    #[test]
    fn square_matches_convolution() {
        let s = &z(2, 0) + &z(2, 1);
        let sq = &s * &s;
        // convolution of the coefficient vector [1, 1] with itself: 1, 2, 1
        let expect = [(vec![2, 0], 1), (vec![1, 1], 2), (vec![0, 2], 1)];
        assert_eq!(sq.len(), 3);
        for (e, c) in expect {
            assert_eq!(sq.coeff(&Monomial { exps: e, nu: 0 }), qi(c));
        }
    }

    #[test]
    fn derivatives() {
        let p = z(2, 0).pow(2);
        assert_eq!(p.diff(0).unwrap(), z(2, 0).scale(&qi(2)));
        assert!(z(2, 0).diff(1).unwrap().is_zero());
        assert!(p.diff(2).is_err());
    }

    #[test]
    fn evaluation() {
        assert_eq!(MultiPoly::constant(3, qi(5)).eval(&[qi(1), qi(9), q(1, 2)], &qi(0)).unwrap(), qi(5));
        let p = &z(2, 0) * &z(2, 1);
        assert_eq!(p.eval(&[qi(2), qi(3)], &qi(0)).unwrap(), qi(6));
        assert!(p.eval(&[qi(2)], &qi(0)).is_err());
        let pn = &p * &MultiPoly::nu(2);
        assert_eq!(pn.eval(&[qi(2), qi(3)], &q(1, 3)).unwrap(), qi(2));
    }

    /// Lagrange interpolation through (s_k, v_k), differentiated at s = 0.
    fn interpolated_slope(samples: &[(Rational, Rational)]) -> Rational {
        let mut total = Rational::zero();
        for (k, (sk, vk)) in samples.iter().enumerate() {
            // d/ds of the k-th Lagrange basis polynomial at 0
            let others: Vec<&Rational> = samples.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, (s, _))| s).collect();
            let denom = others.iter().fold(Rational::one(), |acc, s| acc * (sk - *s));
            let mut deriv = Rational::zero();
            for skip in 0..others.len() {
                let mut prod = Rational::one();
                for (j, s) in others.iter().enumerate() {
                    if j != skip {
                        prod *= -(*s).clone();
                    }
                }
                deriv += prod;
            }
            total += vk * deriv / denom;
        }
        total
    }

    fn small_poly(n: usize, max_deg: u32, max_terms: usize) -> impl Strategy<Value = MultiPoly> {
        proptest::collection::vec(
            (proptest::collection::vec(0..=max_deg, n), -6i64..7, 1i64..4),
            0..=max_terms,
        )
        .prop_map(move |ts| {
            let terms = ts.into_iter().filter_map(|(e, c, d)| {
                let total: u32 = e.iter().sum();
                (total <= max_deg).then(|| (Monomial { exps: e, nu: 0 }, q(c, d)))
            });
            MultiPoly::from_terms(n, terms).unwrap()
        })
    }

    proptest! {
        #[test]
        fn display_round_trips(terms in proptest::collection::vec((proptest::collection::vec(0u32..3, 3), 0u32..2, -5i64..6, 1i64..4), 0..6)) {
            let p = MultiPoly::from_terms(3, terms.into_iter().map(|(exps, nu, a, b)| (Monomial { exps, nu }, q(a, b)))).unwrap();
            prop_assert_eq!(parse_poly(&p.to_string(), 3).unwrap(), p);
        }

        #[test]
        fn derivative_matches_interpolation(p in small_poly(3, 4, 6), var in 0usize..3, a in -3i64..4, b in -3i64..4) {
            let point = vec![qi(a), qi(b), q(1, 2)];
            let samples: Vec<(Rational, Rational)> = (0..5)
                .map(|k| {
                    let s = qi(k - 2);
                    let mut pt = point.clone();
                    pt[var] += &s;
                    (s, p.eval(&pt, &qi(0)).unwrap())
                })
                .collect();
            prop_assert_eq!(p.diff(var).unwrap().eval(&point, &qi(0)).unwrap(), interpolated_slope(&samples));
        }

        #[test]
        fn mixed_partials_commute(p in small_poly(3, 4, 6), i in 0usize..3, j in 0usize..3) {
            prop_assert_eq!(p.diff(i).unwrap().diff(j).unwrap(), p.diff(j).unwrap().diff(i).unwrap());
        }

        #[test]
        fn eval_is_a_ring_morphism(a in small_poly(2, 3, 4), b in small_poly(2, 3, 4), x in -4i64..5, y in -4i64..5) {
            let pt = [qi(x), q(y, 3)];
            let direct = |p: &MultiPoly| p.eval(&pt, &qi(0)).unwrap();
            prop_assert_eq!(direct(&(&a * &b)), direct(&a) * direct(&b));
            prop_assert_eq!(direct(&(&a + &b)), direct(&a) + direct(&b));
        }

        #[test]
        fn composition_matches_evaluation(p in small_poly(2, 3, 4), s in small_poly(2, 2, 3), x in -3i64..4) {
            let subs = vec![s.clone(), MultiPoly::var(2, 0)];
            let comp = p.compose(&subs).unwrap();
            let pt = [qi(x), q(1, 2)];
            let inner = [s.eval(&pt, &qi(0)).unwrap(), qi(x)];
            prop_assert_eq!(comp.eval(&pt, &qi(0)).unwrap(), p.eval(&inner, &qi(0)).unwrap());
        }
    }

    #[test]
    fn tensor_then_diagonal_is_product() {
        let a = &z(2, 0) + &MultiPoly::constant(2, q(1, 2));
        let b = &z(2, 1) * &z(2, 0);
        assert_eq!(a.tensor(&b).diagonal().unwrap(), &a * &b);
    }
}
