//! JSON input documents and report encodings.
//!
//! Rationals are read from JSON integers or `"p/q"` strings and always written
//! as strings. Matrices are row-major nested arrays.

use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exact::{format_rational, parse_poly, parse_rational, Matrix, Monomial, MultiPoly, Rational, Vector};
use crate::lambda::{BStruct, ShapeFamily};
use crate::sigma::{build_surface, SurfaceSpec};
use crate::symplectic::{standard_form, AffineSympElement, SympSpace};

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum RawQ {
    Int(i64),
    Text(String),
}

/// A rational read from JSON.
#[derive(Clone, Debug, Deserialize)]
#[serde(try_from = "RawQ")]
pub struct Q(pub Rational);

impl TryFrom<RawQ> for Q {
    type Error = String;

    fn try_from(raw: RawQ) -> std::result::Result<Self, String> {
        match raw {
            RawQ::Int(v) => Ok(Q(Rational::from_integer(v.into()))),
            RawQ::Text(s) => parse_rational(&s).map(Q).map_err(|e| e.to_string()),
        }
    }
}

type RawMatrix = Vec<Vec<Q>>;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDoc {
    pub n: usize,
    pub p: usize,
    pub omega0: Option<RawMatrix>,
    #[serde(rename = "omegaN0")]
    pub omega_n: Option<RawMatrix>,
    pub a_basis: Option<Vec<Vec<Q>>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorDoc {
    #[serde(rename = "A")]
    pub a_mat: RawMatrix,
    pub a: Vec<Q>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitRequest {
    pub x: Vec<Q>,
    pub t: Q,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum PolyDoc {
    Text(String),
    Terms(Vec<TermDoc>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub exps: Vec<u32>,
    #[serde(default)]
    pub nu: u32,
    pub coeff: Q,
}

/// One input file: a space plus any of a shape family, surface generators
/// and orbit requests.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDoc {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    pub space: SpaceDoc,
    #[serde(rename = "C")]
    pub c: Option<Vec<RawMatrix>>,
    #[serde(rename = "B_struct")]
    pub b_struct: Option<Vec<Vec<Vec<Q>>>>,
    #[serde(rename = "B_ops")]
    pub b_ops: Option<Vec<RawMatrix>>,
    pub generators: Option<Vec<GeneratorDoc>>,
    #[serde(default)]
    pub points: Vec<OrbitRequest>,
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{field}: {msg}"))
}

fn vector(field: &str, raw: &[Q], len: usize) -> Result<Vector> {
    if raw.len() != len {
        return Err(field_err(field, format!("expected {len} entries, found {}", raw.len())));
    }
    Ok(raw.iter().map(|q| q.0.clone()).collect())
}

fn matrix(field: &str, raw: &RawMatrix, dim: usize) -> Result<Matrix> {
    if raw.len() != dim {
        return Err(field_err(field, format!("expected {dim} rows, found {}", raw.len())));
    }
    let rows = raw
        .iter()
        .enumerate()
        .map(|(r, row)| vector(&format!("{field}[{r}]"), row, dim))
        .collect::<Result<Vec<_>>>()?;
    Matrix::from_rows(rows)
}

fn with_field<T>(field: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| field_err(field, e))
}

impl InputDoc {
    /// Parses the document; syntax and schema errors carry line and column.
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn space(&self) -> Result<SympSpace> {
        let s = &self.space;
        let omega0 = match &s.omega0 {
            Some(m) => matrix("space.omega0", m, 2 * s.n)?,
            None => standard_form(s.n),
        };
        let omega_n = match &s.omega_n {
            Some(m) => matrix("space.omegaN0", m, 2 * s.p)?,
            None => standard_form(s.p),
        };
        let dim = 2 * (s.n + s.p);
        let a_basis = match &s.a_basis {
            Some(vs) => Some(
                vs.iter()
                    .enumerate()
                    .map(|(k, v)| vector(&format!("space.a_basis[{k}]"), v, dim))
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };
        with_field("space", SympSpace::new(s.n, s.p, omega0, omega_n, a_basis))
    }

    /// The shape family, from `C` or else from block-diagonal generators with
    /// `a_i = f_i`. `None` when the document carries neither.
    pub fn family(&self) -> Result<Option<ShapeFamily>> {
        let space = self.space()?;
        let (d, np) = (space.tangent_dim(), space.normal_dim());
        let Some(c_raw) = &self.c else {
            return self.family_from_generators(&space);
        };
        if c_raw.len() != np {
            return Err(field_err("C", format!("expected {np} matrices, found {}", c_raw.len())));
        }
        let c = c_raw
            .iter()
            .enumerate()
            .map(|(i, m)| matrix(&format!("C[{i}]"), m, d))
            .collect::<Result<Vec<_>>>()?;
        let b_struct = match &self.b_struct {
            Some(b) => Some(b_struct(b, np)?),
            None => None,
        };
        let b_ops = match &self.b_ops {
            Some(ops) => {
                if ops.len() != np {
                    return Err(field_err("B_ops", format!("expected {np} matrices, found {}", ops.len())));
                }
                Some(
                    ops.iter()
                        .enumerate()
                        .map(|(i, m)| matrix(&format!("B_ops[{i}]"), m, np))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            None => None,
        };
        with_field("C", ShapeFamily::new(space, c, b_struct, b_ops)).map(Some)
    }

    fn generators(&self, space: &SympSpace) -> Result<Option<Vec<AffineSympElement>>> {
        let Some(gens) = &self.generators else {
            return Ok(None);
        };
        let dim = space.dim();
        gens.iter()
            .enumerate()
            .map(|(i, g)| {
                let mat = matrix(&format!("generators[{i}].A"), &g.a_mat, dim)?;
                let vec = vector(&format!("generators[{i}].a"), &g.a, dim)?;
                with_field(&format!("generators[{i}]"), AffineSympElement::new(space, mat, vec))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn family_from_generators(&self, space: &SympSpace) -> Result<Option<ShapeFamily>> {
        let Some(gens) = self.generators(space)? else {
            return Ok(None);
        };
        let (d, np) = (space.tangent_dim(), space.normal_dim());
        if gens.len() != np {
            return Ok(None);
        }
        let block_form = gens.iter().enumerate().all(|(i, g)| {
            g.vec == space.f(i) && g.mat.block(0, d, d, np).is_zero() && g.mat.block(d, 0, np, d).is_zero()
        });
        if !block_form {
            return Ok(None);
        }
        let c = gens.iter().map(|g| g.mat.block(0, 0, d, d)).collect();
        let b = gens.iter().map(|g| g.mat.block(d, d, np, np)).collect();
        with_field("generators", ShapeFamily::new(space.clone(), c, None, Some(b))).map(Some)
    }

    /// The surface of the generators, or of the family when none are given.
    pub fn surface(&self) -> Result<SurfaceSpec> {
        let space = self.space()?;
        if let Some(gens) = self.generators(&space)? {
            return build_surface(&space, gens);
        }
        match self.family()? {
            Some(fam) => SurfaceSpec::from_family(&fam),
            None => Err(field_err("input", "needs either `C` or `generators`")),
        }
    }

    pub fn orbit_requests(&self, tangent_dim: usize) -> Result<Vec<(Vector, Rational)>> {
        self.points
            .iter()
            .enumerate()
            .map(|(k, p)| Ok((vector(&format!("points[{k}].x"), &p.x, tangent_dim)?, p.t.0.clone())))
            .collect()
    }
}

fn b_struct(raw: &[Vec<Vec<Q>>], np: usize) -> Result<BStruct> {
    if raw.len() != np {
        return Err(field_err("B_struct", format!("expected {np} slices, found {}", raw.len())));
    }
    raw.iter()
        .enumerate()
        .map(|(i, slice)| {
            if slice.len() != np {
                return Err(field_err(&format!("B_struct[{i}]"), format!("expected {np} rows, found {}", slice.len())));
            }
            slice
                .iter()
                .enumerate()
                .map(|(j, row)| vector(&format!("B_struct[{i}][{j}]"), row, np))
                .collect()
        })
        .collect()
}

pub fn parse_poly_doc(field: &str, doc: &PolyDoc, num_vars: usize) -> Result<MultiPoly> {
    match doc {
        PolyDoc::Text(s) => with_field(field, parse_poly(s, num_vars)),
        PolyDoc::Terms(terms) => with_field(
            field,
            MultiPoly::from_terms(
                num_vars,
                terms.iter().map(|t| {
                    (
                        Monomial {
                            exps: t.exps.clone(),
                            nu: t.nu,
                        },
                        t.coeff.0.clone(),
                    )
                }),
            ),
        ),
    }
}

/// A polynomial argument given either as text or as a JSON term list.
pub fn parse_poly_arg(field: &str, src: &str, num_vars: usize) -> Result<MultiPoly> {
    let doc = if src.trim_start().starts_with('[') {
        serde_json::from_str(src).map_err(|e| field_err(field, e))?
    } else {
        PolyDoc::Text(src.to_string())
    };
    parse_poly_doc(field, &doc, num_vars)
}

pub fn rat(r: &Rational) -> Value {
    Value::String(format_rational(r))
}

pub fn vec_json(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(rat).collect())
}

pub fn mat_json(m: &Matrix) -> Value {
    Value::Array((0..m.rows()).map(|r| vec_json(m.row(r))).collect())
}

pub fn b_struct_json(b: &BStruct) -> Value {
    Value::Array(
        b.iter()
            .map(|s| Value::Array(s.iter().map(|row| vec_json(row)).collect()))
            .collect(),
    )
}

/// Term list `[{exps, nu, coeff}]` in monomial order.
pub fn poly_json(p: &MultiPoly) -> Value {
    Value::Array(
        p.terms()
            .map(|(m, c)| json!({"exps": m.exps, "nu": m.nu, "coeff": rat(c)}))
            .collect(),
    )
}

/// Input document for a family: `space`, `C` and, when present, `B_ops`.
pub fn family_json(fam: &ShapeFamily) -> Value {
    let s = fam.space();
    let mut doc = json!({
        "space": {
            "n": s.n(),
            "p": s.p(),
            "omega0": mat_json(s.omega0()),
            "omegaN0": mat_json(s.omega_n()),
        },
        "C": fam.c().iter().map(mat_json).collect::<Vec<_>>(),
    });
    if let Some(ops) = fam.b_ops() {
        doc["B_ops"] = Value::Array(ops.iter().map(mat_json).collect());
    }
    doc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{q, qi};

    const PARABOLA: &str = r#"{
        "space": {"n": 1, "p": 1},
        "C": [[[0, 1], [0, 0]], [[0, 0], [0, 0]]],
        "B_struct": [[[0, 0], [0, 0]], [[0, 0], [0, 0]]]
    }"#;

    #[test]
    fn reads_a_family() {
        let doc = InputDoc::parse(PARABOLA).unwrap();
        let fam = doc.family().unwrap().unwrap();
        assert_eq!(fam.c()[0], Matrix::from_i64(&[&[0, 1], &[0, 0]]));
        assert!(doc.surface().unwrap().membership(&vec![qi(0); 4]).unwrap());
    }

    #[test]
    fn rationals_as_strings() {
        let doc = InputDoc::parse(
            r#"{"space": {"n": 1, "p": 1}, "points": [{"x": ["1/2", -3], "t": "-2/6"}]}"#,
        )
        .unwrap();
        let reqs = doc.orbit_requests(2).unwrap();
        assert_eq!(reqs[0].0, vec![q(1, 2), qi(-3)]);
        assert_eq!(reqs[0].1, q(-1, 3));
        assert!(doc.family().unwrap().is_none());
    }

    #[test]
    fn diagnostics_name_the_field() {
        let bad_rows = r#"{"space": {"n": 1, "p": 1}, "C": [[[0, 1]], [[0, 0], [0, 0]]]}"#;
        let e = InputDoc::parse(bad_rows).unwrap().family().unwrap_err().to_string();
        assert!(e.contains("C[0]") && e.contains("2 rows"), "{e}");
        let e = InputDoc::parse(r#"{"space": {"n": 1, "p": 1}, "Cc": []}"#).unwrap_err().to_string();
        assert!(e.contains("unknown field") && e.contains("line 1"), "{e}");
        let e = InputDoc::parse("{\"space\": {\"n\": 1,\n \"p\": \"x\"}}").unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
        assert!(InputDoc::parse(r#"{"space": {"n": 1, "p": 1}, "points": [{"x": ["1/0"], "t": 0}]}"#).is_err());
    }

    #[test]
    fn block_generators_give_the_family() {
        let doc = InputDoc::parse(
            r#"{"space": {"n": 1, "p": 1}, "generators": [
                {"A": [[0,1,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]], "a": [0,0,1,0]},
                {"A": [[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]], "a": [0,0,0,1]}]}"#,
        )
        .unwrap();
        let fam = doc.family().unwrap().unwrap();
        assert_eq!(fam.c()[0], Matrix::from_i64(&[&[0, 1], &[0, 0]]));
        assert_eq!(doc.surface().unwrap().gram(), &standard_form(1));
    }

    #[test]
    fn family_documents_round_trip() {
        for fam in [crate::generate::parabola_family(), crate::generate::r8_family()] {
            let doc = InputDoc::parse(&family_json(&fam).to_string()).unwrap();
            let back = doc.family().unwrap().unwrap();
            assert_eq!(back.c(), fam.c());
            assert_eq!(back.b_ops(), fam.b_ops());
        }
    }

    #[test]
    fn polynomial_arguments() {
        let a = parse_poly_arg("f", "z1^2 - 1/2*z3", 4).unwrap();
        let b = parse_poly_arg("f", r#"[{"exps": [2,0,0,0], "coeff": 1}, {"exps": [0,0,1,0], "coeff": "-1/2"}]"#, 4)
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(parse_poly_doc("f", &serde_json::from_value(poly_json(&a)).unwrap(), 4).unwrap(), a);
        assert!(parse_poly_arg("f", "z9", 4).is_err());
    }
}
