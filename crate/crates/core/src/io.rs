//! JSON schemas for measures, counterexample metadata and potentials.
//!
//! Measure files:
//!
//! ```json
//! {
//!   "dim": 1,
//!   "c0": [[[0.0, 0.0]]],
//!   "c1": [[[0.0, 0.0]]],
//!   "atoms": [ { "t": 0.5, "F": [[[1.0, 0.0]]] } ],
//!   "tail": { "kind": "geometric", "ratio": 0.5, "scale": 0.25,
//!             "infinite_mass": true, "components": [...] } | null
//! }
//! ```
//!
//! Complex numbers are `[re, im]` pairs, matrices row major. The tail's
//! `scale / (1 - ratio)` is the certified weighted mass of everything
//! beyond the materialized atom list; `components` (optional) carry the
//! support information needed to certify real-axis queries. Counterexample
//! files add a `meta` block with the construction sequences.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counterexample::{CounterexampleMeasure, CounterexampleSpec, WeightsMeta};
use crate::herglotz::{
    HerglotzError, HerglotzFunction, MatrixMeasure, TailBound, TailComponent,
};
use crate::linalg::CMatrix;
use crate::sturm_liouville::{expr, Potential, SlError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error(transparent)]
    Measure(#[from] HerglotzError),
    #[error(transparent)]
    Potential(#[from] SlError),
}

type JsonMatrix = Vec<Vec<[f64; 2]>>;

fn matrix_to_json(m: &CMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn matrix_from_json(rows: &JsonMatrix, dim: usize) -> Result<CMatrix, IoError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(IoError::Schema(format!(
            "matrix is not {dim}x{dim} row-major"
        )));
    }
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

#[derive(Debug, Serialize, Deserialize)]
struct AtomJson {
    t: f64,
    #[serde(rename = "F")]
    weight: JsonMatrix,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum ComponentJson {
    Cluster {
        point: f64,
        lo: f64,
        hi: f64,
        mass: f64,
        second_moment_at_point: f64,
    },
    Band {
        lo: f64,
        hi: f64,
        mass: f64,
    },
    Far {
        min_abs: f64,
        weighted_mass: f64,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct TailJson {
    kind: String,
    ratio: f64,
    scale: f64,
    #[serde(default)]
    infinite_mass: bool,
    #[serde(default)]
    components: Vec<ComponentJson>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MeasureJson {
    dim: usize,
    c0: JsonMatrix,
    c1: JsonMatrix,
    atoms: Vec<AtomJson>,
    tail: Option<TailJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    meta: Option<MetaJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MetaJson {
    case: String,
    mu1: f64,
    /// Absent for the unbounded construction.
    mu2: Option<f64>,
    k_points: usize,
    j_satellites: usize,
    defect: usize,
    accumulation_points: Vec<f64>,
    satellites: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    anchors: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    s: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    u: Option<Vec<Vec<f64>>>,
    /// Bounded: per-cluster satellite weights; unbounded: the shared row.
    #[serde(skip_serializing_if = "Option::is_none")]
    f_bounded: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    f_unbounded: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    window_mass: Option<f64>,
}

fn tail_to_json(t: &TailBound) -> TailJson {
    // scale/(1 - ratio) encodes the beyond-list weighted mass; ratio 1/2 is
    // the canonical choice.
    TailJson {
        kind: "geometric".into(),
        ratio: 0.5,
        scale: t.weighted_mass * 0.5,
        infinite_mass: t.infinite_total_mass,
        components: t
            .components
            .iter()
            .map(|c| match *c {
                TailComponent::Cluster {
                    point,
                    lo,
                    hi,
                    mass,
                    second_moment_at_point,
                } => ComponentJson::Cluster {
                    point,
                    lo,
                    hi,
                    mass,
                    second_moment_at_point,
                },
                TailComponent::Band { lo, hi, mass } => ComponentJson::Band { lo, hi, mass },
                TailComponent::Far {
                    min_abs,
                    weighted_mass,
                } => ComponentJson::Far {
                    min_abs,
                    weighted_mass,
                },
            })
            .collect(),
    }
}

fn tail_from_json(t: &TailJson) -> Result<TailBound, IoError> {
    if t.kind != "geometric" {
        return Err(IoError::Schema(format!("unknown tail kind '{}'", t.kind)));
    }
    if !(t.ratio >= 0.0 && t.ratio < 1.0) || t.scale < 0.0 {
        return Err(IoError::Schema("tail needs 0 <= ratio < 1, scale >= 0".into()));
    }
    Ok(TailBound {
        weighted_mass: t.scale / (1.0 - t.ratio),
        infinite_total_mass: t.infinite_mass,
        components: t
            .components
            .iter()
            .map(|c| match *c {
                ComponentJson::Cluster {
                    point,
                    lo,
                    hi,
                    mass,
                    second_moment_at_point,
                } => TailComponent::Cluster {
                    point,
                    lo,
                    hi,
                    mass,
                    second_moment_at_point,
                },
                ComponentJson::Band { lo, hi, mass } => TailComponent::Band { lo, hi, mass },
                ComponentJson::Far {
                    min_abs,
                    weighted_mass,
                } => TailComponent::Far {
                    min_abs,
                    weighted_mass,
                },
            })
            .collect(),
    })
}

fn herglotz_to_json(phi: &HerglotzFunction, meta: Option<MetaJson>) -> MeasureJson {
    MeasureJson {
        dim: phi.dim(),
        c0: matrix_to_json(&phi.c0),
        c1: matrix_to_json(&phi.c1),
        atoms: phi
            .measure
            .atoms()
            .iter()
            .map(|a| AtomJson {
                t: a.t,
                weight: matrix_to_json(&a.weight),
            })
            .collect(),
        tail: phi.measure.tail().map(tail_to_json),
        meta,
    }
}

fn herglotz_from_json(doc: &MeasureJson) -> Result<HerglotzFunction, IoError> {
    let dim = doc.dim;
    if dim == 0 {
        return Err(IoError::Schema("dim must be positive".into()));
    }
    let c0 = matrix_from_json(&doc.c0, dim)?;
    let c1 = matrix_from_json(&doc.c1, dim)?;
    let atoms = doc
        .atoms
        .iter()
        .map(|a| Ok((a.t, matrix_from_json(&a.weight, dim)?)))
        .collect::<Result<Vec<_>, IoError>>()?;
    let tail = doc.tail.as_ref().map(tail_from_json).transpose()?;
    let measure = MatrixMeasure::new(dim, atoms, tail)?;
    Ok(HerglotzFunction::new(c0, c1, measure)?)
}

/// Serializes a Herglotz function (no meta block).
pub fn herglotz_to_string(phi: &HerglotzFunction) -> String {
    serde_json::to_string_pretty(&herglotz_to_json(phi, None)).expect("serializable")
}

/// Parses a measure file into a Herglotz function; Hermiticity and
/// positivity are checked on load.
pub fn herglotz_from_str(text: &str) -> Result<HerglotzFunction, IoError> {
    let doc: MeasureJson = serde_json::from_str(text)?;
    herglotz_from_json(&doc)
}

/// Serializes a built counterexample with its construction metadata.
pub fn counterexample_to_string(cm: &CounterexampleMeasure) -> String {
    let spec = &cm.spec;
    let meta = match &cm.weights {
        WeightsMeta::Bounded { anchors, s, u, f } => MetaJson {
            case: "bounded".into(),
            mu1: spec.mu1,
            mu2: Some(spec.mu2),
            k_points: spec.k_points,
            j_satellites: spec.j_satellites,
            defect: spec.defect,
            accumulation_points: cm.accumulation_points.clone(),
            satellites: cm.satellites.clone(),
            anchors: Some(anchors.clone()),
            s: Some(s.clone()),
            u: Some(u.clone()),
            f_bounded: Some(f.clone()),
            f_unbounded: None,
            window_mass: None,
        },
        WeightsMeta::Unbounded { f, window_mass } => MetaJson {
            case: "unbounded".into(),
            mu1: spec.mu1,
            mu2: None,
            k_points: spec.k_points,
            j_satellites: spec.j_satellites,
            defect: spec.defect,
            accumulation_points: cm.accumulation_points.clone(),
            satellites: cm.satellites.clone(),
            anchors: None,
            s: None,
            u: None,
            f_bounded: None,
            f_unbounded: Some(f.clone()),
            window_mass: Some(*window_mass),
        },
    };
    let phi = HerglotzFunction::pure(cm.measure.clone());
    serde_json::to_string_pretty(&herglotz_to_json(&phi, Some(meta))).expect("serializable")
}

/// Parses a counterexample file (measure plus required meta block).
pub fn counterexample_from_str(text: &str) -> Result<CounterexampleMeasure, IoError> {
    let doc: MeasureJson = serde_json::from_str(text)?;
    let phi = herglotz_from_json(&doc)?;
    let meta = doc
        .meta
        .clone()
        .ok_or_else(|| IoError::Schema("counterexample file needs a meta block".into()))?;
    let spec = CounterexampleSpec {
        mu1: meta.mu1,
        mu2: meta.mu2.unwrap_or(f64::INFINITY),
        k_points: meta.k_points,
        j_satellites: meta.j_satellites,
        defect: meta.defect,
    };
    let weights = match meta.case.as_str() {
        "bounded" => WeightsMeta::Bounded {
            anchors: meta
                .anchors
                .ok_or_else(|| IoError::Schema("bounded meta needs anchors".into()))?,
            s: meta.s.ok_or_else(|| IoError::Schema("bounded meta needs s".into()))?,
            u: meta.u.ok_or_else(|| IoError::Schema("bounded meta needs u".into()))?,
            f: meta
                .f_bounded
                .ok_or_else(|| IoError::Schema("bounded meta needs f_bounded".into()))?,
        },
        "unbounded" => WeightsMeta::Unbounded {
            f: meta
                .f_unbounded
                .ok_or_else(|| IoError::Schema("unbounded meta needs f_unbounded".into()))?,
            window_mass: meta
                .window_mass
                .ok_or_else(|| IoError::Schema("unbounded meta needs window_mass".into()))?,
        },
        other => return Err(IoError::Schema(format!("unknown case '{other}'"))),
    };
    Ok(CounterexampleMeasure {
        measure: phi.measure,
        accumulation_points: meta.accumulation_points,
        satellites: meta.satellites,
        weights,
        spec,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct PotentialJson {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    expr: Option<String>,
}

/// Potential file: `{ "kind": "sampled" | "expr", "samples": [[t, p]], "expr": "..." }`.
pub fn potential_to_string(p: &Potential) -> String {
    let doc = match p {
        Potential::Expr(e) => PotentialJson {
            kind: "expr".into(),
            samples: None,
            expr: Some(expr_to_text(e)),
        },
        Potential::Sampled { ts, ps } => PotentialJson {
            kind: "sampled".into(),
            samples: Some(ts.iter().zip(ps).map(|(&t, &p)| [t, p]).collect()),
            expr: None,
        },
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

pub fn potential_from_str(text: &str) -> Result<Potential, IoError> {
    let doc: PotentialJson = serde_json::from_str(text)?;
    match doc.kind.as_str() {
        "expr" => {
            let src = doc
                .expr
                .ok_or_else(|| IoError::Schema("expr potential needs 'expr'".into()))?;
            Ok(Potential::Expr(expr::parse(&src).map_err(SlError::from)?))
        }
        "sampled" => {
            let samples = doc
                .samples
                .ok_or_else(|| IoError::Schema("sampled potential needs 'samples'".into()))?;
            if samples.len() < 2 {
                return Err(IoError::Schema("need at least 2 samples".into()));
            }
            if samples.windows(2).any(|w| w[1][0] <= w[0][0]) {
                return Err(IoError::Schema("sample times must strictly increase".into()));
            }
            Ok(Potential::Sampled {
                ts: samples.iter().map(|s| s[0]).collect(),
                ps: samples.iter().map(|s| s[1]).collect(),
            })
        }
        other => Err(IoError::Schema(format!("unknown potential kind '{other}'"))),
    }
}

fn expr_to_text(e: &expr::Expr) -> String {
    use expr::Expr::*;
    match e {
        Num(v) => format!("{v}"),
        Var => "t".into(),
        Neg(a) => format!("-({})", expr_to_text(a)),
        Add(a, b) => format!("({} + {})", expr_to_text(a), expr_to_text(b)),
        Sub(a, b) => format!("({} - {})", expr_to_text(a), expr_to_text(b)),
        Mul(a, b) => format!("({} * {})", expr_to_text(a), expr_to_text(b)),
        Div(a, b) => format!("({} / {})", expr_to_text(a), expr_to_text(b)),
        Pow(a, b) => format!("({} ^ {})", expr_to_text(a), expr_to_text(b)),
        Exp(a) => format!("exp({})", expr_to_text(a)),
        Sin(a) => format!("sin({})", expr_to_text(a)),
        Cos(a) => format!("cos({})", expr_to_text(a)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counterexample::{build_bounded, CounterexampleSpec};

    #[test]
    fn measure_roundtrip_is_exact() {
        let atoms = vec![(0.1, 0.3), (1.0 / 3.0, 2.0), (7.25, 1e-7)];
        let phi = HerglotzFunction::pure(MatrixMeasure::scalar(atoms, None).unwrap());
        let text = herglotz_to_string(&phi);
        let back = herglotz_from_str(&text).unwrap();
        assert_eq!(back.dim(), phi.dim());
        assert_eq!(back.measure.len(), phi.measure.len());
        for (a, b) in back.measure.atoms().iter().zip(phi.measure.atoms()) {
            assert_eq!(a.t, b.t);
            assert_eq!(a.weight, b.weight);
        }
    }

    #[test]
    fn counterexample_roundtrip_preserves_meta() {
        let spec = CounterexampleSpec {
            mu1: 0.0,
            mu2: 1.0,
            k_points: 2,
            j_satellites: 3,
            defect: 1,
        };
        let cm = build_bounded(&spec).unwrap();
        let text = counterexample_to_string(&cm);
        let back = counterexample_from_str(&text).unwrap();
        assert_eq!(back.accumulation_points, cm.accumulation_points);
        assert_eq!(back.satellites, cm.satellites);
        assert_eq!(back.measure.len(), cm.measure.len());
        for (a, b) in back.measure.atoms().iter().zip(cm.measure.atoms()) {
            assert_eq!(a.t, b.t);
            assert_eq!(a.weight, b.weight);
        }
    }

    #[test]
    fn malformed_and_non_hermitian_files_are_rejected() {
        assert!(herglotz_from_str("{ not json").is_err());
        let bad = r#"{
            "dim": 1,
            "c0": [[[0.0, 1.0]]],
            "c1": [[[0.0, 0.0]]],
            "atoms": [{"t": 0.0, "F": [[[1.0, 0.0]]]}],
            "tail": null
        }"#;
        assert!(matches!(
            herglotz_from_str(bad),
            Err(IoError::Measure(HerglotzError::C0NotHermitian))
        ));
    }

    #[test]
    fn potential_roundtrip() {
        let p = Potential::parse("t^2 - cos(t)").unwrap();
        let text = potential_to_string(&p);
        let back = potential_from_str(&text).unwrap();
        for t in [0.0, 0.3, 2.7] {
            assert_eq!(p.eval(t), back.eval(t));
        }
        let p = Potential::Sampled {
            ts: vec![0.0, 1.0],
            ps: vec![1.0, 2.0],
        };
        let text = potential_to_string(&p);
        let back = potential_from_str(&text).unwrap();
        assert_eq!(back.eval(0.5), 1.5);
    }
}
