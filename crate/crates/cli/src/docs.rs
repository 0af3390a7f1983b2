//! Input and output documents.

use std::path::Path;
use std::str::FromStr;

use corrpress::{
    Block, Error, FiniteCorrespondence, IntervalCorrespondence, PairMeasure, Piece,
    PiecewiseLinearMap, Potential, SolverConfig, StateMeasure, TransitionKernel,
};
use num_rational::BigRational;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Documents whose mass is this close to 1 are rescaled on reading, so that
/// reports printed with 12 significant digits read back.
const READ_MASS_SLACK: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Invalid { path: String, source: Error },
    #[error("{0}")]
    Usage(String),
}

/// A file read once, with its digest.
pub struct Loaded {
    pub path: String,
    pub bytes: Vec<u8>,
}

impl Loaded {
    pub fn read(path: &Path) -> Result<Self, InputError> {
        let bytes = std::fs::read(path).map_err(|source| InputError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Loaded {
            path: path.display().to_string(),
            bytes,
        })
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(&self.bytes))
    }

    pub fn parse<T: DeserializeOwned>(&self) -> Result<T, InputError> {
        serde_json::from_slice(&self.bytes).map_err(|source| InputError::Parse {
            path: self.path.clone(),
            source,
        })
    }

    pub fn invalid(&self, source: Error) -> InputError {
        InputError::Invalid {
            path: self.path.clone(),
            source,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationDoc {
    pub n_states: usize,
    pub edges: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl RelationDoc {
    pub fn build(&self) -> corrpress::Result<FiniteCorrespondence> {
        let t = corrpress::validate_correspondence(self.n_states, &self.edges)?;
        match &self.labels {
            Some(l) => t.with_labels(l.clone()),
            None => Ok(t),
        }
    }

    pub fn of(t: &FiniteCorrespondence) -> Self {
        RelationDoc {
            n_states: t.n_states(),
            edges: t.edges().to_vec(),
            labels: t.labels().map(<[String]>::to_vec),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialDoc {
    pub edges: Vec<(usize, usize, f64)>,
}

impl PotentialDoc {
    pub fn of(t: &FiniteCorrespondence, phi: &Potential) -> Self {
        PotentialDoc {
            edges: t
                .edges()
                .iter()
                .zip(phi.values())
                .map(|(&(i, j), &v)| (i, j, v))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureDoc {
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelDoc {
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl KernelDoc {
    pub fn of(q: &TransitionKernel) -> Self {
        KernelDoc {
            rows: (0..q.n_states()).map(|i| q.row(i).collect()).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairDoc {
    pub edges: Vec<(usize, usize, f64)>,
}

impl PairDoc {
    pub fn of(t: &FiniteCorrespondence, nu: &PairMeasure) -> Self {
        PairDoc {
            edges: t
                .edges()
                .iter()
                .zip(nu.weights())
                .map(|(&(i, j), &w)| (i, j, w))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceDoc {
    pub slope: String,
    pub intercept: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDoc {
    pub breakpoints: Vec<String>,
    pub pieces: Vec<PieceDoc>,
}

/// An interval correspondence: either one map or several branches.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum IntervalDoc {
    Branches { branches: Vec<MapDoc> },
    Map(MapDoc),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum BlockDoc {
    States(Vec<usize>),
    Full(Block),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlocksDoc {
    pub blocks: Vec<BlockDoc>,
}

impl BlocksDoc {
    pub fn build(self) -> Vec<Block> {
        self.blocks
            .into_iter()
            .map(|b| match b {
                BlockDoc::States(s) => Block::new(s),
                BlockDoc::Full(b) => b,
            })
            .collect()
    }
}

pub fn rational(s: &str) -> corrpress::Result<BigRational> {
    BigRational::from_str(s.trim())
        .map_err(|_| Error::InvalidInput(format!("{s:?} is not a rational \"p/q\"")))
}

impl MapDoc {
    pub fn build(&self) -> corrpress::Result<PiecewiseLinearMap> {
        let breakpoints = self
            .breakpoints
            .iter()
            .map(|s| rational(s))
            .collect::<corrpress::Result<_>>()?;
        let pieces = self
            .pieces
            .iter()
            .map(|p| Ok(Piece::new(rational(&p.slope)?, rational(&p.intercept)?)))
            .collect::<corrpress::Result<_>>()?;
        PiecewiseLinearMap::new(breakpoints, pieces)
    }
}

impl IntervalDoc {
    pub fn branches(&self) -> Vec<&MapDoc> {
        match self {
            IntervalDoc::Branches { branches } => branches.iter().collect(),
            IntervalDoc::Map(m) => vec![m],
        }
    }

    pub fn build(&self) -> corrpress::Result<IntervalCorrespondence> {
        IntervalCorrespondence::new(
            self.branches()
                .into_iter()
                .map(MapDoc::build)
                .collect::<corrpress::Result<_>>()?,
        )
    }
}

fn rescale(weights: &mut [f64], what: &str) -> corrpress::Result<()> {
    let total: f64 = weights.iter().sum();
    if total.is_finite() && (total - 1.0).abs() <= READ_MASS_SLACK && total > 0.0 {
        for w in weights.iter_mut() {
            *w /= total;
        }
        Ok(())
    } else {
        Err(Error::NotProbability(format!("{what} has total mass {total}")))
    }
}

pub fn measure(doc: MeasureDoc, n: usize) -> corrpress::Result<StateMeasure> {
    if doc.weights.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            found: doc.weights.len(),
        });
    }
    let mut w = doc.weights;
    if let Some(x) = w.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::NotProbability(format!("state measure has entry {x}")));
    }
    rescale(&mut w, "state measure")?;
    StateMeasure::new(w)
}

pub fn kernel(doc: KernelDoc, t: &FiniteCorrespondence) -> corrpress::Result<TransitionKernel> {
    let mut rows = doc.rows;
    for (i, row) in rows.iter_mut().enumerate() {
        let mut p: Vec<f64> = row.iter().map(|e| e.1).collect();
        if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::NotProbability(format!("row {i} has a negative entry")));
        }
        rescale(&mut p, &format!("row {i}"))?;
        for (e, x) in row.iter_mut().zip(p) {
            e.1 = x;
        }
    }
    TransitionKernel::from_rows(t, &rows)
}

pub fn pair(doc: PairDoc, t: &FiniteCorrespondence) -> corrpress::Result<PairMeasure> {
    let mut w: Vec<f64> = doc.edges.iter().map(|e| e.2).collect();
    if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::NotProbability("pair measure has a negative entry".into()));
    }
    rescale(&mut w, "pair measure")?;
    let triples: Vec<(usize, usize, f64)> =
        doc.edges.iter().zip(w).map(|(e, x)| (e.0, e.1, x)).collect();
    PairMeasure::from_triples(t, &triples)
}

pub fn config(doc: Option<SolverConfig>) -> corrpress::Result<SolverConfig> {
    let c = doc.unwrap_or_default();
    c.check()?;
    Ok(c)
}
