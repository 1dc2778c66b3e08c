//! JSON documents for specs, points, maps and generator words.
//!
//! Complex numbers are `[re, im]` pairs and matrices are lists of rows.
//! Points follow the block layout of the spec file they go with. Maps and
//! words act on the normalized layout, where every block with exponent 1 has
//! been merged into block 0.

use std::fs;
use std::path::Path;

use fbh_core::{Automorphism, DomainPoint, DomainSpec, Generator, GeneratorWord, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON in {what}: {source}")]
    Json {
        what: String,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

impl From<fbh_core::Error> for IoError {
    fn from(e: fbh_core::Error) -> Self {
        IoError::Invalid(e.to_string())
    }
}

pub type Complex = [f64; 2];

pub fn to_pair(c: C64) -> Complex {
    [c.re, c.im]
}

pub fn from_pair(c: &Complex) -> C64 {
    C64::new(c[0], c[1])
}

fn pairs(v: &[C64]) -> Vec<Complex> {
    v.iter().copied().map(to_pair).collect()
}

fn unpairs(v: &[Complex]) -> Vec<C64> {
    v.iter().map(from_pair).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub n0: usize,
    pub n: Vec<usize>,
    pub p: Vec<f64>,
    pub mu: f64,
}

impl SpecFile {
    pub fn to_spec(&self) -> Result<DomainSpec, IoError> {
        Ok(DomainSpec::new(self.n0, &self.n, &self.p, self.mu)?)
    }

    /// Hex SHA-256 of the canonical serialization, so whitespace and key order
    /// in the source file do not matter.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("spec serializes");
        let hash = Sha256::digest(canonical.as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointFile {
    pub z: Vec<Complex>,
    pub w: Vec<Vec<Complex>>,
}

impl PointFile {
    pub fn to_point(&self, spec: &DomainSpec) -> Result<DomainPoint, IoError> {
        Ok(spec.point_from_input_blocks(unpairs(&self.z), &self.w.iter().map(|b| unpairs(b)).collect::<Vec<_>>())?)
    }

    /// Splits the normalized blocks of `pt` back into the input layout.
    pub fn from_point(spec: &DomainSpec, pt: &DomainPoint) -> Self {
        let mut dims = vec![0; spec.input_placement().len()];
        let mut sizes = spec.input_placement().iter().map(|pl| (pl.block, pl.offset)).collect::<Vec<_>>();
        // an input block ends where the next one in the same normalized block starts
        for (i, &(block, offset)) in sizes.iter().enumerate() {
            let next = sizes
                .iter()
                .filter(|&&(b, o)| b == block && o > offset)
                .map(|&(_, o)| o)
                .min()
                .unwrap_or(spec.block_dims()[block]);
            dims[i] = next - offset;
        }
        let w = sizes
            .drain(..)
            .zip(dims)
            .map(|((block, offset), d)| pairs(&pt.w[block][offset..offset + d]))
            .collect();
        PointFile { z: pairs(&pt.z), w }
    }
}

/// A pair of points, as read by `kernel-eval` and `verify-transformation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointPair {
    pub p: PointFile,
    pub q: PointFile,
}

fn matrix_rows(m: &DMatrix<C64>) -> Vec<Vec<Complex>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| to_pair(m[(i, j)])).collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<Complex>]) -> Result<DMatrix<C64>, IoError> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(IoError::Invalid("matrix rows have different lengths".into()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| from_pair(&rows[i][j])))
}

/// Normal form `phi_a . (block map) . (base unitary)` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomorphismFile {
    pub a: Vec<Complex>,
    pub linear: Vec<Vec<Complex>>,
    pub sigma: Vec<usize>,
    pub gammas: Vec<Vec<Vec<Complex>>>,
}

impl AutomorphismFile {
    pub fn from_automorphism(phi: &Automorphism) -> Self {
        Self {
            a: pairs(&phi.a),
            linear: matrix_rows(&phi.linear),
            sigma: phi.sigma.clone(),
            gammas: phi.gammas.iter().map(matrix_rows).collect(),
        }
    }

    pub fn to_automorphism(&self, spec: &DomainSpec) -> Result<Automorphism, IoError> {
        let phi = Automorphism {
            a: unpairs(&self.a),
            linear: matrix_from_rows(&self.linear)?,
            sigma: self.sigma.clone(),
            gammas: self.gammas.iter().map(|g| matrix_from_rows(g)).collect::<Result<_, _>>()?,
        };
        phi.validate(spec, 1e-9)?;
        Ok(phi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorFile {
    Linear { matrix: Vec<Vec<Complex>> },
    Block { sigma: Vec<usize>, gammas: Vec<Vec<Vec<Complex>>> },
    Translation { a: Vec<Complex> },
}

/// Generators applied first to last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordFile {
    pub word: Vec<GeneratorFile>,
}

impl WordFile {
    pub fn to_word(&self, spec: &DomainSpec) -> Result<GeneratorWord, IoError> {
        let mut out = Vec::with_capacity(self.word.len());
        for g in &self.word {
            let gen = match g {
                GeneratorFile::Linear { matrix } => Generator::Linear(matrix_from_rows(matrix)?),
                GeneratorFile::Block { sigma, gammas } => Generator::Block {
                    sigma: sigma.clone(),
                    gammas: gammas.iter().map(|m| matrix_from_rows(m)).collect::<Result<_, _>>()?,
                },
                GeneratorFile::Translation { a } => Generator::Translation(unpairs(a)),
            };
            Automorphism::from_generator(spec, &gen).validate(spec, 1e-9)?;
            out.push(gen);
        }
        Ok(GeneratorWord(out))
    }

    pub fn from_word(word: &GeneratorWord) -> Self {
        let word = word
            .0
            .iter()
            .map(|g| match g {
                Generator::Linear(m) => GeneratorFile::Linear { matrix: matrix_rows(m) },
                Generator::Block { sigma, gammas } => GeneratorFile::Block {
                    sigma: sigma.clone(),
                    gammas: gammas.iter().map(matrix_rows).collect(),
                },
                Generator::Translation(a) => GeneratorFile::Translation { a: pairs(a) },
            })
            .collect();
        WordFile { word }
    }
}

/// Either a single normal form or a word, as accepted by `--phi`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum MapFile {
    Word(WordFile),
    Normal(AutomorphismFile),
}

impl MapFile {
    pub fn to_automorphism(&self, spec: &DomainSpec) -> Result<Automorphism, IoError> {
        match self {
            MapFile::Word(w) => Ok(w.to_word(spec)?.normal_form(spec)?),
            MapFile::Normal(a) => a.to_automorphism(spec),
        }
    }
}

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|source| IoError::Json {
        what: what.to_string(),
        source,
    })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_digest_ignores_formatting() {
        let a: SpecFile = parse(r#"{"n0":1,"n":[1,2],"p":[2,0.5],"mu":1}"#, "a").unwrap();
        let b: SpecFile = parse("{ \"mu\": 1.0,\n \"p\": [2.0, 0.5], \"n\": [1, 2], \"n0\": 1 }", "b").unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
        let c: SpecFile = parse(r#"{"n0":1,"n":[1,2],"p":[2,0.5],"mu":2}"#, "c").unwrap();
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse::<SpecFile>(r#"{"n0":1,"n":[1],"p":[2],"mu":1,"x":0}"#, "s").is_err());
    }

    #[test]
    fn points_keep_the_input_layout() {
        let file = SpecFile {
            n0: 1,
            n: vec![1, 2, 1],
            p: vec![1.0, 3.0, 1.0],
            mu: 1.0,
        };
        let spec = file.to_spec().unwrap();
        let pf: PointFile = parse(r#"{"z":[[0.1,0]],"w":[[[0.1,0]],[[0,0.1],[0.2,0]],[[0,0.3]]]}"#, "pt").unwrap();
        let pt = pf.to_point(&spec).unwrap();
        assert_eq!(pt.w[0].len(), 2);
        assert_eq!(pt.w[0][1], C64::new(0.0, 0.3));
        assert_eq!(PointFile::from_point(&spec, &pt), pf);
    }

    #[test]
    fn words_parse_by_tag() {
        let spec = DomainSpec::new(1, &[1], &[2.0], 1.0).unwrap();
        let text = r#"{"word":[{"type":"translation","a":[[0.5,0]]},{"type":"linear","matrix":[[[0,1]]]}]}"#;
        let word: WordFile = parse(text, "w").unwrap();
        let w = word.to_word(&spec).unwrap();
        assert_eq!(w.0.len(), 2);
        assert_eq!(WordFile::from_word(&w), word);
        let m: MapFile = parse(text, "m").unwrap();
        assert!(matches!(m, MapFile::Word(_)));
        let bad = r#"{"word":[{"type":"linear","matrix":[[[2,0]]]}]}"#;
        assert!(parse::<WordFile>(bad, "w").unwrap().to_word(&spec).is_err());
    }
}
