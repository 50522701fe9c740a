use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::BufRead;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Offset applied to a row that is bitwise identical to an earlier row
/// after initialization.
pub const COINCIDENT_JITTER: f64 = 1e-6;

/// Dense row-major `rows x dim` matrix, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    data: Vec<f64>,
    rows: usize,
    dim: usize,
}

impl EmbeddingMatrix {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        EmbeddingMatrix {
            data: vec![0.0; rows * dim],
            rows,
            dim,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            crate::error::check_dims(dim, row.len())?;
            data.extend_from_slice(row);
        }
        Ok(EmbeddingMatrix {
            data,
            rows: rows.len(),
            dim,
        })
    }

    pub fn from_flat(rows: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        crate::error::check_dims(rows * dim, data.len())?;
        Ok(EmbeddingMatrix { data, rows, dim })
    }

    /// Uniform entries on `[-1, 1]` from a seeded ChaCha8 stream.
    ///
    /// Rows that come out bitwise identical to an earlier row get
    /// [`COINCIDENT_JITTER`] added to component `row % dim`; coincident nodes
    /// exert no force on each other and would otherwise never separate.
    pub fn random(node_count: usize, dim: usize, seed: u64) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::invalid("node count must be at least 1"));
        }
        if dim < 2 {
            return Err(Error::invalid(format!(
                "embedding dimension must be at least 2, got {dim}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Uniform::new_inclusive(-1.0, 1.0);
        let data = (0..node_count * dim)
            .map(|_| dist.sample(&mut rng))
            .collect();
        let mut u = EmbeddingMatrix {
            data,
            rows: node_count,
            dim,
        };
        u.separate_coincident_rows();
        Ok(u)
    }

    fn separate_coincident_rows(&mut self) {
        let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(self.rows);
        for k in 0..self.rows {
            loop {
                let key: Vec<u64> = self.row(k).iter().map(|v| v.to_bits()).collect();
                if seen.insert(key) {
                    break;
                }
                let m = k % self.dim;
                self.row_mut(k)[m] += COINCIDENT_JITTER;
            }
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.row(a)
            .iter()
            .zip(self.row(b))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// Text form: a `"rows dim"` header, then `"id v1 ... vn"` per row with
    /// nine significant digits.
    pub fn to_text(&self, names: &[String]) -> Result<String> {
        crate::error::check_dims(self.rows, names.len())?;
        let mut out = String::with_capacity(self.rows * (self.dim * 16 + 8));
        writeln!(out, "{} {}", self.rows, self.dim).unwrap();
        for (k, name) in names.iter().enumerate() {
            out.push_str(name);
            for v in self.row(k) {
                write!(out, " {v:.8e}").unwrap();
            }
            out.push('\n');
        }
        Ok(out)
    }
}

/// Embedding file contents: row identifiers in file order plus the matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedEmbedding {
    pub names: Vec<String>,
    pub matrix: EmbeddingMatrix,
}

impl NamedEmbedding {
    /// Reorders rows to the graph's dense indexing. Every graph node must be
    /// present.
    pub fn aligned_to(&self, graph: &Graph) -> Result<EmbeddingMatrix> {
        let mut position = HashMap::with_capacity(self.names.len());
        for (i, name) in self.names.iter().enumerate() {
            position.insert(name.as_str(), i);
        }
        let dim = self.matrix.dim();
        let mut out = EmbeddingMatrix::zeros(graph.node_count(), dim);
        for k in 0..graph.node_count() {
            let name = graph.node_name(k);
            let &i = position
                .get(name)
                .ok_or_else(|| Error::UnknownNode(name.to_owned()))?;
            out.row_mut(k).copy_from_slice(self.matrix.row(i));
        }
        Ok(out)
    }
}

pub fn parse_embedding<R: BufRead>(reader: R) -> Result<NamedEmbedding> {
    let mut lines = reader.lines().enumerate();
    let (rows, dim) = loop {
        let Some((i, line)) = lines.next() else {
            return Err(Error::parse(1, "missing `rows dim` header"));
        };
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let header: Vec<&str> = line.split_whitespace().collect();
        let parsed = match header.as_slice() {
            [r, d] => r.parse::<usize>().ok().zip(d.parse::<usize>().ok()),
            _ => None,
        };
        break parsed.ok_or_else(|| Error::parse(i + 1, "expected `rows dim` header"))?;
    };

    let mut names = Vec::with_capacity(rows);
    let mut data = Vec::with_capacity(rows * dim);
    for (i, line) in lines {
        let line = line?;
        let mut tokens = line.split_whitespace();
        let Some(name) = tokens.next() else { continue };
        let values: Vec<f64> = tokens
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(i + 1, format!("invalid value: {e}")))?;
        if values.len() != dim {
            return Err(Error::parse(
                i + 1,
                format!("expected {dim} values, found {}", values.len()),
            ));
        }
        names.push(name.to_owned());
        data.extend(values);
    }
    if names.len() != rows {
        return Err(Error::parse(
            names.len() + 1,
            format!("header declares {rows} rows, found {}", names.len()),
        ));
    }
    Ok(NamedEmbedding {
        names,
        matrix: EmbeddingMatrix::from_flat(rows, dim, data)?,
    })
}
