//! JSON document formats for channel sets and solutions.
//!
//! Complex matrices are stored row-major as `[re, im]` pairs. Parsing uses
//! serde_json's round-trip float mode, so documents reload bit-exactly.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::alignment::Solution;
use crate::channel::{ChannelSet, NetworkConfig};
use crate::error::{Error, Result};
use crate::numerics::{CMat, HermitianMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<&CMat> for MatrixJson {
    fn from(m: &CMat) -> Self {
        let mut entries = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        MatrixJson { rows: m.nrows(), cols: m.ncols(), entries }
    }
}

impl TryFrom<&MatrixJson> for CMat {
    type Error = Error;

    fn try_from(m: &MatrixJson) -> Result<CMat> {
        if m.entries.len() != m.rows * m.cols {
            return Err(Error::Input(format!(
                "matrix declares {}x{} but holds {} entries",
                m.rows,
                m.cols,
                m.entries.len()
            )));
        }
        Ok(CMat::from_row_iterator(m.rows, m.cols, m.entries.iter().map(|&[re, im]| Complex64::new(re, im))))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDocument {
    pub config: NetworkConfig,
    /// `channels[k][l]` is the matrix from transmitter `l` to receiver `k`.
    pub channels: Vec<Vec<MatrixJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_cov: Option<Vec<Option<MatrixJson>>>,
}

impl ChannelDocument {
    pub fn new(config: &NetworkConfig, ch: &ChannelSet) -> Self {
        let channels =
            (0..ch.users()).map(|k| (0..ch.users()).map(|l| MatrixJson::from(ch.h(k, l))).collect()).collect();
        let noise_cov = if ch.has_colored_noise() {
            Some((0..ch.users()).map(|k| ch.noise_cov(k).map(|r| MatrixJson::from(r.matrix()))).collect())
        } else {
            None
        };
        ChannelDocument { config: config.clone(), channels, noise_cov }
    }

    pub fn into_parts(self) -> Result<(NetworkConfig, ChannelSet)> {
        let h = self
            .channels
            .iter()
            .map(|row| row.iter().map(CMat::try_from).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let noise = match &self.noise_cov {
            None => vec![None; h.len()],
            Some(list) => list
                .iter()
                .map(|m| match m {
                    None => Ok(None),
                    Some(m) => Ok(Some(HermitianMatrix::new(CMat::try_from(m)?)?)),
                })
                .collect::<Result<Vec<_>>>()?,
        };
        let ch = ChannelSet::with_noise(h, noise)?;
        self.config.validate()?;
        ch.check_config(&self.config)?;
        Ok((self.config, ch))
    }
}

pub fn channels_to_json(config: &NetworkConfig, ch: &ChannelSet) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ChannelDocument::new(config, ch))?)
}

pub fn channels_from_json(text: &str) -> Result<(NetworkConfig, ChannelSet)> {
    serde_json::from_str::<ChannelDocument>(text)?.into_parts()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionDocument {
    pub precoders: Vec<MatrixJson>,
    pub filters: Vec<MatrixJson>,
}

impl From<&Solution> for SolutionDocument {
    fn from(sol: &Solution) -> Self {
        SolutionDocument {
            precoders: sol.precoders.iter().map(MatrixJson::from).collect(),
            filters: sol.filters.iter().map(MatrixJson::from).collect(),
        }
    }
}

impl TryFrom<&SolutionDocument> for Solution {
    type Error = Error;

    fn try_from(doc: &SolutionDocument) -> Result<Solution> {
        if doc.precoders.len() != doc.filters.len() {
            return Err(Error::Input("precoder and filter counts differ".into()));
        }
        Ok(Solution {
            precoders: doc.precoders.iter().map(CMat::try_from).collect::<Result<_>>()?,
            filters: doc.filters.iter().map(CMat::try_from).collect::<Result<_>>()?,
        })
    }
}

pub fn solution_to_json(sol: &Solution) -> Result<String> {
    Ok(serde_json::to_string_pretty(&SolutionDocument::from(sol))?)
}

pub fn solution_from_json(text: &str) -> Result<Solution> {
    Solution::try_from(&serde_json::from_str::<SolutionDocument>(text)?)
}
