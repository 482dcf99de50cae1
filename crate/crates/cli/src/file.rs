//! Constellation files.
//!
//! A JSON document with a header and, per user and codeword, the `T × M`
//! entries in row-major order as `[re, im]` pairs. Doubles are written in
//! shortest round-trip form and parsed exactly, so `load(save(c))`
//! reproduces every bit.

use std::fs;
use std::path::Path;

use ncmac_core::{CMat, Constellation, C64};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const FORMAT: &str = "ncmac-constellation";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: u32,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub sizes: Vec<usize>,
    /// Receive antennas the design targeted.
    #[serde(rename = "N")]
    pub n_rx: usize,
    pub manifold: String,
    pub cost: String,
    pub seed: u64,
    pub final_cost: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Document {
    header: Header,
    /// `users[k][i][row][col] = [re, im]`
    users: Vec<Vec<Vec<Vec<[f64; 2]>>>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstellationFile {
    pub header: Header,
    pub constellation: Constellation,
}

impl ConstellationFile {
    /// Header fields derived from `c`; the rest are supplied.
    pub fn new(
        constellation: Constellation,
        n_rx: usize,
        manifold: &str,
        cost: &str,
        seed: u64,
        final_cost: Option<f64>,
    ) -> Self {
        let header = Header {
            format: FORMAT.into(),
            version: VERSION,
            t: constellation.t(),
            m: constellation.m(),
            k: constellation.num_users(),
            sizes: constellation.sizes(),
            n_rx,
            manifold: manifold.into(),
            cost: cost.into(),
            seed,
            final_cost,
        };
        Self {
            header,
            constellation,
        }
    }

    pub fn to_json(&self) -> String {
        let users = self
            .constellation
            .blocks()
            .users()
            .iter()
            .map(|book| {
                book.iter()
                    .map(|x| {
                        (0..x.rows())
                            .map(|r| (0..x.cols()).map(|c| [x[(r, c)].re, x[(r, c)].im]).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let doc = Document {
            header: self.header.clone(),
            users,
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("constellations are always finite");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let doc: Document =
            serde_json::from_str(text).map_err(|e| CliError::Load(format!("malformed file: {e}")))?;
        let h = &doc.header;
        if h.format != FORMAT {
            return Err(CliError::Load(format!("unknown format {:?}", h.format)));
        }
        if h.version != VERSION {
            return Err(CliError::Load(format!("unsupported version {}", h.version)));
        }
        if h.k != h.sizes.len() || h.k != doc.users.len() {
            return Err(CliError::Load(format!(
                "header says K={} with {} codebook sizes, body has {} users",
                h.k,
                h.sizes.len(),
                doc.users.len()
            )));
        }
        let mut users = Vec::with_capacity(h.k);
        for (k, (book, &lk)) in doc.users.iter().zip(&h.sizes).enumerate() {
            if book.len() != lk {
                return Err(CliError::Load(format!(
                    "user {} has {} codewords, header says {lk}",
                    k + 1,
                    book.len()
                )));
            }
            let mut cws = Vec::with_capacity(lk);
            for (i, rows) in book.iter().enumerate() {
                if rows.len() != h.t || rows.iter().any(|r| r.len() != h.m) {
                    return Err(CliError::Load(format!(
                        "codeword {i} of user {} is not {}x{}",
                        k + 1,
                        h.t,
                        h.m
                    )));
                }
                let flat: Vec<C64> = rows.iter().flatten().map(|&[re, im]| C64::new(re, im)).collect();
                cws.push(CMat::from_row_major(h.t, h.m, &flat).map_err(CliError::from_load)?);
            }
            users.push(cws);
        }
        let constellation = Constellation::new(h.t, h.m, users).map_err(CliError::from_load)?;
        Ok(Self {
            header: doc.header,
            constellation,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }
}
