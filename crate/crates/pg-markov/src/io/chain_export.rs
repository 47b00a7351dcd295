//! Posterior chain persistence.
//!
//! Binary layout (all integers little-endian):
//!
//! ```text
//! bytes 0..8    magic "PGMCHAIN"
//! u32           format version (1)
//! u64           header length in bytes
//! ...           header: JSON {alphabet, layout, config}
//! u64           number of stored draws
//! f64 * n       draw data: for each draw, for each from-state i (alphabet
//!               order), for each destination slot j: B beta coefficients
//!               followed by mu_{ij}
//! ```
//!
//! The CSV fallback is a wide table with one row per draw and one column per
//! parameter, usable directly as trace-plot data.

use crate::gibbs::{PosteriorChain, SamplerConfig};
use crate::model::{CoefficientState, DesignLayout, StateAlphabet};
use crate::{Error, Result};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"PGMCHAIN";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ChainHeader {
    alphabet: StateAlphabet,
    layout: DesignLayout,
    config: SamplerConfig,
}

pub fn write_chain_binary(path: &Path, chain: &PosteriorChain) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    let header = serde_json::to_vec(&ChainHeader {
        alphabet: chain.alphabet.clone(),
        layout: chain.layout.clone(),
        config: chain.config,
    })?;
    w.write_u64::<LittleEndian>(header.len() as u64)?;
    w.write_all(&header)?;
    w.write_u64::<LittleEndian>(chain.draws.len() as u64)?;
    for draw in &chain.draws {
        for (beta_i, mu_i) in draw.beta.iter().zip(&draw.mu) {
            for (beta, &mu) in beta_i.iter().zip(mu_i) {
                for &v in beta.iter() {
                    w.write_f64::<LittleEndian>(v)?;
                }
                w.write_f64::<LittleEndian>(mu)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_chain_binary(path: &Path) -> Result<PosteriorChain> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parameter(format!("{}: not a chain export", path.display())));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::Parameter(format!("unsupported chain format version {version}")));
    }
    let header_len = r.read_u64::<LittleEndian>()? as usize;
    let mut header = vec![0u8; header_len];
    r.read_exact(&mut header)?;
    let header: ChainHeader = serde_json::from_slice(&header)?;
    let j = header.alphabet.n_states();
    let b = header.layout.width();
    let n_draws = r.read_u64::<LittleEndian>()? as usize;
    let mut draws = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        let mut state = CoefficientState::zeros(j, b);
        for i in 0..j {
            for slot in 0..j - 1 {
                let mut beta = DVector::zeros(b);
                for c in 0..b {
                    beta[c] = r.read_f64::<LittleEndian>()?;
                }
                state.beta[i][slot] = beta;
                state.mu[i][slot] = r.read_f64::<LittleEndian>()?;
            }
        }
        draws.push(state);
    }
    Ok(PosteriorChain {
        alphabet: header.alphabet,
        layout: header.layout,
        config: header.config,
        draws,
    })
}

/// Parameter column names matching the binary draw order.
pub fn parameter_names(alphabet: &StateAlphabet, layout: &DesignLayout) -> Vec<String> {
    let cols = layout.column_names();
    let mut names = Vec::new();
    for i in 0..alphabet.n_states() {
        for slot in 0..alphabet.n_states() - 1 {
            let from = alphabet.label(i);
            let to = alphabet.label(alphabet.state_of_slot(slot));
            for col in &cols {
                names.push(format!("beta.{from}.{to}.{col}"));
            }
            names.push(format!("mu.{from}.{to}"));
        }
    }
    names
}

/// Wide CSV fallback: one row per stored draw, one column per parameter.
pub fn write_chain_csv(path: &Path, chain: &PosteriorChain) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["draw".to_string()];
    header.extend(parameter_names(&chain.alphabet, &chain.layout));
    w.write_record(&header)?;
    for (d, draw) in chain.draws.iter().enumerate() {
        let mut rec = vec![d.to_string()];
        for (beta_i, mu_i) in draw.beta.iter().zip(&draw.mu) {
            for (beta, &mu) in beta_i.iter().zip(mu_i) {
                rec.extend(beta.iter().map(|v| v.to_string()));
                rec.push(mu.to_string());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
