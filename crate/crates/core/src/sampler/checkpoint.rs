//! Chain snapshots for exact resume.
//!
//! The format is a single JSON object:
//!
//! ```text
//! { "format": "netmix-chain-checkpoint", "version": 1, "state": { ... } }
//! ```
//!
//! `state` holds the labels, all parameters, the Metropolis bookkeeping and
//! each ChaCha stream as `(seed, stream, word_pos)`. Neighbour counts are
//! not stored; they are rebuilt from the labels on load.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::state::ChainState;
use crate::error::{Error, Result};
use crate::types::NetworkSet;

pub const CHECKPOINT_VERSION: u32 = 1;
const FORMAT: &str = "netmix-chain-checkpoint";

#[derive(Serialize)]
struct Envelope<'a> {
    format: &'a str,
    version: u32,
    state: &'a ChainState,
}

#[derive(Deserialize)]
struct OwnedEnvelope {
    format: String,
    version: u32,
    state: ChainState,
}

pub fn save_checkpoint<W: Write>(state: &ChainState, writer: W) -> Result<()> {
    serde_json::to_writer_pretty(
        writer,
        &Envelope {
            format: FORMAT,
            version: CHECKPOINT_VERSION,
            state,
        },
    )
    .map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn load_checkpoint<R: Read>(reader: R, nets: &NetworkSet) -> Result<ChainState> {
    let env: OwnedEnvelope = serde_json::from_reader(reader).map_err(|e| Error::Checkpoint(e.to_string()))?;
    if env.format != FORMAT {
        return Err(Error::Checkpoint(format!("unexpected format `{}`", env.format)));
    }
    if env.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported version {} (this build reads {CHECKPOINT_VERSION})",
            env.version
        )));
    }
    let mut state = env.state;
    state.mixture.validate()?;
    state.refresh_stats(nets)?;
    Ok(state)
}
