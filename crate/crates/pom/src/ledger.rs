//! Hash-chained block ledger for realized matches.
//!
//! Each round's winner appends one block holding that round's accepted
//! transactions; non-winners validate it against the winning solution. Blocks
//! link by SHA-256 digests (genesis links to the all-zero digest), and
//! transactions are kept in canonical order (sorted by rider id) so the block
//! hash is independent of insertion order. The recording mechanics carry no
//! economics: a block is just the tamper-evident record of what was matched.

use std::fmt;
use std::io::{self, BufRead, Write};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::consensus::SolverId;

/// A realized match: the accepted rider/driver pair and its utility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transaction {
    pub round: u32,
    pub rider: u64,
    pub driver: u64,
    pub utility: f64,
}

/// One ledger entry. `hash` covers every other field, including the
/// canonical transaction list.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub height: u64,
    pub prev_hash: [u8; 32],
    pub round: u32,
    pub winner: SolverId,
    pub transactions: Vec<Transaction>,
    pub hash: [u8; 32],
}

fn canonical_sort(transactions: &mut [Transaction]) {
    transactions.sort_by_key(|t| t.rider);
}

fn block_digest(
    height: u64,
    prev_hash: &[u8; 32],
    round: u32,
    winner: SolverId,
    transactions: &[Transaction],
) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(height.to_le_bytes());
    hasher.update(prev_hash);
    hasher.update(round.to_le_bytes());
    hasher.update(winner.0.to_le_bytes());
    hasher.update((transactions.len() as u64).to_le_bytes());
    for t in transactions {
        hasher.update(t.round.to_le_bytes());
        hasher.update(t.rider.to_le_bytes());
        hasher.update(t.driver.to_le_bytes());
        hasher.update(t.utility.to_bits().to_le_bytes());
    }
    hasher.finalize().into()
}

/// Result of whole-chain verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainStatus {
    Valid,
    /// Height of the first block whose linkage, ordering, or digest fails.
    FirstInvalid(u64),
}

/// Why a block fails validation against its round context.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BlockRejection {
    #[error("block records round {got} but context is round {want}")]
    RoundMismatch { got: u32, want: u32 },
    #[error("block claims winner {got} but round selected {want}")]
    WinnerMismatch { got: SolverId, want: SolverId },
    #[error("transaction (rider {rider}, driver {driver}) is not an accepted match")]
    UnknownMatch { rider: u64, driver: u64 },
    #[error("accepted match (rider {rider}, driver {driver}) is missing from the block")]
    MissingMatch { rider: u64, driver: u64 },
}

/// What validators know about a round: who won and which matches the riders
/// actually accepted.
#[derive(Debug, Clone)]
pub struct RoundContext {
    pub round: u32,
    pub winner: SolverId,
    pub accepted: Vec<Transaction>,
}

/// Accepts iff the block records exactly the accepted matches of the round's
/// winning solution — nothing fabricated, nothing missing.
pub fn validate_block(block: &Block, context: &RoundContext) -> Result<(), BlockRejection> {
    if block.round != context.round {
        return Err(BlockRejection::RoundMismatch { got: block.round, want: context.round });
    }
    if block.winner != context.winner {
        return Err(BlockRejection::WinnerMismatch { got: block.winner, want: context.winner });
    }
    let mut expected = context.accepted.clone();
    canonical_sort(&mut expected);
    for t in &block.transactions {
        if !expected.iter().any(|e| e == t) {
            return Err(BlockRejection::UnknownMatch { rider: t.rider, driver: t.driver });
        }
    }
    for e in &expected {
        if !block.transactions.iter().any(|t| t == e) {
            return Err(BlockRejection::MissingMatch { rider: e.rider, driver: e.driver });
        }
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("malformed chain record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// An append-only chain of blocks. Blocks are immutable once appended.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Chain {
    blocks: Vec<Block>,
}

impl Chain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Appends the round's block: height and previous-hash linkage are
    /// derived from the chain tip, transactions are canonicalized, and the
    /// digest is computed over the result.
    pub fn append_block(
        &mut self,
        round: u32,
        winner: SolverId,
        mut transactions: Vec<Transaction>,
    ) -> &Block {
        canonical_sort(&mut transactions);
        let height = self.blocks.len() as u64;
        let prev_hash = self.blocks.last().map_or([0u8; 32], |b| b.hash);
        let hash = block_digest(height, &prev_hash, round, winner, &transactions);
        self.blocks.push(Block { height, prev_hash, round, winner, transactions, hash });
        self.blocks.last().expect("just pushed")
    }

    /// Recomputes every digest and linkage; reports the first violation.
    pub fn verify(&self) -> ChainStatus {
        let mut prev = [0u8; 32];
        for (i, block) in self.blocks.iter().enumerate() {
            let canonical = block.transactions.windows(2).all(|w| w[0].rider <= w[1].rider);
            let expected = block_digest(
                block.height,
                &block.prev_hash,
                block.round,
                block.winner,
                &block.transactions,
            );
            if block.height != i as u64
                || block.prev_hash != prev
                || !canonical
                || block.hash != expected
            {
                return ChainStatus::FirstInvalid(i as u64);
            }
            prev = block.hash;
        }
        ChainStatus::Valid
    }

    /// Writes the chain as line-delimited records with hex digests: a header
    /// line, then one block per line. Utilities are serialized as raw bit
    /// patterns so import/export round-trips exactly.
    pub fn export<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "height prev_hash round winner transactions hash")?;
        for b in &self.blocks {
            let txs = if b.transactions.is_empty() {
                "-".to_string()
            } else {
                b.transactions
                    .iter()
                    .map(|t| {
                        format!("{},{},{},{:016x}", t.round, t.rider, t.driver, t.utility.to_bits())
                    })
                    .collect::<Vec<_>>()
                    .join(";")
            };
            writeln!(
                out,
                "{} {} {} {} {} {}",
                b.height,
                hex::encode(b.prev_hash),
                b.round,
                b.winner,
                txs,
                hex::encode(b.hash)
            )?;
        }
        Ok(())
    }

    /// Parses an exported chain. Verification is separate: import restores
    /// the records as written, [`Chain::verify`] judges them.
    pub fn import<R: BufRead>(input: R) -> Result<Self, LedgerError> {
        let mut blocks = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            if idx == 0 {
                // Header row.
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: &str| LedgerError::MalformedRecord {
                line: idx + 1,
                reason: reason.to_string(),
            };
            let fields: Vec<&str> = line.split(' ').collect();
            if fields.len() != 6 {
                return Err(bad("expected 6 space-separated fields"));
            }
            let height: u64 = fields[0].parse().map_err(|_| bad("bad height"))?;
            let prev_hash = parse_digest(fields[1]).ok_or_else(|| bad("bad prev_hash"))?;
            let round: u32 = fields[2].parse().map_err(|_| bad("bad round"))?;
            let winner = SolverId(fields[3].parse().map_err(|_| bad("bad winner"))?);
            let transactions = if fields[4] == "-" {
                Vec::new()
            } else {
                fields[4]
                    .split(';')
                    .map(|t| {
                        let parts: Vec<&str> = t.split(',').collect();
                        if parts.len() != 4 {
                            return None;
                        }
                        Some(Transaction {
                            round: parts[0].parse().ok()?,
                            rider: parts[1].parse().ok()?,
                            driver: parts[2].parse().ok()?,
                            utility: f64::from_bits(
                                u64::from_str_radix(parts[3], 16).ok()?,
                            ),
                        })
                    })
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| bad("bad transaction list"))?
            };
            let hash = parse_digest(fields[5]).ok_or_else(|| bad("bad hash"))?;
            blocks.push(Block { height, prev_hash, round, winner, transactions, hash });
        }
        Ok(Self { blocks })
    }
}

fn parse_digest(hex_str: &str) -> Option<[u8; 32]> {
    let bytes = hex::decode(hex_str).ok()?;
    bytes.try_into().ok()
}

impl fmt::Display for ChainStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainStatus::Valid => write!(f, "valid"),
            ChainStatus::FirstInvalid(h) => write!(f, "invalid at height {h}"),
        }
    }
}
