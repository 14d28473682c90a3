//! Lockstep parameter-server rounds with payload-only bit accounting.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::DenseVector;
use crate::node::{HyperParams, Server, Worker};
use crate::quantize::{decode, QuantizedMessage};

/// Cumulative payload bits in each direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BitLedger {
    pub uplink_bits: u64,
    /// Counted once per broadcast.
    pub downlink_bits: u64,
    pub rounds: u64,
}

impl BitLedger {
    /// Downlink bits if every recipient's copy is counted.
    pub fn downlink_bits_per_recipient(&self, workers: usize) -> u64 {
        self.downlink_bits * workers as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrace {
    /// One-based index of the round.
    pub t: u64,
    pub per_worker_msgs: Vec<QuantizedMessage>,
    pub broadcast: QuantizedMessage,
    pub ledger_snapshot: BitLedger,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub trace: RoundTrace,
    /// `δ̂_t` as computed by the server.
    pub average: DenseVector,
    /// `(1/N) Σ_i` of the workers' pre-quantization updates, summed in index order.
    pub mean_raw_update: DenseVector,
}

/// N workers and one server sharing a hyperparameter set.
#[derive(Debug, Clone)]
pub struct Cluster {
    pub workers: Vec<Worker>,
    pub server: Server,
    pub ledger: BitLedger,
    pub hp: HyperParams,
}

impl Cluster {
    pub fn new(workers: Vec<Worker>, server: Server, hp: HyperParams) -> Result<Self> {
        hp.validate()?;
        if workers.is_empty() {
            return Err(Error::invalid("a cluster needs at least one worker"));
        }
        for w in &workers {
            w.x.ensure_dim(server.dim())?;
        }
        Ok(Cluster {
            workers,
            server,
            ledger: BitLedger::default(),
            hp,
        })
    }

    pub fn size(&self) -> usize {
        self.workers.len()
    }

    pub fn dim(&self) -> usize {
        self.server.dim()
    }

    /// The shared iterate. Meaningful while [`Cluster::iterate_synced`] holds.
    pub fn x(&self) -> &DenseVector {
        &self.server.x
    }

    /// Runs one round with `grads[i]` going to worker `i`.
    ///
    /// Inputs are validated before any node state changes.
    pub fn run_round(&mut self, grads: &[DenseVector]) -> Result<RoundOutcome> {
        let n = self.size();
        if grads.len() != n {
            return Err(Error::InboxSize {
                expected: n,
                received: grads.len(),
            });
        }
        for g in grads {
            g.ensure_dim(self.dim())?;
            g.ensure_finite()?;
        }
        let mut msgs = Vec::with_capacity(n);
        let mut raw_sum = DenseVector::zeros(self.dim());
        let mut uplink = 0u64;
        for (w, g) in self.workers.iter_mut().zip(grads) {
            let out = w.step(&self.hp, g)?;
            raw_sum.add_assign(&out.raw_update)?;
            uplink += out.message.bit_len as u64;
            msgs.push(out.message);
        }
        let server_out = self.server.step(&msgs, n)?;
        let delta = decode(&server_out.broadcast)?;
        for w in &mut self.workers {
            w.apply_update(&delta)?;
        }
        self.ledger.uplink_bits += uplink;
        self.ledger.downlink_bits += server_out.broadcast.bit_len as u64;
        self.ledger.rounds += 1;
        let inv = n as f64;
        let mean_raw_update =
            DenseVector::from_vec_unchecked(raw_sum.iter().map(|s| s / inv).collect());
        Ok(RoundOutcome {
            trace: RoundTrace {
                t: self.ledger.rounds,
                per_worker_msgs: msgs,
                broadcast: server_out.broadcast,
                ledger_snapshot: self.ledger,
            },
            average: server_out.average,
            mean_raw_update,
        })
    }

    /// True iff every worker's `x` equals the server's bit for bit.
    pub fn iterate_synced(&self) -> bool {
        iterate_synced(&self.workers, &self.server)
    }

    /// `(1/N) Σ_i e^{(i)}`, summed in index order.
    pub fn mean_worker_error(&self) -> DenseVector {
        let mut sum = DenseVector::zeros(self.dim());
        for w in &self.workers {
            for (s, e) in sum.as_mut_slice().iter_mut().zip(w.e.iter()) {
                *s += e;
            }
        }
        let n = self.size() as f64;
        DenseVector::from_vec_unchecked(sum.iter().map(|s| s / n).collect())
    }
}

pub fn iterate_synced(workers: &[Worker], server: &Server) -> bool {
    workers.iter().all(|w| {
        w.x.iter()
            .zip(server.x.iter())
            .all(|(a, b)| a.to_bits() == b.to_bits())
    })
}
