//! Line-oriented round traces.
//!
//! One line per round:
//!
//! ```text
//! t=<t> up=<uplink_cum> down=<downlink_cum> w0=<msg> w1=<msg> ... s=<msg>
//! ```
//!
//! where `<msg>` is `<kind>/<dim>/<bit_len>/<payload hex>` and `<kind>` is
//! one of `identity`, `exact_identity`, `norm_uniform:<k>`,
//! `log_grid:<k>:<K>`, `terngrad`, `top_k:<fraction>`. The payload is the
//! exact byte string of the message, so equal traces mean equal bits.

use std::fmt::Write as _;

use effadam_core::quantize::{QuantizedMessage, QuantizerKind};
use effadam_core::transport::{BitLedger, RoundTrace};

use crate::error::{Result, SimError};

fn kind_token(kind: &QuantizerKind) -> String {
    match kind {
        QuantizerKind::Identity => "identity".into(),
        QuantizerKind::ExactIdentity => "exact_identity".into(),
        QuantizerKind::NormUniform { k } => format!("norm_uniform:{k}"),
        QuantizerKind::LogGrid { min_exp, max_exp } => format!("log_grid:{min_exp}:{max_exp}"),
        QuantizerKind::Terngrad => "terngrad".into(),
        QuantizerKind::TopK { fraction } => format!("top_k:{fraction:?}"),
    }
}

fn bad(detail: impl Into<String>) -> SimError {
    SimError::Format {
        what: "trace line",
        detail: detail.into(),
    }
}

fn parse_kind(token: &str) -> Result<QuantizerKind> {
    let mut parts = token.split(':');
    let name = parts.next().unwrap_or_default();
    let mut num = |what: &str| -> Result<String> {
        parts
            .next()
            .map(str::to_owned)
            .ok_or_else(|| bad(format!("{name} needs {what}")))
    };
    let kind = match name {
        "identity" => QuantizerKind::Identity,
        "exact_identity" => QuantizerKind::ExactIdentity,
        "norm_uniform" => QuantizerKind::NormUniform {
            k: num("k")?.parse().map_err(|_| bad("k"))?,
        },
        "log_grid" => QuantizerKind::LogGrid {
            min_exp: num("k")?.parse().map_err(|_| bad("k"))?,
            max_exp: num("K")?.parse().map_err(|_| bad("K"))?,
        },
        "terngrad" => QuantizerKind::Terngrad,
        "top_k" => QuantizerKind::TopK {
            fraction: num("fraction")?.parse().map_err(|_| bad("fraction"))?,
        },
        other => return Err(bad(format!("unknown quantizer {other:?}"))),
    };
    if parts.next().is_some() {
        return Err(bad(format!("trailing fields in {token:?}")));
    }
    Ok(kind)
}

fn message_token(m: &QuantizedMessage) -> String {
    let mut s = format!("{}/{}/{}/", kind_token(&m.kind), m.dim, m.bit_len);
    for b in &m.payload {
        write!(s, "{b:02x}").expect("writing to a String");
    }
    s
}

fn parse_message(token: &str) -> Result<QuantizedMessage> {
    let fields: Vec<&str> = token.split('/').collect();
    let [kind, dim, bits, hex] = fields[..] else {
        return Err(bad(format!("message {token:?} needs four fields")));
    };
    if hex.len() % 2 != 0 {
        return Err(bad("odd hex length"));
    }
    let payload = (0..hex.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| bad("bad hex digit")))
        .collect::<Result<Vec<u8>>>()?;
    Ok(QuantizedMessage {
        kind: parse_kind(kind)?,
        dim: dim.parse().map_err(|_| bad("dim"))?,
        bit_len: bits.parse().map_err(|_| bad("bit length"))?,
        payload,
    })
}

pub fn format_round(trace: &RoundTrace) -> String {
    let l = &trace.ledger_snapshot;
    let mut s = format!(
        "t={} up={} down={}",
        trace.t, l.uplink_bits, l.downlink_bits
    );
    for (i, m) in trace.per_worker_msgs.iter().enumerate() {
        write!(s, " w{i}={}", message_token(m)).expect("writing to a String");
    }
    write!(s, " s={}", message_token(&trace.broadcast)).expect("writing to a String");
    s
}

pub fn parse_round(line: &str) -> Result<RoundTrace> {
    let mut t = None;
    let mut up = None;
    let mut down = None;
    let mut workers = Vec::new();
    let mut broadcast = None;
    for field in line.split_ascii_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| bad(format!("field {field:?}")))?;
        match key {
            "t" => t = Some(value.parse::<u64>().map_err(|_| bad("t"))?),
            "up" => up = Some(value.parse::<u64>().map_err(|_| bad("up"))?),
            "down" => down = Some(value.parse::<u64>().map_err(|_| bad("down"))?),
            "s" => broadcast = Some(parse_message(value)?),
            k if k.starts_with('w') => {
                let idx: usize = k[1..].parse().map_err(|_| bad(format!("key {k:?}")))?;
                if idx != workers.len() {
                    return Err(bad(format!("worker {idx} out of order")));
                }
                workers.push(parse_message(value)?);
            }
            other => return Err(bad(format!("unknown key {other:?}"))),
        }
    }
    let t = t.ok_or_else(|| bad("missing t"))?;
    Ok(RoundTrace {
        t,
        per_worker_msgs: workers,
        broadcast: broadcast.ok_or_else(|| bad("missing s"))?,
        ledger_snapshot: BitLedger {
            uplink_bits: up.ok_or_else(|| bad("missing up"))?,
            downlink_bits: down.ok_or_else(|| bad("missing down"))?,
            rounds: t,
        },
    })
}
