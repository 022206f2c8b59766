//! Flat `key = value` campaign configuration.
//!
//! ```text
//! key       = 000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f
//! plaintext = 00000000000000000000000000000000
//! samples   = 400
//! seed      = 7
//! width     = 1
//! offset.270.75 = 12:MixColumns:byte:1 0.9; clean 0.1
//! offset.282.25 = 11:MixColumns:byte 0.6; 10:SubBytes:bits:3 0.2; clean 0.2
//! static.mask = 00000000000000000000400000000000
//! ```
//!
//! Outcome shapes: `byte[:bits][@pos,pos..]`, `bits[:count]`, `columns:k`.
//! A missing weight means 1.

use std::collections::HashSet;
use std::fmt;

use aes_dfa::aes::{parse_block, AesState, KeySize, StepId};
use aes_dfa::fault::{BitCount, CampaignConfig, MaskShape, OffsetBehavior, Outcome, StaticFault};
use aes_dfa::record::GlitchTime;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based; `None` for problems with the file as a whole.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn parse_bits(s: Option<&str>) -> Result<BitCount, String> {
    match s {
        None => Ok(BitCount::Default),
        Some(n) => n
            .parse()
            .map(BitCount::Exactly)
            .map_err(|_| format!("bad bit count {n:?}")),
    }
}

fn parse_shape(s: &str) -> Result<MaskShape, String> {
    let (body, positions) = match s.split_once('@') {
        Some((b, p)) => {
            let list = p
                .split(',')
                .map(|x| x.trim().parse::<usize>().map_err(|_| format!("bad byte position {x:?}")))
                .collect::<Result<Vec<_>, _>>()?;
            (b, Some(list))
        }
        None => (s, None),
    };
    let mut parts = body.splitn(2, ':');
    let kind = parts.next().unwrap_or_default();
    let arg = parts.next();
    if positions.is_some() && kind != "byte" {
        return Err("byte positions only apply to `byte` shapes".into());
    }
    let shape = match kind {
        "byte" => MaskShape::SingleByte {
            bits: parse_bits(arg)?,
            positions,
        },
        "bits" => MaskShape::Scattered { bits: parse_bits(arg)? },
        "columns" => MaskShape::MultiColumn {
            bytes: arg
                .ok_or("columns needs a count")?
                .parse()
                .map_err(|_| format!("bad column count in {s:?}"))?,
        },
        other => return Err(format!("unknown mask shape {other:?}")),
    };
    Ok(shape)
}

fn parse_outcomes(s: &str) -> Result<Vec<(f64, Outcome)>, String> {
    let mut out = Vec::new();
    for item in s.split(';').map(str::trim).filter(|x| !x.is_empty()) {
        let mut words = item.split_whitespace();
        let what = words.next().expect("item is not empty");
        let weight = match words.next() {
            Some(w) => w.parse::<f64>().map_err(|_| format!("bad weight {w:?}"))?,
            None => 1.0,
        };
        if words.next().is_some() {
            return Err(format!("trailing text in {item:?}"));
        }
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(format!("weight must be non-negative, got {weight}"));
        }
        let outcome = if what == "clean" {
            Outcome::Clean
        } else {
            let mut f = what.splitn(3, ':');
            let (round, op) = (f.next().unwrap_or_default(), f.next().unwrap_or_default());
            let step: StepId = format!("{round}:{op}").parse()?;
            let shape = parse_shape(f.next().ok_or_else(|| format!("missing mask shape in {what:?}"))?)?;
            Outcome::Fault { step, shape }
        };
        out.push((weight, outcome));
    }
    if out.is_empty() {
        return Err("no outcomes".into());
    }
    Ok(out)
}

pub fn parse_config(text: &str) -> Result<CampaignConfig, ConfigError> {
    let mut key = None;
    let mut plaintext = [0u8; 16];
    let mut slot = 0;
    let mut samples = 100;
    let mut seed = 0;
    let mut width = GlitchTime::from_quarters(4);
    let mut offsets: Vec<(usize, GlitchTime, Vec<(f64, Outcome)>)> = Vec::new();
    let mut static_mask: Option<AesState> = None;
    let mut static_step = None;
    let mut seen = HashSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| ConfigError {
            line: Some(line),
            message,
        };
        let content = raw.split('#').next().unwrap_or_default().trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got {content:?}")))?;
        let (k, v) = (k.trim(), v.trim());
        if !seen.insert(k.to_string()) {
            return Err(err(format!("duplicate key {k:?}")));
        }
        let num = |v: &str| v.parse::<u64>().map_err(|_| err(format!("{k}: not an integer: {v:?}")));
        match k {
            "key" => {
                let bytes = hex::decode(v).map_err(|e| err(format!("key: {e}")))?;
                if ![16, 24, 32].contains(&bytes.len()) {
                    return Err(err(format!("key must be 16, 24 or 32 bytes, got {}", bytes.len())));
                }
                key = Some(bytes);
            }
            "plaintext" => plaintext = parse_block(v).map_err(|e| err(format!("plaintext: {e}")))?,
            "slot" => slot = u32::try_from(num(v)?).map_err(|_| err("slot out of range".into()))?,
            "samples" => samples = num(v)? as usize,
            "seed" => seed = num(v)?,
            "width" => width = v.parse().map_err(|e| err(format!("width: {e}")))?,
            "static.mask" => {
                let m = AesState(parse_block(v).map_err(|e| err(format!("static.mask: {e}")))?);
                static_mask = (!m.is_zero()).then_some(m);
            }
            "static.step" => static_step = Some(v.parse::<StepId>().map_err(|e| err(format!("static.step: {e}")))?),
            _ => match k.strip_prefix("offset.") {
                Some(n) => {
                    let n: GlitchTime = n.parse().map_err(|e| err(format!("offset: {e}")))?;
                    let outcomes = parse_outcomes(v).map_err(|e| err(format!("offset {n}: {e}")))?;
                    offsets.push((line, n, outcomes));
                }
                None => return Err(err(format!("unknown key {k:?}"))),
            },
        }
    }

    let key = key.ok_or(ConfigError {
        line: None,
        message: "missing `key`".into(),
    })?;
    if offsets.is_empty() {
        return Err(ConfigError {
            line: None,
            message: "no `offset.<n>` entries".into(),
        });
    }
    let rounds = KeySize::from_key_len(key.len()).expect("length checked").rounds();
    for (line, _, outcomes) in &offsets {
        for (_, o) in outcomes {
            if let Outcome::Fault { step, .. } = o {
                step.validate(rounds).map_err(|e| ConfigError {
                    line: Some(*line),
                    message: e.to_string(),
                })?;
            }
        }
    }
    if static_step.is_some() && static_mask.is_none() {
        return Err(ConfigError {
            line: None,
            message: "static.step given without a nonzero static.mask".into(),
        });
    }
    Ok(CampaignConfig {
        key,
        slot,
        plaintext,
        samples,
        offsets: offsets
            .into_iter()
            .map(|(_, n, outcomes)| OffsetBehavior { n, m: width, outcomes })
            .collect(),
        static_fault: static_mask.map(|mask| StaticFault {
            mask,
            step: static_step,
        }),
        seed,
    })
}
