//! Per-offset fault statistics, for picking glitch parameters.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::aes::{KeySchedule, Op, StepId};
use crate::localize::{localize_batch, Localization};
use crate::record::{CiphertextRecord, GlitchTime};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OffsetStats {
    pub samples: u64,
    pub clean: u64,
    /// Localized faults by (step, corrupted bits).
    pub faults: BTreeMap<(StepId, u32), u64>,
    /// Single-byte faults by the round whose MixColumns they reach first.
    pub single_byte_by_round: BTreeMap<u8, u64>,
}

impl OffsetStats {
    /// Fraction of samples that are single-byte faults reaching `round`.
    pub fn rate(&self, round: u8) -> f64 {
        if self.samples == 0 {
            return 0.0;
        }
        *self.single_byte_by_round.get(&round).unwrap_or(&0) as f64 / self.samples as f64
    }

    pub fn faulted(&self) -> u64 {
        self.samples - self.clean
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OffsetProfile {
    pub rounds: u8,
    pub offsets: BTreeMap<GlitchTime, OffsetStats>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProfileError {
    #[error("no offset produced a single-byte fault reaching round {round}")]
    NoViableOffset { round: u8 },
}

impl OffsetProfile {
    /// Localize every record with the known key and tally by offset `n`.
    pub fn from_records(ks: &KeySchedule, records: &[CiphertextRecord]) -> Self {
        let rounds = ks.rounds();
        let mut offsets: BTreeMap<GlitchTime, OffsetStats> = BTreeMap::new();
        for (rec, loc) in localize_batch(ks, records) {
            let s = offsets.entry(rec.n).or_default();
            s.samples += 1;
            match loc {
                Localization::NoFault => s.clean += 1,
                Localization::Fault(r) => {
                    *s.faults.entry((r.step, r.hamming)).or_default() += 1;
                    if r.mask.weight_bytes() == 1 {
                        *s.single_byte_by_round.entry(r.step.fault_round(rounds)).or_default() += 1;
                    }
                }
            }
        }
        OffsetProfile { rounds, offsets }
    }

    pub fn samples(&self) -> u64 {
        self.offsets.values().map(|s| s.samples).sum()
    }

    /// Faults by operation, over all offsets.
    pub fn operation_histogram(&self) -> BTreeMap<Op, u64> {
        let mut h = BTreeMap::new();
        for s in self.offsets.values() {
            for ((step, _), c) in &s.faults {
                *h.entry(step.op).or_default() += c;
            }
        }
        h
    }

    /// Faults by number of corrupted bits, over all offsets.
    pub fn bit_histogram(&self) -> BTreeMap<u32, u64> {
        let mut h = BTreeMap::new();
        for s in self.offsets.values() {
            for ((_, bits), c) in &s.faults {
                *h.entry(*bits).or_default() += c;
            }
        }
        h
    }

    pub fn render_operations(&self) -> String {
        let h = self.operation_histogram();
        let total: u64 = h.values().sum();
        let mut out = String::from("index  operation            count  share\n");
        for op in Op::ALL {
            let c = h.get(&op).copied().unwrap_or(0);
            writeln!(
                out,
                "{:>5}  {:<19} {:>6}  {:>5.1}%",
                op.round_position(),
                op.name(),
                c,
                percent(c, total)
            )
            .unwrap();
        }
        writeln!(out, "total                      {total:>6}").unwrap();
        out
    }

    pub fn render_bits(&self) -> String {
        let h = self.bit_histogram();
        let total: u64 = h.values().sum();
        let mut out = String::from(" bits   count  share\n");
        for (bits, c) in &h {
            writeln!(out, "{bits:>5}  {c:>6}  {:>5.1}%", percent(*c, total)).unwrap();
        }
        writeln!(out, "total  {total:>6}").unwrap();
        out
    }

    /// Per offset: samples, clean runs and the single-byte rate for each
    /// target round.
    pub fn render_offsets(&self, targets: &[u8]) -> String {
        let mut out = String::from("      offset  samples  clean");
        for t in targets {
            write!(out, "  r{t:<2} rate").unwrap();
        }
        out.push('\n');
        for (n, s) in &self.offsets {
            write!(out, "{:>12}  {:>7}  {:>5}", n.to_string(), s.samples, s.clean).unwrap();
            for t in targets {
                write!(out, "  {:>7.3}", s.rate(*t)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn percent(c: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * c as f64 / total as f64
    }
}

/// For each target round, the offset with the highest single-byte rate;
/// ties go to the lower offset.
pub fn recommend_offsets(
    profile: &OffsetProfile,
    targets: &[u8],
) -> Result<Vec<(u8, GlitchTime)>, ProfileError> {
    targets
        .iter()
        .map(|&round| {
            let mut best: Option<(GlitchTime, f64)> = None;
            for (n, s) in &profile.offsets {
                let r = s.rate(round);
                if r > 0.0 && best.is_none_or(|(_, b)| r > b) {
                    best = Some((*n, r));
                }
            }
            best.map(|(n, _)| (round, n))
                .ok_or(ProfileError::NoViableOffset { round })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aes::expand_key;
    use crate::fault::{generate_campaign, CampaignConfig, MaskShape, OffsetBehavior, Outcome};

    fn offset(n: &str, outcomes: Vec<(f64, Outcome)>) -> OffsetBehavior {
        OffsetBehavior {
            n: n.parse().unwrap(),
            m: GlitchTime::from_quarters(4),
            outcomes,
        }
    }

    fn fault(round: u8, op: Op, shape: MaskShape) -> Outcome {
        Outcome::Fault {
            step: StepId::new(round, op),
            shape,
        }
    }

    fn run(offsets: Vec<OffsetBehavior>, samples: usize) -> (KeySchedule, Vec<CiphertextRecord>) {
        let cfg = CampaignConfig {
            key: (100u8..132).collect(),
            slot: 1,
            plaintext: [3; 16],
            samples,
            offsets,
            static_fault: None,
            seed: 5,
        };
        (expand_key(&cfg.key).unwrap(), generate_campaign(&cfg).unwrap())
    }

    #[test]
    fn all_clean_gives_empty_histograms() {
        let (ks, recs) = run(vec![offset("270", vec![(1.0, Outcome::Clean)])], 20);
        let p = OffsetProfile::from_records(&ks, &recs);
        assert_eq!(p.samples(), 21);
        assert!(p.operation_histogram().is_empty());
        assert!(p.bit_histogram().is_empty());
        assert!(p.render_operations().contains("total                           0"));
        assert_eq!(
            recommend_offsets(&p, &[12]),
            Err(ProfileError::NoViableOffset { round: 12 })
        );
    }

    #[test]
    fn tables_add_up() {
        let (ks, recs) = run(
            vec![
                offset("270.75", vec![(0.5, Outcome::Clean), (0.5, fault(12, Op::MixColumns, MaskShape::any_byte()))]),
                offset("271", vec![(1.0, fault(9, Op::SubBytes, MaskShape::any_byte()))]),
            ],
            200,
        );
        let p = OffsetProfile::from_records(&ks, &recs);
        let faulted: u64 = p.offsets.values().map(|s| s.faulted()).sum();
        assert_eq!(p.operation_histogram().values().sum::<u64>(), faulted);
        assert_eq!(p.bit_histogram().values().sum::<u64>(), faulted);
        assert_eq!(faulted, recs.iter().filter(|r| r.faulted).count() as u64);
        let bits = p.bit_histogram();
        let mode = bits.iter().max_by_key(|(_, c)| **c).unwrap().0;
        assert_eq!(*mode, 1);
        for s in p.offsets.values() {
            for r in 1..=14 {
                assert!((0.0..=1.0).contains(&s.rate(r)));
            }
        }
    }

    #[test]
    fn recommends_the_pinned_offsets() {
        let byte = MaskShape::single_bit;
        let (ks, recs) = run(
            vec![
                offset("268", vec![(1.0, fault(13, Op::MixColumns, byte()))]),
                offset("270.75", vec![(0.9, fault(12, Op::MixColumns, byte())), (0.1, Outcome::Clean)]),
                offset("271.5", vec![(0.5, fault(12, Op::MixColumns, byte())), (0.5, Outcome::Clean)]),
                offset("282.25", vec![(0.8, fault(11, Op::MixColumns, byte())), (0.2, Outcome::Clean)]),
                offset("290", vec![(1.0, fault(11, Op::MixColumns, MaskShape::MultiColumn { bytes: 2 }))]),
            ],
            500,
        );
        let p = OffsetProfile::from_records(&ks, &recs);
        let rec = recommend_offsets(&p, &[12, 11]).unwrap();
        assert_eq!(rec, vec![(12, "270.75".parse().unwrap()), (11, "282.25".parse().unwrap())]);
        let ops = p.operation_histogram();
        // wide multi-byte masks may look cheaper one step earlier
        let total: u64 = ops.values().sum();
        assert!(ops[&Op::MixColumns] * 10 >= total * 9);
        assert!(p.render_operations().contains("    3  MixColumns"));
        assert!(p.render_offsets(&[12, 11]).contains("270.75"));
    }

    #[test]
    fn ties_go_to_the_lower_offset() {
        let mut p = OffsetProfile {
            rounds: 14,
            offsets: BTreeMap::new(),
        };
        for n in ["300", "299.5"] {
            let mut s = OffsetStats {
                samples: 4,
                ..Default::default()
            };
            s.single_byte_by_round.insert(12, 2);
            p.offsets.insert(n.parse().unwrap(), s);
        }
        assert_eq!(recommend_offsets(&p, &[12]).unwrap(), vec![(12, "299.5".parse().unwrap())]);
        let empty = OffsetProfile {
            rounds: 14,
            offsets: BTreeMap::new(),
        };
        assert!(recommend_offsets(&empty, &[12]).is_err());
    }
}
