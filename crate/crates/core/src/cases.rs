//! The bundled step-IC cases, each a DNS configuration plus how to reduce it.

use serde::{Deserialize, Serialize};

use crate::budget::{BasisSource, IntervalNormalization};
use crate::error::{Error, Result};
use crate::solver::CaseConfig;

/// How time averages are taken over a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Averaging {
    /// Trapezoid over `[0, T]` with `n` equal subintervals.
    Whole { n: usize },
    /// Every recorded step on each prefix `[0, T_j]` of the run.
    Intervals {
        intervals: Vec<f64>,
        #[serde(default)]
        normalization: IntervalNormalization,
    },
}

/// A complete case description, as stored in the JSON config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub id: String,
    pub dns: CaseConfig,
    #[serde(default)]
    pub basis: BasisSource,
    pub m_list: Vec<usize>,
    pub averaging: Averaging,
}

impl CaseFile {
    pub fn validate(&self) -> Result<()> {
        self.dns.validate()?;
        if self.m_list.is_empty() || self.m_list.contains(&0) {
            return Err(Error::InvalidConfig("m_list must be non-empty with entries >= 1".into()));
        }
        match &self.averaging {
            Averaging::Whole { n } if *n == 0 => {
                Err(Error::InvalidConfig("averaging.n must be at least 1".into()))
            }
            Averaging::Intervals { intervals, .. } if intervals.is_empty() => {
                Err(Error::InvalidConfig("averaging.intervals must not be empty".into()))
            }
            _ => Ok(()),
        }
    }
}

const M_SHORT: [usize; 8] = [3, 6, 9, 15, 20, 25, 30, 35];
const M_LONG: [usize; 9] = [3, 6, 9, 15, 20, 25, 30, 35, 40];
const M_TRANSIENT: [usize; 6] = [3, 5, 7, 9, 13, 15];

fn whole(id: &str, t: f64, dt: f64, stride: usize, n: usize, m_list: &[usize]) -> CaseFile {
    CaseFile {
        id: id.to_string(),
        dns: CaseConfig::step_case(t, dt, stride),
        basis: BasisSource::default(),
        m_list: m_list.to_vec(),
        averaging: Averaging::Whole { n },
    }
}

pub const PRESET_IDS: [&str; 8] = ["case1", "case2a", "case2b", "case2c", "case2d", "case3", "case4a", "case4b"];

/// Built-in case by id.
pub fn preset(id: &str) -> Option<CaseFile> {
    Some(match id {
        "case1" => whole(id, 1.0, 1e-2, 1, 100, &M_SHORT),
        "case2a" => whole(id, 10.0, 1e-2, 1, 1000, &M_SHORT),
        "case2b" => whole(id, 10.0, 1e-3, 1, 10_000, &M_LONG),
        "case2c" => whole(id, 10.0, 1e-4, 10, 10_000, &M_LONG),
        "case2d" => whole(id, 10.0, 2e-5, 50, 10_000, &M_LONG),
        "case3" => CaseFile {
            id: id.to_string(),
            dns: CaseConfig::step_case(100.0, 1e-2, 1),
            basis: BasisSource::default(),
            m_list: M_SHORT.to_vec(),
            averaging: Averaging::Intervals {
                intervals: vec![100.0, 10.0, 1.0],
                normalization: IntervalNormalization::LongestInterval,
            },
        },
        "case4a" => whole(id, 0.1, 2e-5, 1, 5000, &M_TRANSIENT),
        "case4b" => whole(id, 0.1, 1e-5, 2, 5000, &M_TRANSIENT),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid_and_aligned() {
        for id in PRESET_IDS {
            let c = preset(id).unwrap();
            c.validate().unwrap();
            assert_eq!(c.id, id);
            if let Averaging::Whole { n } = c.averaging {
                let recorded = c.dns.n_snapshots() - 1;
                assert_eq!(recorded % n, 0, "{id}: {n} subintervals vs {recorded} recorded steps");
            }
        }
        assert!(preset("case9").is_none());
    }

    #[test]
    fn snapshot_counts() {
        assert_eq!(preset("case1").unwrap().dns.n_snapshots(), 101);
        assert_eq!(preset("case2d").unwrap().dns.n_snapshots(), 10_001);
        assert_eq!(preset("case4b").unwrap().dns.n_snapshots(), 5001);
    }
}
