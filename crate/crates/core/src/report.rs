//! Histograms of metric values and rank–frequency tables.

use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::rank::Metric;
use crate::stats::{RankFrequencyRow, StatsTable, TermStats};
use crate::tsv::format_sig;

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("bin_count must be at least 1")]
    InvalidBinCount,
    #[error("no terms left to bin")]
    Empty,
}

/// Optional upper limits on which rows enter a histogram.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Caps {
    pub max_count: Option<u64>,
    pub max_tfidf: Option<f64>,
}

impl Caps {
    pub const NONE: Caps = Caps {
        max_count: None,
        max_tfidf: None,
    };

    /// Hides the long tail of a metric's distribution: terms seen more than
    /// 1000 times for tf, scores above 1e6 for tfidf, nothing otherwise.
    pub fn tail(metric: Metric) -> Caps {
        match metric {
            Metric::Tf => Caps {
                max_count: Some(1000),
                max_tfidf: None,
            },
            Metric::Tfidf => Caps {
                max_count: None,
                max_tfidf: Some(1e6),
            },
            Metric::Idf | Metric::Entropy => Caps::NONE,
        }
    }

    fn admits(&self, row: &TermStats) -> bool {
        self.max_count.is_none_or(|m| row.count <= m) && self.max_tfidf.is_none_or(|m| row.tfidf <= m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub metric: Metric,
    pub bins: Vec<Bin>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.bins.iter().map(|b| b.count).sum()
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "bin_lo\tbin_hi\tcount")?;
        for b in &self.bins {
            writeln!(out, "{}\t{}\t{}", format_sig(b.lo, 12), format_sig(b.hi, 12), b.count)?;
        }
        Ok(())
    }
}

/// Equal-width histogram of `metric` over `[min, max]`. Bins are half-open
/// except the last, which also holds the maximum. When every value is the
/// same, all of them land in the first bin.
pub fn distribution_report(stats: &StatsTable, metric: Metric, bin_count: usize, caps: Caps) -> Result<Histogram, ReportError> {
    if bin_count == 0 {
        return Err(ReportError::InvalidBinCount);
    }
    let values: Vec<f64> = stats.rows().iter().filter(|r| caps.admits(r)).map(|r| metric.value(r)).collect();
    if values.is_empty() {
        return Err(ReportError::Empty);
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let edge = |i: usize| if i == bin_count { max } else { min + span * i as f64 / bin_count as f64 };

    let mut bins: Vec<Bin> = (0..bin_count)
        .map(|i| Bin {
            lo: edge(i),
            hi: edge(i + 1),
            count: 0,
        })
        .collect();
    for v in values {
        let i = if span > 0.0 {
            (((v - min) / span * bin_count as f64) as usize).min(bin_count - 1)
        } else {
            0
        };
        bins[i].count += 1;
    }
    Ok(Histogram { metric, bins })
}

pub fn write_rank_frequency<W: Write>(rows: &[RankFrequencyRow], mut out: W) -> io::Result<()> {
    writeln!(out, "rank\tterm\tcount")?;
    for r in rows {
        writeln!(out, "{}\t{}\t{}", r.rank, r.term, r.count)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(values: &[(u64, f64)]) -> StatsTable {
        let rows = values
            .iter()
            .enumerate()
            .map(|(i, &(count, tfidf))| TermStats {
                term: format!("t{i}"),
                count,
                df: 1,
                tf: 0.1,
                idf: 0.0,
                tfidf,
                entropy: 0.0,
            })
            .collect();
        StatsTable::new(rows, 3)
    }

    #[test]
    fn equal_values_share_one_bin() {
        let h = distribution_report(&table(&[(1, 0.5), (2, 0.5)]), Metric::Tf, 4, Caps::NONE).unwrap();
        assert_eq!(h.bins.iter().filter(|b| b.count > 0).count(), 1);
        assert_eq!(h.total(), 2);
    }

    #[test]
    fn hand_binned() {
        // tfidf values 0, 1, 2, 2.5, 4 over 4 bins of width 1
        let t = table(&[(1, 0.0), (1, 1.0), (1, 2.0), (1, 2.5), (1, 4.0)]);
        let h = distribution_report(&t, Metric::Tfidf, 4, Caps::NONE).unwrap();
        let counts: Vec<u64> = h.bins.iter().map(|b| b.count).collect();
        assert_eq!(counts, [1, 1, 2, 1]);
        assert_eq!((h.bins[0].lo, h.bins[3].hi), (0.0, 4.0));
        assert_eq!(h.total() as usize, t.len());
    }

    #[test]
    fn caps_drop_tails() {
        let t = table(&[(5, 1.0), (5000, 2.0), (5, 2e6)]);
        assert_eq!(distribution_report(&t, Metric::Tfidf, 2, Caps::tail(Metric::Tfidf)).unwrap().total(), 2);
        assert_eq!(distribution_report(&t, Metric::Tf, 2, Caps::tail(Metric::Tf)).unwrap().total(), 2);
        assert_eq!(distribution_report(&t, Metric::Idf, 2, Caps::tail(Metric::Idf)).unwrap().total(), 3);
        assert_eq!(distribution_report(&t, Metric::Tf, 0, Caps::NONE), Err(ReportError::InvalidBinCount));
    }

    #[test]
    fn histogram_tsv_header() {
        let h = distribution_report(&table(&[(1, 1.0), (1, 3.0)]), Metric::Tfidf, 2, Caps::NONE).unwrap();
        let mut buf = Vec::new();
        h.write_tsv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "bin_lo\tbin_hi\tcount\n1\t2\t1\n2\t3\t1\n");
    }
}
