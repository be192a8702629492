//! Rank sweeps comparing classical PCA, u-FPCA and c-FPCA.

use std::time::Instant;

use crate::dataset::{prepare, RawTable};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fairpca::{FairPca, Method, SearchConfig};
use crate::report::{SweepReport, SweepRow};

#[derive(Debug, Clone, Copy)]
pub struct SweepConfig {
    pub max_rank: usize,
    pub search: SearchConfig,
    pub balanced: bool,
    /// Record wall-clock time per fit. Disable for byte-reproducible reports.
    pub timing: bool,
    pub exec: Exec,
}

impl SweepConfig {
    pub fn new(max_rank: usize) -> Self {
        SweepConfig {
            max_rank,
            search: SearchConfig::default(),
            balanced: false,
            timing: true,
            exec: Exec::default(),
        }
    }
}

/// Fits every method at every rank in `1..=max_rank`. Cells run through
/// `cfg.exec`; rows come back ordered by rank, then method.
pub fn run_sweep(dataset_id: &str, table: &RawTable, cfg: &SweepConfig) -> Result<SweepReport> {
    let data = prepare(table, cfg.balanced)?;
    let d = data.d();
    if cfg.max_rank == 0 || cfg.max_rank > d {
        return Err(Error::RankOutOfRange {
            rank: cfg.max_rank,
            max: d,
        });
    }
    let fp = FairPca::with_exec(&data, cfg.exec)?;
    let cells: Vec<(usize, Method)> = (1..=cfg.max_rank)
        .flat_map(|r| Method::ALL.into_iter().map(move |m| (r, m)))
        .collect();

    let rows = cfg.exec.map(&cells, |&(r, method)| -> Result<SweepRow> {
        let start = Instant::now();
        let fit = fp.fit(method, r, &cfg.search)?;
        let runtime_ms = if cfg.timing {
            start.elapsed().as_millis() as u64
        } else {
            0
        };
        Ok(SweepRow {
            r,
            method,
            alpha: fit.alpha.value(),
            overall_err: fit.metrics.overall_err,
            err_a: fit.metrics.err_a,
            err_b: fit.metrics.err_b,
            disparity: fit.metrics.disparity,
            fairness: fit.metrics.fairness,
            runtime_ms,
        })
    });

    let report = SweepReport {
        dataset_id: dataset_id.to_string(),
        balanced: cfg.balanced,
        rows: rows.into_iter().collect::<Result<_>>()?,
    };
    report.validate()?;
    Ok(report)
}
