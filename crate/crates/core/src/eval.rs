//! Event-aligned evaluation against a reference system.
//!
//! Reference systems report per compression cycle while the fitter reports
//! per window; the two are reconciled by averaging the predictions that
//! overlap each event, weighted by how much of the event each window covers.
//! Error statistics follow the usual agreement toolkit: absolute-error order
//! statistics and Bland-Altman pairs with limits of agreement.

use crate::error::{Error, Result};
use crate::model::CprEstimate;

/// One reference compression cycle, `(start_t, end_t)` in seconds, with the
/// reference frequency (cpm) and depth (cm) when the reference provides
/// them.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CompressionEvent {
    pub start_t: f64,
    pub end_t: f64,
    pub ref_ccf: Option<f64>,
    pub ref_ccd: Option<f64>,
}

impl CompressionEvent {
    pub fn validate(&self) -> Result<()> {
        if !(self.start_t.is_finite() && self.end_t.is_finite() && self.end_t > self.start_t) {
            return Err(Error::InvalidConfig(format!(
                "event must have end_t > start_t, got [{}, {}]",
                self.start_t, self.end_t
            )));
        }
        if self.ref_ccf.is_none() && self.ref_ccd.is_none() {
            return Err(Error::InvalidConfig(format!(
                "event [{}, {}] carries no reference value",
                self.start_t, self.end_t
            )));
        }
        Ok(())
    }
}

/// One per-window prediction as seen by the aligner. Depth is optional so
/// the spectral baseline (frequency only) can flow through the same path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub window_start_t: f64,
    pub window_len_s: f64,
    pub ccf: f64,
    pub ccd: Option<f64>,
}

impl From<&CprEstimate> for Prediction {
    fn from(e: &CprEstimate) -> Self {
        Self {
            window_start_t: e.window_start_t,
            window_len_s: e.window_len_s,
            ccf: e.ccf,
            ccd: Some(e.ccd),
        }
    }
}

/// One event together with the overlap-weighted mean of the predictions
/// that cover it.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPrediction {
    pub event: CompressionEvent,
    pub pred_ccf: f64,
    /// Weighted depth over the contributors that report one; `None` when no
    /// contributor does (spectral baseline).
    pub pred_ccd: Option<f64>,
    pub n_contributors: usize,
    /// Overlap ratios of the contributors, each in (0, 1].
    pub weights: Vec<f64>,
}

/// Alignment outcome: covered events with their weighted predictions, plus
/// the events no window overlapped.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub aligned: Vec<AlignedPrediction>,
    pub uncovered: Vec<CompressionEvent>,
}

/// Align predictions to events. For each event, every prediction whose
/// window `[start, start + len)` intersects the open interval
/// `(start_t, end_t)` contributes with weight
/// `intersection_duration / event_duration`; the event's prediction is the
/// weighted mean, computed separately for frequency and depth.
pub fn align(events: &[CompressionEvent], preds: &[Prediction]) -> Result<Alignment> {
    for e in events {
        e.validate()?;
    }
    let mut aligned = Vec::new();
    let mut uncovered = Vec::new();
    for &event in events {
        let duration = event.end_t - event.start_t;
        let mut weights = Vec::new();
        let mut ccf_acc = (0.0, 0.0);
        let mut ccd_acc = (0.0, 0.0);
        for p in preds {
            let w_start = p.window_start_t;
            let w_end = p.window_start_t + p.window_len_s;
            let overlap = w_end.min(event.end_t) - w_start.max(event.start_t);
            if overlap <= 0.0 {
                continue;
            }
            let sigma = overlap / duration;
            weights.push(sigma);
            ccf_acc = (ccf_acc.0 + sigma * p.ccf, ccf_acc.1 + sigma);
            if let Some(d) = p.ccd {
                ccd_acc = (ccd_acc.0 + sigma * d, ccd_acc.1 + sigma);
            }
        }
        if weights.is_empty() {
            uncovered.push(event);
            continue;
        }
        aligned.push(AlignedPrediction {
            event,
            pred_ccf: ccf_acc.0 / ccf_acc.1,
            pred_ccd: (ccd_acc.1 > 0.0).then(|| ccd_acc.0 / ccd_acc.1),
            n_contributors: weights.len(),
            weights,
        });
    }
    Ok(Alignment { aligned, uncovered })
}

/// Bland-Altman agreement data for one metric.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BlandAltman {
    /// `((pred + ref) / 2, pred - ref)` per aligned event.
    pub pairs: Vec<(f64, f64)>,
    pub mean_diff: f64,
    /// Sample standard deviation of the differences (0 when n < 2).
    pub sd_diff: f64,
    /// `mean_diff - 1.96 * sd_diff`.
    pub loa_lower: f64,
    /// `mean_diff + 1.96 * sd_diff`.
    pub loa_upper: f64,
}

/// Error statistics for one metric over the aligned events that carry both
/// a prediction and a reference for it.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MetricReport {
    pub n: usize,
    pub abs_errors: Vec<f64>,
    pub median_abs_error: f64,
    pub min_abs_error: f64,
    pub max_abs_error: f64,
    pub bland_altman: BlandAltman,
}

/// Full evaluation report; a metric is absent when no aligned event carries
/// both sides of it.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ErrorReport {
    pub n_aligned: usize,
    pub n_uncovered: usize,
    pub ccf: Option<MetricReport>,
    pub ccd: Option<MetricReport>,
}

/// Median of an unsorted slice (mean of the two middle values for even
/// lengths). Panics on empty input.
pub fn median(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty(), "median of empty slice");
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn metric_report(pairs: &[(f64, f64)]) -> Option<MetricReport> {
    if pairs.is_empty() {
        return None;
    }
    let abs_errors: Vec<f64> = pairs.iter().map(|(pred, r)| (pred - r).abs()).collect();
    let ba_pairs: Vec<(f64, f64)> = pairs
        .iter()
        .map(|(pred, r)| (0.5 * (pred + r), pred - r))
        .collect();
    let n = ba_pairs.len();
    let mean_diff = ba_pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sd_diff = if n < 2 {
        0.0
    } else {
        (ba_pairs
            .iter()
            .map(|p| (p.1 - mean_diff).powi(2))
            .sum::<f64>()
            / (n - 1) as f64)
            .sqrt()
    };
    Some(MetricReport {
        n,
        median_abs_error: median(&abs_errors),
        min_abs_error: abs_errors.iter().cloned().fold(f64::INFINITY, f64::min),
        max_abs_error: abs_errors.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        abs_errors,
        bland_altman: BlandAltman {
            mean_diff,
            sd_diff,
            loa_lower: mean_diff - 1.96 * sd_diff,
            loa_upper: mean_diff + 1.96 * sd_diff,
            pairs: ba_pairs,
        },
    })
}

/// Compute the error report over an alignment. Fails when no aligned event
/// carries a reference value for any metric.
pub fn error_report(alignment: &Alignment) -> Result<ErrorReport> {
    let ccf_pairs: Vec<(f64, f64)> = alignment
        .aligned
        .iter()
        .filter_map(|a| a.event.ref_ccf.map(|r| (a.pred_ccf, r)))
        .collect();
    let ccd_pairs: Vec<(f64, f64)> = alignment
        .aligned
        .iter()
        .filter_map(|a| match (a.pred_ccd, a.event.ref_ccd) {
            (Some(p), Some(r)) => Some((p, r)),
            _ => None,
        })
        .collect();
    let ccf = metric_report(&ccf_pairs);
    let ccd = metric_report(&ccd_pairs);
    if ccf.is_none() && ccd.is_none() {
        return Err(Error::EmptyReport);
    }
    Ok(ErrorReport {
        n_aligned: alignment.aligned.len(),
        n_uncovered: alignment.uncovered.len(),
        ccf,
        ccd,
    })
}

/// Read reference events from CSV with header `start_t,end_t,ref_ccf,ref_ccd`
/// (the last two may be empty). When a row carries neither reference value,
/// the frequency is derived from the cycle duration: `60 / (end_t - start_t)`
/// cpm. `#` comments and blank lines are skipped.
pub fn read_events_csv(path: &std::path::Path) -> Result<Vec<CompressionEvent>> {
    let text = std::fs::read_to_string(path)?;
    parse_events_csv(&text)
}

pub fn parse_events_csv(text: &str) -> Result<Vec<CompressionEvent>> {
    let mut events = Vec::new();
    let mut header_seen = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line != "start_t,end_t,ref_ccf,ref_ccd" {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected header 'start_t,end_t,ref_ccf,ref_ccd', got '{line}'"),
                });
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let num = |s: &str| -> Result<f64> {
            s.trim().parse().map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("not a number: '{s}'"),
            })
        };
        let opt = |s: &str| -> Result<Option<f64>> {
            let s = s.trim();
            if s.is_empty() {
                Ok(None)
            } else {
                num(s).map(Some)
            }
        };
        let (start_t, end_t) = (num(fields[0])?, num(fields[1])?);
        let mut ref_ccf = opt(fields[2])?;
        let ref_ccd = opt(fields[3])?;
        if ref_ccf.is_none() && ref_ccd.is_none() {
            ref_ccf = Some(60.0 / (end_t - start_t));
        }
        let event = CompressionEvent {
            start_t,
            end_t,
            ref_ccf,
            ref_ccd,
        };
        event.validate().map_err(|e| Error::Parse {
            line: idx + 1,
            msg: e.to_string(),
        })?;
        events.push(event);
    }
    if !header_seen {
        return Err(Error::Parse {
            line: 1,
            msg: "missing header 'start_t,end_t,ref_ccf,ref_ccd'".into(),
        });
    }
    Ok(events)
}
