//! Trace comparison: alignment onto a reference grid and the combined
//! relative root-mean-square error
//!
//! `e = sqrt( (1/N) * ( sum (v_m - v_r)^2 / vbar_r^2
//!                    + sum (i_m - i_r)^2 / ibar_r^2 ) )`
//!
//! normalized by the squared means of the reference voltage and current
//! over the selected region.

use thiserror::Error;

/// Which part of the drive cycle enters the error sum. `On` keeps samples
/// with reference v < 0, `Off` keeps v > 0; samples at exactly v = 0 belong
/// to neither switching region and are excluded from both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    On,
    Off,
    Full,
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Region::On => write!(f, "on"),
            Region::Off => write!(f, "off"),
            Region::Full => write!(f, "full"),
        }
    }
}

/// Reference time series (t, v, i), typically digitized or exported data.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrace {
    samples: Vec<(f64, f64, f64)>,
    /// Mean reference voltage over the whole trace, V.
    pub mean_v: f64,
    /// Mean reference current over the whole trace, A.
    pub mean_i: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("reference trace is empty")]
    EmptyReference,
    #[error("reference timestamps must be strictly increasing (violated at index {0})")]
    NonMonotonicTime(usize),
    #[error("no overlap between model and reference time ranges")]
    NoOverlap,
    #[error("region `{region}` selects no samples")]
    EmptyRegion { region: Region },
    #[error("degenerate reference over region `{region}`: mean v = {mean_v}, mean i = {mean_i}")]
    DegenerateReference {
        region: Region,
        mean_v: f64,
        mean_i: f64,
    },
}

impl ReferenceTrace {
    pub fn new(samples: Vec<(f64, f64, f64)>) -> Result<Self, MetricsError> {
        if samples.is_empty() {
            return Err(MetricsError::EmptyReference);
        }
        for (idx, pair) in samples.windows(2).enumerate() {
            if pair[1].0 <= pair[0].0 {
                return Err(MetricsError::NonMonotonicTime(idx + 1));
            }
        }
        let n = samples.len() as f64;
        let mean_v = samples.iter().map(|s| s.1).sum::<f64>() / n;
        let mean_i = samples.iter().map(|s| s.2).sum::<f64>() / n;
        Ok(ReferenceTrace {
            samples,
            mean_v,
            mean_i,
        })
    }

    pub fn samples(&self) -> &[(f64, f64, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Model and reference values paired on one reference timestamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignedPair {
    pub t: f64,
    pub v_model: f64,
    pub i_model: f64,
    pub v_ref: f64,
    pub i_ref: f64,
}

/// Interpolate the model series onto the reference timestamps. Reference
/// points outside the model's time range are dropped; the pairing fails if
/// the ranges do not overlap at all.
pub fn align_traces(
    model: &[(f64, f64, f64)],
    reference: &ReferenceTrace,
) -> Result<Vec<AlignedPair>, MetricsError> {
    if model.is_empty() {
        return Err(MetricsError::NoOverlap);
    }
    let t0 = model[0].0;
    let t1 = model[model.len() - 1].0;
    let mut pairs = Vec::new();
    for &(t, v_ref, i_ref) in &reference.samples {
        if t < t0 || t > t1 {
            continue;
        }
        let idx = model.partition_point(|&(mt, _, _)| mt <= t);
        let (v_model, i_model) = if idx == 0 {
            (model[0].1, model[0].2)
        } else if idx == model.len() {
            (model[idx - 1].1, model[idx - 1].2)
        } else {
            let (ta, va, ia) = model[idx - 1];
            let (tb, vb, ib) = model[idx];
            let u = (t - ta) / (tb - ta);
            (va + (vb - va) * u, ia + (ib - ia) * u)
        };
        pairs.push(AlignedPair {
            t,
            v_model,
            i_model,
            v_ref,
            i_ref,
        });
    }
    if pairs.is_empty() {
        return Err(MetricsError::NoOverlap);
    }
    Ok(pairs)
}

fn in_region(v_ref: f64, region: Region) -> bool {
    match region {
        Region::On => v_ref < 0.0,
        Region::Off => v_ref > 0.0,
        Region::Full => true,
    }
}

/// Error over pre-aligned pairs.
pub fn rel_rms_error_aligned(pairs: &[AlignedPair], region: Region) -> Result<f64, MetricsError> {
    let selected: Vec<&AlignedPair> = pairs
        .iter()
        .filter(|p| in_region(p.v_ref, region))
        .collect();
    if selected.is_empty() {
        return Err(MetricsError::EmptyRegion { region });
    }
    let n = selected.len() as f64;
    let mean_v = selected.iter().map(|p| p.v_ref).sum::<f64>() / n;
    let mean_i = selected.iter().map(|p| p.i_ref).sum::<f64>() / n;
    if mean_v == 0.0 || mean_i == 0.0 {
        return Err(MetricsError::DegenerateReference {
            region,
            mean_v,
            mean_i,
        });
    }
    let sum_v: f64 = selected
        .iter()
        .map(|p| (p.v_model - p.v_ref) * (p.v_model - p.v_ref))
        .sum();
    let sum_i: f64 = selected
        .iter()
        .map(|p| (p.i_model - p.i_ref) * (p.i_model - p.i_ref))
        .sum();
    Ok(((sum_v / (mean_v * mean_v) + sum_i / (mean_i * mean_i)) / n).sqrt())
}

/// Align the model series onto the reference grid and evaluate the error
/// over the selected region.
pub fn rel_rms_error(
    model: &[(f64, f64, f64)],
    reference: &ReferenceTrace,
    region: Region,
) -> Result<f64, MetricsError> {
    let pairs = align_traces(model, reference)?;
    rel_rms_error_aligned(&pairs, region)
}
