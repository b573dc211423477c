use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Minimum number of reference sizes for a timing fit.
pub const MIN_SIZES: usize = 4;

/// Least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl LinearFit {
    pub fn at(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument("x and y lengths differ".into()));
    }
    if xs.len() < MIN_SIZES {
        return Err(Error::TooFewSizes {
            needed: MIN_SIZES,
            got: xs.len(),
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("timing sizes must not all be equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Least-squares constant: the mean.
pub fn constant_fit(ys: &[f64]) -> Result<f64> {
    if ys.len() < MIN_SIZES {
        return Err(Error::TooFewSizes {
            needed: MIN_SIZES,
            got: ys.len(),
        });
    }
    Ok(ys.iter().sum::<f64>() / ys.len() as f64)
}

/// Reference size at which a linear-cost method becomes slower than a
/// constant-cost one; `None` when the lines never meet at a positive size.
pub fn crossover(scan: &LinearFit, constant: f64) -> Option<f64> {
    if scan.slope == 0.0 {
        return None;
    }
    let n = (constant - scan.intercept) / scan.slope;
    (n.is_finite() && n > 0.0).then_some(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeTiming {
    pub n_ref: usize,
    pub mean_seconds: f64,
    pub std_seconds: f64,
    pub median_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodTiming {
    pub method: String,
    /// `true` for methods expected to scale with the reference size.
    pub scan: bool,
    pub sizes: Vec<SizeTiming>,
    pub linear: Option<LinearFit>,
    pub constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub methods: Vec<MethodTiming>,
    /// Crossover of each scan method against the first constant method.
    pub crossovers: Vec<(String, Option<f64>)>,
}

impl TimingReport {
    /// Fits every method (linear for scans, constant otherwise) and computes
    /// crossovers.
    pub fn from_timings(mut methods: Vec<MethodTiming>) -> Result<Self> {
        for m in methods.iter_mut() {
            let xs: Vec<f64> = m.sizes.iter().map(|s| s.n_ref as f64).collect();
            let ys: Vec<f64> = m.sizes.iter().map(|s| s.mean_seconds).collect();
            m.linear = Some(linear_fit(&xs, &ys)?);
            m.constant = if m.scan { None } else { Some(constant_fit(&ys)?) };
        }
        let constant = methods.iter().find_map(|m| m.constant);
        let crossovers = methods
            .iter()
            .filter(|m| m.scan)
            .map(|m| {
                let c = constant.and_then(|c| crossover(m.linear.as_ref().expect("fitted above"), c));
                (m.method.clone(), c)
            })
            .collect();
        Ok(TimingReport { methods, crossovers })
    }

    pub fn method(&self, name: &str) -> Option<&MethodTiming> {
        self.methods.iter().find(|m| m.method == name)
    }
}
