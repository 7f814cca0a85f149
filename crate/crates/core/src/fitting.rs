//! Log-linear decay fits and the empirical accumulated-error model
//!
//! `acc(r) = sum_d C γΥ e^{-c γΥ d} + B_p (t/r)^{p+1} e^{-b γΥ d}`
//!
//! fitted from simulated traces and extrapolated in system size.

use std::fs;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::metrics::ErrorTrace;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub prefactor: f64,
    pub rate: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub r_squared: f64,
}

/// Ordinary least squares of `ln(value)` against the 1-based step number over
/// `window` (indices into `series`). Returns `value ≈ prefactor * exp(-rate * d)`.
pub fn fit_exponential_decay(series: &[f64], window: Range<usize>) -> Result<DecayFit> {
    if window.end > series.len() || window.start >= window.end {
        return Err(Error::InvalidParameter(format!(
            "fit window {window:?} invalid for a series of length {}",
            series.len()
        )));
    }
    if window.len() < 2 {
        return Err(Error::InsufficientGrid {
            what: "points in the fit window",
            needed: 2,
            found: window.len(),
        });
    }
    let mut xs = Vec::with_capacity(window.len());
    let mut ys = Vec::with_capacity(window.len());
    for i in window {
        let v = series[i];
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveValue { index: i, value: v });
        }
        xs.push((i + 1) as f64);
        ys.push(v.ln());
    }
    let line = linear_fit(&xs, &ys);
    Ok(DecayFit {
        prefactor: line.intercept.exp(),
        rate: -line.slope,
        r_squared: line.r_squared,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub r_squared: f64,
}

impl LinearFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// OLS line with intercept. `R^2 = 1` when the response is constant.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    LinearFit {
        intercept,
        slope,
        r_squared: r_squared(xs, ys, |x| intercept + slope * x, my),
    }
}

fn r_squared(xs: &[f64], ys: &[f64], f: impl Fn(f64) -> f64, centre: f64) -> f64 {
    let ss_tot: f64 = ys.iter().map(|y| (y - centre).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - f(*x)).powi(2)).sum();
    if ss_tot <= f64::EPSILON * ys.iter().map(|y| y * y).sum::<f64>().max(f64::MIN_POSITIVE) {
        return 1.0;
    }
    (1.0 - ss_res / ss_tot).max(0.0)
}

/// Least squares `y ≈ k x` through the origin; returns `(k, R^2)` with the
/// uncentered `R^2` appropriate for a model without intercept.
pub fn fit_through_origin(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let k = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (k, r_squared(xs, ys, |x| k * x, 0.0))
}

/// Fit settings shared by every trace on a noise-rate grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub order: usize,
    pub n_qubits: usize,
    pub time: f64,
    pub steps: usize,
    /// Layer count written into the model (enters as `γΥ`).
    pub upsilon: usize,
    /// First step index (0-based into the series) included in the fits.
    pub window_start: usize,
    pub placement: String,
}

/// A trace simulated at noise rate `gamma`.
#[derive(Clone, Debug)]
pub struct GammaTrace {
    pub gamma: f64,
    pub trace: ErrorTrace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerGammaFit {
    pub gamma: f64,
    pub physical: DecayFit,
    pub algorithmic: DecayFit,
    /// `algorithmic.prefactor / (t/r)^{p+1}`
    pub b_estimate: f64,
}

/// JSON has no NaN; serde_json writes it as `null`, so read `null` back as NaN.
fn nan_from_null<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitProvenance {
    pub source: String,
    pub gammas: Vec<f64>,
    pub sizes: Vec<usize>,
    #[serde(deserialize_with = "nan_from_null")]
    pub time: f64,
    pub steps: usize,
    pub window: (usize, usize),
    pub placement: String,
    pub per_gamma: Vec<PerGammaFit>,
    #[serde(deserialize_with = "nan_from_null")]
    pub r2_c: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub r2_c_decay: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub r2_b_decay: f64,
    /// `(max - min) / mean` of the per-γ algorithmic prefactors.
    #[serde(deserialize_with = "nan_from_null")]
    pub b_spread: f64,
    /// `B(γ) ≈ intercept + slope γ`, recorded alongside the constant fit.
    pub b_linear_in_gamma: Option<LinearFit>,
    pub decay_clamped: bool,
}

/// Coefficients of the accumulated-error model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    #[serde(rename = "C")]
    pub c_prefactor: f64,
    #[serde(rename = "c")]
    pub c_decay: f64,
    #[serde(rename = "B_p")]
    pub b_prefactor: f64,
    #[serde(rename = "b")]
    pub b_decay: f64,
    pub order: usize,
    pub upsilon: usize,
    pub n_qubits: usize,
    /// Worst-case one-step prefactor `2 ||PF - U|| / (t/r)^{p+1}`, when measured.
    #[serde(default)]
    pub worst_case_b: Option<f64>,
    #[serde(default)]
    pub provenance: FitProvenance,
}

impl ErrorModel {
    pub fn new(c: f64, c_decay: f64, b: f64, b_decay: f64, order: usize, upsilon: usize, n: usize) -> Self {
        Self {
            c_prefactor: c,
            c_decay,
            b_prefactor: b,
            b_decay,
            order,
            upsilon,
            n_qubits: n,
            worst_case_b: None,
            provenance: FitProvenance::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.c_prefactor, self.c_decay, self.b_prefactor, self.b_decay];
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "model coefficients must be finite and nonnegative, got {vals:?}"
            )));
        }
        if self.order == 0 || self.upsilon == 0 {
            return Err(Error::InvalidParameter("model order and layer count must be positive".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let m: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        m.validate()?;
        Ok(m)
    }
}

/// Fits `(C, c, B_p, b)` from traces on a grid of at least three distinct noise
/// rates. Physical prefactors and both decay rates are regressed through the
/// origin against `γΥ`; the algorithmic prefactor is taken as the mean of the
/// per-γ estimates.
pub fn fit_model_coefficients(traces: &[GammaTrace], config: &FitConfig) -> Result<ErrorModel> {
    let mut gammas: Vec<f64> = traces.iter().map(|t| t.gamma).collect();
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();
    if gammas.len() < 3 {
        return Err(Error::InsufficientGrid {
            what: "noise rates",
            needed: 3,
            found: gammas.len(),
        });
    }
    let scale = (config.time / config.steps as f64).powi(config.order as i32 + 1);
    let ups = config.upsilon as f64;
    let mut per = Vec::with_capacity(traces.len());
    let mut window_end = 0;
    for gt in traces {
        let phys = gt.trace.phys_series();
        let alg = gt.trace.alg_series();
        window_end = phys.len();
        let w = config.window_start..phys.len();
        let physical = fit_exponential_decay(&phys, w.clone())?;
        let algorithmic = fit_exponential_decay(&alg, w)?;
        per.push(PerGammaFit {
            gamma: gt.gamma,
            physical,
            algorithmic,
            b_estimate: algorithmic.prefactor / scale,
        });
    }
    let xs: Vec<f64> = per.iter().map(|f| f.gamma * ups).collect();
    let (c, r2_c) = fit_through_origin(&xs, &per.iter().map(|f| f.physical.prefactor).collect::<Vec<_>>());
    let (c_decay, r2_cd) = fit_through_origin(&xs, &per.iter().map(|f| f.physical.rate).collect::<Vec<_>>());
    let (b_decay, r2_bd) = fit_through_origin(&xs, &per.iter().map(|f| f.algorithmic.rate).collect::<Vec<_>>());
    let bs: Vec<f64> = per.iter().map(|f| f.b_estimate).collect();
    let b_mean = bs.iter().sum::<f64>() / bs.len() as f64;
    let spread = (bs.iter().cloned().fold(f64::MIN, f64::max) - bs.iter().cloned().fold(f64::MAX, f64::min)) / b_mean;
    let b_lin = linear_fit(&per.iter().map(|f| f.gamma).collect::<Vec<_>>(), &bs);
    let model = ErrorModel {
        c_prefactor: c.max(0.0),
        c_decay: c_decay.max(0.0),
        b_prefactor: b_mean,
        b_decay: b_decay.max(0.0),
        order: config.order,
        upsilon: config.upsilon,
        n_qubits: config.n_qubits,
        worst_case_b: None,
        provenance: FitProvenance {
            source: "fit".into(),
            gammas: per.iter().map(|f| f.gamma).collect(),
            sizes: vec![config.n_qubits],
            time: config.time,
            steps: config.steps,
            window: (config.window_start, window_end),
            placement: config.placement.clone(),
            per_gamma: per,
            r2_c,
            r2_c_decay: r2_cd,
            r2_b_decay: r2_bd,
            b_spread: spread,
            b_linear_in_gamma: Some(b_lin),
            decay_clamped: false,
        },
    };
    Ok(model)
}

/// Linear-in-`n` extrapolation of `C` and `B_p` (and the worst-case prefactor
/// when every input has one). Decay constants are either the mean of the fits
/// or fixed to `1/2` when `clamp_decay` is set.
pub fn extrapolate_in_n(models: &[ErrorModel], target_n: usize, clamp_decay: bool) -> Result<ErrorModel> {
    let mut sizes: Vec<usize> = models.iter().map(|m| m.n_qubits).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 3 {
        return Err(Error::InsufficientGrid {
            what: "system sizes",
            needed: 3,
            found: sizes.len(),
        });
    }
    let first = &models[0];
    if models.iter().any(|m| m.order != first.order || m.upsilon != first.upsilon) {
        return Err(Error::InvalidParameter(
            "models to extrapolate must share order and layer count".into(),
        ));
    }
    let ns: Vec<f64> = models.iter().map(|m| m.n_qubits as f64).collect();
    let c_fit = linear_fit(&ns, &models.iter().map(|m| m.c_prefactor).collect::<Vec<_>>());
    let b_fit = linear_fit(&ns, &models.iter().map(|m| m.b_prefactor).collect::<Vec<_>>());
    let x = target_n as f64;
    let mean = |f: fn(&ErrorModel) -> f64| models.iter().map(f).sum::<f64>() / models.len() as f64;
    let (c_decay, b_decay) = if clamp_decay {
        (0.5, 0.5)
    } else {
        (mean(|m| m.c_decay), mean(|m| m.b_decay))
    };
    let worst_case_b = if models.iter().all(|m| m.worst_case_b.is_some()) {
        let w = linear_fit(&ns, &models.iter().map(|m| m.worst_case_b.unwrap()).collect::<Vec<_>>());
        Some(w.eval(x).max(0.0))
    } else {
        None
    };
    Ok(ErrorModel {
        c_prefactor: c_fit.eval(x).max(0.0),
        c_decay,
        b_prefactor: b_fit.eval(x).max(0.0),
        b_decay,
        order: first.order,
        upsilon: first.upsilon,
        n_qubits: target_n,
        worst_case_b,
        provenance: FitProvenance {
            source: format!("extrapolated from n = {sizes:?}"),
            gammas: first.provenance.gammas.clone(),
            sizes,
            time: first.provenance.time,
            steps: first.provenance.steps,
            window: first.provenance.window,
            placement: first.provenance.placement.clone(),
            per_gamma: Vec::new(),
            r2_c: c_fit.r_squared,
            r2_c_decay: f64::NAN,
            r2_b_decay: b_fit.r_squared,
            b_spread: f64::NAN,
            b_linear_in_gamma: None,
            decay_clamped: clamp_decay,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential_recovered() {
        let s: Vec<f64> = (1..=50).map(|d| 0.5 * (-0.003 * d as f64).exp()).collect();
        let f = fit_exponential_decay(&s, 0..50).unwrap();
        assert!((f.prefactor - 0.5).abs() < 1e-9);
        assert!((f.rate - 0.003).abs() < 1e-9);
        assert!((f.r_squared - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_series() {
        let f = fit_exponential_decay(&[0.2; 10], 0..10).unwrap();
        assert!(f.rate.abs() < 1e-15);
        assert!((f.prefactor - 0.2).abs() < 1e-15);
        assert_eq!(f.r_squared, 1.0);
    }

    #[test]
    fn nonpositive_rejected_with_index() {
        let s = [1.0, 0.5, 0.0, 0.1];
        assert!(matches!(
            fit_exponential_decay(&s, 0..4),
            Err(Error::NonPositiveValue { index: 2, .. })
        ));
        // outside the window is fine
        assert!(fit_exponential_decay(&s, 0..2).is_ok());
    }

    #[test]
    fn exact_linear_extrapolation() {
        let models: Vec<ErrorModel> = [4, 6, 8]
            .iter()
            .map(|&n| ErrorModel::new(2.0 * n as f64, 0.3, 0.1 * n as f64, 0.2, 2, 4, n))
            .collect();
        let m = extrapolate_in_n(&models, 20, true).unwrap();
        assert!((m.c_prefactor - 40.0).abs() < 1e-12);
        assert!((m.b_prefactor - 2.0).abs() < 1e-12);
        assert_eq!((m.c_decay, m.b_decay), (0.5, 0.5));
        let raw = extrapolate_in_n(&models, 20, false).unwrap();
        assert!((raw.c_decay - 0.3).abs() < 1e-15);
        assert!(extrapolate_in_n(&models[..2], 20, true).is_err());
    }
}
