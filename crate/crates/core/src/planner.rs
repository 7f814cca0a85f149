//! Planning on top of the accumulated-error model: optimal Trotter numbers,
//! noise-rate requirements, phase diagrams and surface-code resources.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::ErrorModel;
use crate::format::format_f64;

/// `sum_{d=1}^r e^{-x d}`, stable for small `x`.
fn geometric_sum(x: f64, r: f64) -> f64 {
    if x == 0.0 {
        return r;
    }
    (-x).exp() * (-x * r).exp_m1() / (-x).exp_m1()
}

fn trotter_scale(p: usize, t: f64, r: f64) -> f64 {
    (t / r).powi(p as i32 + 1)
}

/// `sum_{d=1}^r [C γΥ e^{-c γΥ d} + B_p (t/r)^{p+1} e^{-b γΥ d}]`
/// via closed-form geometric sums.
pub fn model_accumulated_error(model: &ErrorModel, gamma: f64, r: usize, t: f64) -> f64 {
    let r = r as f64;
    let gu = gamma * model.upsilon as f64;
    model.c_prefactor * gu * geometric_sum(model.c_decay * gu, r)
        + model.b_prefactor * trotter_scale(model.order, t, r) * geometric_sum(model.b_decay * gu, r)
}

/// The same sum evaluated term by term.
pub fn model_accumulated_error_direct(model: &ErrorModel, gamma: f64, r: usize, t: f64) -> f64 {
    let gu = gamma * model.upsilon as f64;
    let scale = trotter_scale(model.order, t, r as f64);
    (1..=r)
        .map(|d| {
            let d = d as f64;
            model.c_prefactor * gu * (-model.c_decay * gu * d).exp()
                + model.b_prefactor * scale * (-model.b_decay * gu * d).exp()
        })
        .sum()
}

/// State-independent comparator `2 n γ r + B t^{p+1} / r^p`.
pub fn worst_case_accumulated_error(n: usize, gamma: f64, r: usize, t: f64, b: f64, p: usize) -> f64 {
    let r = r as f64;
    2.0 * n as f64 * gamma * r + b * t.powi(p as i32 + 1) / r.powi(p as i32)
}

/// Inputs of the worst-case comparator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseModel {
    pub n_qubits: usize,
    pub b_worst: f64,
    pub order: usize,
}

impl WorstCaseModel {
    /// The comparator written as an error model without decay: `CΥ = 2n`, `c = b = 0`.
    pub fn as_model(&self) -> ErrorModel {
        ErrorModel::new(2.0 * self.n_qubits as f64, 0.0, self.b_worst, 0.0, self.order, 1, self.n_qubits)
    }
}

/// `∂ acc / ∂γ`, summed term by term.
pub fn d_error_d_gamma(model: &ErrorModel, gamma: f64, r: usize, t: f64) -> f64 {
    let ups = model.upsilon as f64;
    let gu = gamma * ups;
    let scale = trotter_scale(model.order, t, r as f64);
    let (c, b) = (model.c_decay, model.b_decay);
    (1..=r)
        .map(|d| {
            let d = d as f64;
            model.c_prefactor * ups * (1.0 - c * gu * d) * (-c * gu * d).exp()
                - model.b_prefactor * b * ups * d * scale * (-b * gu * d).exp()
        })
        .sum()
}

/// `r = (p B_p / (C γΥ))^{1/(p+1)} t`
pub fn optimal_r_closed(model: &ErrorModel, gamma: f64, t: f64) -> f64 {
    let p = model.order as f64;
    (p * model.b_prefactor / (model.c_prefactor * gamma * model.upsilon as f64)).powf(1.0 / (p + 1.0)) * t
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalR {
    pub r_closed: f64,
    pub r_int: usize,
    pub error: f64,
    /// The minimum sits at the top of the search range; the true optimum may
    /// be larger (the model error keeps decreasing with `r`).
    pub at_boundary: bool,
}

/// Searches are exhaustive up to this many candidates, then log-grid + local.
const EXHAUSTIVE_LIMIT: usize = 200_000;

/// Integer minimizer of the model error on `[1, 10 ceil(r_closed)]`.
pub fn optimal_r(model: &ErrorModel, gamma: f64, t: f64) -> Result<OptimalR> {
    if !(gamma > 0.0) {
        return Err(Error::NoFiniteOptimum(format!(
            "noise rate {gamma} <= 0: the error decreases without bound in r"
        )));
    }
    if !(model.c_prefactor > 0.0) {
        return Err(Error::NoFiniteOptimum(
            "physical prefactor C = 0: the error decreases without bound in r".into(),
        ));
    }
    let r_closed = optimal_r_closed(model, gamma, t);
    let upper = ((10.0 * r_closed.ceil()).max(10.0)).min(1e15) as usize;
    let f = |r: usize| model_accumulated_error(model, gamma, r, t);
    let (r_int, error) = argmin_integer(f, upper);
    Ok(OptimalR {
        r_closed,
        r_int,
        error,
        at_boundary: r_int == upper && upper > 1,
    })
}

fn argmin_integer(f: impl Fn(usize) -> f64, upper: usize) -> (usize, f64) {
    let mut best = (1, f(1));
    let consider = |r: usize, best: &mut (usize, f64)| {
        let v = f(r);
        if v < best.1 {
            *best = (r, v);
        }
    };
    if upper <= EXHAUSTIVE_LIMIT {
        for r in 2..=upper {
            consider(r, &mut best);
        }
        return best;
    }
    // coarse geometric grid, then refine around the best candidates
    let mut grid = Vec::new();
    let mut r = 1.0f64;
    while r <= upper as f64 {
        grid.push(r.round() as usize);
        r *= 1.001;
    }
    grid.push(upper);
    grid.dedup();
    for &g in &grid {
        consider(g, &mut best);
    }
    let centre = best.0;
    let width = (centre / 500).max(2);
    for r in centre.saturating_sub(width).max(1)..=(centre + width).min(upper) {
        consider(r, &mut best);
    }
    best
}

/// `(1/(C B^{1/p})) (ε/t)^{1+1/p} p / (Υ (p+1)^{1+1/p})`
pub fn gamma_star_closed(model: &ErrorModel, epsilon: f64, t: f64) -> f64 {
    let p = model.order as f64;
    let e = 1.0 + 1.0 / p;
    (epsilon / t).powf(e) * p
        / (model.c_prefactor * model.b_prefactor.powf(1.0 / p) * model.upsilon as f64 * (p + 1.0).powf(e))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaStar {
    pub closed: f64,
    pub searched: f64,
    /// Failed assumptions of the closed form, and search diagnostics.
    pub warnings: Vec<String>,
}

pub const GAMMA_BRACKET: (f64, f64) = (1e-12, 1.0);

/// Minimal model error over `r` at noise rate `gamma`.
pub fn min_error(model: &ErrorModel, gamma: f64, t: f64) -> Result<f64> {
    Ok(optimal_r(model, gamma, t)?.error)
}

/// Largest γ whose optimal-r model error still meets `epsilon`, by bisection
/// in `log γ` on `[1e-12, 1]` to relative precision 1e-6.
pub fn gamma_star(model: &ErrorModel, epsilon: f64, t: f64) -> Result<GammaStar> {
    if !(epsilon > 0.0) || !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need epsilon > 0 and t > 0, got {epsilon} and {t}"
        )));
    }
    model.validate()?;
    let mut warnings = Vec::new();
    if model.c_decay >= model.c_prefactor {
        warnings.push(format!(
            "closed form assumes c < C (c = {}, C = {})",
            model.c_decay, model.c_prefactor
        ));
    }
    let (bmax, bmin) = (model.b_decay.max(model.c_decay), model.b_decay.min(model.c_decay));
    if bmax > 0.0 && bmin / bmax < 0.5 {
        warnings.push(format!(
            "closed form assumes b ≈ c (b = {}, c = {})",
            model.b_decay, model.c_decay
        ));
    }
    let g = |gamma: f64| -> Result<f64> { Ok(min_error(model, gamma, t)? - epsilon) };
    let (mut lo, mut hi) = GAMMA_BRACKET;
    // monotonicity check on a coarse grid over the bracket
    let probes: Vec<f64> = (0..=24).map(|k| lo * (hi / lo).powf(k as f64 / 24.0)).collect();
    let values: Vec<f64> = probes.iter().map(|&x| g(x)).collect::<Result<_>>()?;
    if values.windows(2).any(|w| w[1] < w[0] - 1e-12 * w[0].abs().max(1.0)) {
        warnings.push("minimal error is not monotone in γ on the search bracket".into());
    }
    if values[0] > 0.0 {
        return Err(Error::Unreachable(format!(
            "even γ = {lo:e} cannot reach ε = {epsilon} within the r search range"
        )));
    }
    if *values.last().unwrap() <= 0.0 {
        warnings.push("target met at the top of the bracket; γ* clipped to 1".into());
        return Ok(GammaStar {
            closed: gamma_star_closed(model, epsilon, t),
            searched: hi,
            warnings,
        });
    }
    // tighten the bracket from the probes
    for (w, x) in values.windows(2).zip(probes.windows(2)) {
        if w[0] <= 0.0 && w[1] > 0.0 {
            lo = x[0];
            hi = x[1];
            break;
        }
    }
    while hi / lo - 1.0 > 1e-6 {
        let mid = (lo * hi).sqrt();
        if g(mid)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(GammaStar {
        closed: gamma_star_closed(model, epsilon, t),
        searched: lo,
        warnings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub gamma: f64,
    pub r: usize,
    pub acc_model: f64,
    pub acc_worst: f64,
    /// `1 - acc_model / acc_worst`, `NaN` when the worst case is zero.
    pub reduction: f64,
}

pub const PHASE_CSV_HEADER: &str = "gamma,r,acc_model,acc_worst,reduction";

/// Model and worst-case accumulated errors on a `(γ, r)` grid, γ-major.
pub fn phase_diagram(
    model: &ErrorModel,
    gammas: &[f64],
    rs: &[usize],
    t: f64,
    n: usize,
    b_worst: f64,
) -> Result<Vec<PhaseCell>> {
    if gammas.is_empty() || rs.is_empty() {
        return Err(Error::InvalidParameter("phase diagram grids must be nonempty".into()));
    }
    if rs.contains(&0) {
        return Err(Error::InvalidParameter("Trotter numbers must be >= 1".into()));
    }
    let mut cells = Vec::with_capacity(gammas.len() * rs.len());
    for &gamma in gammas {
        for &r in rs {
            let acc_model = model_accumulated_error(model, gamma, r, t);
            let acc_worst = worst_case_accumulated_error(n, gamma, r, t, b_worst, model.order);
            let reduction = if acc_worst > 0.0 { 1.0 - acc_model / acc_worst } else { f64::NAN };
            cells.push(PhaseCell {
                gamma,
                r,
                acc_model,
                acc_worst,
                reduction,
            });
        }
    }
    Ok(cells)
}

pub fn phase_csv(cells: &[PhaseCell]) -> String {
    let mut s = String::from(PHASE_CSV_HEADER);
    s.push('\n');
    for c in cells {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            format_f64(c.gamma),
            c.r,
            format_f64(c.acc_model),
            format_f64(c.acc_worst),
            format_f64(c.reduction)
        );
    }
    s
}

/// Surface-code parameters: `γ_L = γ0 ratio^{d_c / 2}` with `ratio = γ_ph / γ_thr`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FtParams {
    pub gamma0: f64,
    pub ratio: f64,
}

impl Default for FtParams {
    fn default() -> Self {
        Self {
            gamma0: 0.02985,
            ratio: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FtResources {
    /// `2 log(γ_L/γ0) / log(ratio)` before rounding.
    pub raw_distance: f64,
    /// Smallest odd integer >= the raw distance.
    pub d_c: u64,
    pub n_c: u64,
}

pub fn ft_resources(gamma_l: f64, params: &FtParams) -> Result<FtResources> {
    if !(params.ratio > 0.0 && params.ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "physical-to-threshold ratio must lie in (0, 1), got {}",
            params.ratio
        )));
    }
    if !(params.gamma0 > 0.0) {
        return Err(Error::InvalidParameter(format!("γ0 must be positive, got {}", params.gamma0)));
    }
    if !(gamma_l > 0.0) || gamma_l >= params.gamma0 {
        return Err(Error::InvalidParameter(format!(
            "logical rate {gamma_l} must lie in (0, γ0 = {})",
            params.gamma0
        )));
    }
    let raw = 2.0 * (gamma_l / params.gamma0).ln() / params.ratio.ln();
    // absorb rounding noise so exact odd distances are not bumped up
    let mut d = (raw - 1e-9).ceil().max(1.0) as u64;
    if d % 2 == 0 {
        d += 1;
    }
    Ok(FtResources {
        raw_distance: raw,
        d_c: d,
        n_c: d * d,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanSide {
    pub r_opt: usize,
    pub r_closed: f64,
    pub gamma_star: f64,
    pub gamma_star_closed: f64,
    pub min_error: f64,
    pub resources: FtResources,
    /// `r_opt * N_c`
    pub cost: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub epsilon: f64,
    pub time: f64,
    pub ft: FtParams,
    pub model: PlanSide,
    pub worst: PlanSide,
    /// `1 - (r_opt N_c) / (r~_opt N~_c)` with odd-rounded distances.
    pub saving: f64,
    /// The same with the unrounded distances squared.
    pub saving_unrounded: f64,
    #[serde(default)]
    pub provenance: Vec<(String, String)>,
}

fn plan_side(model: &ErrorModel, epsilon: f64, t: f64, ft: &FtParams) -> Result<PlanSide> {
    let gs = gamma_star(model, epsilon, t)?;
    let opt = optimal_r(model, gs.searched, t)?;
    let resources = ft_resources(gs.searched, ft)?;
    let mut warnings = gs.warnings;
    if opt.at_boundary {
        warnings.push("optimal r at the edge of the search range".into());
    }
    Ok(PlanSide {
        r_opt: opt.r_int,
        r_closed: opt.r_closed,
        gamma_star: gs.searched,
        gamma_star_closed: gs.closed,
        min_error: opt.error,
        resources,
        cost: opt.r_int as f64 * resources.n_c as f64,
        warnings,
    })
}

/// Plans with the state-dependent model and with the worst-case comparator at
/// their respective noise requirements, and compares the resulting costs.
pub fn plan_comparison(
    model: &ErrorModel,
    worst: &WorstCaseModel,
    epsilon: f64,
    t: f64,
    ft: &FtParams,
) -> Result<PlanResult> {
    let worst_model = worst.as_model();
    plan_comparison_models(model, &worst_model, epsilon, t, ft)
}

/// [`plan_comparison`] with an arbitrary model as the comparator.
pub fn plan_comparison_models(
    model: &ErrorModel,
    comparator: &ErrorModel,
    epsilon: f64,
    t: f64,
    ft: &FtParams,
) -> Result<PlanResult> {
    let m = plan_side(model, epsilon, t, ft)?;
    let w = plan_side(comparator, epsilon, t, ft)?;
    let saving = 1.0 - m.cost / w.cost;
    let saving_unrounded = 1.0
        - (m.r_opt as f64 * m.resources.raw_distance.powi(2))
            / (w.r_opt as f64 * w.resources.raw_distance.powi(2));
    Ok(PlanResult {
        epsilon,
        time: t,
        ft: *ft,
        model: m,
        worst: w,
        saving,
        saving_unrounded,
        provenance: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> ErrorModel {
        ErrorModel::new(1.2, 0.4, 3.0, 0.45, 2, 4, 10)
    }

    #[test]
    fn zero_noise_limit() {
        let m = model();
        let v = model_accumulated_error(&m, 0.0, 50, 10.0);
        assert!((v - 3.0 * 1000.0 / 2500.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_loop() {
        let m = model();
        for (g, r) in [(1e-3, 1), (3e-3, 100), (1e-5, 731)] {
            let a = model_accumulated_error(&m, g, r, 10.0);
            let b = model_accumulated_error_direct(&m, g, r, 10.0);
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn zero_noise_has_no_optimum() {
        assert!(matches!(optimal_r(&model(), 0.0, 10.0), Err(Error::NoFiniteOptimum(_))));
    }

    #[test]
    fn worst_case_limits() {
        assert!((worst_case_accumulated_error(4, 0.0, 10, 2.0, 1.5, 2) - 1.5 * 8.0 / 100.0).abs() < 1e-15);
        assert!((worst_case_accumulated_error(4, 0.01, 1, 2.0, 0.0, 2) - 0.08).abs() < 1e-15);
    }

    #[test]
    fn ft_reference_point() {
        let r = ft_resources(4.05e-6, &FtParams::default()).unwrap();
        assert_eq!((r.d_c, r.n_c), (27, 729));
        assert!((r.raw_distance - 25.695).abs() < 1e-3);
        // exactly three
        let g = 0.02985 * 0.5f64.powf(1.5);
        assert_eq!(ft_resources(g, &FtParams::default()).unwrap().d_c, 3);
        assert!(ft_resources(0.05, &FtParams::default()).is_err());
    }

    #[test]
    fn identical_models_save_nothing() {
        let m = model();
        let p = plan_comparison_models(&m, &m, 0.1, 10.0, &FtParams::default()).unwrap();
        assert_eq!(p.saving, 0.0);
    }
}
