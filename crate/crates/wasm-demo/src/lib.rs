//! Browser bindings for the `www/` demo page.
//!
//! The plain functions are what the tests exercise; the `#[wasm_bindgen]`
//! wrappers only convert types.

use lmc_core::integrand::by_name;
use lmc_core::numeric::floor_root;
use lmc_core::{
    crude_mc, lmc_ucb, lmc_ucb_traced, uniform_stratified, ConfidenceSource, Integrand,
    LmcUcbConfig, Phase, RngSpec,
};
use wasm_bindgen::prelude::*;

/// Points drawn by one LMC-UCB run on a 1-d function.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct SampleView {
    strata: usize,
    sbar: u64,
    estimate: f64,
    xs: Vec<f64>,
    values: Vec<f64>,
    phases: Vec<u8>,
    substrata: Vec<u32>,
}

#[wasm_bindgen]
impl SampleView {
    #[wasm_bindgen(getter)]
    pub fn strata(&self) -> usize {
        self.strata
    }
    #[wasm_bindgen(getter)]
    pub fn sbar(&self) -> u32 {
        self.sbar as u32
    }
    #[wasm_bindgen(getter)]
    pub fn estimate(&self) -> f64 {
        self.estimate
    }
    #[wasm_bindgen(getter)]
    pub fn xs(&self) -> Vec<f64> {
        self.xs.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }
    /// 0 = initialization, 1 = main, 2 = leftover.
    #[wasm_bindgen(getter)]
    pub fn phases(&self) -> Vec<u8> {
        self.phases.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn substrata(&self) -> Vec<u32> {
        self.substrata.clone()
    }
}

fn lookup(name: &str, dim: usize) -> Result<Integrand, String> {
    let f = by_name(name).ok_or_else(|| format!("unknown function `{name}`"))?;
    if f.dim() != dim {
        return Err(format!(
            "`{name}` is {}-dimensional, expected {dim}",
            f.dim()
        ));
    }
    Ok(f)
}

/// `floor(sqrt(n)^(1/d))^d` strata.
fn default_strata(n: u64, dim: usize) -> usize {
    let side = floor_root(n, 2 * dim as u32);
    side.pow(dim as u32) as usize
}

fn config(n: u64, strata: usize, scale: f64) -> LmcUcbConfig {
    LmcUcbConfig::new(strata, n, 0.05, ConfidenceSource::Override(scale))
}

/// Samples one LMC-UCB run of a 1-d corpus function with confidence scale `scale`.
pub fn sample_positions(name: &str, n: u64, scale: f64, seed: u64) -> Result<SampleView, String> {
    let f = lookup(name, 1)?;
    let strata = default_strata(n, 1);
    let (report, trace) = lmc_ucb_traced(&f, &config(n, strata, scale), RngSpec::new(seed, 0))
        .map_err(|e| e.to_string())?;
    Ok(SampleView {
        strata,
        sbar: report.sbar.unwrap_or(0),
        estimate: report.estimate,
        xs: trace.iter().map(|p| p.x[0]).collect(),
        values: trace.iter().map(|p| p.value).collect(),
        phases: trace
            .iter()
            .map(|p| match p.phase {
                Phase::Initialization => 0,
                Phase::Main => 1,
                Phase::Leftover => 2,
            })
            .collect(),
        substrata: report.strata.iter().map(|s| s.substrata as u32).collect(),
    })
}

/// Empirical MSE of crude, uniform-stratified and LMC-UCB on a 1-d function.
/// Returns rows `[n, crude, uniform, lmcucb]`, flattened.
pub fn mse_curve(
    name: &str,
    budgets: &[u64],
    reps: u64,
    scale: f64,
    seed: u64,
) -> Result<Vec<f64>, String> {
    let f = lookup(name, 1)?;
    let mu = f.exact_integral().ok_or("function has no exact integral")?;
    let mut out = Vec::with_capacity(4 * budgets.len());
    for &n in budgets {
        let cfg = config(n, default_strata(n, 1), scale);
        let mut sq = [0.0f64; 3];
        for r in 0..reps {
            let rng = |tag| RngSpec::new(seed ^ tag, r);
            let est = [
                crude_mc(&f, n, rng(1)),
                uniform_stratified(&f, n, rng(2)),
                lmc_ucb(&f, &cfg, rng(3)),
            ];
            for (acc, e) in sq.iter_mut().zip(est) {
                *acc += (e.map_err(|e| e.to_string())?.estimate - mu).powi(2);
            }
        }
        out.push(n as f64);
        out.extend(sq.iter().map(|s| s / reps as f64));
    }
    Ok(out)
}

/// Sub-strata chosen per stratum for the 2-d product of sines.
/// Returns `S_k` in row-major order of the `side x side` stratum grid.
pub fn allocation_grid(n: u64, side: u64, scale: f64, seed: u64) -> Result<Vec<u32>, String> {
    let f = lookup("sinprod2d", 2)?;
    let cfg = config(n, (side * side) as usize, scale);
    let report = lmc_ucb(&f, &cfg, RngSpec::new(seed, 0)).map_err(|e| e.to_string())?;
    Ok(report.strata.iter().map(|s| s.substrata as u32).collect())
}

/// `m` evenly spaced values of a 1-d function on [0, 1), for drawing its curve.
pub fn function_curve(name: &str, m: usize) -> Result<Vec<f64>, String> {
    let f = lookup(name, 1)?;
    Ok((0..m).map(|i| f.eval(&[i as f64 / m as f64])).collect())
}

#[wasm_bindgen(js_name = samplePositions)]
pub fn sample_positions_js(
    name: &str,
    n: u32,
    scale: f64,
    seed: u32,
) -> Result<SampleView, JsError> {
    sample_positions(name, n.into(), scale, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = mseCurve)]
pub fn mse_curve_js(
    name: &str,
    budgets: Vec<u32>,
    reps: u32,
    scale: f64,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    let budgets: Vec<u64> = budgets.into_iter().map(u64::from).collect();
    mse_curve(name, &budgets, reps.into(), scale, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = allocationGrid)]
pub fn allocation_grid_js(n: u32, side: u32, scale: f64, seed: u32) -> Result<Vec<u32>, JsError> {
    allocation_grid(n.into(), side.into(), scale, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = functionCurve)]
pub fn function_curve_js(name: &str, m: usize) -> Result<Vec<f64>, JsError> {
    function_curve(name, m).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oscillator_run_matches_budget() {
        let v = sample_positions("oscillator1d", 100, 10.0, 1).unwrap();
        assert_eq!(v.strata, 10);
        assert_eq!(v.sbar, 3);
        assert_eq!(v.xs.len(), v.values.len());
        assert_eq!(v.phases.iter().filter(|&&p| p == 0).count(), 30);
        assert!(v.xs.len() <= 100);
        assert!(v.xs.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn mse_rows_have_four_columns() {
        let rows = mse_curve("linear1d", &[100, 400], 50, 10.0, 2).unwrap();
        assert_eq!(rows.len(), 8);
        assert_eq!(rows[0], 100.0);
        assert!(rows[1] > rows[2], "crude should lose to uniform");
    }

    #[test]
    fn allocation_grid_has_one_count_per_stratum() {
        let g = allocation_grid(1024, 4, 1.0, 3).unwrap();
        assert_eq!(g.len(), 16);
        assert!(g
            .iter()
            .all(|&s| floor_root(s as u64, 2).pow(2) == s as u64));
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        assert!(sample_positions("sinprod2d", 100, 1.0, 0).is_err());
        assert!(function_curve("nope", 10).is_err());
    }
}
