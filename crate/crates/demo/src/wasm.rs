use wasm_bindgen::prelude::*;

use crate::{gp_slice, synthetic_curves, williams_otto_map, SliceRequest};

fn to_json<T: serde::Serialize>(r: crate::Result<T>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// JSON `{x, mean, lower, upper}` for a 1-D GP fitted to `(xs, ys)`.
#[wasm_bindgen(js_name = gpSlice)]
#[allow(clippy::too_many_arguments)]
pub fn gp_slice_js(
    xs: Vec<f64>,
    ys: Vec<f64>,
    lo: f64,
    hi: f64,
    points: usize,
    signal_variance: f64,
    lengthscale: f64,
    noise_variance: f64,
    beta_sqrt: f64,
) -> Result<String, JsError> {
    to_json(gp_slice(&SliceRequest { xs, ys, lo, hi, points, signal_variance, lengthscale, noise_variance, beta_sqrt }))
}

#[wasm_bindgen(js_name = syntheticCurves)]
pub fn synthetic_curves_js(seed: u32, horizon: usize, eta: f64) -> Result<String, JsError> {
    to_json(synthetic_curves(seed as u64, horizon, eta))
}

#[wasm_bindgen(js_name = williamsOttoMap)]
pub fn williams_otto_map_js(resolution: usize, price_scale: f64) -> Result<String, JsError> {
    to_json(williams_otto_map(resolution, price_scale))
}
