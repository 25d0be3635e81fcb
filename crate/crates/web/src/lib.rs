//! wasm-bindgen bindings for the static demo page in `www/`.
//!
//! Each export takes plain strings and numbers and returns a JSON string.
//! The logic lives in [`ops`] so it can be tested natively.

use wasm_bindgen::prelude::*;

pub mod ops {
    use coarray_lab::bounds::{bound_report, BoundConstants};
    use coarray_lab::esprit::{coarray_esprit, direct_esprit};
    use coarray_lab::metrics::matching_distance;
    use coarray_lab::signal::{noise_power_for_snr, sample_snapshots};
    use coarray_lab::{SensorArray, SourceScene};
    use serde_json::json;

    fn parse_list(text: &str) -> Result<Vec<f64>, String> {
        text.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| format!("not a number: {t:?}")))
            .collect()
    }

    fn scene(omegas: &str, powers: &str, snr_db: f64) -> Result<SourceScene, String> {
        let w = parse_list(omegas)?;
        let mut p = parse_list(powers)?;
        if p.is_empty() {
            p = vec![1.0; w.len()];
        }
        let p_min = p.iter().copied().fold(f64::INFINITY, f64::min);
        SourceScene::new(w, p, noise_power_for_snr(p_min, snr_db)).map_err(|e| e.to_string())
    }

    fn array(spec: &str) -> Result<SensorArray, String> {
        spec.parse().map_err(|e: coarray_lab::Error| e.to_string())
    }

    /// Positions, weight function and redundancy of an array spec.
    pub fn inspect(spec: &str) -> Result<String, String> {
        let a = array(spec)?;
        let c = a.coarray();
        let weights: Vec<[i64; 2]> = c.iter_weights().map(|(i, w)| [i, w as i64]).collect();
        Ok(json!({
            "positions": a.positions(),
            "weights": weights,
            "m_ca": c.m_ca(),
            "hole_free": c.is_hole_free(),
            "redundancy": c.redundancy_coefficient().ok(),
        })
        .to_string())
    }

    /// One seeded trial of coarray (or direct) ESPRIT.
    pub fn estimate(
        spec: &str,
        omegas: &str,
        powers: &str,
        snr_db: f64,
        snapshots: usize,
        seed: u64,
        direct: bool,
    ) -> Result<String, String> {
        let a = array(spec)?;
        let s = scene(omegas, powers, snr_db)?;
        let y = sample_snapshots(&a, &s, snapshots, seed).map_err(|e| e.to_string())?;
        let est = if direct {
            direct_esprit(&y, &a, s.num_sources())
        } else {
            coarray_esprit(&y, &a, &a.coarray(), s.num_sources())
        }
        .map_err(|e| e.to_string())?;
        let md = matching_distance(s.omegas(), &est.omegas_hat).map_err(|e| e.to_string())?;
        Ok(json!({
            "truth": s.omegas(),
            "omegas_hat": est.omegas_hat,
            "psi_moduli": est.diagnostics.psi_moduli,
            "md": md.distance,
        })
        .to_string())
    }

    /// Bound report for a scene; ε and δ as in the CLI.
    pub fn bounds(
        spec: &str,
        omegas: &str,
        powers: &str,
        snr_db: f64,
        epsilon: f64,
        delta: f64,
    ) -> Result<String, String> {
        let a = array(spec)?;
        let s = scene(omegas, powers, snr_db)?;
        let r = bound_report(&a, &s, epsilon, delta, &BoundConstants::default())
            .map_err(|e| e.to_string())?;
        serde_json::to_string(&r).map_err(|e| e.to_string())
    }
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn inspect_array(spec: &str) -> Result<String, JsValue> {
    js(ops::inspect(spec))
}

#[wasm_bindgen]
pub fn estimate_doa(
    spec: &str,
    omegas: &str,
    powers: &str,
    snr_db: f64,
    snapshots: u32,
    seed: u32,
    direct: bool,
) -> Result<String, JsValue> {
    js(ops::estimate(spec, omegas, powers, snr_db, snapshots as usize, seed as u64, direct))
}

#[wasm_bindgen]
pub fn bound_summary(
    spec: &str,
    omegas: &str,
    powers: &str,
    snr_db: f64,
    epsilon: f64,
    delta: f64,
) -> Result<String, JsValue> {
    js(ops::bounds(spec, omegas, powers, snr_db, epsilon, delta))
}
