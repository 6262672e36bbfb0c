//! Browser bindings. Each export returns a JSON string ready for plotting.

use serde_json::{json, Value};
use vlc_core::channel::{propagate, synthesize_waveform};
use vlc_core::harness::{
    prbs_generate, run_sweep, run_transient, DistanceSchedule, ExperimentConfig,
};
use vlc_core::ppm::{encode_bits, ModulationScheme};
use vlc_core::receiver::{comparator, measure_window, slot_decide};
use vlc_core::threshold::{init_threshold, ThresholdMethod};
use wasm_bindgen::prelude::*;

const GRID_CM: [f64; 9] = [10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0];

/// Link used by every view: fixed threshold tuned at `tuned_cm`, adaptive
/// bounds spanning the strongest level on the grid.
fn base_config(
    scheme: &str,
    sigma0: f64,
    sigma1: f64,
    tuned_cm: f64,
) -> Result<ExperimentConfig, String> {
    let scheme: ModulationScheme = scheme.parse().map_err(|e| format!("{e}"))?;
    let mut cfg = ExperimentConfig {
        scheme,
        distances: GRID_CM.to_vec(),
        ..ExperimentConfig::default()
    };
    cfg.channel.noise_sigma0 = sigma0;
    cfg.channel.noise_sigma1 = sigma1;
    cfg.threshold.scheme = scheme;
    cfg.threshold.fixed_theta = cfg
        .calibrated_threshold(tuned_cm)
        .map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn round_bits(bits: u32, scheme: ModulationScheme) -> usize {
    let bps = scheme.bits_per_symbol();
    (bits as usize / bps).max(1) * bps
}

pub fn ber_curves_json(scheme: &str, sigma0: f64, sigma1: f64, bits: u32) -> Result<Value, String> {
    let mut cfg = base_config(scheme, sigma0, sigma1, GRID_CM[0])?;
    cfg.bit_count = round_bits(bits, cfg.scheme);
    let mut curves = serde_json::Map::new();
    for method in ThresholdMethod::all() {
        cfg.method = method;
        let points = run_sweep(&cfg).map_err(|e| e.to_string())?;
        curves.insert(
            method.name().to_string(),
            json!({
                "ber": points.iter().map(|p| p.ber).collect::<Vec<_>>(),
                "throughput": points.iter().map(|p| p.throughput).collect::<Vec<_>>(),
            }),
        );
    }
    Ok(json!({ "distance": GRID_CM, "methods": curves }))
}

pub fn step_response_json(
    scheme: &str,
    method: &str,
    from_cm: f64,
    to_cm: f64,
    sigma0: f64,
    bits: u32,
) -> Result<Value, String> {
    let mut cfg = base_config(scheme, sigma0, 0.0, from_cm)?;
    cfg.method = method.parse().map_err(|e| format!("{e}"))?;
    cfg.bit_count = round_bits(bits, cfg.scheme);
    let switch_at = 0.5 * cfg.air_time();
    let schedule = DistanceSchedule::new(vec![(0.0, from_cm), (switch_at, to_cm)])
        .map_err(|e| e.to_string())?;
    let res = run_transient(&cfg, &schedule).map_err(|e| e.to_string())?;
    Ok(json!({
        "time": res.rows.iter().map(|r| r.time_s).collect::<Vec<_>>(),
        "distance": res.rows.iter().map(|r| r.distance_cm).collect::<Vec<_>>(),
        "ber": res.rows.iter().map(|r| r.window_ber).collect::<Vec<_>>(),
        "theta": res.rows.iter().map(|r| r.theta_v).collect::<Vec<_>>(),
        "switch_at": switch_at,
        "throughput": res.throughput(),
    }))
}

/// One window of received samples with both the hand-tuned threshold and
/// the level-averaging estimate, and the slot decisions at each.
pub fn scope_json(
    scheme: &str,
    distance_cm: f64,
    sigma0: f64,
    symbols: u32,
) -> Result<Value, String> {
    let mut cfg = base_config(scheme, sigma0, 0.0, GRID_CM[0])?;
    let scheme = cfg.scheme;
    let bits = prbs_generate(9, 0x1ff, symbols.max(1) as usize * scheme.bits_per_symbol())
        .map_err(|e| e.to_string())?;
    let slots = encode_bits(&bits, scheme).map_err(|e| e.to_string())?;
    let tx = cfg.tx_for_run();
    let sent = synthesize_waveform(&slots, &tx).map_err(|e| e.to_string())?;
    cfg.channel.distance = distance_cm;
    let rx = propagate(&sent, &cfg.channel).map_err(|e| e.to_string())?;

    let state = init_threshold(ThresholdMethod::LevelAverage, &cfg.threshold_config())
        .map_err(|e| e.to_string())?;
    let est = measure_window(&rx.samples).map_err(|e| e.to_string())?;
    let theta_level = state
        .update_level(&est)
        .map_err(|e| e.to_string())?
        .current_threshold();
    let theta_fixed = cfg.threshold.fixed_theta;

    let decide = |theta: f64| slot_decide(&comparator(&rx.samples, theta), tx.samples_per_slot);
    Ok(json!({
        "samples": rx.samples,
        "samples_per_slot": tx.samples_per_slot,
        "sent": slots.slots(),
        "theta_fixed": theta_fixed,
        "theta_level": theta_level,
        "v_average": est.v_average,
        "slots_fixed": decide(theta_fixed).map_err(|e| e.to_string())?,
        "slots_level": decide(theta_level).map_err(|e| e.to_string())?,
    }))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

/// BER and throughput against distance for all three threshold methods.
#[wasm_bindgen]
pub fn ber_curves(scheme: &str, sigma0: f64, sigma1: f64, bits: u32) -> Result<String, JsValue> {
    to_js(ber_curves_json(scheme, sigma0, sigma1, bits))
}

/// Windowed BER and threshold when the receiver jumps between two distances
/// halfway through the run.
#[wasm_bindgen]
pub fn step_response(
    scheme: &str,
    method: &str,
    from_cm: f64,
    to_cm: f64,
    sigma0: f64,
    bits: u32,
) -> Result<String, JsValue> {
    to_js(step_response_json(
        scheme, method, from_cm, to_cm, sigma0, bits,
    ))
}

#[wasm_bindgen]
pub fn scope(scheme: &str, distance_cm: f64, sigma0: f64, symbols: u32) -> Result<String, JsValue> {
    to_js(scope_json(scheme, distance_cm, sigma0, symbols))
}
