//! Three interactive operations for the static demo page. Each returns a
//! JSON string; the wasm exports are thin wrappers over the plain functions
//! so the same code is tested natively.

use hewflow::compiler::{approximate_activation, ActivationKind};
use hewflow::ring::rng_from_seed;
use hewflow::scheme::{self, decrypt_values, encode, encrypt, keygen, SchemeParams};
use hewflow::sim::{calibrate, predict_latency_ms, row_config, run_sim, REFERENCE_ROWS};
use rand::Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const PLOT_POINTS: usize = 201;
const MAX_DEMO_PODS: usize = 32;
const MAX_DEMO_HORIZON_S: f64 = 3600.0;

#[derive(Debug, Serialize)]
pub struct ActivationFit {
    pub kind: String,
    pub degree: usize,
    pub interval: (f64, f64),
    /// Ascending powers.
    pub coefficients: Vec<f64>,
    pub max_error: f64,
    pub x: Vec<f64>,
    pub target: Vec<f64>,
    pub approx: Vec<f64>,
}

fn parse_kind(kind: &str) -> Result<ActivationKind, String> {
    serde_json::from_value(serde_json::Value::String(kind.to_string()))
        .map_err(|_| format!("unknown activation '{kind}' (sigmoid, relu, square, cubic)"))
}

/// Least-squares polynomial stand-in for an activation, sampled for plotting.
pub fn activation_fit(kind: &str, degree: usize, lo: f64, hi: f64) -> Result<ActivationFit, String> {
    let k = parse_kind(kind)?;
    let p = approximate_activation(k, degree, Some((lo, hi))).map_err(|e| e.to_string())?;
    let x: Vec<f64> = (0..PLOT_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (PLOT_POINTS - 1) as f64)
        .collect();
    Ok(ActivationFit {
        kind: kind.to_string(),
        degree: p.degree(),
        interval: (lo, hi),
        coefficients: p.coefficients.clone(),
        max_error: p.fit_error,
        target: x.iter().map(|&v| k.target(v)).collect(),
        approx: x.iter().map(|&v| p.eval(v)).collect(),
        x,
    })
}

#[derive(Debug, Serialize)]
pub struct RoundTrip {
    pub slots: usize,
    pub magnitude: f64,
    pub ciphertext_bytes: usize,
    pub encrypt_decrypt_max_error: f64,
    pub add_max_error: f64,
    /// Relative to the largest product.
    pub mul_plain_rel_error: f64,
    pub mul_rel_error: f64,
    pub sample_in: Vec<f64>,
    pub sample_out: Vec<f64>,
}

/// Encrypts `count` random values in [−magnitude, magnitude] under the
/// 3-limb desk parameters and reports the decryption errors of a round
/// trip, an addition, a plaintext product and a ciphertext product.
pub fn encrypted_round_trip(count: usize, magnitude: f64, seed: u64) -> Result<RoundTrip, String> {
    let params = SchemeParams::desk_default();
    if count == 0 || count > params.slot_count() {
        return Err(format!("count must be between 1 and {}", params.slot_count()));
    }
    if !(magnitude > 0.0 && magnitude <= 1000.0) {
        return Err("magnitude must be in (0, 1000]".into());
    }
    let err = |e: hewflow::Error| e.to_string();
    let keys = keygen(&params, seed).map_err(err)?;
    let mut rng = rng_from_seed(seed ^ 0xde30);
    let u: Vec<f64> = (0..count).map(|_| rng.gen_range(-magnitude..=magnitude)).collect();
    let v: Vec<f64> = (0..count).map(|_| rng.gen_range(-magnitude..=magnitude)).collect();
    let level = params.max_level();
    let pv = encode(&params, &v, params.scale(), level).map_err(err)?;
    let cu = encrypt(&keys.public, &encode(&params, &u, params.scale(), level).map_err(err)?, &mut rng).map_err(err)?;
    let cv = encrypt(&keys.public, &pv, &mut rng).map_err(err)?;
    let dec = |ct| decrypt_values(&keys.secret, ct).map(|d| d[..count].to_vec()).map_err(err);
    let max_abs = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let rel = |a: &[f64], b: &[f64]| max_abs(a, b) / b.iter().map(|x| x.abs()).fold(1e-300, f64::max);

    let back = dec(&cu)?;
    let sum: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
    let prod: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a * b).collect();
    let added = scheme::add(&cu, &cv).map_err(err)?;
    let added = dec(&added)?;
    let mp = scheme::rescale(&scheme::mul_plain(&cu, &pv).map_err(err)?).map_err(err)?;
    let mp = dec(&mp)?;
    let mc = scheme::rescale(&scheme::mul(&cu, &cv, &keys.relin).map_err(err)?).map_err(err)?;
    let mc = dec(&mc)?;
    let shown = count.min(8);
    Ok(RoundTrip {
        slots: params.slot_count(),
        magnitude,
        ciphertext_bytes: hewflow::format::write_ciphertext(&cu).len(),
        encrypt_decrypt_max_error: max_abs(&back, &u),
        add_max_error: max_abs(&added, &sum),
        mul_plain_rel_error: rel(&mp, &prod),
        mul_rel_error: rel(&mc, &prod),
        sample_in: u[..shown].to_vec(),
        sample_out: back[..shown].to_vec(),
    })
}

#[derive(Debug, Serialize)]
pub struct CurvePoint {
    pub pods: usize,
    pub simulated_ms: f64,
    pub p95_ms: f64,
    pub predicted_ms: f64,
    pub cpu_pct: f64,
}

#[derive(Debug, Serialize)]
pub struct LatencyCurve {
    pub request_cost_ms: f64,
    pub overhead_ms: f64,
    pub utilization: f64,
    pub points: Vec<CurvePoint>,
    /// Reference (pods, latency) measurements for overlay.
    pub reference: Vec<(usize, f64)>,
}

/// Mean request latency for 1..=max_pods fixed-size clusters at the given
/// per-pod utilization, with costs calibrated on the reference cluster.
pub fn latency_curve(max_pods: usize, utilization: f64, horizon_s: f64, seed: u64) -> Result<LatencyCurve, String> {
    if !(1..=MAX_DEMO_PODS).contains(&max_pods) {
        return Err(format!("max pods must be between 1 and {MAX_DEMO_PODS}"));
    }
    if !(utilization > 0.0 && utilization < 0.95) {
        return Err("utilization must be in (0, 0.95)".into());
    }
    if !(horizon_s > 0.0 && horizon_s <= MAX_DEMO_HORIZON_S) {
        return Err(format!("horizon must be in (0, {MAX_DEMO_HORIZON_S}] seconds"));
    }
    let cal = calibrate(&[REFERENCE_ROWS[0], REFERENCE_ROWS[3]], 24).map_err(|e| e.to_string())?;
    let points = (1..=max_pods)
        .map(|p| {
            let m = run_sim(&row_config(&cal, p, utilization, horizon_s, seed)).map_err(|e| e.to_string())?;
            Ok(CurvePoint {
                pods: p,
                simulated_ms: m.mean_latency_ms,
                p95_ms: m.p95_latency_ms,
                predicted_ms: predict_latency_ms(&cal, p, utilization),
                cpu_pct: m.mean_utilization * 100.0,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(LatencyCurve {
        request_cost_ms: cal.request_cost_ms,
        overhead_ms: cal.overhead_ms,
        utilization,
        points,
        reference: REFERENCE_ROWS.iter().map(|r| (r.pods, r.latency_ms)).collect(),
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    r.map(|v| serde_json::to_string(&v).expect("serializable"))
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = activationFit)]
pub fn activation_fit_js(kind: &str, degree: usize, lo: f64, hi: f64) -> Result<String, JsError> {
    to_js(activation_fit(kind, degree, lo, hi))
}

#[wasm_bindgen(js_name = encryptedRoundTrip)]
pub fn encrypted_round_trip_js(count: usize, magnitude: f64, seed: u32) -> Result<String, JsError> {
    to_js(encrypted_round_trip(count, magnitude, seed as u64))
}

#[wasm_bindgen(js_name = latencyCurve)]
pub fn latency_curve_js(max_pods: usize, utilization: f64, horizon_s: f64, seed: u32) -> Result<String, JsError> {
    to_js(latency_curve(max_pods, utilization, horizon_s, seed as u64))
}
