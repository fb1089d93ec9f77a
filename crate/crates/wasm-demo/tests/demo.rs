use serde_json::Value;
use tweezer_clock_wasm::{gain_curve_json, parity_fringe_json, psd_trajectory_json};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn noiseless_fringe_has_full_contrast() {
    let v = parse(parity_fringe_json(12, 100, 0.0, 1).unwrap());
    assert_eq!(floats(&v["parity"]).len(), 12);
    assert!(v["contrast"].as_f64().unwrap() > 0.95);
    assert!(parity_fringe_json(4, 100, 0.0, 1).is_err());
}

#[test]
fn noise_lowers_the_fringe() {
    let quiet = parse(parity_fringe_json(12, 200, 0.0, 2).unwrap())["contrast"].as_f64().unwrap();
    let loud = parse(parity_fringe_json(12, 200, 20.0, 2).unwrap())["contrast"].as_f64().unwrap();
    assert!(loud < quiet);
}

#[test]
fn gain_curve_ends_at_perfect_fidelity() {
    let v = parse(gain_curve_json(3, 6, 0.7, 0.95, 4).unwrap());
    let g = floats(&v["gain"]);
    assert_eq!(v["atoms"], 42);
    assert!(g.windows(2).all(|w| w[1] > w[0]));
    assert!(gain_curve_json(9, 6, 0.7, 0.95, 4).is_err());
}

#[test]
fn trajectory_and_periodogram_shapes() {
    let v = parse(psd_trajectory_json(3.0, 1414.0, 50.0, 1.0, 7).unwrap());
    assert!(floats(&v["time"]).len() <= 2001);
    let (pg, target) = (floats(&v["periodogram"]), floats(&v["target"]));
    assert_eq!(pg.len(), target.len());
    assert!(psd_trajectory_json(-1.0, 0.0, 1.0, 1.0, 7).is_err());
    assert!(psd_trajectory_json(3.0, 0.0, 1.0, 100.0, 7).is_err());
}
