mod common;

use common::random_ordinal;
use nordic::kernel::KernelSpec;
use nordic::nordic::{train, Method};
use nordic::{Model, Nordic2Settings, Params};

#[test]
fn json_round_trip_is_bit_stable() {
    let ds = random_ordinal(15, 2, 3, 4);
    let probes = random_ordinal(10, 2, 3, 5);
    for method in Method::ALL {
        for kernel in [KernelSpec::rbf(1.1).unwrap(), KernelSpec::Linear] {
            if method == Method::Nordic0 && kernel.is_linear() {
                continue;
            }
            let m = train(&ds, method, &Params::new(1.0, 0.3, kernel), &Nordic2Settings::default()).unwrap();
            let text = m.to_json().unwrap();
            let back = Model::from_json(&text).unwrap();
            assert_eq!(back, m, "{method}");
            assert_eq!(back.to_json().unwrap(), text);
            let (a, b) = (m.decision_values(probes.features()).unwrap(), back.decision_values(probes.features()).unwrap());
            let bits = |x: &nordic::Mat| x.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a), bits(&b));
        }
    }
}

#[test]
fn rejects_foreign_or_broken_files() {
    let ds = random_ordinal(10, 2, 3, 6);
    let m = train(&ds, Method::Nordic1, &Params::new(1.0, 1.0, KernelSpec::rbf(1.0).unwrap()), &Nordic2Settings::default()).unwrap();
    let text = m.to_json().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["version"] = serde_json::json!(999);
    assert!(Model::from_json(&v.to_string()).is_err());
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["format"] = serde_json::json!("other");
    assert!(Model::from_json(&v.to_string()).is_err());
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["model"]["bias"] = serde_json::json!([0.0]);
    assert!(Model::from_json(&v.to_string()).is_err());
    assert!(Model::from_json("{}").is_err());
    // wrong feature count at prediction time
    assert!(m.decision_values(&nordic::Mat::zeros(2, 3)).is_err());
}
