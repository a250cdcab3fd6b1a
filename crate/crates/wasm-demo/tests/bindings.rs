use magneto_perceptron_wasm::{curve_points, field_counts, train_view};

#[test]
fn curve_points_cover_the_range() {
    let pts = curve_points(250, 600, "smoothstep", 10.0, 1200).unwrap();
    assert_eq!(pts.len(), 1201);
    assert_eq!(pts[250], 0.0);
    assert_eq!(pts[600], 1.0);
    assert!(pts.windows(2).all(|w| w[0] <= w[1]));
    assert!(curve_points(250, 600, "cubic", 10.0, 10).is_err());
    assert!(curve_points(700, 600, "linear", 10.0, 10).is_err());
}

#[test]
fn train_view_reports_bars_and_steps() {
    let v: serde_json::Value = serde_json::from_str(&train_view(0, 0.014, false).unwrap()).unwrap();
    assert_eq!(v["converged"], true);
    assert_eq!(v["bars"].as_array().unwrap().len(), 27);
    assert_eq!(v["bars"][8]["test"], true);
    assert!(v["steps"].as_array().unwrap().len() >= 24);
    assert!(train_view(0, 0.0, false).is_err());
}

#[test]
fn field_counts_lead_with_dimensions() {
    let f = field_counts(0, 0).unwrap();
    assert_eq!((f[0], f[1]), (166, 128));
    assert_eq!(f.len(), 2 + 166 * 128);
    let erased = field_counts(0, 50).unwrap();
    assert_ne!(f, erased);
}
