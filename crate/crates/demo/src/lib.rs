//! Browser bindings for the tableau analyzer: three interactive operations
//! behind one static page.
//!
//! * [`analyze`] — orders, stability verdicts, predicted global order;
//! * [`stability_region`] — `|R(z)|` sampled on a complex-plane grid for
//!   region shading;
//! * [`convergence_curve`] — a small constant-step convergence study with
//!   fitted observed order.
//!
//! Exported functions take a tableau source that is either a catalog name
//! (`"trapezoid"`) or a full tableau document, and return JSON strings (or
//! a flat float array for the region grid) so the page needs no framework.
//! Errors come back as `{"error": "..."}` rather than exceptions.

use nalgebra::Complex;
use rk_semilinear::conditions;
use rk_semilinear::defaults::TOL;
use rk_semilinear::harness;
use rk_semilinear::solver::NewtonConfig;
use rk_semilinear::stability;
use rk_semilinear::tableau::{catalog_lookup, parse_tableau, ButcherTableau, CATALOG};
use serde_json::json;
use wasm_bindgen::prelude::wasm_bindgen;

fn load_tableau(source: &str) -> Result<ButcherTableau, String> {
    let trimmed = source.trim();
    if trimmed.starts_with('{') {
        parse_tableau(trimmed).map_err(|e| e.to_string())
    } else {
        catalog_lookup(trimmed).map_err(|e| e.to_string())
    }
}

fn error_json(message: &str) -> String {
    json!({ "error": message }).to_string()
}

/// Names of the built-in methods, one per line.
#[wasm_bindgen]
pub fn catalog_names() -> String {
    CATALOG.join("\n")
}

/// Full analysis of a tableau as a JSON object.
#[wasm_bindgen]
pub fn analyze(source: &str) -> String {
    match analyze_impl(source) {
        Ok(value) => value,
        Err(message) => error_json(&message),
    }
}

fn analyze_impl(source: &str) -> Result<String, String> {
    let tab = load_tableau(source)?;
    let (stage_order, _) = tab.stage_order(TOL);
    let classical = tab.classical_order(1e-12);
    let (wso, _) = conditions::weak_stage_order(&tab, TOL);
    let order_report =
        conditions::semilinear_order(&tab, 5, TOL, true).map_err(|e| e.to_string())?;
    let report = stability::stability_report(&tab);
    let predicted = harness::predicted_order(&tab, TOL);
    let trees: Vec<_> = order_report
        .records
        .iter()
        .map(|r| {
            json!({
                "tree": r.tree.encoding(),
                "order": r.tree.order(),
                "satisfied": r.satisfied,
                "max_residual": r.max_residual,
                "skipped": r.skipped_as_redundant,
            })
        })
        .collect();
    Ok(json!({
        "name": tab.name(),
        "stages": tab.stages(),
        "structure": tab.structure().to_string(),
        "stage_order": stage_order,
        "classical_order": classical,
        "weak_stage_order": wso,
        "p_sl": order_report.p_sl,
        "a_stable": report.a_stable.verdict.to_string(),
        "as_stable": report.as_stable.verdict.to_string(),
        "asi_stable": report.asi_stable.verdict.to_string(),
        "r_condition": report.r_condition.verdict.to_string(),
        "r_at_infinity": report.r_at_infinity.to_string(),
        "predicted_q": predicted.q,
        "branch": predicted.branch,
        "conditions": trees,
    })
    .to_string())
}

/// `|R(x + iy)|` on an `nx x ny` grid over `[re_min, re_max] x [im_min,
/// im_max]`, row-major from the top row (largest imaginary part) down, as
/// canvases draw. Returns an empty array when the tableau fails to parse.
#[wasm_bindgen]
pub fn stability_region(
    source: &str,
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
    nx: usize,
    ny: usize,
) -> Vec<f64> {
    let Ok(tab) = load_tableau(source) else {
        return Vec::new();
    };
    let rf = stability::stability_function(&tab);
    let mut out = Vec::with_capacity(nx * ny);
    for row in 0..ny {
        let y = im_max - (im_max - im_min) * row as f64 / (ny - 1).max(1) as f64;
        for col in 0..nx {
            let x = re_min + (re_max - re_min) * col as f64 / (nx - 1).max(1) as f64;
            out.push(rf.eval(Complex::new(x, y)).norm());
        }
    }
    out
}

/// Constant-step convergence study at one stiffness value: JSON with the
/// step sizes, final-time errors, fitted order, and the predicted order.
#[wasm_bindgen]
pub fn convergence_curve(source: &str, problem: &str, lambda: f64, coarsest_exp: u32, finest_exp: u32) -> String {
    match convergence_impl(source, problem, lambda, coarsest_exp, finest_exp) {
        Ok(value) => value,
        Err(message) => error_json(&message),
    }
}

fn convergence_impl(
    source: &str,
    problem: &str,
    lambda: f64,
    coarsest_exp: u32,
    finest_exp: u32,
) -> Result<String, String> {
    let tab = load_tableau(source)?;
    if coarsest_exp > finest_exp || finest_exp > 14 {
        return Err("step exponents must satisfy coarsest <= finest <= 14".to_string());
    }
    let h_grid: Vec<f64> = (coarsest_exp..=finest_exp).map(|k| 0.5_f64.powi(k as i32)).collect();
    let study = harness::run_study(
        &tab,
        problem,
        &[lambda],
        &h_grid,
        0.0,
        1.0,
        &NewtonConfig::default(),
        1,
    )
    .map_err(|e| e.to_string())?;
    let errors: Vec<Option<f64>> = study.cells.iter().map(|c| c.error).collect();
    let (_, slope, fit_residual) = study.observed_orders[0];
    Ok(json!({
        "tableau": study.tableau,
        "problem": study.problem,
        "lambda": lambda,
        "h": h_grid,
        "errors": errors,
        "observed_order": if slope.is_finite() { Some(slope) } else { None },
        "fit_residual": if fit_residual.is_finite() { Some(fit_residual) } else { None },
        "predicted_q": study.predicted.q,
        "branch": study.predicted.branch,
    })
    .to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analyze_catalog_and_document_sources() {
        let by_name: serde_json::Value = serde_json::from_str(&analyze("trapezoid")).unwrap();
        assert_eq!(by_name["p_sl"], 2);
        assert_eq!(by_name["predicted_q"], 2);
        assert_eq!(by_name["a_stable"], "holds");
        assert_eq!(by_name["conditions"].as_array().unwrap().len(), 17);

        let doc = r#"{"name": "custom", "A": [["1"]], "b": ["1"]}"#;
        let custom: serde_json::Value = serde_json::from_str(&analyze(doc)).unwrap();
        assert_eq!(custom["name"], "custom");
        assert_eq!(custom["p_sl"], 1);
    }

    #[test]
    fn analyze_reports_errors_as_json() {
        let out: serde_json::Value = serde_json::from_str(&analyze("no-such-method")).unwrap();
        assert!(out["error"].as_str().unwrap().contains("no-such-method"));
    }

    #[test]
    fn region_grid_shape_and_values() {
        let grid = stability_region("backward-euler", -4.0, 4.0, -3.0, 3.0, 9, 7);
        assert_eq!(grid.len(), 63);
        // top-left corner is z = -4 + 3i: |1/(1-z)| = 1/|5-3i|
        let expected = 1.0 / Complex::new(5.0, -3.0).norm();
        assert!((grid[0] - expected).abs() < 1e-12);
        // the pole at z = 1 sits on this grid: row y=0, column x=1
        let pole = grid[3 * 9 + 5];
        assert!(!pole.is_finite() || pole > 1e12, "pole value {pole}");
        // A-stable: strictly below 1 in the open left half-plane
        assert!(grid[3 * 9 + 2] < 1.0); // z = -2
        assert_eq!(stability_region("bogus", -1.0, 1.0, -1.0, 1.0, 4, 4).len(), 0);
    }

    #[test]
    fn convergence_curve_reports_fitted_order() {
        let out: serde_json::Value = serde_json::from_str(&convergence_curve(
            "backward-euler",
            "npr-scalar",
            -100.0,
            3,
            8,
        ))
        .unwrap();
        assert_eq!(out["predicted_q"], 1);
        let slope = out["observed_order"].as_f64().unwrap();
        assert!((slope - 1.0).abs() < 0.1, "slope {slope}");
        assert_eq!(out["h"].as_array().unwrap().len(), 6);

        let bad: serde_json::Value =
            serde_json::from_str(&convergence_curve("trapezoid", "nope", -1.0, 3, 6)).unwrap();
        assert!(bad["error"].as_str().is_some());
    }

    #[test]
    fn catalog_listing_matches_library() {
        assert_eq!(catalog_names().lines().count(), CATALOG.len());
    }
}
