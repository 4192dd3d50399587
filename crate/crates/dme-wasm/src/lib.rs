//! Browser bindings for the demo page under `www/`.
//!
//! Every exported function takes plain strings and numbers and returns a
//! JSON string, so the page needs nothing beyond the wasm-bindgen loader:
//! no generated TypeScript, no framework. Datasets travel as CSV text (the
//! same schema `dme gen` writes), which keeps the page's state pastable and
//! savable. Errors become thrown strings carrying the core error's display
//! text.
//!
//! The logic mirrors the CLI subcommands: `tradeoff_curves` is `dme curve`
//! restricted to closed-form errors (fast enough to recompute on every
//! slider tick), `water_fill` is `dme optimize`, and `simulate_round` is
//! `dme simulate`. The `*_impl` functions carry the substance and are unit
//! tested on the host; the `#[wasm_bindgen]` wrappers only map errors,
//! because `JsValue` aborts when constructed outside a wasm runtime.

use dme_core::analysis::{binary_params, mse_bounds, mse_closed_variable, spread_stats};
use dme_core::bits::{ceil_log2, BitSizes};
use dme_core::codec::{rotate, EncoderParams, EncoderSpec};
use dme_core::data::{gen_synthetic, Dataset, Distribution};
use dme_core::optimizer::{alternating_minimize, optimal_probs_given_centers, BudgetProblem};
use dme_core::sim::{run_trials, RoundConfig, NODE_ID_BITS};
use dme_core::wire::{FormatKind, WireFormat};
use dme_core::Error;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Most per-trial rows a `simulate_round` response will carry; aggregates
/// always cover every trial.
const MAX_TRIAL_ROWS: usize = 500;

fn to_js(e: Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Generate a synthetic dataset and return it as CSV text.
#[wasm_bindgen]
pub fn gen_csv(dist: &str, n: usize, d: usize, seed: u64) -> Result<String, JsValue> {
    gen_csv_impl(dist, n, d, seed).map_err(to_js)
}

/// Describe a dataset: shape, per-node means, and the off-center support
/// at those means. The page uses this to size its sliders.
#[wasm_bindgen]
pub fn dataset_summary(csv: &str) -> Result<String, JsValue> {
    dataset_summary_impl(csv).map_err(to_js)
}

/// Closed-form error-versus-cost curves for the three coin-design
/// strategies, plus the fixed binary-quantization point.
#[wasm_bindgen]
pub fn tradeoff_curves(
    csv: &str,
    budgets: Vec<f64>,
    r: u32,
    r_bar: u32,
) -> Result<String, JsValue> {
    tradeoff_curves_impl(csv, &budgets, r, r_bar).map_err(to_js)
}

/// Solve the budgeted design problem and return the full probability
/// matrix, centers, objective, and the theorem-style bounds.
#[wasm_bindgen]
pub fn water_fill(csv: &str, budget: f64, free_centers: bool) -> Result<String, JsValue> {
    water_fill_impl(csv, budget, free_centers).map_err(to_js)
}

/// Run an actual multi-trial round through the wire protocol and report
/// measured bits and squared errors.
#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn simulate_round(
    csv: &str,
    encoder: &str,
    format: &str,
    p: f64,
    k: usize,
    rotate_seed: i64,
    trials: usize,
    seed: u64,
    r: u32,
    r_bar: u32,
) -> Result<String, JsValue> {
    simulate_round_impl(csv, encoder, format, p, k, rotate_seed, trials, seed, r, r_bar)
        .map_err(to_js)
}

fn gen_csv_impl(dist: &str, n: usize, d: usize, seed: u64) -> Result<String, Error> {
    let dist: Distribution = dist.parse()?;
    Ok(gen_synthetic(dist, n, d, seed)?.to_csv_string())
}

fn parse_dataset(csv: &str) -> Result<Dataset, Error> {
    Dataset::read_csv(csv.as_bytes())
}

fn dataset_summary_impl(csv: &str) -> Result<String, Error> {
    let x = parse_dataset(csv)?;
    let centers = x.row_means();
    let stats = spread_stats(&x, &centers)?;
    Ok(json!({
        "n": x.n(),
        "d": x.d(),
        "support": stats.support,
        "row_means": centers,
    })
    .to_string())
}

fn deviations(x: &Dataset, centers: &[f64]) -> Vec<f64> {
    let mut a = Vec::with_capacity(x.n() * x.d());
    for i in 0..x.n() {
        a.extend(x.row(i).iter().map(|v| (v - centers[i]).abs()));
    }
    a
}

fn validate_ascending(budgets: &[f64]) -> Result<(), Error> {
    if budgets.is_empty() {
        return Err(Error::InvalidArgument("at least one budget is required".into()));
    }
    for pair in budgets.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidArgument(format!(
                "budgets must be strictly ascending, got {} after {}",
                pair[1], pair[0]
            )));
        }
    }
    if budgets[0] <= 0.0 {
        return Err(Error::InvalidArgument(format!("budget {} must be positive", budgets[0])));
    }
    Ok(())
}

fn tradeoff_curves_impl(csv: &str, budgets: &[f64], r: u32, r_bar: u32) -> Result<String, Error> {
    let x = parse_dataset(csv)?;
    let sizes = BitSizes::new(r, r_bar)?;
    validate_ascending(budgets)?;

    let centers = x.row_means();
    let a = deviations(&x, &centers);
    let support = a.iter().filter(|v| **v > 0.0).count() as f64;
    let per_entry = f64::from(ceil_log2(x.d())) + f64::from(sizes.r());
    let header_bits = x.n() as f64 * f64::from(sizes.r_bar());

    let strategies: [&str; 3] = [
        "uniform_p_row_mean_centers",
        "optimal_p_row_mean_centers",
        "optimal_p_optimal_centers",
    ];
    let mut curves = Vec::with_capacity(strategies.len());
    for name in strategies {
        let mut points = Vec::with_capacity(budgets.len());
        for &requested in budgets {
            let effective = requested.min(support);
            let params = match name {
                "uniform_p_row_mean_centers" => {
                    EncoderParams::uniform(x.n(), x.d(), effective / support, centers.clone())?
                }
                "optimal_p_row_mean_centers" => {
                    let probs = optimal_probs_given_centers(&a, effective)?;
                    EncoderParams::new(x.n(), x.d(), probs, centers.clone())?
                }
                _ => {
                    let problem = BudgetProblem::new(x.clone(), effective)?;
                    alternating_minimize(&problem, 1e-9, 200)?.params
                }
            };
            points.push(json!({
                "requested_b": requested,
                "effective_b": effective,
                "cost_bits": header_bits + per_entry * effective,
                "closed_mse": mse_closed_variable(&x, &params)?,
                "clipped": effective < requested,
            }));
        }
        curves.push(json!({ "strategy": name, "points": points }));
    }

    let binary_cost = x.n() as f64 * (2.0 * f64::from(sizes.r()) + x.d() as f64);
    let binary_mse = mse_closed_variable(&x, &binary_params(&x)?)?;
    Ok(json!({
        "support": support,
        "per_entry_bits": per_entry,
        "header_bits": header_bits,
        "curves": curves,
        "binary": { "strategy": "binary_quantization_point",
                    "cost_bits": binary_cost, "closed_mse": binary_mse },
    })
    .to_string())
}

fn water_fill_impl(csv: &str, budget: f64, free_centers: bool) -> Result<String, Error> {
    let x = parse_dataset(csv)?;
    let mut problem = BudgetProblem::new(x.clone(), budget)?;
    if !free_centers {
        problem = problem.with_fixed_centers(x.row_means())?;
    }
    let sol = alternating_minimize(&problem, 1e-9, 200)?;

    let stats = spread_stats(&x, sol.params.centers())?;
    let bounds = mse_bounds(&stats, x.n(), budget.min(stats.support as f64))?;

    let probs: Vec<&[f64]> = (0..x.n()).map(|i| sol.params.probs_row(i)).collect();
    Ok(json!({
        "budget": budget,
        "objective": sol.objective,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "probs": probs,
        "centers": sol.params.centers(),
        "bounds": {
            "lower": bounds.lower,
            "upper": bounds.upper,
            "exact": bounds.exact,
        },
    })
    .to_string())
}

#[allow(clippy::too_many_arguments)]
fn simulate_round_impl(
    csv: &str,
    encoder: &str,
    format: &str,
    p: f64,
    k: usize,
    rotate_seed: i64,
    trials: usize,
    seed: u64,
    r: u32,
    r_bar: u32,
) -> Result<String, Error> {
    let x = parse_dataset(csv)?;
    let sizes = BitSizes::new(r, r_bar)?;
    let format: FormatKind = format.parse()?;
    // JavaScript has no Option; a negative value means "no rotation".
    let rotation = u64::try_from(rotate_seed).ok();

    // With a rotation the encoder sees the rotated (padded) rows, so its
    // dimensions and centers come from those.
    let rows_seen: Vec<Vec<f64>> = match rotation {
        Some(rs) => (0..x.n()).map(|i| rotate(x.row(i), rs)).collect(),
        None => (0..x.n()).map(|i| x.row(i).to_vec()).collect(),
    };
    let d_seen = rows_seen[0].len();
    let centers: Vec<f64> =
        rows_seen.iter().map(|row| row.iter().sum::<f64>() / d_seen as f64).collect();

    let encoder = match encoder {
        "identity" => EncoderSpec::Identity,
        "variable" => EncoderSpec::Variable(EncoderParams::uniform(x.n(), d_seen, p, centers)?),
        "fixed" => EncoderSpec::Fixed { k, centers },
        "binary" => EncoderSpec::BinaryQuant,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown encoder {other:?}; expected identity, variable, fixed, or binary"
            )))
        }
    };

    let cfg = RoundConfig {
        encoder,
        format: WireFormat::new(format, sizes),
        rotation,
        trials,
        master_seed: seed,
    };
    let report = run_trials(&x, &cfg)?;

    let rows: Vec<serde_json::Value> = report
        .rows
        .iter()
        .take(MAX_TRIAL_ROWS)
        .map(|row| {
            json!({
                "trial": row.trial,
                "bits_total": row.bits_total,
                "sq_error": row.sq_error,
            })
        })
        .collect();
    Ok(json!({
        "trials": report.trials,
        "mean_sq_error": report.mean_sq_error,
        "mean_bits_total": report.mean_bits_total,
        "min_bits": report.min_bits,
        "max_bits": report.max_bits,
        "overhead_bits_per_trial": NODE_ID_BITS * x.n(),
        "rows": rows,
    })
    .to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(text: &str) -> Value {
        serde_json::from_str(text).expect("bindings return valid JSON")
    }

    #[test]
    fn generated_csv_round_trips_through_the_summary() {
        let csv = gen_csv_impl("gaussian", 4, 8, 7).unwrap();
        let summary = parse(&dataset_summary_impl(&csv).unwrap());
        assert_eq!(summary["n"], 4);
        assert_eq!(summary["d"], 8);
        assert_eq!(summary["row_means"].as_array().unwrap().len(), 4);
        assert!(summary["support"].as_u64().unwrap() <= 32);
    }

    #[test]
    fn unknown_distribution_is_rejected() {
        assert!(gen_csv_impl("cauchy", 4, 8, 7).is_err());
    }

    #[test]
    fn curves_cost_the_published_formula_and_optimal_dominates_uniform() {
        let csv = gen_csv_impl("laplace", 4, 16, 11).unwrap();
        let out = parse(&tradeoff_curves_impl(&csv, &[2.0, 4.0, 8.0], 16, 16).unwrap());

        // Cost is header plus (index + value) bits per expected entry.
        let per_entry = out["per_entry_bits"].as_f64().unwrap();
        assert_eq!(per_entry, 4.0 + 16.0);
        let curves = out["curves"].as_array().unwrap();
        assert_eq!(curves.len(), 3);
        for curve in curves {
            let points = curve["points"].as_array().unwrap();
            assert_eq!(points.len(), 3);
            for (point, b) in points.iter().zip([2.0, 4.0, 8.0]) {
                let cost = point["cost_bits"].as_f64().unwrap();
                assert_eq!(cost, 4.0 * 16.0 + per_entry * b);
                assert!(!point["clipped"].as_bool().unwrap());
            }
        }

        // The water-filled coins can only improve on the uniform ones.
        for i in 0..3 {
            let uniform = curves[0]["points"][i]["closed_mse"].as_f64().unwrap();
            let optimal = curves[1]["points"][i]["closed_mse"].as_f64().unwrap();
            assert!(optimal <= uniform * (1.0 + 1e-12));
        }

        let binary_cost = out["binary"]["cost_bits"].as_f64().unwrap();
        assert_eq!(binary_cost, 4.0 * (2.0 * 16.0 + 16.0));
    }

    #[test]
    fn overlarge_budgets_clip_to_the_support() {
        let csv = gen_csv_impl("gaussian", 2, 4, 3).unwrap();
        let out = parse(&tradeoff_curves_impl(&csv, &[100.0], 32, 32).unwrap());
        let point = &out["curves"][0]["points"][0];
        assert_eq!(point["effective_b"], out["support"]);
        assert!(point["clipped"].as_bool().unwrap());
        assert_eq!(point["closed_mse"], 0.0);
    }

    #[test]
    fn non_ascending_budgets_are_rejected() {
        let csv = gen_csv_impl("gaussian", 2, 4, 3).unwrap();
        assert!(tradeoff_curves_impl(&csv, &[2.0, 2.0], 16, 16).is_err());
        assert!(tradeoff_curves_impl(&csv, &[], 16, 16).is_err());
    }

    #[test]
    fn water_fill_objective_sits_inside_its_own_bounds() {
        let csv = gen_csv_impl("chi_squared", 4, 8, 5).unwrap();
        let out = parse(&water_fill_impl(&csv, 3.0, false).unwrap());
        let objective = out["objective"].as_f64().unwrap();
        let lower = out["bounds"]["lower"].as_f64().unwrap();
        let upper = out["bounds"]["upper"].as_f64().unwrap();
        assert!(lower <= objective && objective <= upper);
        assert_eq!(out["probs"].as_array().unwrap().len(), 4);
        assert_eq!(out["probs"][0].as_array().unwrap().len(), 8);
        assert_eq!(out["centers"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn free_centers_do_at_least_as_well_as_row_means() {
        let csv = gen_csv_impl("chi_squared", 4, 8, 5).unwrap();
        let fixed = parse(&water_fill_impl(&csv, 3.0, false).unwrap());
        let free = parse(&water_fill_impl(&csv, 3.0, true).unwrap());
        let fixed_obj = fixed["objective"].as_f64().unwrap();
        let free_obj = free["objective"].as_f64().unwrap();
        assert!(free_obj <= fixed_obj * (1.0 + 1e-12));
    }

    #[test]
    fn identity_over_naive_is_lossless_and_fixed_cost() {
        let csv = gen_csv_impl("gaussian", 3, 8, 1).unwrap();
        let out = parse(
            &simulate_round_impl(&csv, "identity", "naive", 0.0, 0, -1, 4, 9, 64, 64).unwrap(),
        );
        assert_eq!(out["mean_sq_error"], 0.0);
        assert_eq!(out["min_bits"], 3 * 8 * 64);
        assert_eq!(out["max_bits"], 3 * 8 * 64);
        assert_eq!(out["overhead_bits_per_trial"], 3 * 16);
        assert_eq!(out["rows"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn rotation_pads_the_wire_dimension() {
        let csv = gen_csv_impl("gaussian", 2, 5, 1).unwrap();
        // d = 5 rotates into an 8-point transform, so naive frames carry
        // 2 * 8 * 64 payload bits. Full-width values keep the inverse
        // rotation essentially exact.
        let out = parse(
            &simulate_round_impl(&csv, "identity", "naive", 0.0, 0, 17, 2, 9, 64, 64).unwrap(),
        );
        assert_eq!(out["min_bits"], 2 * 8 * 64);
        assert!(out["mean_sq_error"].as_f64().unwrap() < 1e-18);
    }

    #[test]
    fn unknown_encoder_is_rejected() {
        let csv = gen_csv_impl("gaussian", 2, 4, 1).unwrap();
        let err =
            simulate_round_impl(&csv, "huffman", "naive", 0.0, 0, -1, 1, 9, 16, 16).unwrap_err();
        assert!(err.to_string().contains("huffman"));
    }
}
