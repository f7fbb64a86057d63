//! Fits the model cycle coefficients and RF code overhead of the
//! `cortex-m4-paper` profile.
//!
//! SVM and MLP coefficients come straight from published (MAC, cycles)
//! pairs. RF needs tree shapes, so forests are trained on the synthetic
//! seven-class single-appliance scenario at the two published operating
//! points (5 features/100 trees and 71 features/500 trees) and their node
//! counts and worst-case depths are matched to the published Flash and cycle
//! figures.
//!
//! Run with `cargo run --release -p nilm --example calibrate_profile`.

use nilm_core::cost::{model_macs, CostProfile, ModelShape};
use nilm_core::features::FeatureLayout;
use nilm_core::scenarios::single_appliance_dataset;
use nilm_core::train::{fit, mda_rank, split_dataset, ModelSpec, RfParams};

/// Published RF points: (features, trees, flash bytes, cycles).
const RF_POINTS: [(usize, usize, f64, f64); 2] = [(5, 100, 126_200.0, 4_840.0), (71, 500, 649_400.0, 26_400.0)];

/// Published (MAC, cycles) pairs.
const SVM_POINTS: [(f64, f64); 2] = [(218_400.0, 2_065_000.0), (85_860.0, 795_000.0)];
const MLP_POINTS: [(f64, f64); 2] = [(160_500.0, 1_588_000.0), (107_700.0, 1_081_000.0)];

/// Line through two points; falls back to a zero-intercept least-squares
/// slope when the intercept would be negative.
fn fit_line(points: &[(f64, f64)]) -> (f64, f64) {
    let [(x0, y0), (x1, y1)] = [points[0], points[1]];
    let slope = (y1 - y0) / (x1 - x0);
    let intercept = y0 - slope * x0;
    if intercept >= 0.0 {
        return (slope, intercept);
    }
    let num: f64 = points.iter().map(|(x, y)| x * y).sum();
    let den: f64 = points.iter().map(|(x, _)| x * x).sum();
    (num / den, 0.0)
}

fn main() -> anyhow::Result<()> {
    let seed = 2021;
    let (svm_slope, svm_fixed) = fit_line(&SVM_POINTS);
    let (mlp_slope, mlp_fixed) = fit_line(&MLP_POINTS);
    println!("svm: {svm_slope:.4} cycles/MAC + {svm_fixed:.0}");
    println!("mlp: {mlp_slope:.4} cycles/MAC + {mlp_fixed:.0}");

    let layout = FeatureLayout::default();
    let data = single_appliance_dataset(100, &layout, seed)?;
    let (train, test) = split_dataset(&data, 0.8, seed)?;
    let probe = ModelSpec::Rf(RfParams { n_trees: 100, max_depth: None });
    let mda = mda_rank(&train, &test, &probe, 5, seed)?;

    let profile = CostProfile::cortex_m4_paper();
    let mut shapes = Vec::new();
    for &(m, trees, flash, cycles) in &RF_POINTS {
        let spec = ModelSpec::Rf(RfParams { n_trees: trees, max_depth: None });
        let model = fit(&train, mda.top(m), &spec, seed)?;
        let shape = ModelShape::from(&model.classifier);
        let ModelShape::Rf { node_count, depth_sum, .. } = shape else { unreachable!() };
        println!("rf {m:>2} features, {trees} trees: {node_count} nodes, depth sum {depth_sum} (target {flash} B, {cycles} cycles)");
        shapes.push((node_count as f64, depth_sum as f64, trees as f64, flash, cycles));
    }

    // Flash: minimise relative error of nodes·node_bytes + trees·overhead.
    let node_bytes = profile.rf_node_bytes as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for &(nodes, _, trees, flash, _) in &shapes {
        let t = trees / flash;
        num += t * (1.0 - nodes * node_bytes / flash);
        den += t * t;
    }
    let overhead = (num / den).max(0.0).round();
    let (rf_slope, rf_fixed) = fit_line(&shapes.iter().map(|s| (s.1, s.4)).collect::<Vec<_>>());
    println!("rf: code overhead {overhead} B/tree, {rf_slope:.4} cycles/comparison + {rf_fixed:.0}");

    for &(nodes, depth, trees, flash, cycles) in &shapes {
        let f = nodes * node_bytes + trees * overhead;
        let c = depth * rf_slope + rf_fixed;
        println!(
            "  flash {f:.0} B ({:+.1} %), cycles {c:.0} ({:+.1} %)",
            100.0 * (f / flash - 1.0),
            100.0 * (c / cycles - 1.0)
        );
    }
    let check = ModelShape::Mlp { sizes: vec![100, 800, 100, 5] };
    println!("mlp [100, 800, 100, 5]: {} MAC", model_macs(&check));
    Ok(())
}
