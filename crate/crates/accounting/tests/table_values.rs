//! Ablation-table and resource-table values: exact totals where they are
//! exactly derivable, tolerance bands and ordering where they are not, and
//! the two-route check that shape-rule counts equal live model totals.

use accounting::{
    classical_computation_pct, count_params, estimate_flops, parameter_reduction_pct,
    render_appendix_table, table2_strategies,
};
use qproj::ExpandMode;
use tmodel::{Model, ModelConfig};

const GOLDEN: &str = include_str!("../fixtures/hyqut8m_params.txt");

#[test]
fn appendix_golden_file_reproduced() {
    let report = count_params(&ModelConfig::hybrid_8m());
    assert_eq!(render_appendix_table(&report), GOLDEN);
}

/// Ablation parameter column (millions, rounded to three decimals):
/// exact for the two anchor rows, ±0.2% for the others, with the
/// Wq+Wk+Wv row documented as not derivable (7.026M scalar / 7.040M full
/// against the published 7.032M) and checked only for ordering.
#[test]
fn ablation_parameter_column() {
    let base = ModelConfig::classic_8m();
    let published_millions = [7.748, 7.246, 7.032, 6.525, 6.722, 4.690, 3.466];
    let mut totals = Vec::new();
    for ((label, strategy), expected) in table2_strategies().into_iter().zip(published_millions) {
        let total = count_params(&base.with_replacement(strategy)).total;
        totals.push(total);
        let millions = total as f64 / 1e6;
        if label == "Attention: Wq, Wk, Wv" {
            // known non-derivable row; both expand modes miss 7.032
            assert!((millions - 7.026281f64).abs() < 1e-9);
            continue;
        }
        let rel = (millions - expected).abs() / expected;
        assert!(
            rel < 0.002,
            "{label}: {millions:.6}M vs published {expected}M (rel {rel:.5})"
        );
    }
    // anchors exact
    assert_eq!(totals[0], 7_747_841);
    assert_eq!(totals[1], 7_246_201);
    assert_eq!(totals[4], 6_721_913);
    // ranking by parameter count matches the published ranking
    let labels: Vec<&str> = table2_strategies().into_iter().map(|(l, _)| l).collect();
    let rank = |values: &[f64]| -> Vec<&str> {
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
        idx.into_iter().map(|i| labels[i]).collect()
    };
    let ours: Vec<f64> = totals.iter().map(|t| *t as f64).collect();
    assert_eq!(rank(&ours), rank(&published_millions));
}

/// Classical Computation (%) within ±3 points of the published column,
/// with identical FLOPs ordering.
#[test]
fn ablation_percentage_column() {
    let base = ModelConfig::classic_8m();
    let published = [100.00, 93.49, 90.64, 84.14, 86.48, 60.45, 44.59];
    let mut ours = Vec::new();
    for ((label, strategy), expected) in table2_strategies().into_iter().zip(published) {
        let pct = classical_computation_pct(&base.with_replacement(strategy), 512);
        assert!(
            (pct - expected).abs() <= 3.0,
            "{label}: {pct:.2}% vs published {expected}%"
        );
        ours.push((label, pct, expected));
    }
    // sort both columns descending and require identical label order
    let mut by_ours = ours.clone();
    by_ours.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let mut by_published = ours.clone();
    by_published.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap());
    let ours_order: Vec<&str> = by_ours.iter().map(|r| r.0).collect();
    let published_order: Vec<&str> = by_published.iter().map(|r| r.0).collect();
    assert_eq!(ours_order, published_order, "FLOPs ordering differs");
}

/// Resource-table reductions: 8M at 13.3% within 0.1pp; 150M bracketing
/// 10.7% within 1pp for at least one expand mode (both are reported).
#[test]
fn resource_table_reductions() {
    let r8 = parameter_reduction_pct(&ModelConfig::hybrid_8m());
    assert!((r8 - 13.3).abs() <= 0.1, "8M reduction {r8:.4}%");

    let scalar = parameter_reduction_pct(&ModelConfig::hybrid_150m());
    let mut full_cfg = ModelConfig::hybrid_150m();
    full_cfg.projector.expand_mode = ExpandMode::Full;
    let full = parameter_reduction_pct(&full_cfg);
    assert!(
        (scalar - 10.7).abs() <= 1.0 || (full - 10.7).abs() <= 1.0,
        "150M reductions scalar {scalar:.3}% / full {full:.3}%"
    );

    // 150M absolute totals land on the published 149M / 133M after rounding
    let base150 = count_params(&ModelConfig::classic_150m()).total;
    let hybrid150 = count_params(&ModelConfig::hybrid_150m()).total;
    assert_eq!((base150 as f64 / 1e6).round() as u64, 149);
    assert_eq!((hybrid150 as f64 / 1e6).round() as u64, 133);
}

/// Counting never drifts from construction: shape-rule totals equal the
/// live model's parameter total for every ablation strategy (toy scale so
/// every strategy instantiates quickly).
#[test]
fn counts_match_live_models_for_every_strategy() {
    let mut cfg = ModelConfig::classic_8m();
    cfg.vocab_size = 50;
    cfg.hidden_size = 32;
    cfg.num_layers = 2;
    cfg.num_heads = 4;
    cfg.num_kv_heads = 2;
    cfg.intermediate_size = 48;
    cfg.max_seq_len = 64;
    cfg.projector = qproj::ProjectorConfig {
        n_qubits: 4,
        n_layers: 2,
        variant: qproj::AnsatzVariant::A8M,
        expand_mode: qproj::ExpandMode::Scalar,
    };
    for (label, strategy) in table2_strategies() {
        let strategy_cfg = cfg.with_replacement(strategy);
        let counted = count_params(&strategy_cfg).total;
        let live = Model::init(strategy_cfg, 1).unwrap().total_params() as u64;
        assert_eq!(counted, live, "{label}");
    }

    // the full 8M configuration too, plus per-tensor name agreement
    let full_cfg = ModelConfig::hybrid_8m();
    let report = count_params(&full_cfg);
    let model = Model::init(full_cfg, 1).unwrap();
    assert_eq!(report.total, model.total_params() as u64);
    let mut live_names = Vec::new();
    model.visit_params(&mut |name, values| live_names.push((name.to_string(), values.len() as u64)));
    let counted_names: Vec<(String, u64)> = report
        .entries
        .iter()
        .map(|e| (e.name.clone(), e.count))
        .collect();
    assert_eq!(counted_names, live_names, "name-for-name agreement");
}

#[test]
fn count_params_is_fast() {
    let start = std::time::Instant::now();
    for _ in 0..100 {
        let _ = count_params(&ModelConfig::hybrid_8m());
    }
    assert!(start.elapsed().as_millis() < 1000);
}

#[test]
fn flops_estimator_structure() {
    let cfg = ModelConfig::classic_8m();
    let report = estimate_flops(&cfg, 512);
    assert!(report.total_flops > 0.0);
    assert_eq!(
        report.total_flops,
        512.0 * report.weight_flops_per_token + report.attention_flops
    );
}

/// Per-head projectors behind the config flag keep the count/live identity.
#[test]
fn per_head_counts_match_live_model() {
    let mut cfg = ModelConfig::classic_8m();
    cfg.vocab_size = 40;
    cfg.hidden_size = 16;
    cfg.num_layers = 1;
    cfg.num_heads = 4;
    cfg.num_kv_heads = 2;
    cfg.intermediate_size = 24;
    cfg.max_seq_len = 32;
    cfg.per_head_projectors = true;
    cfg.replacement =
        tmodel::ReplacementStrategy::parse("[Wq, Wk]").unwrap();
    cfg.projector = qproj::ProjectorConfig {
        n_qubits: 2,
        n_layers: 1,
        variant: qproj::AnsatzVariant::B150M,
        expand_mode: qproj::ExpandMode::Full,
    };
    let counted = count_params(&cfg);
    let model = Model::init(cfg, 9).unwrap();
    assert_eq!(counted.total, model.total_params() as u64);
    let mut live = Vec::new();
    model.visit_params(&mut |name, v| live.push((name.to_string(), v.len() as u64)));
    let ours: Vec<(String, u64)> = counted
        .entries
        .iter()
        .map(|e| (e.name.clone(), e.count))
        .collect();
    assert_eq!(ours, live);
}
