//! End-to-end acceptance suite: numerical oracles, gradient checks, the
//! propagation propositions, and the two desk-scale experiments (shifting
//! Gaussian, climate OU) with DRN / RDRN / MLP comparisons.
//!
//! Every criterion prints one `pass`/`FAIL` line; the test fails if any
//! criterion does. Run with `--nocapture` to watch progress. The training
//! criteria retrain 5 seeds per configuration and take a while on one core.

use drn::baseline::init_mlp;
use drn::checks::{
    check_oracle_equivalence, check_param_counts, check_unrolled_recurrence, gradcheck_suite,
    props_suite,
};
use drn::data::{
    degrade_with_sampling, gen_climate_ou, gen_shifting_gaussian, load_csv_samples, Dataset,
};
use drn::dist::{jsd, Bandwidth, BinnedDistribution, Support};
use drn::net::NetworkSpec;
use drn::train::{evaluate, init_drn, init_rdrn, train, Model, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;

const SEEDS: u64 = 5;

struct Outcome {
    name: &'static str,
    passed: bool,
}

fn report(results: &mut Vec<Outcome>, name: &'static str, passed: bool, detail: String) {
    println!("criterion {:2}: {:<34} {}  ({detail})", results.len() + 1, name, if passed { "pass" } else { "FAIL" });
    results.push(Outcome { name, passed });
}

fn sg_config(seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: 0.05,
        max_epochs: 600,
        patience: 50,
        val_every: 10,
        batch: Some(10),
        seed,
        ..TrainConfig::default()
    }
}

fn climate_config(seed: u64) -> TrainConfig {
    TrainConfig { max_epochs: 2000, patience: 100, ..sg_config(seed) }
}

fn subset(data: &Dataset, n: usize) -> Dataset {
    Dataset { samples: data.samples[..n].to_vec(), meta: data.meta.clone() }
}

/// Mean test L2 over training seeds `0..SEEDS` for a model family built by
/// `init`, all on the same datasets.
fn mean_test_l2<M: Model>(
    init: impl Fn(&TrainConfig) -> M,
    config: impl Fn(u64) -> TrainConfig,
    train_data: &Dataset,
    val_data: &Dataset,
    test_data: &Dataset,
) -> f64 {
    let mut total = 0.0;
    for seed in 0..SEEDS {
        let cfg = config(seed);
        let (best, _) = train(init(&cfg), train_data, val_data, &cfg).unwrap();
        total += evaluate(&best, test_data).unwrap().l2.mean;
    }
    total / SEEDS as f64
}

fn drn_family(
    layers: Vec<usize>,
    support: Support,
) -> impl Fn(&TrainConfig) -> drn::net::DrnNetwork {
    move |cfg| init_drn(NetworkSpec::new(layers.clone()).unwrap(), support, cfg)
}

#[test]
fn acceptance_criteria() {
    let mut results = Vec::new();

    // 1. propagation oracle equivalence, 200 random instances
    let r = check_oracle_equivalence(11, 200);
    report(
        &mut results,
        "oracle equivalence",
        r.passed(),
        format!("max rel error {:.2e} < {:.0e}", r.max_error, r.tolerance),
    );

    // 2. analytic gradients vs central finite differences, 20 configurations
    let grads = gradcheck_suite(11);
    let worst = grads.iter().map(|g| g.max_error).fold(0.0f64, f64::max);
    report(
        &mut results,
        "gradient checks (20 configs)",
        grads.iter().all(|g| g.passed()),
        format!("max rel error {worst:.2e} < 1e-4"),
    );

    // 3. propagation propositions (zero-weight, identity limit, normalization
    //    and scaling invariance, cross terms, first-order error scaling)
    let props = props_suite(11);
    let failed: Vec<&str> = props.iter().filter(|p| !p.passed()).map(|p| p.name).collect();
    report(
        &mut results,
        "proposition suite",
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} checks", props.len())
        } else {
            format!("failed: {}", failed.join(", "))
        },
    );

    // 4. parameter counts against the published tables, exact
    let counts = check_param_counts();
    report(&mut results, "parameter counts", counts.passed(), "224/44/59/1303/22700".into());

    // shared datasets -------------------------------------------------------
    let sg_support = Support::new(0.0, 1.0, 100).unwrap();
    let sg_train = gen_shifting_gaussian(20, 3, 0.2, 0.1, 100).unwrap();
    let sg_val = gen_shifting_gaussian(100, 3, 0.2, 0.1, 101).unwrap();
    let sg_test = gen_shifting_gaussian(1000, 3, 0.2, 0.1, 102).unwrap();

    let cl_support = Support::new(-0.01, 0.1, 100).unwrap();
    let (cl_train, cl_test) = gen_climate_ou(100, 1000, 200).unwrap();
    let (cl_val, _) = gen_climate_ou(100, 1, 201).unwrap();
    // DRN and MLP see the 3 most recent of the 5 input steps
    let (cl_train3, cl_val3, cl_test3) =
        (cl_train.truncate_history(3), cl_val.truncate_history(3), cl_test.truncate_history(3));

    // 5. shifting Gaussian, DRN 3 - 2x10 - 1
    let sg_drn = mean_test_l2(
        drn_family(vec![3, 10, 10, 1], sg_support),
        sg_config,
        &sg_train,
        &sg_val,
        &sg_test,
    );
    report(&mut results, "shifting Gaussian DRN", sg_drn <= 0.10, format!("mean L2 {sg_drn:.4} <= 0.10"));

    // 6. climate OU, DRN 3 - 1x5 - 1 with history 3
    let cl_drn = mean_test_l2(
        drn_family(vec![3, 5, 1], cl_support),
        climate_config,
        &cl_train3,
        &cl_val3,
        &cl_test3,
    );
    report(&mut results, "climate OU DRN", cl_drn <= 0.20, format!("mean L2 {cl_drn:.4} <= 0.20"));

    // 7. DRN beats the MLP baseline at matched budgets: shifting Gaussian with
    //    20 training samples and climate with 50
    let sg_mlp = mean_test_l2(
        |cfg| init_mlp(vec![300, 3, 100], sg_support, cfg).unwrap(),
        sg_config,
        &sg_train,
        &sg_val,
        &sg_test,
    );
    let cl50_train = subset(&cl_train3, 50);
    let cl50_drn = mean_test_l2(
        drn_family(vec![3, 5, 1], cl_support),
        climate_config,
        &cl50_train,
        &cl_val3,
        &cl_test3,
    );
    let cl50_mlp = mean_test_l2(
        |cfg| init_mlp(vec![300, 50, 50, 100], cl_support, cfg).unwrap(),
        climate_config,
        &cl50_train,
        &cl_val3,
        &cl_test3,
    );
    report(
        &mut results,
        "DRN < MLP ordering",
        sg_drn < sg_mlp && cl50_drn < cl50_mlp,
        format!("sg {sg_drn:.4} < {sg_mlp:.4}; climate-50 {cl50_drn:.4} < {cl50_mlp:.4}"),
    );

    // 8. sampling-noise robustness: train on 500-sample histograms, evaluate
    //    on the exact test pdfs; DRN's relative L2 increase must be smaller
    let cl_train_deg = degrade_with_sampling(&cl_train3, 500, 777).unwrap();
    let cl_val_deg = degrade_with_sampling(&cl_val3, 500, 778).unwrap();
    let cl_mlp_full = mean_test_l2(
        |cfg| init_mlp(vec![300, 50, 50, 100], cl_support, cfg).unwrap(),
        climate_config,
        &cl_train3,
        &cl_val3,
        &cl_test3,
    );
    let cl_drn_deg = mean_test_l2(
        drn_family(vec![3, 5, 1], cl_support),
        climate_config,
        &cl_train_deg,
        &cl_val_deg,
        &cl_test3,
    );
    let cl_mlp_deg = mean_test_l2(
        |cfg| init_mlp(vec![300, 50, 50, 100], cl_support, cfg).unwrap(),
        climate_config,
        &cl_train_deg,
        &cl_val_deg,
        &cl_test3,
    );
    let drn_increase = (cl_drn_deg - cl_drn) / cl_drn;
    let mlp_increase = (cl_mlp_deg - cl_mlp_full) / cl_mlp_full;
    report(
        &mut results,
        "sampling-noise robustness",
        drn_increase < mlp_increase,
        format!("relative L2 increase: drn {drn_increase:.2} < mlp {mlp_increase:.2}"),
    );

    // 9. RDRN: recurrence matches its tied-weight unrolled network, and the
    //    m=5 recurrent model solves the shifting Gaussian task
    let unroll = check_unrolled_recurrence(11);
    let sg_rdrn = mean_test_l2(
        |cfg| init_rdrn(1, 5, sg_support, cfg),
        sg_config,
        &sg_train,
        &sg_val,
        &sg_test,
    );
    report(
        &mut results,
        "RDRN sanity",
        unroll.passed() && sg_rdrn <= 0.10,
        format!("unroll error {:.2e} < 1e-9; mean L2 {sg_rdrn:.4} <= 0.10", unroll.max_error),
    );

    // 10. CSV-samples ingestion: kernel density estimates of sampled Gaussians
    //     stay close to the true distributions
    let kde_jsd = csv_kde_roundtrip_jsd();
    report(&mut results, "csv-kde ingestion", kde_jsd < 0.02, format!("mean JSD {kde_jsd:.4} < 0.02"));

    let failures: Vec<&str> =
        results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    assert!(failures.is_empty(), "failed criteria: {}", failures.join(", "));
}

/// Writes grouped samples from two known Gaussians to a CSV file, loads them
/// back through the KDE path, and returns the mean JSD against the truth.
fn csv_kde_roundtrip_jsd() -> f64 {
    let support = Support::new(0.0, 1.0, 100).unwrap();
    let truths = [
        BinnedDistribution::gaussian(0.35, 0.01, support).unwrap(),
        BinnedDistribution::gaussian(0.6, 0.02, support).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("groups.csv");
    let mut file = std::fs::File::create(&path).unwrap();
    writeln!(file, "group,value").unwrap();
    for (g, truth) in truths.iter().enumerate() {
        for v in truth.sample(400, &mut rng) {
            writeln!(file, "g{g},{v}").unwrap();
        }
    }
    drop(file);
    let loaded = load_csv_samples(&path, support, "group", "value", Bandwidth::Auto).unwrap();
    assert_eq!(loaded.len(), truths.len());
    let total: f64 = loaded
        .iter()
        .zip(&truths)
        .map(|((_, est), truth)| jsd(est, truth).unwrap())
        .sum();
    total / truths.len() as f64
}
