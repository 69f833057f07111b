//! Acceptance suite: quantitative reproduction targets and property gates,
//! one test per criterion. Every test prints a `[criterion N] PASS/FAIL`
//! line (visible with `cargo test --test acceptance -- --nocapture`) before
//! asserting, so the whole scorecard is readable in one pass.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use canepi_core::analysis::{
    chi_square_critical, chi_square_statistic, comparison_from_series, paired_t_test,
    render_scenario_csv, CsvMetadata,
};
use canepi_core::config::SimulationConfig;
use canepi_core::disease::Stage;
use canepi_core::engine::{run_realization_observed, run_scenario, SimulationResult};
use canepi_core::error::Error;
use canepi_core::netgen::{generate_degree_sequence, validate_network, wire_configuration_model};
use canepi_core::scenario::preset;
use canepi_core::stochastics::{
    sample_binomial, sample_continuous_uniform, sample_discrete_uniform, sample_poisson,
    PowerLawDegree, RngStream,
};
use canepi_core::transmission::per_year_probability;

const MASTER_SEED: u64 = 42;
const SCENARIOS: [&str; 6] = ["rs", "p1", "p2", "p3", "p4", "p5"];

/// The six default scenarios at full scale (2299 agents, 1985-2044, 30
/// realizations), computed once and shared across criteria.
fn results() -> &'static Vec<SimulationResult> {
    static RESULTS: OnceLock<Vec<SimulationResult>> = OnceLock::new();
    RESULTS.get_or_init(|| {
        let config = SimulationConfig::default();
        SCENARIOS
            .iter()
            .map(|name| {
                run_scenario(&preset(name).expect("preset"), &config, MASTER_SEED)
                    .expect("scenario run")
            })
            .collect()
    })
}

fn incidence(scenario: usize, year: i32) -> f64 {
    results()[scenario]
        .averaged_year(year)
        .expect("year in range")
        .mean_incidence
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

#[test]
fn criterion_01_reference_incidence_magnitude() {
    let band: Vec<f64> = (2006..=2020).map(|y| incidence(0, y)).collect();
    let lo = band.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = band.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let anchors = [
        (2006, 1.66, incidence(0, 2006)),
        (2015, 1.69, incidence(0, 2015)),
        (2020, 1.74, incidence(0, 2020)),
    ];
    let band_ok = lo >= 1.0 && hi <= 2.5;
    let anchors_ok = anchors.iter().all(|(_, t, v)| (v - t).abs() <= 0.5);
    let ok = band_ok && anchors_ok;
    println!(
        "[criterion 1] {} - RS incidence 2006-2020 in [{lo:.3}, {hi:.3}] (limit [1.0, 2.5]); \
         anchors {}",
        verdict(ok),
        anchors
            .iter()
            .map(|(y, t, v)| format!("{y}: {v:.3} (target {t} +/- 0.5)"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    assert!(
        ok,
        "reference-scenario incidence magnitude out of tolerance: band [{lo:.3}, {hi:.3}], \
         anchors {anchors:?}"
    );
}

#[test]
fn criterion_02_scenario_ordering_2010() {
    let v: Vec<f64> = (0..6).map(|i| incidence(i, 2010)).collect();
    let (rs, p1, p2, p3, p4, p5) = (v[0], v[1], v[2], v[3], v[4], v[5]);
    // P5 > P4 > {P3, P1} > P2 >= RS; the P1/P3 near-tie is not ordered.
    let ok = p5 > p4 && p4 > p3 && p4 > p1 && p3 > p2 && p1 > p2 && p2 >= rs;
    println!(
        "[criterion 2] {} - 2010 incidence: P5 {p5:.3} > P4 {p4:.3} > {{P3 {p3:.3}, P1 {p1:.3}}} \
         > P2 {p2:.3} >= RS {rs:.3}",
        verdict(ok)
    );
    assert!(ok, "2010 scenario ordering violated: {v:?}");
}

#[test]
fn criterion_03_long_run_counterbalance() {
    let longrun = |i: usize| -> f64 { (2030..=2044).map(|y| incidence(i, y)).sum::<f64>() / 15.0 };
    let (rs, p2, p5) = (longrun(0), longrun(2), longrun(5));
    let p5_ok = (p5 - rs).abs() <= 0.25;
    let p2_ok = p2 <= rs - 0.2;
    let ok = p5_ok && p2_ok;
    println!(
        "[criterion 3] {} - 2030-2044 means: RS {rs:.3}, P5 {p5:.3} (|P5-RS| = {:.3}, limit \
         0.25: {}), P2 {p2:.3} (RS-P2 = {:.3}, needs >= 0.2: {})",
        verdict(ok),
        (p5 - rs).abs(),
        verdict(p5_ok),
        rs - p2,
        verdict(p2_ok)
    );
    assert!(
        ok,
        "long-run counterbalance out of tolerance: |P5-RS| = {:.3} (limit 0.25), RS-P2 = {:.3} \
         (needs >= 0.2). The optimistic-therapy deficit is bounded by the treated share of \
         transmission, which the diagnosed-fraction band of criterion 4 caps near 18% under \
         the constant-hazard diagnosis model; see README, section 'Validation status'.",
        (p5 - rs).abs(),
        rs - p2
    );
}

#[test]
fn criterion_04_diagnosed_fraction() {
    let diag = |y: i32| -> f64 {
        results()[0]
            .averaged_year(y)
            .unwrap()
            .mean_diagnosed_fraction
    };
    let path: Vec<(i32, f64)> = (1991..=2044).map(|y| (y, diag(y))).collect();
    let band_ok = path.iter().all(|(_, d)| (0.30..=0.60).contains(d));
    let mean: f64 = (2035..=2044).map(diag).sum::<f64>() / 10.0;
    let mean_ok = (mean - 0.41).abs() <= 0.06;
    let ok = band_ok && mean_ok;
    let lo = path.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = path.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    println!(
        "[criterion 4] {} - diagnosed fraction after 1990 in [{lo:.3}, {hi:.3}] (limit \
         [0.30, 0.60]); 2035-2044 mean {mean:.3} (target 0.41 +/- 0.06)",
        verdict(ok)
    );
    assert!(
        ok,
        "diagnosed fraction out of band: range [{lo:.3}, {hi:.3}], mean {mean:.3}"
    );
}

#[test]
fn criterion_05_comparison_table_regression() {
    // Published scenario incidence matrix and the percentage differences it
    // reports; the comparison table must reproduce every percentage within
    // +/- 0.02 points by pure arithmetic.
    struct Row {
        year: i32,
        rs: f64,
        predictions: [(f64, f64); 5], // (incidence, published pct vs RS)
    }
    let table3 = [
        Row {
            year: 2010,
            rs: 1.61423,
            predictions: [
                (1.76164, 9.13),
                (1.62148, 0.45),
                (1.7568, 8.83),
                (1.8583, 15.12),
                (2.18211, 35.18),
            ],
        },
        Row {
            year: 2015,
            rs: 1.69397,
            predictions: [
                (1.77855, 4.99),
                (1.68189, -0.71),
                (1.75922, 3.85),
                (1.87763, 10.84),
                (2.15311, 27.1),
            ],
        },
        Row {
            year: 2020,
            rs: 1.73505,
            predictions: [
                (1.79063, 3.2),
                (1.50065, -13.51),
                (1.56831, -9.61),
                (1.84138, 6.13),
                (2.0057, 15.6),
            ],
        },
        Row {
            year: 2025,
            rs: 1.60215,
            predictions: [
                (1.77855, 11.01),
                (1.54657, -3.47),
                (1.57556, -1.66),
                (1.59248, -0.6),
                (1.71331, 6.94),
            ],
        },
        Row {
            year: 2030,
            rs: 1.63356,
            predictions: [
                (1.81238, 10.95),
                (1.44991, -11.24),
                (1.40399, -14.05),
                (1.52482, -6.66),
                (1.64081, 0.44),
            ],
        },
        Row {
            year: 2035,
            rs: 1.5804,
            predictions: [
                (1.76647, 11.77),
                (1.16476, -26.3),
                (1.41124, -10.7),
                (1.42816, -9.63),
                (1.66739, 5.5),
            ],
        },
        Row {
            year: 2040,
            rs: 1.59973,
            predictions: [
                (1.64564, 2.87),
                (1.14059, -28.7),
                (1.3025, -18.58),
                (1.37016, -14.35),
                (1.57556, -1.51),
            ],
        },
    ];
    let reference: BTreeMap<i32, f64> = table3.iter().map(|r| (r.year, r.rs)).collect();
    let names = ["p1", "p2", "p3", "p4", "p5"];
    let predictions: Vec<(String, BTreeMap<i32, f64>)> = (0..5)
        .map(|i| {
            (
                names[i].to_string(),
                table3
                    .iter()
                    .map(|r| (r.year, r.predictions[i].0))
                    .collect(),
            )
        })
        .collect();
    let years: Vec<i32> = table3.iter().map(|r| r.year).collect();
    let table = comparison_from_series(&reference, &predictions, &years).unwrap();

    let mut worst: f64 = 0.0;
    for row in &table3 {
        for (i, &(_, published)) in row.predictions.iter().enumerate() {
            let computed = table
                .rows
                .iter()
                .find(|r| r.year == row.year && r.scenario == names[i])
                .unwrap()
                .pct_vs_rs;
            worst = worst.max((computed - published).abs());
        }
    }
    let ok = worst <= 0.02;
    println!(
        "[criterion 5] {} - comparison table reproduces all 35 published percentages, worst \
         deviation {worst:.4} points (limit 0.02)",
        verdict(ok)
    );
    assert!(
        ok,
        "comparison-table regression deviates by {worst:.4} points"
    );
}

#[test]
fn criterion_06_network_suite() {
    let table = PowerLawDegree::new(1.6, 200, 0.01).unwrap();
    let mut rng = RngStream::new(MASTER_SEED, 600);

    let mut all_valid = true;
    for _ in 0..100 {
        let seq = generate_degree_sequence(2299, &table, &mut rng).unwrap();
        let edges = wire_configuration_model(&seq, &mut rng).unwrap();
        all_valid &= validate_network(&edges, &seq).passed();
    }

    let mut parity_ok = true;
    for _ in 0..50 {
        let seq = generate_degree_sequence(2299, &table, &mut rng).unwrap();
        parity_ok &= seq.sum().is_multiple_of(2);
    }

    // Degree-distribution goodness of fit on 1e5 nodes at alpha = 0.01.
    let seq = generate_degree_sequence(100_000, &table, &mut rng).unwrap();
    let mut counts = vec![0usize; 201];
    for &d in seq.degrees() {
        counts[d as usize] += 1;
    }
    let mut observed = Vec::new();
    let mut expected = Vec::new();
    let (mut obs_acc, mut exp_acc) = (0.0f64, 0.0f64);
    for k in 0..=200u32 {
        obs_acc += counts[k as usize] as f64;
        exp_acc += table.mass(k) * 100_000.0;
        if exp_acc >= 5.0 {
            observed.push(obs_acc);
            expected.push(exp_acc);
            obs_acc = 0.0;
            exp_acc = 0.0;
        }
    }
    if exp_acc > 0.0 {
        *observed.last_mut().unwrap() += obs_acc;
        *expected.last_mut().unwrap() += exp_acc;
    }
    // Parity repair shifts one node one degree; at 1e5 draws its effect on
    // the histogram is far below the test's resolution.
    let stat = chi_square_statistic(&observed, &expected).unwrap();
    let crit = chi_square_critical(observed.len() as u32 - 1, 0.01);
    let fit_ok = stat < crit;

    let ok = all_valid && parity_ok && fit_ok;
    println!(
        "[criterion 6] {} - 100/100 networks valid: {}; parity always even: {}; degree \
         chi-square {stat:.1} < {crit:.1}: {}",
        verdict(ok),
        verdict(all_valid),
        verdict(parity_ok),
        verdict(fit_ok)
    );
    assert!(ok);
}

#[test]
fn criterion_07_distribution_suite() {
    let n = 100_000usize;
    let mut rng = RngStream::new(MASTER_SEED, 700);
    let mut checks: Vec<(String, bool)> = Vec::new();

    let mut moment = |name: &str, draws: Vec<f64>, mean_target: f64, sd: f64| {
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let se = sd / (draws.len() as f64).sqrt();
        let ok = (mean - mean_target).abs() <= 3.0 * se;
        checks.push((
            format!(
                "{name} mean {mean:.4} (target {mean_target} +/- {:.4})",
                3.0 * se
            ),
            ok,
        ));
    };

    let b26: Vec<f64> = (0..n)
        .map(|_| sample_binomial(26, 0.5, &mut rng).unwrap() as f64)
        .collect();
    moment("B(26,0.5)", b26, 13.0, (26.0f64 * 0.25).sqrt());

    let b52: Vec<f64> = (0..n)
        .map(|_| sample_binomial(52, 0.5, &mut rng).unwrap() as f64)
        .collect();
    moment("B(52,0.5)", b52, 26.0, (52.0f64 * 0.25).sqrt());

    let p30: Vec<f64> = (0..n)
        .map(|_| sample_poisson(30.0, &mut rng).unwrap() as f64)
        .collect();
    moment("P(30)", p30, 30.0, 30.0f64.sqrt());

    let du: Vec<f64> = (0..n)
        .map(|_| sample_discrete_uniform(1, 2, &mut rng).unwrap() as f64)
        .collect();
    moment("DU(1,2)", du, 1.5, 0.5);

    let mut cu_ok = true;
    for _ in 0..n {
        let moderate = sample_continuous_uniform(0.1, 0.5, &mut rng).unwrap();
        let optimistic = sample_continuous_uniform(0.01, 0.1, &mut rng).unwrap();
        cu_ok &= (0.1..0.5).contains(&moderate) && (0.01..0.1).contains(&optimistic);
    }
    checks.push(("CU bounds respected".to_string(), cu_ok));

    let table = PowerLawDegree::new(1.6, 200, 0.01).unwrap();
    let mass_ok = (table.total_mass() - 1.0).abs() < 1e-12;
    checks.push(("power-law mass normalized to 1e-12".to_string(), mass_ok));

    let ok = checks.iter().all(|c| c.1);
    println!(
        "[criterion 7] {} - {}",
        verdict(ok),
        checks
            .iter()
            .map(|(d, o)| format!("{d}: {}", verdict(*o)))
            .collect::<Vec<_>>()
            .join("; ")
    );
    assert!(ok, "{checks:?}");
}

#[test]
fn criterion_08_transmission_oracle() {
    // Closed-form yearly probability against a Bernoulli-acts Monte-Carlo
    // oracle, 20 randomized act lists of length up to 60, 3 sigma at 1e6.
    let rng = RngStream::new(MASTER_SEED, 800);
    let mut worst_sigma: f64 = 0.0;
    for case in 0..20u64 {
        let mut case_rng = rng.fork(&[case]);
        let len = sample_discrete_uniform(1, 60, &mut case_rng).unwrap() as usize;
        let acts: Vec<f64> = (0..len)
            .map(|_| sample_continuous_uniform(0.0, 0.3, &mut case_rng).unwrap())
            .collect();
        let closed = per_year_probability(&acts);
        let trials = 1_000_000u32;
        let mut hits = 0u32;
        for _ in 0..trials {
            if acts
                .iter()
                .any(|&p| rand::Rng::random::<f64>(&mut case_rng) < p)
            {
                hits += 1;
            }
        }
        let empirical = hits as f64 / trials as f64;
        let se = (closed * (1.0 - closed) / trials as f64).sqrt().max(1e-12);
        worst_sigma = worst_sigma.max((empirical - closed).abs() / se);
    }
    let ok = worst_sigma <= 3.0;
    println!(
        "[criterion 8] {} - yearly-probability composition vs Monte-Carlo on 20 act lists, \
         worst deviation {worst_sigma:.2} sigma (limit 3)",
        verdict(ok)
    );
    assert!(ok, "worst deviation {worst_sigma:.2} sigma");
}

#[test]
fn criterion_09_determinism() {
    let mut config = SimulationConfig::default();
    config.simulation.realizations = 3;
    let rs = preset("rs").unwrap();
    let render = |result: &SimulationResult| {
        render_scenario_csv(
            &CsvMetadata {
                tool_version: canepi_core::VERSION,
                scenario: &result.scenario.name,
                master_seed: result.master_seed,
                rng_algorithm: result.rng_algorithm,
                config_json: &result.config_echo,
                scenario_json: &result.scenario_json(),
            },
            &result.averaged,
        )
    };
    let a = render(&run_scenario(&rs, &config, 4242).unwrap());
    let b = render(&run_scenario(&rs, &config, 4242).unwrap());
    let c = render(&run_scenario(&rs, &config, 4243).unwrap());
    let identical = a == b;
    let seed_sensitive = a != c;
    let ok = identical && seed_sensitive;
    println!(
        "[criterion 9] {} - identical seed gives byte-identical CSV: {}; changing the seed \
         changes the CSV: {}",
        verdict(ok),
        verdict(identical),
        verdict(seed_sensitive)
    );
    assert!(ok);
}

#[test]
fn criterion_10_conservation_and_trajectories() {
    let config = SimulationConfig::default();
    let rs = preset("rs").unwrap();
    let mut conserved = true;
    let mut legal_transitions = true;
    for stream in 0..3u64 {
        let mut previous: Option<Vec<Stage>> = None;
        run_realization_observed(&config, &rs, MASTER_SEED, stream, &mut |_, state| {
            conserved &= state.census().total() == 2299;
            let stages: Vec<Stage> = state.individuals.iter().map(|i| i.stage).collect();
            if let Some(prev) = &previous {
                for (&before, &after) in prev.iter().zip(&stages) {
                    // Year-end to year-end moves; AIDS -> Negative is the
                    // death-replacement reset.
                    let allowed = matches!(
                        (before, after),
                        (Stage::Negative, Stage::Negative)
                            | (Stage::Negative, Stage::Primary)
                            | (Stage::Primary, Stage::Asymptomatic)
                            | (Stage::Asymptomatic, Stage::Asymptomatic)
                            | (Stage::Asymptomatic, Stage::Aids)
                            | (Stage::Aids, Stage::Aids)
                            | (Stage::Aids, Stage::Negative)
                    );
                    legal_transitions &= allowed;
                }
            }
            previous = Some(stages);
        })
        .unwrap();
    }
    let ok = conserved && legal_transitions;
    println!(
        "[criterion 10] {} - population 2299 every year: {}; stage trajectories follow \
         Negative*(PI AP+ AIDS+)? with replacement resets: {}",
        verdict(ok),
        verdict(conserved),
        verdict(legal_transitions)
    );
    assert!(ok);
}

#[test]
fn criterion_11_coupled_monotonicity() {
    // P5 (risk 1.69) vs P2 (risk 1.365), both optimistic therapy, on common
    // random numbers: cumulative infections must dominate in every year of
    // every realization.
    let p2 = &results()[2];
    let p5 = &results()[5];
    let mut violations = 0u32;
    for (r2, r5) in p2.realizations.iter().zip(&p5.realizations) {
        let (mut c2, mut c5) = (0u64, 0u64);
        for (y2, y5) in r2.years.iter().zip(&r5.years) {
            c2 += y2.new_infections as u64;
            c5 += y5.new_infections as u64;
            if c5 < c2 {
                violations += 1;
            }
        }
    }
    let ok = violations == 0;
    println!(
        "[criterion 11] {} - cumulative infections under risk 1.69 >= risk 1.365 in every \
         realization-year ({violations} violations)",
        verdict(ok)
    );
    assert!(
        ok,
        "{violations} realization-years violate coupled monotonicity"
    );
}

#[test]
fn criterion_12_t_test_oracle() {
    let a = [1.0, 2.0, 3.0, 4.0, 5.0];
    let b = [1.1, 1.9, 3.2, 3.8, 5.1];
    let report = paired_t_test(&a, &b, 0.05).unwrap();
    // Hand-computed: d = (-0.1, 0.1, -0.2, 0.2, -0.1), mean -0.02,
    // sd 0.16431677, t = -0.27216553, p = 0.79896586.
    let t_ok = (report.t - (-0.272_165_526_975_907_5)).abs() < 1e-6;
    let df_ok = report.degrees_of_freedom == 4;
    let p_ok = (report.p_value - 0.798_965_859_192_779_5).abs() < 1e-6;
    let reject_ok = !report.reject;
    let degenerate = matches!(paired_t_test(&a, &a, 0.05), Err(Error::DegenerateInput(_)));
    let ok = t_ok && df_ok && p_ok && reject_ok && degenerate;
    println!(
        "[criterion 12] {} - t = {:.7} (df = {}), p = {:.7}, fail to reject at 0.05: {}; \
         identical series rejected as degenerate: {}",
        verdict(ok),
        report.t,
        report.degrees_of_freedom,
        report.p_value,
        verdict(!report.reject),
        verdict(degenerate)
    );
    assert!(ok, "{report:?}");
}
