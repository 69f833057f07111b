//! Metrics, statistical validation, and scenario comparison tables.
//!
//! Incidence is reported per 100 susceptible person-years with a mid-year
//! convention for incident cases. Model validation against a historical
//! series uses a two-sided paired t-test whose p-value comes from the
//! regularized incomplete beta function, implemented here and checked
//! against published critical values.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// End-of-year stage counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StageCensus {
    pub negative: u32,
    pub primary: u32,
    pub asymptomatic: u32,
    pub aids: u32,
}

impl StageCensus {
    pub fn total(&self) -> u32 {
        self.negative + self.primary + self.asymptomatic + self.aids
    }

    pub fn infected(&self) -> u32 {
        self.primary + self.asymptomatic + self.aids
    }
}

/// One simulated year of one realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YearMetrics {
    pub year: i32,
    pub new_infections: u32,
    pub susceptible_person_years: f64,
    pub incidence_per_100py: f64,
    /// Diagnosed infected over total infected at year end; 0 when nobody
    /// is infected.
    pub diagnosed_fraction: f64,
    pub census: StageCensus,
}

/// Realization-averaged metrics for one year.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedYear {
    pub year: i32,
    pub mean_incidence: f64,
    /// Sample standard deviation of incidence across realizations.
    pub sd_incidence: f64,
    pub mean_diagnosed_fraction: f64,
    pub mean_new_infections: f64,
    pub mean_negative: f64,
    pub mean_primary: f64,
    pub mean_asymptomatic: f64,
    pub mean_aids: f64,
}

/// New infections per 100 susceptible person-years. Zero events with a
/// zero denominator count as zero incidence.
pub fn incidence(new_infections: u32, susceptible_py: f64) -> Result<f64> {
    if susceptible_py < 0.0 {
        return Err(Error::Parameter(format!(
            "person-years must be >= 0, got {susceptible_py}"
        )));
    }
    if susceptible_py == 0.0 {
        if new_infections > 0 {
            return Err(Error::Computation(format!(
                "{new_infections} infections with zero person-years at risk"
            )));
        }
        return Ok(0.0);
    }
    Ok(100.0 * new_infections as f64 / susceptible_py)
}

/// Susceptible person-years for one year under the mid-year convention:
/// incident cases contribute half a year at risk.
pub fn susceptible_person_years(negative_at_year_start: u32, new_infections: u32) -> f64 {
    negative_at_year_start as f64 - new_infections as f64 / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestReport {
    pub t: f64,
    pub degrees_of_freedom: u32,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
}

impl std::fmt::Display for TTestReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "paired t-test: t = {:.6}, df = {}, p = {:.6} -> {} H0 at alpha = {}",
            self.t,
            self.degrees_of_freedom,
            self.p_value,
            if self.reject {
                "reject"
            } else {
                "fail to reject"
            },
            self.alpha
        )
    }
}

/// Two-sided paired t-test of `series_a` against `series_b`.
///
/// The statistic is `mean(d) / (sd(d) / sqrt(n))` with `d = a - b` and the
/// sample standard deviation (n-1 denominator). Identical differences give
/// no variance to test against and are reported as degenerate input.
pub fn paired_t_test(series_a: &[f64], series_b: &[f64], alpha: f64) -> Result<TTestReport> {
    if series_a.len() != series_b.len() {
        return Err(Error::Parameter(format!(
            "paired series differ in length: {} vs {}",
            series_a.len(),
            series_b.len()
        )));
    }
    let n = series_a.len();
    if n < 2 {
        return Err(Error::Parameter(format!(
            "paired t-test needs at least 2 pairs, got {n}"
        )));
    }
    if !(0.0 < alpha && alpha <= 1.0) {
        return Err(Error::Parameter(format!(
            "significance level must be in (0, 1], got {alpha}"
        )));
    }
    let d: Vec<f64> = series_a.iter().zip(series_b).map(|(a, b)| a - b).collect();
    if d.iter().all(|&x| x == d[0]) {
        return Err(Error::DegenerateInput(
            "all pairwise differences are equal; the t statistic is undefined".into(),
        ));
    }
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = mean / (var.sqrt() / (n as f64).sqrt());
    let df = (n - 1) as u32;
    let p_value = student_t_two_sided_p(t, df as f64)?;
    Ok(TTestReport {
        t,
        degrees_of_freedom: df,
        p_value,
        alpha,
        reject: p_value < alpha,
    })
}

/// Pair a simulated averaged series with a historical `(year, incidence)`
/// series over their overlapping years and t-test the two.
pub fn historical_t_test(
    averaged: &[AveragedYear],
    historical: &[(i32, f64)],
    alpha: f64,
) -> Result<TTestReport> {
    let by_year: BTreeMap<i32, f64> = averaged
        .iter()
        .map(|y| (y.year, y.mean_incidence))
        .collect();
    let mut sim = Vec::new();
    let mut hist = Vec::new();
    for &(year, value) in historical {
        if let Some(&s) = by_year.get(&year) {
            sim.push(s);
            hist.push(value);
        }
    }
    if sim.len() < 2 {
        return Err(Error::Parameter(format!(
            "only {} overlapping years between simulation and historical series",
            sim.len()
        )));
    }
    paired_t_test(&sim, &hist, alpha)
}

/// Parse a two-column `year,incidence_per_100py` CSV. A non-numeric first
/// line is treated as a header; `#` lines are comments.
pub fn parse_historical_csv(text: &str) -> Result<Vec<(i32, f64)>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let year_field = fields.next().unwrap_or_default().trim();
        let value_field = fields.next().unwrap_or_default().trim();
        match (year_field.parse::<i32>(), value_field.parse::<f64>()) {
            (Ok(year), Ok(value)) => out.push((year, value)),
            _ if idx == 0 => continue, // header row
            _ => {
                return Err(Error::Parameter(format!(
                    "historical series line {}: expected `year,incidence`, got `{line}`",
                    idx + 1
                )))
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Parameter(
            "historical series contains no data rows".into(),
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub year: i32,
    pub scenario: String,
    pub incidence: f64,
    /// Signed percentage difference against the reference scenario.
    pub pct_vs_rs: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl std::fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:>6} {:>10} {:>12} {:>12}",
            "year", "scenario", "incidence", "vs RS"
        )?;
        for row in &self.rows {
            let marker = if row.pct_vs_rs >= 0.0 {
                '\u{2191}'
            } else {
                '\u{2193}'
            };
            writeln!(
                f,
                "{:>6} {:>10} {:>12.5} {:>11.2}% {}",
                row.year,
                row.scenario,
                row.incidence,
                row.pct_vs_rs.abs(),
                marker
            )?;
        }
        Ok(())
    }
}

/// Pure-series comparison: signed percentage difference of every
/// prediction series against the reference, per requested year.
pub fn comparison_from_series(
    reference: &BTreeMap<i32, f64>,
    predictions: &[(String, BTreeMap<i32, f64>)],
    years: &[i32],
) -> Result<ComparisonTable> {
    let mut rows = Vec::new();
    for &year in years {
        let rs = *reference
            .get(&year)
            .ok_or_else(|| Error::Parameter(format!("reference series is missing year {year}")))?;
        if rs == 0.0 {
            return Err(Error::Computation(format!(
                "reference incidence is zero in {year}; percentage undefined"
            )));
        }
        for (name, series) in predictions {
            let value = *series.get(&year).ok_or_else(|| {
                Error::Parameter(format!("scenario {name} is missing year {year}"))
            })?;
            rows.push(ComparisonRow {
                year,
                scenario: name.clone(),
                incidence: value,
                pct_vs_rs: 100.0 * (value - rs) / rs,
            });
        }
    }
    Ok(ComparisonTable { rows })
}

/// Comparison table over realization-averaged scenario results.
pub fn scenario_comparison_table(
    reference: &[AveragedYear],
    predictions: &[(String, &[AveragedYear])],
    years: &[i32],
) -> Result<ComparisonTable> {
    let rs: BTreeMap<i32, f64> = reference
        .iter()
        .map(|y| (y.year, y.mean_incidence))
        .collect();
    let preds: Vec<(String, BTreeMap<i32, f64>)> = predictions
        .iter()
        .map(|(name, series)| {
            (
                name.clone(),
                series.iter().map(|y| (y.year, y.mean_incidence)).collect(),
            )
        })
        .collect();
    comparison_from_series(&rs, &preds, years)
}

/// Metadata emitted as `#` comment lines at the top of every CSV.
#[derive(Debug, Clone)]
pub struct CsvMetadata<'a> {
    pub tool_version: &'a str,
    pub scenario: &'a str,
    pub master_seed: u64,
    pub rng_algorithm: &'a str,
    pub config_json: &'a str,
    pub scenario_json: &'a str,
}

fn push_metadata(out: &mut String, meta: &CsvMetadata<'_>) {
    let _ = writeln!(out, "# canepi {}", meta.tool_version);
    let _ = writeln!(out, "# scenario: {}", meta.scenario);
    let _ = writeln!(out, "# master_seed: {}", meta.master_seed);
    let _ = writeln!(out, "# rng_algorithm: {}", meta.rng_algorithm);
    let _ = writeln!(out, "# config: {}", meta.config_json);
    let _ = writeln!(out, "# scenario_spec: {}", meta.scenario_json);
}

/// Render one scenario's averaged series as CSV (UTF-8, LF, `.` decimals).
pub fn render_scenario_csv(meta: &CsvMetadata<'_>, years: &[AveragedYear]) -> String {
    let mut out = String::new();
    push_metadata(&mut out, meta);
    out.push_str(
        "year,mean_incidence_per_100py,sd_incidence,mean_diagnosed_fraction,\
         new_infections_mean,stage_negative,stage_pi,stage_ap,stage_aids\n",
    );
    for y in years {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            y.year,
            y.mean_incidence,
            y.sd_incidence,
            y.mean_diagnosed_fraction,
            y.mean_new_infections,
            y.mean_negative,
            y.mean_primary,
            y.mean_asymptomatic,
            y.mean_aids
        );
    }
    out
}

/// Render the scenario comparison table as CSV.
pub fn render_comparison_csv(meta: &CsvMetadata<'_>, table: &ComparisonTable) -> String {
    let mut out = String::new();
    push_metadata(&mut out, meta);
    out.push_str("year,scenario,incidence,pct_vs_rs\n");
    for row in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.4}",
            row.year, row.scenario, row.incidence, row.pct_vs_rs
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Special functions for the t distribution and chi-square gates.
// ---------------------------------------------------------------------------

/// Natural log of the gamma function (Lanczos, g = 7).
#[allow(clippy::excessive_precision)] // published coefficients kept verbatim
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return pi.ln() - (pi * x).sin().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.999_999_999_999_809_93;
    for (i, &c) in COEFFS.iter().enumerate() {
        acc += c / (x + (i + 1) as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized incomplete beta function `I_x(a, b)` via the Lentz
/// continued fraction; converges to ~1e-15 for the arguments used here.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Parameter(format!(
            "incomplete beta requires a, b > 0, got a = {a}, b = {b}"
        )));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Parameter(format!(
            "incomplete beta requires x in [0, 1], got {x}"
        )));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(front * beta_continued_fraction(a, b, x) / a)
    } else {
        Ok(1.0 - regularized_incomplete_beta(b, a, 1.0 - x)?)
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Two-sided p-value of a t statistic with `df` degrees of freedom:
/// `P(|T| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2)`.
pub fn student_t_two_sided_p(t: f64, df: f64) -> Result<f64> {
    if !df.is_finite() || df <= 0.0 {
        return Err(Error::Parameter(format!(
            "degrees of freedom must be > 0, got {df}"
        )));
    }
    regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t * t))
}

/// Pearson chi-square statistic over matched observed/expected counts.
pub fn chi_square_statistic(observed: &[f64], expected: &[f64]) -> Result<f64> {
    if observed.len() != expected.len() {
        return Err(Error::Parameter(format!(
            "chi-square bins differ in length: {} vs {}",
            observed.len(),
            expected.len()
        )));
    }
    if expected.iter().any(|&e| e <= 0.0) {
        return Err(Error::Parameter(
            "chi-square expected counts must be positive".into(),
        ));
    }
    Ok(observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum())
}

/// Upper critical value of the chi-square distribution by the
/// Wilson-Hilferty cube-root normal approximation; accurate to a fraction
/// of a percent for the bin counts used in the goodness-of-fit gates.
pub fn chi_square_critical(df: u32, significance: f64) -> f64 {
    let z = normal_quantile(1.0 - significance);
    let k = df as f64;
    let term = 1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt();
    k * term.powi(3)
}

/// Inverse standard normal CDF (Acklam's rational approximation,
/// |relative error| < 1.2e-9).
#[allow(clippy::excessive_precision)] // published coefficients kept verbatim
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile needs p in (0, 1), got {p}");
    const A: [f64; 6] = [
        -39.696_830_286_653_76,
        220.946_098_424_520_9,
        -275.928_510_446_968_96,
        138.357_751_867_269_12,
        -30.664_798_066_147_16,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -54.476_098_798_224_06,
        161.585_836_858_040_93,
        -155.698_979_859_886_66,
        66.801_311_887_719_72,
        -13.280_681_552_885_721,
    ];
    const C: [f64; 6] = [
        -0.007_784_894_002_430_293,
        -0.322_396_458_041_136_4,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        0.007_784_695_709_041_462,
        0.322_467_129_070_039_8,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}
