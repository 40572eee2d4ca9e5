use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::format::{fmt_g17, ser_f64, ser_opt_f64, ser_vec_f64};

/// What per-step errors are measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// Simulated ground-truth state.
    Truth,
    /// Posterior mean from a large reference filter run.
    PosteriorMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub t: usize,
    #[serde(serialize_with = "ser_opt_f64")]
    pub rmse: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64")]
    pub mse: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64")]
    pub ensemble_std: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64")]
    pub std_error: Option<f64>,
}

/// Error curve of one scheme at one particle count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub scheme: String,
    pub resampling: String,
    pub n: usize,
    pub failed: usize,
    pub steps: Vec<StepStats>,
}

impl Curve {
    /// Time-averaged MSE over the steps with at least one successful trial.
    pub fn mean_mse(&self) -> Option<f64> {
        mean(self.steps.iter().filter_map(|s| s.mse))
    }

    pub fn mean_rmse(&self) -> Option<f64> {
        mean(self.steps.iter().filter_map(|s| s.rmse))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: String,
    pub candidate: String,
    pub n: usize,
    /// `100 (1 - mean MSE_candidate / mean MSE_baseline)`.
    #[serde(serialize_with = "ser_f64")]
    pub variance_difference_pct: f64,
    /// Same with RMSE in place of MSE.
    #[serde(serialize_with = "ser_f64")]
    pub rmse_difference_pct: f64,
}

/// Particle count at which the baseline's mean MSE matches a target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EfficiencyGain {
    Matched { n: f64, gain_pct: f64 },
    /// The baseline never gets down to the target on the evaluated grid.
    AboveMax { largest_n: usize },
    /// The baseline already beats the target at the smallest evaluated n.
    BelowMin { smallest_n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyGainEntry {
    pub baseline: String,
    pub candidate: String,
    pub n_ref: usize,
    /// `interpolated`, `>max` or `<min`.
    pub status: String,
    #[serde(serialize_with = "ser_opt_f64")]
    pub matched_n: Option<f64>,
    #[serde(serialize_with = "ser_opt_f64")]
    pub gain_pct: Option<f64>,
    pub bound_n: Option<usize>,
}

impl EfficiencyGainEntry {
    pub fn new(baseline: &str, candidate: &str, n_ref: usize, gain: EfficiencyGain) -> Self {
        let (status, matched_n, gain_pct, bound_n) = match gain {
            EfficiencyGain::Matched { n, gain_pct } => ("interpolated", Some(n), Some(gain_pct), None),
            EfficiencyGain::AboveMax { largest_n } => (">max", None, None, Some(largest_n)),
            EfficiencyGain::BelowMin { smallest_n } => ("<min", None, None, Some(smallest_n)),
        };
        Self {
            baseline: baseline.into(),
            candidate: candidate.into(),
            n_ref,
            status: status.into(),
            matched_n,
            gain_pct,
            bound_n,
        }
    }
}

/// Per-dimension spread of mean estimates across repeated runs on one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadStep {
    pub t: usize,
    #[serde(serialize_with = "ser_vec_f64")]
    pub std: Vec<f64>,
    #[serde(serialize_with = "ser_vec_f64")]
    pub mean_abs_dev: Vec<f64>,
    #[serde(serialize_with = "ser_vec_f64")]
    pub mean_estimate: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub scheme: String,
    pub n: usize,
    pub runs: usize,
    pub failed: usize,
    pub steps: Vec<SpreadStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub model: String,
    pub trials: usize,
    pub steps: usize,
    pub base_seed: u64,
    pub reference: Reference,
    /// Simulated sequences discarded because the truth left the valid region.
    pub regenerated_sequences: usize,
    pub curves: Vec<Curve>,
    pub comparisons: Vec<Comparison>,
    pub efficiency_gains: Vec<EfficiencyGainEntry>,
    #[serde(default)]
    pub spreads: Vec<Spread>,
    /// Scheme/particle-count combinations that were requested but could not run.
    #[serde(default)]
    pub skipped: Vec<String>,
}

impl ExperimentReport {
    pub fn curve(&self, scheme: &str, n: usize) -> Option<&Curve> {
        self.curves.iter().find(|c| c.scheme == scheme && c.n == n)
    }

    fn lookup(&self, scheme: &str, n: usize) -> Result<&Curve, ExperimentError> {
        self.curve(scheme, n).ok_or_else(|| ExperimentError::Lookup {
            scheme: scheme.into(),
            n,
        })
    }

    pub fn spread(&self, scheme: &str, n: usize) -> Option<&Spread> {
        self.spreads.iter().find(|s| s.scheme == scheme && s.n == n)
    }

    /// Fills `comparisons` and `efficiency_gains` for every `(baseline,
    /// candidate)` pairing present in the curves.
    pub fn summarize(&mut self, baseline: &str, candidate: &str) {
        let mut comparisons = Vec::new();
        let mut gains = Vec::new();
        let candidate_ns: Vec<usize> = self
            .curves
            .iter()
            .filter(|c| c.scheme == candidate)
            .map(|c| c.n)
            .collect();
        for n in candidate_ns {
            if let (Ok(v), Ok(r)) = (
                variance_difference(self, baseline, candidate, n),
                rmse_difference(self, baseline, candidate, n),
            ) {
                comparisons.push(Comparison {
                    baseline: baseline.into(),
                    candidate: candidate.into(),
                    n,
                    variance_difference_pct: v,
                    rmse_difference_pct: r,
                });
            }
            if let Ok(g) = efficiency_gain(self, baseline, candidate, n) {
                gains.push(EfficiencyGainEntry::new(baseline, candidate, n, g));
            }
        }
        self.comparisons = comparisons;
        self.efficiency_gains = gains;
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// `scheme,n,t,rmse,ensemble_std,failed` rows in curve order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scheme,n,t,rmse,ensemble_std,failed\n");
        let opt = |v: Option<f64>| v.map(fmt_g17).unwrap_or_else(|| "nan".into());
        for c in &self.curves {
            for s in &c.steps {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    c.scheme,
                    c.n,
                    s.t,
                    opt(s.rmse),
                    opt(s.ensemble_std),
                    c.failed
                )
                .unwrap();
            }
        }
        out
    }

    /// Gnuplot script drawing every curve from `rmse.csv`.
    pub fn to_gnuplot(&self) -> String {
        let mut out = String::new();
        out.push_str("set datafile separator ','\n");
        out.push_str("set key autotitle columnhead\n");
        writeln!(out, "set title 'RMSE per step ({})'", self.model).unwrap();
        out.push_str("set xlabel 't'\nset ylabel 'RMSE'\n");
        out.push_str("set terminal pngcairo size 900,600\nset output 'rmse.png'\n");
        let plots: Vec<String> = self
            .curves
            .iter()
            .map(|c| {
                format!(
                    "'rmse.csv' using (strcol(1) eq '{s}' && $2 == {n} ? $3 : 1/0):4 \
                     with linespoints title '{s} n={n}'",
                    s = c.scheme,
                    n = c.n
                )
            })
            .collect();
        if !plots.is_empty() {
            writeln!(out, "plot {}", plots.join(", \\\n     ")).unwrap();
        }
        out
    }

    /// Writes `report.json`, `rmse.csv` and `plot.gp` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.to_json())?;
        fs::write(dir.join("rmse.csv"), self.to_csv())?;
        fs::write(dir.join("plot.gp"), self.to_gnuplot())
    }
}

fn ratio_complement(baseline: Option<f64>, candidate: Option<f64>) -> f64 {
    match (baseline, candidate) {
        (Some(a), Some(b)) if a == 0.0 && b == 0.0 => 0.0,
        (Some(a), Some(b)) => 100.0 * (1.0 - b / a),
        _ => f64::NAN,
    }
}

/// Percentage by which `candidate`'s time-averaged MSE lies below `baseline`'s
/// at particle count `n`.
pub fn variance_difference(
    report: &ExperimentReport,
    baseline: &str,
    candidate: &str,
    n: usize,
) -> Result<f64, ExperimentError> {
    let a = report.lookup(baseline, n)?;
    let b = report.lookup(candidate, n)?;
    Ok(ratio_complement(a.mean_mse(), b.mean_mse()))
}

/// As [`variance_difference`] but on time-averaged RMSE.
pub fn rmse_difference(
    report: &ExperimentReport,
    baseline: &str,
    candidate: &str,
    n: usize,
) -> Result<f64, ExperimentError> {
    let a = report.lookup(baseline, n)?;
    let b = report.lookup(candidate, n)?;
    Ok(ratio_complement(a.mean_rmse(), b.mean_rmse()))
}

/// Interpolates, in log-log space, the particle count at which a
/// decreasing MSE curve reaches `target`. `grid` holds `(n, mean MSE)`.
pub fn match_particle_count(grid: &[(usize, f64)], target: f64) -> EfficiencyGain {
    let mut grid: Vec<(usize, f64)> = grid.to_vec();
    grid.sort_by_key(|&(n, _)| n);
    let Some(&(n0, m0)) = grid.first() else {
        return EfficiencyGain::AboveMax { largest_n: 0 };
    };
    let matched = |n: f64| EfficiencyGain::Matched { n, gain_pct: f64::NAN };
    if target == m0 {
        return matched(n0 as f64);
    }
    if target > m0 {
        return EfficiencyGain::BelowMin { smallest_n: n0 };
    }
    for pair in grid.windows(2) {
        let ((n_lo, m_lo), (n_hi, m_hi)) = (pair[0], pair[1]);
        if m_hi == target {
            return matched(n_hi as f64);
        }
        if m_lo > target && target > m_hi {
            let frac = (target.ln() - m_lo.ln()) / (m_hi.ln() - m_lo.ln());
            let ln_n = (n_lo as f64).ln() + frac * ((n_hi as f64).ln() - (n_lo as f64).ln());
            return matched(ln_n.exp());
        }
    }
    EfficiencyGain::AboveMax {
        largest_n: grid.last().map(|g| g.0).unwrap_or(0),
    }
}

/// Extra fraction of particles (in percent) the baseline needs to match the
/// candidate's time-averaged MSE at `n_ref`.
pub fn efficiency_gain(
    report: &ExperimentReport,
    baseline: &str,
    candidate: &str,
    n_ref: usize,
) -> Result<EfficiencyGain, ExperimentError> {
    let target = report
        .lookup(candidate, n_ref)?
        .mean_mse()
        .ok_or(ExperimentError::Lookup {
            scheme: candidate.into(),
            n: n_ref,
        })?;
    let grid: Vec<(usize, f64)> = report
        .curves
        .iter()
        .filter(|c| c.scheme == baseline)
        .filter_map(|c| c.mean_mse().map(|m| (c.n, m)))
        .collect();
    if grid.is_empty() {
        return Err(ExperimentError::Lookup {
            scheme: baseline.into(),
            n: n_ref,
        });
    }
    Ok(match match_particle_count(&grid, target) {
        EfficiencyGain::Matched { n, .. } => EfficiencyGain::Matched {
            n,
            gain_pct: 100.0 * (n / n_ref as f64 - 1.0),
        },
        other => other,
    })
}
