use std::fs;
use std::path::{Path, PathBuf};

use super::run::{Outcome, Report};
use crate::error::Result;

/// Points of the weight profile table.
const PROFILE_POINTS: usize = 200;

struct Table {
    name: String,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: impl Into<String>, header: &[&'static str]) -> Self {
        Table {
            name: name.into(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(&self.name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes the flat tables of a report into `dir` and returns their paths:
/// weight profiles, `(k, a_k)` membership profiles, level summaries,
/// per-shell growth curves and quadrature ladders. Sections without data
/// produce a header-only file.
pub fn emit_plots_data(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut tables = Vec::new();
    match &report.result {
        Outcome::Weights(_) => {
            let mut t = Table::new("weight_profile.csv", &["r", "mu", "mu_over_alpha_power", "mu_over_beta_power"]);
            if let Some(w) = report.config.weights.as_ref().map(|i| &i.weight) {
                for i in 0..PROFILE_POINTS {
                    let ln_gap = -6.0 * std::f64::consts::LN_10 * i as f64 / (PROFILE_POINTS - 1) as f64;
                    let ln_mu = w.ln_at_gap(ln_gap);
                    t.push(vec![
                        num(-ln_gap.exp_m1()),
                        num(ln_mu.exp()),
                        num((ln_mu - w.alpha() * ln_gap).exp()),
                        num((ln_mu - w.beta() * ln_gap).exp()),
                    ]);
                }
            }
            tables.push(t);
        }
        Outcome::Series(profile) => {
            let mut t = Table::new(
                "profile.csv",
                &["k", "n_k", "a_lower", "a_upper", "weight", "sup_lower", "sup_upper", "source"],
            );
            for r in &profile.rows {
                t.push(vec![
                    r.k.to_string(),
                    r.n_k.to_string(),
                    num(r.a_lower),
                    num(r.a_upper),
                    num(r.weight),
                    num(r.sup_lower),
                    num(r.sup_upper),
                    r.source.clone(),
                ]);
            }
            tables.push(t);
        }
        Outcome::WitnessBuild(summary) => {
            let mut t = Table::new(
                "levels.csv",
                &[
                    "family",
                    "j",
                    "v",
                    "exponent",
                    "degree",
                    "ln_degree",
                    "radius",
                    "separation",
                    "status",
                    "points",
                    "colors",
                    "overfull",
                ],
            );
            for l in &summary.levels {
                t.push(vec![
                    l.family.name().into(),
                    l.j.to_string(),
                    l.v.to_string(),
                    l.exponent.to_string(),
                    opt(l.degree),
                    num(l.ln_degree),
                    num(l.radius),
                    num(l.separation),
                    l.status.clone(),
                    opt(l.points),
                    opt(l.colors),
                    opt(l.overfull),
                ]);
            }
            tables.push(t);
        }
        Outcome::WitnessVerify(summary) => {
            let g = &summary.growth;
            let mut minima = Table::new(
                "growth_minima.csv",
                &["family", "j", "v", "exponent", "samples", "coverage", "min_mu_bound", "argmin_modulus"],
            );
            for (row, curve) in g.shells.iter().zip(&g.curves) {
                minima.push(vec![
                    row.family.name().into(),
                    row.j.to_string(),
                    row.v.to_string(),
                    row.exponent.to_string(),
                    row.samples.to_string(),
                    row.coverage.clone(),
                    opt(row.min_mu_bound),
                    opt(row.argmin_modulus),
                ]);
                let mut shell = Table::new(
                    format!("growth/shell_{}_{}_{}.csv", row.family.name(), row.j, row.v),
                    &["r", "mu_times_sum"],
                );
                for &(r, b) in curve {
                    shell.push(vec![num(r), num(b)]);
                }
                tables.push(shell);
            }
            tables.insert(0, minima);
        }
        Outcome::Compose(v) => {
            let mut eps = Table::new("eps_ladder.csv", &["eps_edge", "truncated", "tail", "total"]);
            for r in &v.integral.ladder {
                eps.push(vec![num(r.eps_edge), num(r.truncated), num(r.tail), num(r.total)]);
            }
            let mut t = Table::new("t_ladder.csv", &["t", "integral"]);
            for &(x, y) in &v.tail_ladder {
                t.push(vec![num(x), num(y)]);
            }
            tables.push(eps);
            tables.push(t);
        }
    }
    tables.iter().map(|t| t.write(dir)).collect()
}
