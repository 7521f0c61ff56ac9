use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use boundwalk::effective::{default_order, reduce};
use boundwalk::protocols::{
    dephasing_scan, fisher_information, fit_splitting_alpha, mach_zehnder_fringes,
    optimize_edge_field, phase_grid, prepare, quench_detection, resolve_split_field, run_noon,
    run_transfer, ExperimentConfig,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Command, RunConfig};
use crate::error::CliError;

/// A CSV table: one header row, numeric body.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(name: &str, header: Vec<&'static str>) -> Self {
        Self {
            name: name.to_owned(),
            header,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Comma-separated text with dot decimals and no trailing separators.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|x| format_number(*x)))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }
}

fn format_number(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:e}")
    }
}

/// Everything a run produced before it hits the disk.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub command: Command,
    pub tables: Vec<Table>,
    pub summary: BTreeMap<String, f64>,
}

/// Record of a finished run, written next to its tables.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub experiment: &'static str,
    pub config: RunConfig,
    pub version: &'static str,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub seed: Option<u64>,
    pub threads: usize,
    pub outputs: Vec<PathBuf>,
    pub summary: BTreeMap<String, f64>,
}

/// Execute `command` on `config` without touching the filesystem.
pub fn execute(command: Command, config: &RunConfig) -> Result<RunOutput, CliError> {
    let exp = config.experiment()?;
    let mut summary = BTreeMap::new();
    let tables = match command {
        Command::Transfer => vec![transfer(&exp, &mut summary)?],
        Command::UnlockOpt => vec![unlock(&exp, &config.interactions(), &mut summary)?],
        Command::Noon => noon(&exp, &mut summary)?,
        Command::SplitOpt => vec![split(&exp, &config.interactions(), &mut summary)?],
        Command::Fringes => vec![fringes(config, &exp, &mut summary)?],
        Command::QuenchFringes => vec![quench(config, &exp, &mut summary)?],
        Command::Fisher => vec![fisher(&exp, &config.interactions())?],
        Command::DephasingSweep => vec![dephasing(config, &exp, &mut summary)?],
        Command::EffectiveDump => vec![effective(&exp, &mut summary)?],
    };
    Ok(RunOutput {
        command,
        tables,
        summary,
    })
}

fn transfer(
    exp: &ExperimentConfig,
    summary: &mut BTreeMap<String, f64>,
) -> Result<Table, CliError> {
    let r = run_transfer(exp)?;
    summary.insert("t_star".into(), r.t_star);
    summary.insert("P_first".into(), r.p_first);
    summary.insert("P_last".into(), r.p_last);
    let mut t = Table::new("transfer", vec!["t", "t_over_tstar", "P_first", "P_last"]);
    for ((&time, &a), &b) in r.times.iter().zip(&r.first).zip(&r.last) {
        t.push(vec![time, time / r.t_star, a, b]);
    }
    Ok(t)
}

fn unlock(
    exp: &ExperimentConfig,
    us: &[f64],
    summary: &mut BTreeMap<String, f64>,
) -> Result<Table, CliError> {
    let reports = us
        .par_iter()
        .map(|&u| optimize_edge_field(&exp.with_interaction(u)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new(
        "unlock",
        vec![
            "U_over_J",
            "beta_prime",
            "closed_form",
            "ratio",
            "t_star",
            "P_last",
        ],
    );
    let mut worst = 0.0f64;
    for (&u, r) in us.iter().zip(&reports) {
        let ratio = r.beta_prime / r.closed_form;
        worst = worst.max((ratio - 1.0).abs());
        t.push(vec![
            u,
            r.beta_prime,
            r.closed_form,
            ratio,
            r.t_star,
            r.p_last,
        ]);
    }
    summary.insert("max_relative_deviation".into(), worst);
    Ok(t)
}

fn noon(
    exp: &ExperimentConfig,
    summary: &mut BTreeMap<String, f64>,
) -> Result<Vec<Table>, CliError> {
    let r = run_noon(exp)?;
    summary.insert("beta".into(), r.beta);
    summary.insert("t_star".into(), r.t_star);
    summary.insert("P_first".into(), r.p_first);
    summary.insert("P_last".into(), r.p_last);
    summary.insert("noon_weight".into(), r.noon_weight());
    summary.insert("balance_residual".into(), r.balance_residual);
    for m in &r.mixed {
        let label: Vec<String> = m.sites.iter().map(|s| s.to_string()).collect();
        summary.insert(format!("P_{}", label.join("_")), m.probability);
    }
    let mut t = Table::new(
        "noon",
        vec!["t", "t_over_tstar", "P_first", "P_last", "P_mixed"],
    );
    for k in 0..r.times.len() {
        t.push(vec![
            r.times[k],
            r.times[k] / r.t_star,
            r.first[k],
            r.last[k],
            r.mixed_series[k],
        ]);
    }
    Ok(vec![t])
}

fn split(
    exp: &ExperimentConfig,
    us: &[f64],
    summary: &mut BTreeMap<String, f64>,
) -> Result<Table, CliError> {
    let fit = fit_splitting_alpha(exp, us)?;
    summary.insert("alpha".into(), fit.alpha);
    let mut t = Table::new(
        "split",
        vec!["U_over_J", "beta", "beta_over_scale", "beta_fit"],
    );
    for &(u, beta) in &fit.points {
        let scale = exp.with_interaction(u).field_scale();
        t.push(vec![u, beta, beta / scale, fit.alpha * scale]);
    }
    Ok(t)
}

fn phases(config: &RunConfig) -> Result<Vec<f64>, CliError> {
    Ok(phase_grid(
        config.phase.lo,
        config.phase.hi,
        config.phase.points,
    )?)
}

fn fringes(
    config: &RunConfig,
    exp: &ExperimentConfig,
    summary: &mut BTreeMap<String, f64>,
) -> Result<Table, CliError> {
    let scan = mach_zehnder_fringes(exp, &phases(config)?)?;
    let (lo, hi) = min_max(&scan.detected);
    summary.insert("visibility".into(), (hi - lo) / (hi + lo));
    let mut t = Table::new("fringes", vec!["phi", "P_first", "P_ideal"]);
    for k in 0..scan.phi.len() {
        t.push(vec![scan.phi[k], scan.detected[k], scan.ideal[k]]);
    }
    Ok(t)
}

fn quench(
    config: &RunConfig,
    exp: &ExperimentConfig,
    summary: &mut BTreeMap<String, f64>,
) -> Result<Table, CliError> {
    let q = quench_detection(exp, &phases(config)?)?;
    summary.insert("barrier".into(), q.barrier);
    summary.insert("t_free".into(), q.t_free);
    let mut t = Table::new("quench_fringes", vec!["phi", "P_1L", "P_ideal"]);
    for k in 0..q.scan.phi.len() {
        t.push(vec![q.scan.phi[k], q.scan.detected[k], q.scan.ideal[k]]);
    }
    Ok(t)
}

fn fisher(exp: &ExperimentConfig, us: &[f64]) -> Result<Table, CliError> {
    let reports = us
        .par_iter()
        .map(|&u| fisher_information(&exp.with_interaction(u)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new(
        "fisher",
        vec![
            "U_over_J",
            "F_Q",
            "delta_phi",
            "classical_bound",
            "quantum_bound",
        ],
    );
    for (&u, r) in us.iter().zip(&reports) {
        t.push(vec![
            u,
            r.f_q,
            r.delta_phi,
            r.classical_bound,
            r.quantum_bound,
        ]);
    }
    Ok(t)
}

fn dephasing(
    config: &RunConfig,
    exp: &ExperimentConfig,
    summary: &mut BTreeMap<String, f64>,
) -> Result<Table, CliError> {
    let rates = &config.dephasing.rates;
    let scan = dephasing_scan(exp, rates, config.evolution_options())?;
    summary.insert("t_star".into(), scan.t_star);
    summary.insert("J_eff".into(), scan.effective_hopping);
    let mut t = Table::new(
        "dephasing",
        vec!["gamma_over_jeff", "gamma", "P_last", "relative_variation"],
    );
    for (&g, p) in rates.iter().zip(&scan.points) {
        t.push(vec![g, p.gamma, p.population, p.relative_variation]);
    }
    Ok(t)
}

fn effective(
    exp: &ExperimentConfig,
    summary: &mut BTreeMap<String, f64>,
) -> Result<Table, CliError> {
    let setup = prepare(exp)?;
    let params = match resolve_split_field(exp, &setup)? {
        Some(beta) => setup.with_split(beta)?,
        None => setup.base.clone(),
    };
    let red = reduce(&setup.basis, &params, default_order(exp.particles))?;
    summary.insert("discarded_weight".into(), red.discarded_weight);
    summary.insert("asymmetry".into(), red.asymmetry);
    let mut t = Table::new("effective", vec!["j", "B_eff_j", "J_eff_j"]);
    let l = red.chain.sites();
    for j in 0..l {
        // the last site has no bond to its right
        let hop = if j + 1 < l { red.chain.hopping[j] } else { 0.0 };
        t.push(vec![(j + 1) as f64, red.chain.onsite[j], hop]);
    }
    Ok(t)
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// Write the tables, an optional gnuplot script and the manifest into `out`.
pub fn write_outputs(
    output: &RunOutput,
    config: &RunConfig,
    out: &Path,
    seed: Option<u64>,
    gnuplot: bool,
) -> Result<RunManifest, CliError> {
    let io = |path: &Path| {
        let path = path.to_owned();
        move |source| CliError::Output { path, source }
    };
    std::fs::create_dir_all(out).map_err(io(out))?;
    let mut outputs = Vec::new();
    for table in &output.tables {
        let path = out.join(format!("{}.csv", table.name));
        std::fs::write(&path, table.to_csv()).map_err(io(&path))?;
        outputs.push(path);
    }
    if !output.summary.is_empty() {
        let path = out.join("summary.csv");
        let mut text = String::from("quantity,value\n");
        for (k, v) in &output.summary {
            text.push_str(&format!("{k},{}\n", format_number(*v)));
        }
        std::fs::write(&path, text).map_err(io(&path))?;
        outputs.push(path);
    }
    if gnuplot {
        let path = out.join("plot.gp");
        std::fs::write(&path, gnuplot_script(&output.tables)).map_err(io(&path))?;
        outputs.push(path);
    }
    let manifest_path = out.join("manifest.json");
    outputs.push(manifest_path.clone());
    let manifest = RunManifest {
        experiment: output.command.name(),
        config: config.clone(),
        version: env!("CARGO_PKG_VERSION"),
        timestamp: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        seed,
        threads: rayon::current_num_threads(),
        outputs,
        summary: output.summary.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest is plain data");
    std::fs::write(&manifest_path, json).map_err(io(&manifest_path))?;
    Ok(manifest)
}

fn gnuplot_script(tables: &[Table]) -> String {
    let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\n");
    for t in tables
        .iter()
        .filter(|t| t.header.len() > 1 && t.rows.len() > 1)
    {
        s.push_str(&format!(
            "set title '{}'\nset xlabel '{}'\nplot ",
            t.name, t.header[0]
        ));
        let curves: Vec<String> = (2..=t.header.len())
            .map(|c| format!("'{}.csv' using 1:{} with lines", t.name, c))
            .collect();
        s.push_str(&curves.join(", "));
        s.push_str("\npause -1\n");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_no_trailing_separator() {
        let mut t = Table::new("x", vec!["a", "b"]);
        t.push(vec![1.0, 0.25]);
        t.push(vec![f64::NAN, -3e-12]);
        let text = t.to_csv();
        assert_eq!(text, "a,b\n1e0,2.5e-1\nNaN,-3e-12\n");
        assert!(text.lines().all(|l| !l.ends_with(',')));
    }
}
