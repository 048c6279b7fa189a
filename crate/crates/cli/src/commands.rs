use std::fs;
use std::path::Path;

use cvsteer_core::criteria::{criteria_report, evaluate_gains, GainPair};
use cvsteer_core::loss_model::{fit_efficiency, from_db, LossFit, SourceParams};
use cvsteer_core::reconstruction::{propagate_errors, reconstruct, MeasurementSet};
use cvsteer_core::sampler::{measure_campaign, run_campaign, write_batches_csv};
use cvsteer_core::{build_epr_source, run_repro, CovarianceMatrix, Error, ReproOptions};
use serde::Serialize;
use thiserror::Error;

use crate::output::{sink, write_value};
use crate::{Cli, Command, Format};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Analysis(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InconsistentData { .. } | Error::NotPositiveDefinite(_) => {
                CliError::Analysis(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate => simulate(cli),
        Command::Analyze => analyze(cli),
        Command::Sample => sample(cli),
        Command::Reconstruct => reconstruct_cmd(cli),
        Command::Fit => fit(cli),
        Command::Repro => repro(cli),
    }
}

fn require_input(cli: &Cli) -> Result<&Path, CliError> {
    cli.input.as_deref().ok_or_else(|| {
        CliError::Input(format!(
            "{} requires --in PATH",
            format!("{:?}", cli.command).to_lowercase()
        ))
    })
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("--in {}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("invalid {what} JSON: {e}")))
}

fn read_state(cli: &Cli) -> Result<CovarianceMatrix<f64>, CliError> {
    parse_json(&read_text(require_input(cli)?)?, "covariance matrix")
}

fn format(cli: &Cli) -> Format {
    cli.format.unwrap_or(Format::Json)
}

fn emit<T: Serialize>(cli: &Cli, value: &T) -> Result<(), CliError> {
    write_value(value, format(cli), sink(cli.output.as_deref())?)
}

fn dark_noise(cli: &Cli) -> Result<f64, CliError> {
    match cli.dark_noise_db {
        None => Ok(0.0),
        Some(db) if db.is_finite() => Ok(from_db(-db)),
        Some(db) => Err(CliError::Input(format!(
            "--dark-noise-db must be finite, got {db}"
        ))),
    }
}

fn source_params(cli: &Cli) -> Result<SourceParams<f64>, CliError> {
    let mut params = match &cli.input {
        None => SourceParams::default(),
        Some(path) => {
            let value: serde_json::Value = parse_json(&read_text(path)?, "source parameters")?;
            if value.get("residual").is_some() {
                let fit: LossFit<f64> = parse_json(&value.to_string(), "fit result")?;
                fit.params()
            } else {
                serde_json::from_value(value)
                    .map_err(|e| CliError::Input(format!("invalid source parameters JSON: {e}")))?
            }
        }
    };
    let overrides = [
        (cli.r1, &mut params.r1),
        (cli.r2, &mut params.r2),
        (cli.xi.or(cli.eta_prep), &mut params.eta_prep),
        (cli.eta_det_a, &mut params.eta_det_a),
        (cli.eta_det_b, &mut params.eta_det_b),
    ];
    for (flag, field) in overrides {
        if let Some(v) = flag {
            *field = v;
        }
    }
    if cli.xi.is_some() && cli.eta_prep.is_some() {
        return Err(CliError::Input(
            "--xi and --eta-prep are mutually exclusive".into(),
        ));
    }
    if cli.dark_noise_db.is_some() {
        params.dark_noise = dark_noise(cli)?;
    }
    params.validate()?;
    Ok(params)
}

fn simulate(cli: &Cli) -> Result<(), CliError> {
    let state = build_epr_source(&source_params(cli)?)?;
    emit(cli, &state)
}

fn parse_gains(spec: &str) -> Result<Option<GainPair<f64>>, CliError> {
    if spec.trim().eq_ignore_ascii_case("optimal") {
        return Ok(None);
    }
    let bad = || {
        CliError::Input(format!(
            "--gains expects `gx,gp` or `optimal`, got `{spec}`"
        ))
    };
    let parts: Vec<f64> = spec
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [g_x, g_p] => Ok(Some(GainPair::new(g_x, g_p)?)),
        _ => Err(bad()),
    }
}

fn analyze(cli: &Cli) -> Result<(), CliError> {
    let gains = cli.gains.as_deref().map(parse_gains).transpose()?.flatten();
    let state = read_state(cli)?;
    match gains {
        None => emit(cli, &criteria_report(&state)?),
        Some(g) => emit(cli, &evaluate_gains(&state, g)?),
    }
}

fn sample(cli: &Cli) -> Result<(), CliError> {
    let n = cli
        .n
        .ok_or_else(|| CliError::Input("sample requires --n N".into()))?;
    let state = read_state(cli)?;
    let seed = cli.seed.unwrap_or(0);
    let dark = dark_noise(cli)?;
    match format(cli) {
        Format::Json => emit(cli, &measure_campaign(&state, n, seed, dark)?),
        Format::Csv => {
            let campaign = run_campaign(&state, n, seed, dark)?;
            write_batches_csv(&campaign.batches, sink(cli.output.as_deref())?)?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct Uncertainties {
    ordering: &'static str,
    entries: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct ReconstructOutput {
    #[serde(flatten)]
    covariance: CovarianceMatrix<f64>,
    uncertainties: Uncertainties,
    symplectic_eigenvalues: Vec<f64>,
    warnings: Vec<String>,
}

fn read_measurements(cli: &Cli) -> Result<MeasurementSet<f64>, CliError> {
    let text = read_text(require_input(cli)?)?;
    if text.trim_start().starts_with('{') {
        parse_json(&text, "measurement set")
    } else {
        MeasurementSet::from_csv(text.as_bytes())
            .map_err(|e| CliError::Input(format!("invalid measurement CSV: {e}")))
    }
}

fn reconstruct_cmd(cli: &Cli) -> Result<(), CliError> {
    let ms = read_measurements(cli)?;
    let rec = reconstruct(&ms)?;
    for w in &rec.warnings {
        eprintln!("cvsteer: warning: {w}");
    }
    emit(
        cli,
        &ReconstructOutput {
            covariance: rec.covariance,
            uncertainties: Uncertainties {
                ordering: cvsteer_core::gaussian::ORDERING,
                entries: propagate_errors(&ms).to_rows(),
            },
            symplectic_eigenvalues: rec.symplectic_eigenvalues,
            warnings: rec.warnings,
        },
    )
}

fn fit(cli: &Cli) -> Result<(), CliError> {
    let result = fit_efficiency(&read_state(cli)?)?;
    emit(cli, &result)?;
    if !result.converged {
        return Err(CliError::Analysis(format!(
            "fit did not converge after {} evaluations (residual {})",
            result.iterations, result.residual
        )));
    }
    Ok(())
}

fn repro(cli: &Cli) -> Result<(), CliError> {
    let defaults = ReproOptions::default();
    if let Some(rel) = cli.perturb {
        if !(rel > 0.0 && rel < 1.0) {
            return Err(CliError::Input(format!(
                "--perturb must lie in (0, 1), got {rel}"
            )));
        }
    }
    let opts = ReproOptions {
        seed: cli.seed.unwrap_or(defaults.seed),
        n: cli.n.unwrap_or(defaults.n),
        dark_noise_db: cli.dark_noise_db,
        perturb: cli.perturb,
    };
    let report = run_repro(&opts)?;
    let table = report.to_table();
    match (cli.format, &cli.output) {
        (None, None) => print!("{table}"),
        (fmt, out) => {
            if out.is_some() {
                print!("{table}");
            } else {
                eprint!("{table}");
            }
            let mut w = sink(out.as_deref())?;
            match fmt.unwrap_or(Format::Json) {
                Format::Json => write_value(&report, Format::Json, w)?,
                Format::Csv => {
                    report.write_csv(&mut w)?;
                    w.flush()
                        .map_err(|e| CliError::Input(format!("write failed: {e}")))?;
                }
            }
        }
    }
    if !report.all_pass {
        let names: Vec<_> = report.failures().map(|r| r.quantity.as_str()).collect();
        return Err(CliError::Analysis(format!(
            "tolerance breach: {}",
            names.join(", ")
        )));
    }
    Ok(())
}
