use std::fs;
use std::io::Write;

use photon_field::lattice::{autocorrelation, DensityField, RealField};
use photon_field::optimizer::{
    ascent_maximize, compare_to_reference, counter_propagating_extremum,
    most_likely_autocorrelation, most_likely_density, AscentOptions, ContentShape, PhotonContent,
};
use photon_field::sampler::{
    expected_density, moment_summary, run_ensemble, write_samples_csv, EnsembleOptions,
    EnsembleSpec, EnsembleStats, Execution,
};
use photon_field::verify::{
    explicit_polynomial, hermite_image, run_criterion, VerifyConfig, CRITERIA,
};
use photon_field::wavefunctional::{nphoton_polynomial, two_photon_expression};
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::CliError;

const UNITS: &str = "natural units (hbar = c = 1); p = 2 pi k / L and omega in inverse length";

/// What a command produces before it is printed or written.
struct Output {
    command: &'static str,
    summary: Vec<String>,
    json: Value,
    table: String,
    files: Vec<(String, String)>,
    failure: Option<String>,
}

fn csv(write: impl FnOnce(&mut Vec<u8>) -> photon_field::Result<()>) -> Result<String, CliError> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

fn header(cfg: &RunConfig, command: &str) -> Vec<String> {
    let g = &cfg.grid;
    vec![
        format!("photon-field {command}"),
        format!("units: {UNITS}"),
        format!(
            "grid: n={} L={} dx={} dp={} mass={} zero_mode={}",
            g.n_modes(),
            g.box_length(),
            g.dx(),
            g.dp(),
            g.mass(),
            g.include_zero_mode()
        ),
    ]
}

fn emit(cfg: &RunConfig, mut out: Output) -> Result<(), CliError> {
    if let Value::Object(map) = &mut out.json {
        map.insert("command".into(), json!(out.command));
        map.insert("units".into(), json!(UNITS));
        map.insert("grid".into(), json!(cfg.grid));
    }
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir)?;
        let report = serde_json::to_string_pretty(&out.json).expect("json");
        fs::write(dir.join(format!("{}.json", out.command)), report + "\n")?;
        for (name, body) in &out.files {
            fs::write(dir.join(name), body)?;
        }
        out.summary.push(format!("wrote {}", dir.display()));
    }
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    match cfg.format {
        Format::Json => writeln!(
            w,
            "{}",
            serde_json::to_string_pretty(&out.json).expect("json")
        )?,
        Format::Csv => {
            for line in header(cfg, out.command).iter().chain(&out.summary) {
                writeln!(w, "# {line}")?;
            }
            write!(w, "{}", out.table)?;
        }
    }
    w.flush()?;
    match out.failure {
        Some(msg) => Err(CliError::Numeric(msg)),
        None => Ok(()),
    }
}

pub fn polynomials(cfg: &RunConfig, n_max: u32) -> Result<(), CliError> {
    let mut table = String::new();
    let mut entries = vec![];
    let mut mismatches = vec![];
    let mut hermite_ok = true;
    for n in 0..=n_max {
        let q = nphoton_polynomial(n);
        table.push_str(&format!("Q_{n} = {q}\n"));
        if let Some(expected) = explicit_polynomial(n) {
            if expected != q {
                mismatches.push(format!("Q_{n}: generated {q}, expected {expected}"));
            }
        }
        let hermite = hermite_image(n)? == q;
        if !hermite {
            hermite_ok = false;
            mismatches.push(format!("Q_{n}: differs from mapped H_{n}"));
        }
        entries.push(json!({
            "n": n,
            "text": q.to_string(),
            "expanded": q.expanded(),
            "contact_free": q.drop_contact_terms().to_string(),
            "terms": q.to_json()["terms"],
            "hermite_check": hermite,
        }));
    }
    let verdict = if hermite_ok { "PASS" } else { "FAIL" };
    emit(
        cfg,
        Output {
            command: "polynomials",
            summary: vec![format!("hermite check {verdict} (n = 0..{n_max})")],
            json: json!({ "polynomials": entries, "hermite_check": hermite_ok, "mismatches": mismatches }),
            table,
            files: vec![],
            failure: (!mismatches.is_empty()).then(|| mismatches.join("\n")),
        },
    )
}

pub fn optimize(cfg: &RunConfig) -> Result<(), CliError> {
    let grid = cfg.grid;
    let content = cfg.content()?;
    let autocorr_csv = |r: &RealField| csv(|b| r.write_csv(b));
    match content.validate(&grid)? {
        ContentShape::CounterPropagating { mode } => {
            let cp = counter_propagating_extremum(&grid, mode)?;
            let expr = two_photon_expression(&grid, mode, -mode)?;
            let verdict = if cp.certificate.passed {
                "PASS"
            } else {
                "FAIL"
            };
            let density_csv = csv(|b| cp.report.density.write_csv(b))?;
            let r = autocorrelation(&cp.report.density)?;
            emit(
                cfg,
                Output {
                    command: "optimize",
                    summary: vec![
                        format!("counter-propagating pair at k = +/-{}", mode.abs()),
                        format!("dominant term {}", expr.reduced()),
                        format!("D = 0, certificate {verdict}"),
                    ],
                    json: json!({
                        "case": "counter_propagating",
                        "dominant_term": expr.reduced().to_string(),
                        "most_likely": cp.report.to_json(&content, Some("most_likely_density.csv")),
                        "certificate": cp.certificate,
                    }),
                    table: density_csv.clone(),
                    files: vec![
                        ("most_likely_density.csv".into(), density_csv),
                        ("most_likely_autocorr.csv".into(), autocorr_csv(&r)?),
                    ],
                    failure: (!cp.certificate.passed)
                        .then(|| "counter-propagating certificate failed".to_string()),
                },
            )
        }
        ContentShape::Vacuum => Err(crate::config::config_error(
            "count",
            "optimize needs at least one photon",
        )),
        shape => {
            let closed = most_likely_density(&grid, &content)?;
            let flat = DensityField::flat(grid, 1.0)?;
            let ascent = ascent_maximize(&content, &flat, AscentOptions::default())?;
            let agreement = compare_to_reference(&closed.density, &ascent.density, &content)?;
            let r = most_likely_autocorrelation(&grid, &content)?;
            let dp = grid.dp();

            let mut summary = vec![];
            let mut peaks = vec![];
            for (k, n) in content.log_weights(&grid)? {
                let peak = closed.density.at(k);
                let expected = n as f64 / (2.0 * grid.omega(k) * dp);
                let one = most_likely_density(&grid, &PhotonContent::single(k, 1))?
                    .density
                    .at(k);
                summary.push(format!(
                    "k = +/-{k}: peak_density {peak} (n/(2 w dp) = {expected}), ratio to one photon {:.3}",
                    peak / one
                ));
                peaks.push(json!({
                    "mode": k,
                    "momentum": grid.momentum(k),
                    "photons": n,
                    "peak_density": peak,
                    "expected_peak": expected,
                    "peak_weight": 2.0 * peak * dp,
                    "peak_ratio_to_one_photon": peak / one,
                    "ascent_peak_density": ascent.density.at(k),
                }));
            }
            summary.push(format!(
                "ascent: {} iterations, residual {:.2e}, peak relative difference {:.2e}, off-peak mass {:.2e}",
                ascent.iterations,
                ascent.residual,
                agreement.peak_relative_difference,
                agreement.off_peak_mass
            ));
            let reduced = match shape {
                ContentShape::Distinct { k1, k2 } => {
                    Some(two_photon_expression(&grid, k1, k2)?.reduced().to_string())
                }
                _ => None,
            };
            let failure = (!ascent.converged).then(|| {
                format!(
                    "ascent did not converge: residual {:.3e} after {} iterations",
                    ascent.residual, ascent.iterations
                )
            });
            let closed_csv = csv(|b| closed.density.write_csv(b))?;
            emit(
                cfg,
                Output {
                    command: "optimize",
                    summary,
                    json: json!({
                        "case": if reduced.is_some() { "distinct" } else { "single_mode" },
                        "density_term": reduced,
                        "closed_form": closed.to_json(&content, Some("most_likely_density.csv")),
                        "ascent": ascent.to_json(&content, Some("ascent_density.csv")),
                        "agreement": agreement,
                        "peaks": peaks,
                        "autocorrelation_csv_ref": "most_likely_autocorr.csv",
                    }),
                    table: closed_csv.clone(),
                    files: vec![
                        ("most_likely_density.csv".into(), closed_csv),
                        (
                            "ascent_density.csv".into(),
                            csv(|b| ascent.density.write_csv(b))?,
                        ),
                        ("most_likely_autocorr.csv".into(), autocorr_csv(&r)?),
                    ],
                    failure,
                },
            )
        }
    }
}

fn ensemble(
    cfg: &RunConfig,
    content: PhotonContent,
    seed: u64,
    autocorr: bool,
) -> Result<(EnsembleSpec, EnsembleStats), CliError> {
    let spec = EnsembleSpec::with_batches(cfg.grid, content, cfg.samples, seed, cfg.batches)?;
    let stats = run_ensemble(
        &spec,
        EnsembleOptions {
            autocorrelation: autocorr,
            execution: Execution::Parallel,
        },
    )?;
    Ok((spec, stats))
}

/// Shared by `sample` and `autocorr`.
pub fn sample(cfg: &RunConfig, autocorr: bool) -> Result<(), CliError> {
    let grid = cfg.grid;
    let content = cfg.content()?;
    let (spec, stats) = ensemble(cfg, content.clone(), cfg.seed, autocorr)?;
    let baseline = if cfg.baseline {
        Some(
            ensemble(
                cfg,
                PhotonContent::vacuum(),
                cfg.seed.wrapping_add(1),
                autocorr,
            )?
            .1,
        )
    } else {
        None
    };
    if let Some(path) = &cfg.dump_samples {
        write_samples_csv(&spec, std::io::BufWriter::new(fs::File::create(path)?))?;
    }

    let moments = moment_summary(&stats, &content)?;
    let mut passed = moments.fraction_within_3se >= 0.95;
    let mut summary = vec![
        format!(
            "{} samples in {} batches, seed {}",
            stats.n_samples, stats.n_batches, cfg.seed
        ),
        format!(
            "{:.1}% of modes within 3 stderr of (n + 1)/(2 w dp)",
            100.0 * moments.fraction_within_3se
        ),
    ];
    let mut excesses = vec![];
    for (k, n) in content.log_weights(&grid)? {
        let s = grid.slot(k);
        let (level, level_se) = match &baseline {
            Some(b) => (b.mean_density.at(k), b.density_stderr[s]),
            None => (expected_density(&grid, &PhotonContent::vacuum(), k)?, 0.0),
        };
        let excess = stats.mean_density.at(k) - level;
        let stderr = stats.density_stderr[s].hypot(level_se);
        let target = n as f64 / (2.0 * grid.omega(k) * grid.dp());
        let z = (excess - target) / stderr;
        passed &= z.abs() < 3.0;
        summary.push(format!(
            "k = +/-{k}: excess density {excess:.6} +/- {stderr:.6}, expected n/(2 w dp) = {target}"
        ));
        excesses.push(json!({
            "mode": k, "photons": n, "excess_density": excess, "stderr": stderr,
            "expected_excess": target, "z": z,
        }));
    }
    summary.push(format!(
        "moment check {}",
        if passed { "PASS" } else { "FAIL" }
    ));

    let mut json = stats.to_json();
    let extra = json!({
        "content": content,
        "seed": cfg.seed,
        "moment_check": { "passed": passed, "fraction_within_3se": moments.fraction_within_3se },
        "photon_excess": excesses,
        "baseline": baseline.as_ref().map(EnsembleStats::to_json),
    });
    merge(&mut json, extra);

    let density_csv = csv(|b| stats.write_density_csv(b))?;
    let mut files = vec![];
    if let Some(b) = &baseline {
        files.push((
            "vacuum_density.csv".to_string(),
            csv(|w| b.write_density_csv(w))?,
        ));
    }

    if !autocorr {
        files.push(("sample_density.csv".into(), density_csv.clone()));
        return emit(
            cfg,
            Output {
                command: "sample",
                summary,
                json,
                table: density_csv,
                files,
                failure: None,
            },
        );
    }

    // autocorrelation: compare the excess over the vacuum with the most likely form
    let vacuum_r = match &baseline {
        Some(b) => b.mean_autocorr.clone().expect("autocorrelation requested"),
        None => autocorrelation(&DensityField::from_magnitude_fn(grid, |k| {
            expected_density(&grid, &PhotonContent::vacuum(), k).unwrap_or(0.0)
        })?)?,
    };
    let mean_r = stats
        .mean_autocorr
        .as_ref()
        .expect("autocorrelation requested");
    let se_r = stats
        .autocorr_stderr
        .as_ref()
        .expect("autocorrelation requested");
    let excess: Vec<f64> = mean_r
        .values()
        .iter()
        .zip(vacuum_r.values())
        .map(|(a, b)| a - b)
        .collect();
    let template = match content.validate(&grid)? {
        ContentShape::Vacuum => None,
        _ => Some(most_likely_autocorrelation(&grid, &content)?),
    };
    let correlation = template.as_ref().map(|t| pearson(&excess, t.values()));
    if let Some(c) = correlation {
        summary.push(format!(
            "excess autocorrelation vs most likely form: correlation {c:.4}"
        ));
    }
    let mut table = String::from("index,coordinate,mean,stderr,vacuum,excess,most_likely\n");
    for j in 0..grid.n_modes() {
        table.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            j,
            grid.position(j),
            mean_r.values()[j],
            se_r[j],
            vacuum_r.values()[j],
            excess[j],
            template.as_ref().map_or(0.0, |t| t.values()[j])
        ));
    }
    merge(
        &mut json,
        json!({ "template_correlation": correlation, "vacuum_autocorr": vacuum_r.values() }),
    );
    files.push(("autocorr.csv".into(), table.clone()));
    files.push(("autocorr_density.csv".into(), density_csv));
    emit(
        cfg,
        Output {
            command: "autocorr",
            summary,
            json,
            table,
            files,
            failure: None,
        },
    )
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn verify(cfg: &RunConfig, list: bool, only: &[String]) -> Result<(), CliError> {
    if list {
        for (id, description) in CRITERIA {
            println!("{id:<28} {description}");
        }
        return Ok(());
    }
    for id in only {
        if !CRITERIA.iter().any(|(c, _)| c == id) {
            return Err(crate::config::config_error(
                "criterion",
                format!("unknown id {id:?}"),
            ));
        }
    }
    let vcfg = VerifyConfig {
        grid: cfg.grid,
        photon_momentum: cfg.momentum,
        samples: cfg.samples,
        seed: cfg.seed,
        batches: cfg.batches,
        ..VerifyConfig::default()
    };
    let mut results = vec![];
    let mut table = String::new();
    for (id, _) in CRITERIA
        .iter()
        .filter(|(id, _)| only.is_empty() || only.iter().any(|o| o == id))
    {
        let r = run_criterion(id, &vcfg)?;
        let line = format!(
            "{} {:<28} {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.detail
        );
        table.push_str(&line);
        table.push('\n');
        results.push(r);
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    let passed = failed.is_empty();
    emit(
        cfg,
        Output {
            command: "verify",
            summary: vec![format!(
                "{} of {} criteria passed",
                results.len() - failed.len(),
                results.len()
            )],
            json: json!({ "passed": passed, "results": results }),
            table,
            files: vec![],
            failure: (!passed).then(|| format!("failed criteria: {}", failed.join(", "))),
        },
    )
}
