use std::fs;
use std::path::Path;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use sphreg::error_model::{SvmfParams, TransportBase};
use sphreg::estimation::{
    count_dof, fit_svmf, multistart_fit, perturbed_start, Dataset, ErrorModel, FitConfig, FitResult, ModelFlags,
};
use sphreg::inference::{bootstrap_ci_scales, bootstrap_lrt, loo_cv_mse, BootstrapReport};
use sphreg::io::{
    format_number, load_csv, mt_to_s4, read_covariates, s4_to_mt, to_canonical_json, write_dataset, ColumnSpec,
    FitDocument, MomentTensor, ParamsDocument, Standardization, SCHEMA_VERSION,
};
use sphreg::link::{to_reparam, CovariateCase, LinkDims};
use sphreg::simulate::{random_covariates, simulate_responses, Design};

use crate::args::*;
use crate::report::fit_report;
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Fit(c) => fit(c, seed),
        Command::Predict(c) => predict(c),
        Command::Simulate(c) => simulate(c, seed),
        Command::Params(c) => params(c, seed),
        Command::Cv(c) => cv(c, seed),
        Command::Bootstrap(c) => bootstrap(c, seed),
        Command::Dof(c) => dof(c),
        Command::ConvertMt(c) => convert_mt(c),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| sphreg::Error::Io(format!("{}: {e}", path.display())).into())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| sphreg::Error::Io(format!("{}: {e}", path.display())).into())
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| sphreg::Error::Io(format!("{}: {e}", path.display())).into())
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| sphreg::Error::Io(format!("{}: {e}", path.display())).into())
}

/// Loads the data and applies standardization when asked.
fn load(args: &DataArgs) -> Result<(Dataset, ColumnSpec, Option<Standardization>)> {
    let spec = args.spec();
    if !args.data.exists() {
        return Err(sphreg::Error::Io(format!("{}: no such file", args.data.display())).into());
    }
    let raw = load_csv(&args.data, &spec)?;
    if !args.standardize {
        return Ok((raw, spec, None));
    }
    let st = Standardization::estimate(&raw, &spec)?;
    Ok((st.apply(&raw, &spec)?, spec, Some(st)))
}

fn fit(c: FitCmd, seed: u64) -> Result<()> {
    let (data, spec, st) = load(&c.data)?;
    let cfg = c.model.config(seed);
    let result = multistart_fit(&data, &cfg, cfg.n_starts, seed)?;
    let converged = result.converged;
    let grad = result.grad_norm;
    let text = fit_report(&result, &data);
    let doc = FitDocument::new(result, cfg, spec, st);
    write(&c.out, &doc.to_json()?)?;
    match &c.report {
        Some(p) => write(p, &text)?,
        None => print!("{text}"),
    }
    if converged {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!("gradient {grad:e} at exit; results were written")))
    }
}

fn load_fit(path: &Path) -> Result<FitDocument> {
    Ok(FitDocument::from_json(&read(path)?)?)
}

fn predict(c: PredictCmd) -> Result<()> {
    let doc = load_fit(&c.fit)?;
    let mut cases = read_covariates(open(&c.data)?, &doc.columns)?;
    if let Some(st) = &doc.standardization {
        cases = st.apply_cases(&cases, &doc.columns)?;
    }
    let rows = cases
        .iter()
        .map(|x| Ok(doc.fit.predict(x)?.as_slice().to_vec()))
        .collect::<Result<Vec<_>>>()?;
    sphreg::io::write_columns(create(&c.out)?, &doc.columns.response, &rows)?;
    Ok(())
}

fn simulate(c: SimulateCmd, seed: u64) -> Result<()> {
    let (model, state, columns, st) = match (&c.params, &c.fit) {
        (Some(p), _) => {
            let d = ParamsDocument::from_json(&read(p)?)?;
            (d.model, d.state, d.columns, None)
        }
        (None, Some(f)) => {
            let d = load_fit(f)?;
            (d.fit.model, d.fit.state(), d.columns, d.standardization)
        }
        (None, None) => return Err(CliError::Usage("give --params or --fit".into())),
    };
    let dims = state.link.dims();
    if columns.response.len() != dims.p || columns.spherical.len() != dims.q_s || columns.q_e() != dims.q_e {
        return Err(sphreg::Error::Dimension("column names do not match the model dimensions".into()).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // `model` holds covariates as the link sees them, `written` as the file stores them
    let (model_cases, written) = match (&c.covariates, c.n) {
        (Some(path), _) => {
            let raw = read_covariates(open(path)?, &columns)?;
            let m = match &st {
                Some(s) => s.apply_cases(&raw, &columns)?,
                None => raw.clone(),
            };
            (m, raw)
        }
        (None, Some(n)) => {
            let design = Design {
                spherical_center: state.link.rs1().cloned(),
                spherical_kappa: c.spherical_kappa,
                euclidean_sd: c.euclidean_sd,
            };
            let m = generate(&mut rng, dims, n, &design, columns.intercept)?;
            let w = match &st {
                Some(s) => s.invert_cases(&m, &columns)?,
                None => m.clone(),
            };
            (m, w)
        }
        (None, None) => return Err(CliError::Usage("give --covariates or --n".into())),
    };
    let y = simulate_responses(&mut rng, &state, model, &model_cases)?;
    let data = Dataset::from_cases(y, &written, None)?;
    write_dataset(create(&c.out)?, &data, &columns)?;
    Ok(())
}

/// Generated covariates; with an intercept the first Euclidean entry is one.
fn generate(rng: &mut ChaCha8Rng, dims: LinkDims, n: usize, design: &Design, intercept: bool) -> Result<Vec<CovariateCase>> {
    if !intercept {
        return Ok(random_covariates(rng, dims, n, design)?);
    }
    let free = LinkDims {
        q_e: dims.q_e - 1,
        ..dims
    };
    if free.q_s == 0 && free.q_e == 0 {
        return Err(CliError::Usage("an intercept alone leaves nothing to generate".into()));
    }
    let cases = random_covariates(rng, free, n, design)?;
    cases
        .into_iter()
        .map(|c| {
            let mut e = vec![1.0];
            if let Some(x) = &c.xe {
                e.extend_from_slice(x.as_slice());
            }
            Ok(CovariateCase::new(Some(DVector::from_vec(e)), c.xs)?)
        })
        .collect()
}

fn params(c: ParamsCmd, seed: u64) -> Result<()> {
    let dims = LinkDims::new(c.p, c.qs, c.qe)?;
    if c.intercept && c.qe == 0 {
        return Err(CliError::Usage("--intercept needs --qe of at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let link = to_reparam(&perturbed_start(dims, &mut rng, c.spread)?);
    let mut scales = vec![1.0];
    if c.scales.is_empty() {
        scales.extend(std::iter::repeat(1.0).take(c.p - 1));
    } else {
        scales.extend(&c.scales);
    }
    let error = SvmfParams::new(c.kappa, scales)?;
    let base = TransportBase::canonical(link.b01().clone())?;
    let names = |prefix: &str, k: usize| (1..=k).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>();
    let columns = ColumnSpec {
        response: names("y", c.p),
        spherical: names("s", c.qs),
        euclidean: names("x", c.qe - usize::from(c.intercept)),
        intercept: c.intercept,
    };
    let state = sphreg::estimation::ModelState { link, error, base };
    let doc = ParamsDocument::new(c.model.into(), state, columns);
    write(&c.out, &doc.to_json()?)
}

fn cv(c: CvCmd, seed: u64) -> Result<()> {
    let (data, _, _) = load(&c.data)?;
    let cfg = FitConfig {
        n_starts: 1,
        ..c.model.config(seed)
    };
    let r = loo_cv_mse(&data, &cfg)?;
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "metric": "mean squared chordal error",
        "model": cfg.model,
        "n": data.n(),
        "report": r,
    });
    write(&c.out, &to_canonical_json(&doc)?)?;
    if let Some(p) = &c.csv {
        r.write_csv(create(p)?)?;
    }
    println!("loo mse {} ({} cases skipped)", format_number(r.mse), r.skipped.len());
    Ok(())
}

#[derive(Serialize)]
struct BootstrapDocument<'a> {
    schema_version: u32,
    kind: &'a str,
    reports: &'a [BootstrapReport],
}

fn bootstrap(c: BootstrapCmd, seed: u64) -> Result<()> {
    let (data, _, _) = load(&c.data)?;
    let cfg = c.model.config(seed);
    let (kind, reports) = match c.kind {
        BootstrapKind::Lrt => ("lrt", vec![bootstrap_lrt(&data, &cfg, c.b, seed)?]),
        BootstrapKind::Scales => {
            let (fit, cfg): (FitResult, FitConfig) = match &c.fit {
                Some(p) => {
                    let d = load_fit(p)?;
                    (d.fit, d.config)
                }
                None => (fit_svmf(&data, &cfg)?, cfg),
            };
            ("scales", bootstrap_ci_scales(&fit, &data, &cfg, c.b, c.level, seed)?)
        }
    };
    let doc = BootstrapDocument {
        schema_version: SCHEMA_VERSION,
        kind,
        reports: &reports,
    };
    write(&c.out, &to_canonical_json(&doc)?)?;
    if let Some(p) = &c.csv {
        let mut f = create(p)?;
        for (i, r) in reports.iter().enumerate() {
            let mut buf = vec![];
            r.write_csv(&mut buf)?;
            // one header for the whole file
            let text = String::from_utf8_lossy(&buf);
            let body = if i == 0 { &text[..] } else { text.split_once('\n').map_or("", |s| s.1) };
            std::io::Write::write_all(&mut f, body.as_bytes()).map_err(sphreg::Error::from)?;
        }
    }
    for r in &reports {
        let mut line = format!("{} observed {}", r.statistic, format_number(r.observed));
        if let Some(p) = r.p_value {
            line += &format!(" p-value {}", format_number(p));
        }
        if let Some(i) = &r.interval {
            line += &format!(" {} {} interval [{}, {}]", i.level, i.method, format_number(i.lower), format_number(i.upper));
        }
        line += &format!(" ({} of {} resamples used)", r.resamples.len(), r.b);
        println!("{line}");
        if r.unreliable {
            eprintln!("{}", json!({"warning": "unreliable", "message": format!("{} of {} resamples failed", r.failures.len(), r.b)}));
        }
    }
    Ok(())
}

fn dof(c: DofCmd) -> Result<()> {
    let dims = LinkDims::new(c.p, c.qs, c.qe)?;
    let model: ErrorModel = c.model.into();
    let n = count_dof(
        dims,
        ModelFlags {
            model,
            gamma01_estimated: c.estimate_gamma01,
        },
    )?;
    println!("{n}");
    Ok(())
}

fn convert_mt(c: ConvertMtCmd) -> Result<()> {
    let (from, to) = match c.to {
        MtDirection::ToS4 => (&c.tensor_columns, &c.vector_columns),
        MtDirection::ToMt => (&c.vector_columns, &c.tensor_columns),
    };
    let want = match c.to {
        MtDirection::ToS4 => (6, 5),
        MtDirection::ToMt => (5, 6),
    };
    if (from.len(), to.len()) != want {
        return Err(CliError::Usage("need six tensor columns and five vector columns".into()));
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(&c.input)?);
    let header = rdr.headers().map_err(sphreg::Error::from)?.clone();
    let idx = from
        .iter()
        .map(|n| {
            header
                .iter()
                .position(|h| h == n)
                .ok_or_else(|| sphreg::Error::Validation(format!("missing column '{n}'")))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    // other columns pass through unchanged, converted ones go last
    let keep: Vec<usize> = (0..header.len()).filter(|i| !idx.contains(i)).collect();
    let mut out = csv::Writer::from_writer(create(&c.output)?);
    let mut head: Vec<&str> = keep.iter().map(|&i| &header[i]).collect();
    head.extend(to.iter().map(String::as_str));
    out.write_record(&head).map_err(sphreg::Error::from)?;
    for rec in rdr.records() {
        let rec = rec.map_err(sphreg::Error::from)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let vals = idx
            .iter()
            .map(|&i| {
                rec[i].parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| sphreg::Error::Row {
                    row: line,
                    message: format!("column '{}': '{}' is not a finite number", &header[i], &rec[i]),
                })
            })
            .collect::<std::result::Result<Vec<f64>, _>>()?;
        let row_err = |e: sphreg::Error| sphreg::Error::Row {
            row: line,
            message: e.to_string(),
        };
        let converted: Vec<f64> = match c.to {
            MtDirection::ToS4 => {
                let mut m = MomentTensor::from_array(vals.clone().try_into().expect("six columns"));
                if c.normalize {
                    m = m.normalized().map_err(row_err)?;
                }
                mt_to_s4(&m).map_err(row_err)?.as_slice().to_vec()
            }
            MtDirection::ToMt => {
                let v = DVector::from_vec(vals);
                let n = v.norm();
                let v = if c.normalize { v / n } else { v };
                if (v.norm() - 1.0).abs() > 1e-8 {
                    return Err(row_err(sphreg::Error::Domain(format!("vector has norm {n}, not 1"))).into());
                }
                s4_to_mt(&v).map_err(row_err)?.to_array().to_vec()
            }
        };
        let mut row: Vec<String> = keep.iter().map(|&i| rec[i].to_string()).collect();
        row.extend(converted.iter().map(|v| format_number(*v)));
        out.write_record(&row).map_err(sphreg::Error::from)?;
    }
    out.flush().map_err(sphreg::Error::from)?;
    Ok(())
}
