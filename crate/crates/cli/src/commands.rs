use std::path::PathBuf;

use anyhow::Context;
use mixpl::dca::{coupling_scores, read_msa, tp_rate_curve};
use mixpl::init::{codeword_init, default_subset_size, random_init};
use mixpl::optimizer::OptimizeOptions;
use mixpl::sampler::{gibbs_sample, sample_mixture, ChainInit, SamplerConfig};
use mixpl::surface::{argmax_by, ir_curve, ir_surface, Grid};
use mixpl::{fit, ComponentParams, Dataset, FitOptions, MixtureModel, TieMode};

use crate::formats::{
    csv_text, format_dataset, format_labels, format_model, format_scores, parse_contacts, parse_dataset,
    parse_model, parse_scores, read_text, write_text,
};
use crate::{CliError, DcaScoreArgs, FitArgs, GenerateArgs, InitKind, SurfaceArgs, TpRateArgs};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn generate(args: &GenerateArgs, invocation: &str) -> Result<(), CliError> {
    let model = match (&args.model, args.ir_j) {
        (Some(path), None) => parse_model(&read_text(path)?)?,
        (None, Some(j)) => MixtureModel::uniform(vec![ComponentParams::infinite_range(args.n, args.beta, j)
            .map_err(|e| usage(e.to_string()))?])?,
        _ => return Err(usage("give exactly one of --model and --ir-J")),
    };
    let cfg = SamplerConfig {
        seed: args.seed,
        burn_in: args.burn_in,
        thin: args.thin,
        init: ChainInit::UniformRandom,
    };
    let (data, labels) = if model.k() == 1 {
        (gibbs_sample(model.component(0), args.count, &cfg)?, None)
    } else {
        let labeled = sample_mixture(&model, args.count, &cfg)?;
        (labeled.data, Some(labeled.labels))
    };
    write_text(&args.out, &format_dataset(&data, invocation))?;
    if let Some(labels) = &labels {
        let path = args.labels.clone().unwrap_or_else(|| args.out.with_extension("labels"));
        write_text(&path, &format_labels(labels, invocation))?;
    }
    let mut summary = format!("B={} N={} q={}", data.len(), data.n_sites(), data.q());
    if data.q() == 2 {
        summary.push_str(&format!(" mean|m|={:.6}", mean_abs_magnetization(&data)));
    }
    println!("{summary}");
    Ok(())
}

/// Mean over samples of `|sum_i s_i| / N`.
pub fn mean_abs_magnetization(data: &Dataset) -> f64 {
    let n = data.n_sites() as f64;
    data.samples().iter().map(|s| s.magnetization().abs() / n).sum::<f64>() / data.len() as f64
}

fn load_data(data: &Option<PathBuf>, msa: &Option<PathBuf>) -> Result<Dataset, CliError> {
    match (data, msa) {
        (Some(path), None) => Ok(parse_dataset(&read_text(path)?).with_context(|| path.display().to_string())?),
        (None, Some(path)) => Ok(read_msa(&read_text(path)?).with_context(|| path.display().to_string())?),
        _ => Err(usage("give exactly one of --data and --msa")),
    }
}

pub fn fit_command(args: &FitArgs, invocation: &str) -> Result<(), CliError> {
    if args.k == 0 {
        return Err(usage("--K must be at least 1"));
    }
    let data = load_data(&args.data, &args.msa)?;
    if data.len() < args.k {
        return Err(usage(format!("{} samples cannot seed K={}", data.len(), args.k)));
    }
    let tie_mode = if args.tie_ir { TieMode::InfiniteRange } else { TieMode::Free };
    if tie_mode == TieMode::InfiniteRange && data.q() != 2 {
        return Err(usage("--tie-ir needs binary data"));
    }
    let init = match args.init {
        InitKind::Random => random_init(data.len(), args.k, args.seed)?,
        InitKind::Codeword => {
            let subset = args.subset_size.unwrap_or_else(|| default_subset_size(data.len(), args.k));
            if subset < args.k || subset > data.len() {
                return Err(usage(format!("--subset-size must lie in [{}, {}]", args.k, data.len())));
            }
            codeword_init(&data, args.k, subset, args.seed)?
        }
    };
    let opts = FitOptions {
        beta: args.beta,
        tie_mode,
        regularization: args.lambda,
        inner: OptimizeOptions::default(),
        max_iterations: args.max_iter,
        tolerance: args.tol,
        initial_components: None,
    };
    let (model, report) = fit(&data, &init, &opts)?;
    write_text(&args.out, &format_model(&model, invocation)?)?;
    if let Some(path) = &args.report {
        let k = model.k();
        let mut header = vec!["iteration".to_string(), "mixture_log_pl".to_string()];
        header.extend((1..=k).map(|c| format!("pi_{c}")));
        header.extend((1..=k).map(|c| format!("count_{c}")));
        header.push("events".to_string());
        let rows = report.iterations.iter().map(|r| {
            let mut row = vec![r.iteration.to_string(), r.mixture_log_pl.to_string()];
            row.extend(r.pi.iter().map(f64::to_string));
            row.extend(r.effective_counts.iter().map(f64::to_string));
            row.push(r.events.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "));
            row
        });
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        write_text(path, &csv_text(invocation, &header, rows)?)?;
    }
    if let Some(path) = &args.labels {
        write_text(path, &format_labels(&report.responsibilities.hard_labels(), invocation))?;
    }
    println!(
        "iterations={} converged={} log_pl={:.9} pi={:?}",
        report.iterations.len(),
        report.converged,
        report.final_log_pl(),
        model.pi()
    );
    let shared: Vec<f64> = model.components().iter().filter_map(ComponentParams::ir_coupling).collect();
    if !shared.is_empty() {
        println!("J={shared:?}");
    }
    Ok(())
}

fn parse_grid(text: &str) -> Result<Grid, CliError> {
    text.parse().map_err(|e: mixpl::Error| usage(e.to_string()))
}

pub fn surface(args: &SurfaceArgs, invocation: &str) -> Result<(), CliError> {
    let grid = parse_grid(&args.grid)?;
    let data = parse_dataset(&read_text(&args.data)?)?;
    if data.q() != 2 {
        return Err(usage("surface scans need binary data"));
    }
    match args.k {
        1 => {
            if args.grid2.is_some() {
                return Err(usage("--grid2 only applies to K=2"));
            }
            let curve = ir_curve(&data, args.beta, &grid)?;
            let rows = curve.iter().map(|(j, v)| vec![j.to_string(), v.to_string()]);
            write_text(&args.out, &csv_text(invocation, &["J", "log_pl"], rows)?)?;
            let (j, v) = argmax_by(&curve, |p| p.1).expect("grid is non-empty");
            println!("argmax J={j} log_pl={v}");
        }
        2 => {
            let grid2 = match &args.grid2 {
                Some(g) => parse_grid(g)?,
                None => grid,
            };
            let surface = ir_surface(&data, args.beta, &grid, &grid2)?;
            let rows = surface
                .iter()
                .map(|(a, b, v)| vec![a.to_string(), b.to_string(), v.to_string()]);
            write_text(&args.out, &csv_text(invocation, &["J1", "J2", "log_pl"], rows)?)?;
            let (a, b, v) = argmax_by(&surface, |p| p.2).expect("grid is non-empty");
            println!("argmax J1={a} J2={b} log_pl={v}");
        }
        k => return Err(usage(format!("surface supports K=1 or K=2, got {k}"))),
    }
    Ok(())
}

pub fn dca_score(args: &DcaScoreArgs, invocation: &str) -> Result<(), CliError> {
    let model = parse_model(&read_text(&args.model)?)?;
    if args.component >= model.k() {
        return Err(usage(format!(
            "--component {} out of range for K={}",
            args.component,
            model.k()
        )));
    }
    let scores = coupling_scores(model.component(args.component));
    write_text(&args.out, &format_scores(&scores, invocation)?)?;
    Ok(())
}

pub fn tprate(args: &TpRateArgs, invocation: &str) -> Result<(), CliError> {
    let scores = parse_scores(&read_text(&args.scores)?)?;
    let n = args.length.unwrap_or(scores.n());
    if n != scores.n() {
        return Err(usage(format!("scores cover N={} but --length is {n}", scores.n())));
    }
    let contacts = parse_contacts(&read_text(&args.contacts)?, n)?;
    let curve = tp_rate_curve(&scores, &contacts, args.min_sep)?;
    let rows = curve.iter().map(|(r, t)| vec![r.to_string(), t.to_string()]);
    write_text(&args.out, &csv_text(invocation, &["rank", "tp_rate"], rows)?)?;
    Ok(())
}
