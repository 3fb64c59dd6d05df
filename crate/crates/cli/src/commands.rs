use std::fmt::Write;
use std::path::Path;

use serde_json::json;
use triage_core::data::{self, align, rubric_to_csv, scores_to_csv, RubricSpec, ScoreMatrix};
use triage_core::filter::{self, decisions_to_csv, export_risk_heatmap, parse_decisions, record_order};
use triage_core::irt::{self, linspace, sample_icc_curves, FitConfig};
use triage_core::metrics::{self, paired_totals, sweep_to_csv};
use triage_core::synth::{self, ItemSource, SynthConfig};
use triage_core::{plot, schema, FilterConfig, Outcome, RouteReason};

use crate::error::CliError;
use crate::grid::parse_grid;
use crate::output::Staged;
use crate::{Cli, Command, FilterArgs, FitArgs, ReportArgs, SimulateArgs, SweepArgs};

pub fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Fit(args) => fit(args, &cli.out_dir),
        Command::Filter(args) => filter(args, &cli.out_dir),
        Command::Sweep(args) => sweep(args, &cli.out_dir),
        Command::Simulate(args) => simulate(args, cli.seed, &cli.out_dir),
        Command::Report(args) => report(args, &cli.out_dir),
    }
}

fn load_matrix(scores: &Path, rubric: &RubricSpec, keep_missing: bool) -> Result<ScoreMatrix, CliError> {
    let m = data::load_scores(scores, rubric)?;
    Ok(if keep_missing { m } else { m.fill_missing_as_zero() })
}

fn fit(args: &FitArgs, out_dir: &Path) -> Result<String, CliError> {
    let config = FitConfig {
        quadrature_nodes: args.nodes,
        quadrature_range: args.range,
        max_iterations: args.max_iter,
        convergence_tol: args.tol,
        ..FitConfig::default()
    };
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let mut staged = Staged::new("fit");
    staged.input(&args.scores)?;
    staged.input(&args.rubric)?;
    let rubric = data::load_rubric(&args.rubric)?;
    let matrix = load_matrix(&args.scores, &rubric, args.missing.keep_missing)?;

    let result = irt::fit_2pl(&matrix, &config)?;
    staged.add("params.jsonl", schema::params_to_string(&result, Some(&config)));
    staged.commit(out_dir, json!({ "fit": config, "keep_missing": args.missing.keep_missing }))?;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "fitted {} items x {} students: {} iterations, converged = {}, log-posterior {:.4}",
        result.items.len(),
        result.abilities.len(),
        result.iterations_used,
        result.converged,
        result.final_log_posterior
    );
    Ok(s)
}

fn filter(args: &FilterArgs, out_dir: &Path) -> Result<String, CliError> {
    let cfg = FilterConfig::new(args.t, args.r).map_err(|e| CliError::Config(e.to_string()))?;
    let mut staged = Staged::new("filter");
    for p in [&args.scores, &args.rubric, &args.params] {
        staged.input(p)?;
    }
    let rubric = data::load_rubric(&args.rubric)?;
    let matrix = load_matrix(&args.scores, &rubric, args.missing.keep_missing)?;
    let fit = schema::load_params(&args.params)?;
    let report = filter::apply_filter(&matrix, &fit, &cfg)?;

    let below = report.count(Outcome::Route(RouteReason::BelowCreditThreshold));
    let high = report.count(Outcome::Route(RouteReason::HighRisk));
    let summary = json!({
        "t": cfg.t(),
        "r": cfg.r(),
        "total": report.total(),
        "accepted": report.accepted,
        "routed_below_credit_threshold": below,
        "routed_high_risk": high,
        "acceptance_rate": report.acceptance_rate(),
    });
    staged.add("decisions.csv", decisions_to_csv(&report.records));
    staged.add("filter-summary.json", format!("{}\n", serde_json::to_string_pretty(&summary).expect("json")));
    staged.commit(out_dir, json!({ "t": cfg.t(), "r": cfg.r(), "keep_missing": args.missing.keep_missing }))?;

    Ok(format!(
        "t = {}, r = {}: accepted {} of {} cells (acceptance_rate {:.4}); routed {} below credit threshold, {} high risk\n",
        cfg.t(),
        cfg.r(),
        report.accepted,
        report.total(),
        report.acceptance_rate(),
        below,
        high
    ))
}

fn sweep(args: &SweepArgs, out_dir: &Path) -> Result<String, CliError> {
    let t_grid = parse_grid(&args.t_grid).map_err(|e| CliError::Config(format!("--t-grid: {e}")))?;
    let r_grid = parse_grid(&args.r_grid).map_err(|e| CliError::Config(format!("--r-grid: {e}")))?;
    let mut staged = Staged::new("sweep");
    for p in [&args.ai, &args.truth, &args.rubric, &args.params] {
        staged.input(p)?;
    }
    let rubric = data::load_rubric(&args.rubric)?;
    let ai = load_matrix(&args.ai, &rubric, args.missing.keep_missing)?;
    let truth = load_matrix(&args.truth, &rubric, args.missing.keep_missing)?;
    let fit = schema::load_params(&args.params)?;

    let rows = metrics::sweep(&ai, &truth, &fit, &t_grid, &r_grid)?;
    staged.add("sweep.csv", sweep_to_csv(&rows));
    staged.add("sweep.svg", plot::sweep_svg(&rows));
    staged.commit(out_dir, json!({ "t_grid": t_grid, "r_grid": r_grid, "keep_missing": args.missing.keep_missing }))?;

    let mut s = format!("{} sweep rows\n", rows.len());
    if let Ok(un) = metrics::unfiltered_agreement(&ai, &truth) {
        let _ = writeln!(
            s,
            "unfiltered: R2 {:.4}, slope {:.4}, offset fraction {:.4}, n = {}",
            un.r2, un.slope, un.offset_fraction, un.n
        );
    }
    Ok(s)
}

fn simulate(args: &SimulateArgs, seed: Option<u64>, out_dir: &Path) -> Result<String, CliError> {
    let mut staged = Staged::new("simulate");
    let mut cfg = match &args.config {
        Some(path) => {
            staged.input(path)?;
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str::<SynthConfig>(&text).map_err(|e| CliError::Config(e.to_string()))?
        }
        None => SynthConfig::default(),
    };
    if let Some(n) = args.students {
        cfg.n_students = n;
    }
    if let Some(n) = args.items {
        cfg.items = match cfg.items {
            ItemSource::Random { a_min, a_max, b_min, b_max, max_points, .. } => {
                ItemSource::Random { count: n, a_min, a_max, b_min, b_max, max_points }
            }
            ItemSource::List(_) => return Err(CliError::Config("--items conflicts with an explicit item list".into())),
        };
    }
    if let Some(v) = args.fn_rate {
        cfg.fn_rate = v;
    }
    if let Some(v) = args.fp_rate {
        cfg.fp_rate = v;
    }
    if let Some(v) = args.partial_rate {
        cfg.partial_rate = v;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out = synth::generate(&cfg)?;
    staged.add("rubric.csv", rubric_to_csv(&out.rubric));
    staged.add("truth.csv", scores_to_csv(&out.truth));
    staged.add("ai.csv", scores_to_csv(&out.ai));
    staged.add("synth-truth.jsonl", schema::provenance_to_string(&out.provenance));
    staged.commit(out_dir, serde_json::to_value(&cfg).expect("json"))?;
    Ok(format!(
        "simulated {} students x {} items (seed {})\n",
        cfg.n_students,
        out.rubric.len(),
        cfg.seed
    ))
}

fn report(args: &ReportArgs, out_dir: &Path) -> Result<String, CliError> {
    let mut staged = Staged::new("report");
    let mut made = Vec::new();
    let rubric = match &args.rubric {
        Some(p) => {
            staged.input(p)?;
            Some(data::load_rubric(p)?)
        }
        None => None,
    };

    if let Some(path) = &args.params {
        staged.input(path)?;
        let fit = schema::load_params(path)?;
        if !(args.theta_step > 0.0 && args.theta_max > args.theta_min) {
            return Err(CliError::Config("ability grid needs theta_max > theta_min and a positive step".into()));
        }
        let n = ((args.theta_max - args.theta_min) / args.theta_step + 1e-9).floor() as usize + 1;
        let grid: Vec<f64> = linspace(args.theta_min, args.theta_min + (n - 1) as f64 * args.theta_step, n)
            .into_iter()
            .map(|t| (t * 1e9).round() / 1e9)
            .collect();
        let curves = sample_icc_curves(&fit, &grid)?;
        staged.add("icc.csv", curves.to_csv());
        staged.add("icc.svg", plot::icc_svg(&curves));
        made.push("icc");
    }

    if let Some(path) = &args.decisions {
        staged.input(path)?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let records = parse_decisions(&text)?;
        let (students, mut items) = record_order(&records);
        if let Some(r) = &rubric {
            items = r.item_ids().map(String::from).collect();
        }
        let table = export_risk_heatmap(&records, &students, &items)?;
        staged.add("heatmap.csv", table.to_csv());
        staged.add("heatmap.svg", plot::heatmap_svg(&table));
        made.push("heatmap");
    }

    match (&args.ai, &args.truth, &rubric) {
        (Some(ai_path), Some(truth_path), Some(rubric)) => {
            staged.input(ai_path)?;
            staged.input(truth_path)?;
            let ai = load_matrix(ai_path, rubric, args.missing.keep_missing)?;
            let truth = load_matrix(truth_path, rubric, args.missing.keep_missing)?;
            let aligned = align(&ai, &truth)?;
            let totals = paired_totals(&aligned.both_set(), &ai, &truth)?;
            let points: Vec<(f64, f64)> = totals.iter().map(|(_, x, y)| (*x, *y)).collect();
            let stats = metrics::regress_totals(&points, rubric.total_max_points()).ok();
            let mut csv = String::from("student_id,truth_total,ai_total\n");
            for (s, x, y) in &totals {
                let _ = writeln!(csv, "{},{x},{y}", data::csv_field(s));
            }
            staged.add("scatter.csv", csv);
            staged.add("scatter.svg", plot::scatter_svg(&points, stats.as_ref(), rubric.total_max_points()));
            made.push("scatter");
        }
        (None, None, _) => {}
        _ => return Err(CliError::Config("the scatter needs --ai, --truth and --rubric together".into())),
    }

    if made.is_empty() {
        return Err(CliError::Config("nothing to report: pass --params, --decisions, or --ai/--truth/--rubric".into()));
    }
    staged.commit(
        out_dir,
        json!({ "figures": made, "theta_min": args.theta_min, "theta_max": args.theta_max, "theta_step": args.theta_step }),
    )?;
    Ok(format!("wrote {} figure(s): {}\n", made.len(), made.join(", ")))
}
