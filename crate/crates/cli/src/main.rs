//! `facesig` — match, identify, evaluate, and analyze face signatures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use facesig_cli::config::{
    build_matcher, parse_aggregation, parse_attribute_source, parse_grid, parse_matcher_kind,
    read_eval_setup, read_synth_config,
};
use facesig_cli::error::{CliError, Result};
use facesig_cli::manifest::{load_gallery, load_templates, read_manifest, render_manifest};
use facesig_cli::parallel::{par_batch_identify, with_thread_pool};
use facesig_cli::report;
use facesig_cli::{read_signature, write_signature};

use facesig_core::evaluation::{
    compare_methods, evaluate_split, lambda_grid_search, NamedMatcher,
};
use facesig_core::stats::{CriticalValues, SignificanceReport};
use facesig_core::synth::generate_benchmark;
use facesig_core::{explain_match, match_signatures, weights_from_probe_confidence};
use facesig_core::{
    weights_from_training_accuracy, MatcherScheme, RankedList, WeightMode,
};

#[derive(Parser)]
#[command(
    name = "facesig",
    version,
    about = "Patch/attribute face signature matching and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Matcher flags shared by several subcommands.
#[derive(Args, Clone)]
struct MatcherArgs {
    /// Weight of the attribute component in the fused score.
    #[arg(long, default_value_t = facesig_core::DEFAULT_LAMBDA)]
    lambda: f64,
    /// Matcher variant: plain, weighted (training-accuracy), or probe
    /// (per-probe confidence).
    #[arg(long, default_value = "plain")]
    matcher: String,
    /// Accuracy table file (attribute_name,accuracy) for --matcher weighted.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Template score aggregation: max or mean.
    #[arg(long, default_value = "max")]
    agg: String,
    /// Attribute vector fed to the attribute score: logits, probabilities,
    /// or binary.
    #[arg(long, default_value = "logits")]
    attribute_source: String,
}

impl MatcherArgs {
    fn build(&self) -> Result<facesig_core::MatcherConfig> {
        build_matcher(
            self.lambda,
            parse_matcher_kind(&self.matcher)?,
            parse_aggregation(&self.agg)?,
            parse_attribute_source(&self.attribute_source)?,
            self.weights.as_deref(),
        )
    }

    fn describe(&self) -> String {
        format!("{}(lambda={})", self.matcher, self.lambda)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Score one gallery signature against one probe signature.
    Match {
        gallery: PathBuf,
        probe: PathBuf,
        #[command(flatten)]
        matcher: MatcherArgs,
    },
    /// Rank every gallery subject for every probe template.
    Identify {
        /// Gallery manifest (subject_id,template_id,path).
        #[arg(long)]
        gallery: PathBuf,
        /// Probe manifest.
        #[arg(long)]
        probe: PathBuf,
        #[command(flatten)]
        matcher: MatcherArgs,
        /// Write the ranked CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank-k accuracy over the splits of an evaluation config.
    Evaluate {
        /// Evaluation config (TOML with [[split]] and optional [[method]]).
        #[arg(long)]
        splits: PathBuf,
        /// Ranks to evaluate, comma separated (overrides the config).
        #[arg(long)]
        ranks: Option<String>,
        #[command(flatten)]
        matcher: MatcherArgs,
        /// Long-form accuracy CSV output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-cell rank-1 CSV output (for labeled probes).
        #[arg(long)]
        cells_out: Option<PathBuf>,
        /// Rank-1 accuracy matrix CSV (splits x methods), for `stats`.
        #[arg(long)]
        matrix_out: Option<PathBuf>,
    },
    /// Sweep the fusion weight over a grid and report the best value.
    Gridsearch {
        #[arg(long)]
        splits: PathBuf,
        /// Grid as start:step:end, e.g. 0.1:0.1:1.0.
        #[arg(long, default_value = "0.1:0.1:1.0")]
        grid: String,
        #[command(flatten)]
        matcher: MatcherArgs,
        /// Curve CSV output (lambda,mean_rank1).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Friedman / Iman-Davenport / Bonferroni-Dunn analysis of an accuracy
    /// matrix.
    Stats {
        /// Accuracy matrix CSV (header: split,method1,method2,...).
        #[arg(long)]
        matrix: PathBuf,
        /// Critical value of the F distribution at the chosen alpha.
        #[arg(long)]
        fcrit: f64,
        /// Two-tailed Bonferroni-Dunn critical value.
        #[arg(long)]
        qalpha: f64,
        /// Significance level the critical values were read at.
        #[arg(long, default_value_t = 0.10)]
        alpha: f64,
        /// Machine-readable report CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic benchmark: signature files, manifests, truth.
    Synth {
        /// Generator config (TOML); missing keys use defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Seed override.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.class(), e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Match {
            gallery,
            probe,
            matcher,
        } => cmd_match(&gallery, &probe, &matcher),
        Command::Identify {
            gallery,
            probe,
            matcher,
            out,
        } => cmd_identify(&gallery, &probe, &matcher, out.as_deref()),
        Command::Evaluate {
            splits,
            ranks,
            matcher,
            out,
            cells_out,
            matrix_out,
        } => cmd_evaluate(
            &splits,
            ranks.as_deref(),
            &matcher,
            out.as_deref(),
            cells_out.as_deref(),
            matrix_out.as_deref(),
        ),
        Command::Gridsearch {
            splits,
            grid,
            matcher,
            out,
        } => cmd_gridsearch(&splits, &grid, &matcher, out.as_deref()),
        Command::Stats {
            matrix,
            fcrit,
            qalpha,
            alpha,
            out,
        } => cmd_stats(&matrix, fcrit, qalpha, alpha, out.as_deref()),
        Command::Synth { config, out, seed } => cmd_synth(config.as_deref(), &out, seed),
    }
}

fn cmd_match(gallery_path: &Path, probe_path: &Path, args: &MatcherArgs) -> Result<()> {
    let gallery = read_signature(gallery_path)?;
    let probe = read_signature(probe_path)?;
    let matcher = args.build()?;

    // resolve the weight vector exactly as the identification layer would
    let mode = parse_matcher_kind(&args.matcher)?;
    let weights = match mode {
        WeightMode::Uniform => None,
        WeightMode::Trained => {
            let table = matcher.accuracy_table.as_ref().expect("checked in build");
            Some(weights_from_training_accuracy(
                table,
                probe.attributes.attribute_names(),
            )?)
        }
        WeightMode::Probe => Some(weights_from_probe_confidence(&probe.attributes)?),
    };
    let mut fusion = matcher.fusion.clone();
    fusion.scheme = if weights.is_some() {
        MatcherScheme::Weighted
    } else {
        MatcherScheme::Plain
    };
    let breakdown = match_signatures(&gallery, &probe, &fusion, weights.as_ref())?;
    let overlap = explain_match(&gallery, &probe)?;
    print!(
        "{}",
        report::render_match_output(&breakdown, args.lambda, &overlap)
    );
    Ok(())
}

fn ranked_rows(
    probes: &[facesig_core::Template],
    results: Vec<facesig_core::Result<RankedList>>,
) -> Vec<(String, std::result::Result<RankedList, String>)> {
    probes
        .iter()
        .zip(results)
        .map(|(probe, result)| {
            (
                probe.template_id.clone(),
                result.map_err(|e| e.to_string()),
            )
        })
        .collect()
}

fn cmd_identify(
    gallery_path: &Path,
    probe_path: &Path,
    args: &MatcherArgs,
    out: Option<&Path>,
) -> Result<()> {
    let gallery = load_gallery(gallery_path)?;
    let probe_entries = read_manifest(probe_path)?;
    let probes = load_templates(&probe_entries)?.templates;
    let matcher = args.build()?;

    let results =
        with_thread_pool(|| par_batch_identify(&probes, &gallery, &matcher))?;
    let ok = results.iter().filter(|r| r.is_ok()).count();
    let csv = report::render_ranked_csv(&ranked_rows(&probes, results));
    match out {
        Some(path) => {
            report::write_text(path, &csv)?;
            eprintln!(
                "identified {ok}/{} probes against {} subjects -> {}",
                probes.len(),
                gallery.len(),
                path.display()
            );
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn parse_ranks(spec: &str) -> Result<Vec<usize>> {
    let ranks: std::result::Result<Vec<usize>, _> =
        spec.split(',').map(|s| s.trim().parse::<usize>()).collect();
    let ranks = ranks.map_err(|_| {
        CliError::Format(format!("--ranks '{spec}': expected comma-separated integers"))
    })?;
    if ranks.is_empty() || ranks.contains(&0) {
        return Err(CliError::Format(
            "--ranks must list positive integers".to_string(),
        ));
    }
    Ok(ranks)
}

fn cmd_evaluate(
    splits_path: &Path,
    ranks: Option<&str>,
    args: &MatcherArgs,
    out: Option<&Path>,
    cells_out: Option<&Path>,
    matrix_out: Option<&Path>,
) -> Result<()> {
    let fallback = NamedMatcher {
        name: args.describe(),
        matcher: args.build()?,
    };
    let setup = read_eval_setup(splits_path, fallback)?;
    let ranks = match ranks {
        Some(spec) => parse_ranks(spec)?,
        None => setup.ranks.clone(),
    };

    let mut reports = Vec::new();
    let mut cell_tables = Vec::new();
    for method in &setup.methods {
        for split in &setup.splits {
            let report = with_thread_pool(|| evaluate_split(split, &method.matcher, &ranks))?
                .map_err(CliError::from)?;
            if let Some(table) = &report.per_cell {
                cell_tables.push((method.name.clone(), split.name.clone(), table.clone()));
            }
            reports.push((method.name.clone(), report));
        }
    }

    let csv = report::render_accuracy_csv(&reports);
    match out {
        Some(path) => report::write_text(path, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(path) = cells_out {
        report::write_text(path, &report::render_cell_csv(&cell_tables))?;
    }
    if let Some(path) = matrix_out {
        let matrix = with_thread_pool(|| compare_methods(&setup.methods, &setup.splits))?
            .map_err(CliError::from)?;
        report::write_text(path, &report::render_matrix_csv(&matrix))?;
        for (method, split, reason) in &matrix.failures {
            eprintln!("warning: {method} failed on {split}: {reason}");
        }
    }
    Ok(())
}

fn cmd_gridsearch(
    splits_path: &Path,
    grid_spec: &str,
    args: &MatcherArgs,
    out: Option<&Path>,
) -> Result<()> {
    let fallback = NamedMatcher {
        name: args.describe(),
        matcher: args.build()?,
    };
    let setup = read_eval_setup(splits_path, fallback)?;
    let grid = parse_grid(grid_spec)?;
    let base = setup.methods[0].matcher.clone();
    let curve = with_thread_pool(|| lambda_grid_search(&setup.splits, &grid, &base))?
        .map_err(CliError::from)?;

    let csv = report::render_curve_csv(&curve);
    match out {
        Some(path) => report::write_text(path, &csv)?,
        None => print!("{csv}"),
    }
    println!("best_lambda: {}", curve.best);
    Ok(())
}

fn cmd_stats(
    matrix_path: &Path,
    fcrit: f64,
    qalpha: f64,
    alpha: f64,
    out: Option<&Path>,
) -> Result<()> {
    let text =
        std::fs::read_to_string(matrix_path).map_err(|e| CliError::io_at(matrix_path, e))?;
    let (methods, _splits, rows) = report::parse_matrix_csv(&text)?;
    let critical = CriticalValues::new(fcrit, qalpha, alpha).map_err(CliError::from)?;
    let sig_report = SignificanceReport::from_accuracies(&methods, &rows, critical)
        .map_err(CliError::from)?;
    print!("{sig_report}");
    if let Some(path) = out {
        report::write_text(path, &report::render_stats_csv(&sig_report))?;
    }
    Ok(())
}

fn cmd_synth(config: Option<&Path>, out_dir: &Path, seed: Option<u64>) -> Result<()> {
    let mut cfg = match config {
        Some(path) => read_synth_config(path)?,
        None => facesig_core::synth::SynthConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let bench = generate_benchmark(&cfg).map_err(CliError::from)?;

    let gallery_dir = out_dir.join("gallery");
    let probe_dir = out_dir.join("probe");
    std::fs::create_dir_all(&gallery_dir).map_err(|e| CliError::io_at(&gallery_dir, e))?;
    std::fs::create_dir_all(&probe_dir).map_err(|e| CliError::io_at(&probe_dir, e))?;

    let mut gallery_rows = Vec::new();
    for template in bench.gallery.templates() {
        for member in template.members() {
            let file = format!("gallery/{}.sig", member.image_id);
            write_signature(&out_dir.join(&file), member)?;
            gallery_rows.push((
                member.subject_id.clone(),
                template.template_id.clone(),
                file,
                None,
            ));
        }
    }
    let mut probe_rows = Vec::new();
    for template in &bench.probes {
        for member in template.members() {
            let file = format!("probe/{}.sig", member.image_id);
            write_signature(&out_dir.join(&file), member)?;
            probe_rows.push((
                member.subject_id.clone(),
                template.template_id.clone(),
                file,
                None,
            ));
        }
    }
    report::write_text(
        &out_dir.join("gallery.manifest"),
        &render_manifest(&gallery_rows),
    )?;
    report::write_text(
        &out_dir.join("probe.manifest"),
        &render_manifest(&probe_rows),
    )?;
    report::write_text(
        &out_dir.join("truth.csv"),
        &report::render_truth_csv(&bench.truth),
    )?;
    eprintln!(
        "wrote {} gallery and {} probe signatures to {}",
        gallery_rows.len(),
        probe_rows.len(),
        out_dir.display()
    );
    Ok(())
}
