//! Command-line front end: ingest the comparison CSV, run any stage or the
//! full pipeline, emit JSON/CSV/SVG/DOT artifacts.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use surroc::cart::{CartConfig, MissingPolicy};
use surroc::dataset::{self, ComparisonRecord};
use surroc::emit;
use surroc::ensemble::{self, BaggingConfig, ImportanceMethod};
use surroc::error::{Error, Result};
use surroc::report::{self, AnalysisOptions, Measure, ALL_MEASURES, TREE_FEATURES};
use surroc::roc::{self, MarkerOrientation};

#[derive(Parser)]
#[command(name = "surroc", version, about = "Trial-level surrogacy evaluation of PFS measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    HrPfs,
    DeltaMed,
    PctDeltaMed,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Measure {
        match m {
            MeasureArg::HrPfs => Measure::HrPfs,
            MeasureArg::DeltaMed => Measure::DeltaMed,
            MeasureArg::PctDeltaMed => Measure::PctDeltaMed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OrientationArg {
    Higher,
    Lower,
}

#[derive(Clone, Copy, ValueEnum)]
enum MissingArg {
    Listwise,
    Majority,
}

#[derive(Clone, Copy, ValueEnum)]
enum ImportanceArg {
    Permutation,
    Gini,
}

#[derive(Args)]
struct InputArgs {
    /// Input CSV in the documented comparison schema
    input: PathBuf,
    /// Significance level for the OS / PFS labels
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Drop the TTP-substituted rows before analysis
    #[arg(long)]
    exclude_ttp: bool,
}

#[derive(Args)]
struct CartArgs {
    #[arg(long, default_value_t = 10)]
    min_split: usize,
    #[arg(long, default_value_t = 5)]
    min_leaf: usize,
    #[arg(long, default_value_t = 5)]
    max_depth: usize,
    #[arg(long, default_value_t = 0.01)]
    cp: f64,
    #[arg(long, value_enum, default_value_t = MissingArg::Majority)]
    missing: MissingArg,
}

impl CartArgs {
    fn to_config(&self) -> CartConfig {
        CartConfig {
            min_split: self.min_split,
            min_leaf: self.min_leaf,
            max_depth: self.max_depth,
            cp: self.cp,
            missing_policy: match self.missing {
                MissingArg::Listwise => MissingPolicy::Listwise,
                MissingArg::Majority => MissingPolicy::MajorityDirection,
            },
        }
    }
}

#[derive(Args)]
struct BaggingArgs {
    #[arg(long, default_value_t = 500)]
    n_trees: usize,
    /// Forest seed; required so repeated runs are byte-identical
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ImportanceArg::Permutation)]
    importance: ImportanceArg,
}

impl BaggingArgs {
    fn to_config(&self, base: CartConfig) -> BaggingConfig {
        BaggingConfig {
            n_trees: self.n_trees,
            seed: self.seed,
            sample_fraction: 1.0,
            importance_method: match self.importance {
                ImportanceArg::Permutation => ImportanceMethod::PermutationOob,
                ImportanceArg::Gini => ImportanceMethod::MeanDecreaseGini,
            },
            base,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print Table-2 style descriptive statistics
    Summarize {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// Empirical ROC curve, AUC and Youden cutoff for one measure
    Roc {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum)]
        measure: MeasureArg,
        /// Override the measure's documented orientation
        #[arg(long, value_enum)]
        orientation: Option<OrientationArg>,
        /// Write the operating points as CSV
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write an SVG plot
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Fit and export the classification tree
    Tree {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        cart: CartArgs,
        /// Write the nested tree JSON
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a Graphviz DOT rendering
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Bagged variable-importance ranking
    Importance {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        cart: CartArgs,
        #[command(flatten)]
        bagging: BaggingArgs,
        /// Write feature,score,rank CSV
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// Full pipeline: report.json plus per-section artifacts
    Report {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        cart: CartArgs,
        #[command(flatten)]
        bagging: BaggingArgs,
        /// Apply the Haldane-Anscombe correction to zero-cell odds ratios
        #[arg(long)]
        haldane: bool,
        /// Directory for report.json, roc_*.csv/svg, tree.dot, importance.csv
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn load_records(input: &InputArgs) -> Result<(Vec<ComparisonRecord>, String)> {
    let raw = std::fs::read(&input.input)?;
    let digest = format!("sha256:{:x}", Sha256::digest(&raw));
    let mut records = dataset::parse_csv(&raw)?;
    if input.exclude_ttp {
        records.retain(|r| !r.endpoint_is_ttp);
    }
    Ok((records, digest))
}

/// Write via a temp file in the target directory, then rename into place.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn orientation_line(orient: MarkerOrientation) -> &'static str {
    match orient {
        MarkerOrientation::HigherPredictsPositive => "orientation: higher predicts positive",
        MarkerOrientation::LowerPredictsPositive => "orientation: lower predicts positive",
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Summarize { input, format } => {
            let (records, _) = load_records(&input)?;
            let stats = dataset::summarize(&records)?;
            match format {
                OutputFormat::Text => print!("{}", emit::summary_text(&stats)),
                OutputFormat::Json => print!("{}", report::canonical_json(&stats)?),
            }
        }
        Command::Roc { input, measure, orientation, out, svg } => {
            let (records, _) = load_records(&input)?;
            let measure: Measure = measure.into();
            let orient = match orientation {
                Some(OrientationArg::Higher) => MarkerOrientation::HigherPredictsPositive,
                Some(OrientationArg::Lower) => MarkerOrientation::LowerPredictsPositive,
                None => measure.orientation(),
            };
            let mut markers = Vec::new();
            let mut labels = Vec::new();
            for r in &records {
                let d = dataset::derive_measures(r, input.alpha)?;
                markers.push(measure.extract(&d));
                labels.push(d.os_significant);
            }
            let curve = roc::roc_curve(&markers, &labels, orient)?;
            let youden = roc::youden(&curve)?;
            println!("measure: {}", measure.name());
            println!("{}", orientation_line(orient));
            println!("n used: {} ({} positive, {} negative)", curve.n_pos + curve.n_neg, curve.n_pos, curve.n_neg);
            println!("AUC = {:.2}", curve.auc);
            println!(
                "Youden cutoff = {:.2} (J = {:.3}, sensitivity {:.1}%, specificity {:.1}%)",
                youden.threshold,
                youden.j,
                100.0 * youden.sensitivity,
                100.0 * youden.specificity
            );
            if let Some(path) = out {
                write_atomic(&path, &emit::roc_points_csv(&curve))?;
            }
            if let Some(path) = svg {
                write_atomic(&path, &emit::roc_svg(&curve, measure.name()))?;
            }
        }
        Command::Tree { input, cart, out, dot } => {
            let (records, _) = load_records(&input)?;
            let config = cart.to_config();
            let derived: Vec<_> = records
                .iter()
                .map(|r| dataset::derive_measures(r, input.alpha))
                .collect::<Result<_>>()?;
            let features: Vec<String> = TREE_FEATURES.iter().map(|s| s.to_string()).collect();
            let matrix = report::build_feature_matrix(
                &records,
                &derived,
                &features,
                config.missing_policy == MissingPolicy::Listwise,
            )?;
            let tree = surroc::cart::fit_tree(&matrix, &config)?;
            println!("n used: {}", matrix.rows.len());
            print!("{}", emit::tree_dot(&tree));
            if let Some(path) = out {
                write_atomic(&path, &report::canonical_json(&tree)?)?;
            }
            if let Some(path) = dot {
                write_atomic(&path, &emit::tree_dot(&tree))?;
            }
        }
        Command::Importance { input, cart, bagging, out, format } => {
            let (records, _) = load_records(&input)?;
            let config = cart.to_config();
            let derived: Vec<_> = records
                .iter()
                .map(|r| dataset::derive_measures(r, input.alpha))
                .collect::<Result<_>>()?;
            let features: Vec<String> = TREE_FEATURES.iter().map(|s| s.to_string()).collect();
            let matrix = report::build_feature_matrix(
                &records,
                &derived,
                &features,
                config.missing_policy == MissingPolicy::Listwise,
            )?;
            let bcfg = bagging.to_config(config);
            let forest = ensemble::fit_bagging(&matrix, &bcfg)?;
            let rep = ensemble::importance(&forest, &matrix, bcfg.importance_method)?;
            match format {
                OutputFormat::Text => {
                    let mut by_rank = rep.features.clone();
                    by_rank.sort_by_key(|f| f.rank);
                    for f in &by_rank {
                        println!("{}. {} (score {:.6})", f.rank, f.name, f.score);
                    }
                }
                OutputFormat::Json => print!("{}", report::canonical_json(&rep)?),
            }
            if let Some(path) = out {
                write_atomic(&path, &emit::importance_csv(&rep))?;
            }
        }
        Command::Report { input, cart, bagging, haldane, out_dir } => {
            let (records, digest) = load_records(&input)?;
            let cart_config = cart.to_config();
            let mut opts = AnalysisOptions::new(bagging.seed);
            opts.alpha = input.alpha;
            opts.cart = cart_config;
            opts.bagging = bagging.to_config(cart_config);
            opts.haldane = haldane;
            opts.input_digest = Some(digest);
            let rep = report::run_analysis(&records, &opts)?;

            write_atomic(&out_dir.join("report.json"), &report::canonical_json(&rep)?)?;
            for section in &rep.roc {
                let name = section.measure.name();
                write_atomic(&out_dir.join(format!("roc_{name}.csv")), &emit::roc_points_csv(&section.curve))?;
                write_atomic(&out_dir.join(format!("roc_{name}.svg")), &emit::roc_svg(&section.curve, name))?;
            }
            let ste_tree = rep.tree_listwise.as_ref().unwrap_or(&rep.tree);
            write_atomic(&out_dir.join("tree.dot"), &emit::tree_dot(&ste_tree.tree))?;
            write_atomic(&out_dir.join("importance.csv"), &emit::importance_csv(&rep.importance))?;

            for m in ALL_MEASURES {
                if let Some(section) = rep.roc.iter().find(|s| s.measure == m) {
                    println!("AUC ({}) = {:.2} [n={}]", m.name(), section.auc, section.n_used);
                }
            }
            if let Some(ct) = &rep.cross_table {
                match ct.odds_ratio {
                    Some(or) => println!("odds ratio = {or:.2} [n={}]", ct.n_used),
                    None => println!("odds ratio undefined (zero cell) [n={}]", ct.n_used),
                }
            }
            for t in &rep.ste.tree_thresholds {
                println!("tree threshold: {} @ {:.2}", t.feature, t.threshold);
            }
            println!("leaves (significant/total): {}", rep.ste.leaf_narrative.join(", "));
            println!("report written to {}", out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
