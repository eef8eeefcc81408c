use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use contactnet::autocorr::{fit_autocorrelation, AutocorrMethod, WeightMode};
use contactnet::design::dummy_design;
use contactnet::ergm::{fit_dyadic_ergm, fit_dyadic_ergm_separate};
use contactnet::error::{Error, Result};
use contactnet::exposure::{carrier_vs_positive_friends, category_relative_risk, ExposureDefinition};
use contactnet::graph::{
    build_network, eligible_edge_count, Attribute, Cohort, ContactNetwork, Layer, Nomination, Trait,
};
use contactnet::ingest::{read_cohort, read_nominations, write_cohort_csv, write_nominations_csv, IngestReport};
use contactnet::permutation::{category_transmission_test, homophily_permutation_test, NullMode, PermutationOptions};
use contactnet::report::{self, *};
use contactnet::stats::{
    cross_tab, popularity_by_category, representativeness_summary, same_week_friend_proportion, TTestVariant,
    TestChoice,
};
use contactnet::synth::{generate_cohort, paper_shaped_config, CohortConfig};

#[derive(Debug, Parser)]
#[command(name = "contactnet", version, about = "Contact-network analysis of binary trait transmission")]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "CONTACTNET_THREADS")]
    threads: Option<usize>,
    /// Output directory for result files and the run manifest.
    #[arg(long, global = true, default_value = "contactnet-out")]
    out: PathBuf,
    /// Suppress the text tables on stdout.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
enum Command {
    /// Prevalence, popularity, same-week and representativeness tables.
    Describe(DescribeArgs),
    /// Same-attribute edge counts against a permutation null.
    Homophily(HomophilyArgs),
    /// Fit a dyadic ERGM, autocorrelation, exposure logit or relative-risk model.
    Fit(FitArgs),
    /// Write one layer as an edge list, GraphML or DOT file.
    Export(ExportArgs),
    /// Generate a synthetic cohort.
    Generate(GenerateArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
struct Inputs {
    #[arg(long)]
    #[serde(skip)]
    cohort: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    nominations: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
struct DescribeArgs {
    #[command(flatten)]
    #[serde(skip)]
    inputs: Inputs,
    #[arg(long, default_value = "overall")]
    layer: Layer,
    #[arg(long, value_enum, default_value_t = TTest::Welch)]
    t_test: TTest,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum TTest {
    Welch,
    Pooled,
}

#[derive(Debug, Clone, Args, Serialize)]
struct HomophilyArgs {
    #[command(flatten)]
    #[serde(skip)]
    inputs: Inputs,
    #[arg(long)]
    attr: Attribute,
    /// A layer name or `all`.
    #[arg(long, default_value = "all")]
    layer: String,
    #[arg(long, default_value_t = 1000)]
    sims: usize,
    #[arg(long)]
    #[serde(skip)]
    seed: Option<u64>,
    #[arg(long, default_value = "marginal_shuffle")]
    mode: NullMode,
    /// Count only edges whose endpoints both carry this level.
    #[arg(long)]
    restrict: Option<String>,
    /// Category-conditional transmission test for every level of this attribute.
    #[arg(long)]
    by: Option<Attribute>,
    /// Level of `--attr` counted as trait-positive in the category test.
    #[arg(long, default_value = "positive")]
    positive: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Model {
    Ergm,
    Autocorr,
    Logit,
    Rr,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Weights {
    Raw,
    RowNormalized,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Method {
    LagLs,
    ProfileMl,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Exposure {
    Any,
    AboveMedian,
}

#[derive(Debug, Clone, Args, Serialize)]
struct FitArgs {
    #[command(flatten)]
    #[serde(skip)]
    inputs: Inputs,
    #[arg(long, value_enum)]
    model: Model,
    #[arg(long, default_value = "overall")]
    layer: Layer,
    /// `direct` or `enrichment`.
    #[arg(long, default_value = "direct")]
    r#trait: Trait,
    /// Attributes: match terms for ergm, covariates for autocorr, categories for rr.
    #[arg(long, value_delimiter = ',')]
    attrs: Vec<Attribute>,
    /// ergm: one model per attribute instead of a joint fit.
    #[arg(long)]
    separate: bool,
    #[arg(long, value_enum, default_value_t = Weights::Raw)]
    weights: Weights,
    #[arg(long, value_enum, default_value_t = Method::LagLs)]
    method: Method,
    #[arg(long, value_enum, default_value_t = Exposure::Any)]
    exposure: Exposure,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Format {
    EdgeList,
    Graphml,
    Dot,
}

#[derive(Debug, Clone, Args, Serialize)]
struct ExportArgs {
    #[command(flatten)]
    #[serde(skip)]
    inputs: Inputs,
    #[arg(long, value_enum)]
    format: Format,
    #[arg(long, default_value = "overall")]
    layer: Layer,
    #[arg(long)]
    color_by: Option<Attribute>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct GenerateArgs {
    /// JSON generator configuration.
    #[arg(long, conflicts_with = "paper_shaped", required_unless_present = "paper_shaped")]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// 1038 participants in 8 schools, calibrated to 3767 edges and 88 % school homophily.
    #[arg(long)]
    paper_shaped: bool,
    #[arg(long)]
    #[serde(skip)]
    seed: Option<u64>,
    /// Plant contagion on the direct-culture trait with this per-friend effect.
    #[arg(long)]
    planted_rho: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct ReplayArgs {
    manifest: PathBuf,
}

const DEFAULT_ERGM_ATTRS: [Attribute; 2] = [Attribute::School, Attribute::Sex];

/// Host factors of the autocorrelation and relative-risk tables.
const HOST_FACTORS: [Attribute; 7] = [
    Attribute::Sex,
    Attribute::StudyProgram,
    Attribute::Bmi,
    Attribute::Smoking,
    Attribute::Snuff,
    Attribute::Alcohol,
    Attribute::PhysicalActivity,
];

const DESCRIBE_ATTRS: [Attribute; 8] = [
    Attribute::Sex,
    Attribute::StudyProgram,
    Attribute::Bmi,
    Attribute::Smoking,
    Attribute::Snuff,
    Attribute::Alcohol,
    Attribute::PhysicalActivity,
    Attribute::Contraceptive,
];

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Describe(_) => "describe",
            Command::Homophily(_) => "homophily",
            Command::Fit(_) => "fit",
            Command::Export(_) => "export",
            Command::Generate(_) => "generate",
            Command::Replay(_) => "replay",
        }
    }

    fn seed_slot(&mut self) -> Option<&mut Option<u64>> {
        match self {
            Command::Homophily(a) => Some(&mut a.seed),
            Command::Generate(a) => Some(&mut a.seed),
            _ => None,
        }
    }
}

/// Everything a command hands back for writing.
struct Output {
    files: Vec<(String, Vec<u8>)>,
    text: String,
}

struct Run<'a> {
    inputs: Vec<InputDigest>,
    manifest_id: String,
    out: &'a Path,
}

fn envelope_json<T: Serialize>(kind: &str, id: &str, result: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(&Envelope::new(kind, id, result))?;
    s.push(b'\n');
    Ok(s)
}

fn load(inputs: &Inputs) -> Result<(Cohort, Vec<Nomination>, IngestReport)> {
    let (cohort, mut rep) = read_cohort(&inputs.cohort)?;
    let (noms, nrep) = read_nominations(&inputs.nominations, &cohort)?;
    rep.merge(nrep);
    Ok((cohort, noms, rep))
}

fn digests(inputs: &Inputs) -> Result<Vec<InputDigest>> {
    [("cohort", &inputs.cohort), ("nominations", &inputs.nominations)]
        .into_iter()
        .map(|(role, p)| {
            Ok(InputDigest { role: role.into(), path: p.display().to_string(), sha256: file_digest(p)? })
        })
        .collect()
}

fn trait_attr(t: Trait) -> Attribute {
    t.attribute()
}

fn describe(a: &DescribeArgs, run: &Run) -> Result<Output> {
    let (cohort, noms, ingest) = load(&a.inputs)?;
    let layer_noms: Vec<Nomination> = noms.iter().copied().filter(|n| n.contexts.includes(a.layer)).collect();
    let net = build_network(cohort.len(), &noms, a.layer)?;
    let mut notes = Vec::new();
    let available: Vec<Attribute> = DESCRIBE_ATTRS
        .iter()
        .copied()
        .filter(|&attr| match cohort.column(attr) {
            Ok(c) if c.levels.len() >= 2 => true,
            _ => {
                notes.push(format!("{attr}: fewer than two observed levels; omitted"));
                false
            }
        })
        .collect();
    let mut prevalence = Vec::new();
    for t in [Trait::Direct, Trait::Enrichment] {
        let positives = cohort.positives(t);
        let n_positive = positives.iter().filter(|&&b| b).count();
        let mut tables = Vec::new();
        for &attr in &available {
            match cross_tab(&cohort, attr, trait_attr(t), Some("positive"), TestChoice::Auto) {
                Ok(tab) => tables.push(tab),
                Err(e) => notes.push(format!("{attr} × {}: {e}", t.as_str())),
            }
        }
        prevalence.push(PrevalenceBlock {
            trait_name: t.as_str().into(),
            n_positive,
            prevalence_pct: 100.0 * n_positive as f64 / cohort.len().max(1) as f64,
            tables,
        });
    }
    let variant = match a.t_test {
        TTest::Welch => TTestVariant::Welch,
        TTest::Pooled => TTestVariant::Pooled,
    };
    let mut popularity = Vec::new();
    for &attr in &available {
        match popularity_by_category(&cohort, &layer_noms, a.layer, attr, variant) {
            Ok(t) => popularity.push(t),
            Err(e) => notes.push(format!("popularity by {attr}: {e}")),
        }
    }
    let representativeness = match representativeness_summary(&cohort) {
        Ok(r) => Some(r),
        Err(e) => {
            notes.push(e.to_string());
            None
        }
    };
    let rep = DescribeReport {
        layer: a.layer,
        ingest,
        networks: vec![layer_summary(&net)],
        prevalence,
        popularity,
        same_week: same_week_friend_proportion(&cohort, &layer_noms),
        representativeness,
        notes,
    };
    let text = render_describe(&rep);
    Ok(Output {
        files: vec![
            ("describe.json".into(), envelope_json("describe", &run.manifest_id, &rep)?),
            ("describe.txt".into(), text.clone().into_bytes()),
        ],
        text,
    })
}

fn layers(spec: &str) -> Result<Vec<Layer>> {
    if spec.eq_ignore_ascii_case("all") {
        Ok(Layer::ALL.to_vec())
    } else {
        spec.split(',').map(str::parse).collect()
    }
}

fn homophily(a: &HomophilyArgs, seed: u64, run: &Run) -> Result<Output> {
    let (cohort, noms, _) = load(&a.inputs)?;
    let column = cohort.column(a.attr)?;
    let opts = PermutationOptions { n_sims: a.sims, seed, mode: a.mode };
    let mut rows = Vec::new();
    let mut categories = Vec::new();
    for layer in layers(&a.layer)? {
        let net = build_network(cohort.len(), &noms, layer)?;
        let test = homophily_permutation_test(&net, &column, a.restrict.as_deref(), &opts)?;
        rows.push(HomophilyLayerResult { total_relationships: eligible_edge_count(&net, &column), test });
        if let Some(by) = a.by {
            let cat = cohort.column(by)?;
            for (code, level) in cat.levels.iter().enumerate() {
                let inside: Vec<bool> = cat.codes.iter().map(|c| *c == Some(code as u32)).collect();
                match category_transmission_test(&net, &column, &a.positive, &inside, (by.as_str(), level), &opts) {
                    Ok(r) => categories.push(r),
                    Err(e @ (Error::Undefined(_) | Error::DegenerateNull(_))) => {
                        log::warn!("{layer} layer, {by}={level}: {e}")
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }
    let rep = HomophilyReport { attribute: a.attr.as_str().into(), layers: rows, categories };
    let text = render_homophily(&rep);
    Ok(Output {
        files: vec![
            ("homophily.json".into(), envelope_json("homophily", &run.manifest_id, &rep)?),
            ("homophily.txt".into(), text.clone().into_bytes()),
        ],
        text,
    })
}

fn fit(a: &FitArgs, run: &Run) -> Result<Output> {
    let (cohort, noms, _) = load(&a.inputs)?;
    let net = build_network(cohort.len(), &noms, a.layer)?;
    let id = &run.manifest_id;
    let (kind, json, text) = match a.model {
        Model::Ergm => {
            let attrs = if a.attrs.is_empty() { DEFAULT_ERGM_ATTRS.to_vec() } else { a.attrs.clone() };
            let columns = attrs.iter().map(|&x| cohort.column(x)).collect::<Result<Vec<_>>>()?;
            let fits = if a.separate {
                fit_dyadic_ergm_separate(&net, &columns)?
            } else {
                vec![fit_dyadic_ergm(&net, &columns)?]
            };
            let rep = ErgmReport { joint: !a.separate, fits };
            ("fit-ergm", envelope_json("fit-ergm", id, &rep)?, render_ergm(&rep))
        }
        Model::Autocorr => {
            let covariates = if a.attrs.is_empty() { HOST_FACTORS.to_vec() } else { a.attrs.clone() };
            let design = dummy_design(&cohort, &covariates, &[], true)?;
            let y: Vec<f64> = cohort.positives(a.r#trait).iter().map(|&b| f64::from(u8::from(b))).collect();
            let mode = match a.weights {
                Weights::Raw => WeightMode::RawAdjacency,
                Weights::RowNormalized => WeightMode::RowNormalized,
            };
            let method = match a.method {
                Method::LagLs => AutocorrMethod::LagCovariateLeastSquares,
                Method::ProfileMl => AutocorrMethod::ProfileMl,
            };
            let fit = fit_autocorrelation(&net, &y, &design, mode, method)?;
            let excluded = cohort.len() - design.n();
            let mut notes = Vec::new();
            if excluded > 0 {
                notes.push(format!(
                    "{excluded} participant(s) with a missing covariate excluded; the network is restricted to the rest"
                ));
            }
            let rep = AutocorrReport {
                trait_name: a.r#trait.as_str().into(),
                layer: a.layer,
                covariates: covariates.iter().map(|c| c.as_str().to_string()).collect(),
                n_excluded_incomplete: excluded,
                fit,
                notes,
            };
            ("fit-autocorr", envelope_json("fit-autocorr", id, &rep)?, render_autocorr(&rep))
        }
        Model::Logit => {
            let exposure = carrier_vs_positive_friends(&net, &cohort.positives(a.r#trait))?;
            let rep = LogitReport { trait_name: a.r#trait.as_str().into(), exposure };
            ("fit-logit", envelope_json("fit-logit", id, &rep)?, render_logit(&rep))
        }
        Model::Rr => {
            let attrs = if a.attrs.is_empty() { HOST_FACTORS.to_vec() } else { a.attrs.clone() };
            let definition = match a.exposure {
                Exposure::Any => ExposureDefinition::AnyPositiveFriend,
                Exposure::AboveMedian => ExposureDefinition::AboveMedianPositiveFriends,
            };
            let tables = attrs
                .iter()
                .map(|&attr| category_relative_risk(&cohort, &net, attr, a.r#trait, definition, None))
                .collect::<Result<Vec<_>>>()?;
            let rep = RrReport { trait_name: a.r#trait.as_str().into(), tables };
            ("fit-rr", envelope_json("fit-rr", id, &rep)?, render_rr(&rep))
        }
    };
    Ok(Output {
        files: vec![(format!("{kind}.json"), json), (format!("{kind}.txt"), text.clone().into_bytes())],
        text,
    })
}

fn export(a: &ExportArgs) -> Result<Output> {
    let (cohort, noms, _) = load(&a.inputs)?;
    let net: ContactNetwork = build_network(cohort.len(), &noms, a.layer)?;
    let format = match a.format {
        Format::EdgeList => ExportFormat::EdgeList,
        Format::Graphml => ExportFormat::Graphml,
        Format::Dot => ExportFormat::Dot,
    };
    let body = export_graph(&cohort, &net, format, a.color_by)?;
    let name = format!("{}.{}", a.layer, format.extension());
    let text = format!("wrote {} ({} nodes, {} edges)\n", name, net.node_count(), net.edge_count());
    Ok(Output { files: vec![(name, body.into_bytes())], text })
}

fn generator_config(a: &GenerateArgs, seed: u64) -> Result<CohortConfig> {
    let mut config = match &a.config {
        Some(path) => serde_json::from_slice::<CohortConfig>(&fs::read(path)?)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
        None => paper_shaped_config(seed)?,
    };
    config.seed = seed;
    if a.planted_rho.is_some() {
        config.planted_rho = a.planted_rho;
    }
    config.validate()?;
    Ok(config)
}

fn generate(config: &CohortConfig) -> Result<Output> {
    let (cohort, noms) = generate_cohort(config)?;
    let mut c = Vec::new();
    write_cohort_csv(&cohort, &mut c)?;
    let mut n = Vec::new();
    write_nominations_csv(&cohort, &noms, &mut n)?;
    let mut cfg = serde_json::to_vec_pretty(config)?;
    cfg.push(b'\n');
    let text = format!("generated {} participants, {} nominations (seed {})\n", cohort.len(), noms.len(), config.seed);
    Ok(Output {
        files: vec![("cohort.csv".into(), c), ("nominations.csv".into(), n), ("config.json".into(), cfg)],
        text,
    })
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    fs::write(dir.join(name), bytes)?;
    Ok(())
}

fn execute(cli: Cli, argv: Vec<String>) -> Result<String> {
    let mut command = cli.command;
    if let Command::Replay(r) = &command {
        return replay(&r.manifest, &cli.out, cli.quiet);
    }
    let (seed, seed_source) = match command.seed_slot() {
        Some(slot) => match *slot {
            Some(s) => (Some(s), "flag"),
            None => {
                let s = rand::random::<u64>() >> 11;
                *slot = Some(s);
                (Some(s), "auto")
            }
        },
        None => (None, ""),
    };
    let mut inputs = match &command {
        Command::Describe(a) => digests(&a.inputs)?,
        Command::Homophily(a) => digests(&a.inputs)?,
        Command::Fit(a) => digests(&a.inputs)?,
        Command::Export(a) => digests(&a.inputs)?,
        _ => Vec::new(),
    };
    let mut generator = None;
    if let Command::Generate(a) = &command {
        if let Some(p) = &a.config {
            inputs.push(InputDigest { role: "config".into(), path: p.display().to_string(), sha256: file_digest(p)? });
        }
        generator = Some(generator_config(a, seed.expect("generate always has a seed"))?);
    }
    let parameters = serde_json::to_value(&command)?;
    let threads = rayon::current_num_threads();
    let mut manifest = RunManifest::new(
        command.name(),
        argv,
        inputs.clone(),
        seed.map(|s| (s, seed_source)),
        parameters,
        threads,
    );
    let run = Run { inputs, manifest_id: manifest.manifest_id.clone(), out: &cli.out };
    let output = match &command {
        Command::Describe(a) => describe(a, &run)?,
        Command::Homophily(a) => homophily(a, seed.expect("homophily always has a seed"), &run)?,
        Command::Fit(a) => fit(a, &run)?,
        Command::Export(a) => export(a)?,
        Command::Generate(_) => generate(generator.as_ref().expect("set above"))?,
        Command::Replay(_) => unreachable!(),
    };
    debug_assert_eq!(run.inputs.len(), manifest.inputs.len());
    fs::create_dir_all(run.out)?;
    for (name, bytes) in &output.files {
        write_file(run.out, name, bytes)?;
        manifest.outputs.push(name.clone());
    }
    let mut m = serde_json::to_vec_pretty(&manifest)?;
    m.push(b'\n');
    write_file(run.out, "manifest.json", &m)?;
    Ok(output.text)
}

/// Re-parse the recorded arguments, check input digests, pin the recorded
/// seed and run again into `out`.
fn replay(path: &Path, out: &Path, quiet: bool) -> Result<String> {
    let manifest: RunManifest = serde_json::from_slice(&fs::read(path)?)
        .map_err(|e| Error::Config(format!("{}: not a run manifest: {e}", path.display())))?;
    if manifest.schema_version != report::SCHEMA_VERSION {
        return Err(Error::Config(format!("unsupported manifest schema version {}", manifest.schema_version)));
    }
    for input in &manifest.inputs {
        let now = file_digest(Path::new(&input.path))?;
        if now != input.sha256 {
            return Err(Error::Input(format!("{} input {} changed since the recorded run", input.role, input.path)));
        }
    }
    let mut argv = vec!["contactnet".to_string()];
    argv.extend(manifest.argv.iter().cloned());
    let mut cli = Cli::try_parse_from(&argv).map_err(|e| Error::Config(format!("recorded arguments: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(Error::Config("a manifest cannot record a replay".into()));
    }
    if let (Some(slot), Some(seed)) = (cli.command.seed_slot(), manifest.seed) {
        *slot = Some(seed);
    }
    cli.out = out.to_path_buf();
    cli.quiet = quiet;
    execute(cli, manifest.argv)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let quiet = cli.quiet;
    match execute(cli, argv) {
        Ok(text) => {
            if !quiet {
                print!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}
