use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use peoplefinder_core::corpus::DbKind;
use peoplefinder_core::eval::{
    macro_average, parse_qrels, parse_run, parse_topics, render_precision_table, write_run,
    ComparisonMatrix, MacroTable, Qrels, RunFile, Topics,
};
use peoplefinder_core::pipeline::{
    build_engine, run_ablation, standard_runs, BuildConfig, Collection, SourceSet,
    System, DEFAULT_RUN_DEPTH,
};
use peoplefinder_core::store::{digest_file, load_snapshot, save_snapshot};
use peoplefinder_core::synth::{gen_synthetic, SynthConfig};
use peoplefinder_core::Score;

use crate::api::{router, AppState};
use crate::search::search;

pub const INDEX_DIR_ENV: &str = "PEOPLEFINDER_INDEX_DIR";
pub const BIND_ENV: &str = "PEOPLEFINDER_BIND";

/// Expertise search over organizational structure and document content.
#[derive(Debug, Parser)]
#[command(name = "peoplefinder", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build evidence and an index from a collection.
    Build(BuildArgs),
    /// Search an index from the command line.
    Query(QueryArgs),
    /// Run every topic of a topic file against an index and write a run file.
    Run(RunArgs),
    /// Serve the JSON query API.
    Serve(ServeArgs),
    /// Precision at fixed cutoffs for one or more run files.
    Eval(EvalArgs),
    /// Win/loss comparison matrix between run files.
    Compare(CompareArgs),
    /// Build and evaluate the seven standard system/source combinations.
    Ablate(AblateArgs),
    /// Write a seeded synthetic collection.
    GenSynthetic(GenArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Corpus records, one JSON object per line.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Link graph: `source-url<TAB>target-url` per line.
    #[arg(long)]
    pub links: PathBuf,
    /// URL aliases: `alias-url<TAB>canonical-url` per line.
    #[arg(long)]
    pub aliases: Option<PathBuf>,
    /// Organizational structure XML.
    #[arg(long)]
    pub org: PathBuf,
}

impl InputArgs {
    fn load(&self, cfg: &BuildConfig) -> Result<Collection> {
        for (what, p) in [("corpus", &self.corpus), ("links", &self.links), ("org", &self.org)] {
            if !p.exists() {
                bail!("{what} file {} does not exist", p.display());
            }
        }
        Collection::load(&self.corpus, &self.links, self.aliases.as_deref(), &self.org, cfg)
            .context("loading collection")
    }
}

fn parse_kind_value(s: &str) -> Result<(DbKind, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KIND=VALUE, got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("not a number: {v:?}"))?;
    Ok((k.parse()?, v))
}

/// Build parameters. Flags override values from `--config`.
#[derive(Debug, Args, Default)]
pub struct ConfigArgs {
    /// JSON build configuration to start from.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Weight factor along links that stay in or below the source folder [default: 0.5].
    #[arg(long)]
    pub down_same_factor: Option<f64>,
    /// Weight factor along links that leave the source folder [default: 0.1].
    #[arg(long)]
    pub up_away_factor: Option<f64>,
    /// Pages whose propagated weight falls below this are dropped [default: 0.001].
    #[arg(long)]
    pub weight_floor: Option<f64>,
    /// Type factor for person homepages [default: 10].
    #[arg(long)]
    pub person_homepage_factor: Option<f64>,
    /// Type factor for project homepages [default: 10].
    #[arg(long)]
    pub project_homepage_factor: Option<f64>,
    /// Type factor for group homepages [default: 10].
    #[arg(long)]
    pub group_homepage_factor: Option<f64>,
    /// Type factor for every other page [default: 1].
    #[arg(long)]
    pub other_factor: Option<f64>,
    /// Type factor for a database record kind, e.g. `publication=2` [default: other factor].
    #[arg(long, value_parser = parse_kind_value)]
    pub db_factor: Vec<(DbKind, f64)>,
    /// Base weight of documents that mention a person's name [default: 1].
    #[arg(long)]
    pub name_mention_weight: Option<f64>,
    /// Base weight of database records linked to a person [default: 1].
    #[arg(long)]
    pub db_weight: Option<f64>,
    /// Base weight for one database record kind, e.g. `contact=0.5` [default: db weight].
    #[arg(long, value_parser = parse_kind_value)]
    pub db_weight_kind: Vec<(DbKind, f64)>,
    /// BM25 term-frequency saturation [default: 1.2].
    #[arg(long)]
    pub k1: Option<f64>,
    /// BM25 length normalization [default: 0.75].
    #[arg(long)]
    pub b: Option<f64>,
    /// Lower bound on term IDF [default: 0].
    #[arg(long)]
    pub idf_floor: Option<f64>,
    /// File names that address their folder, repeatable [default: index.html, index.htm, default.html, default.htm].
    #[arg(long)]
    pub default_file: Vec<String>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<BuildConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => BuildConfig::default(),
        };
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        let ev = &mut cfg.evidence;
        set(&mut ev.propagation.down_same_factor, self.down_same_factor);
        set(&mut ev.propagation.up_away_factor, self.up_away_factor);
        set(&mut ev.propagation.weight_floor, self.weight_floor);
        set(&mut ev.type_factors.person_homepage, self.person_homepage_factor);
        set(&mut ev.type_factors.project_homepage, self.project_homepage_factor);
        set(&mut ev.type_factors.group_homepage, self.group_homepage_factor);
        set(&mut ev.type_factors.other, self.other_factor);
        ev.type_factors.db.extend(self.db_factor.iter().copied());
        set(&mut ev.name_mention_weight, self.name_mention_weight);
        set(&mut ev.db_weight, self.db_weight);
        ev.db_weight_by_kind.extend(self.db_weight_kind.iter().copied());
        set(&mut cfg.index.k1, self.k1);
        set(&mut cfg.index.b, self.b);
        set(&mut cfg.index.idf_floor, self.idf_floor);
        if !self.default_file.is_empty() {
            cfg.default_files = self.default_file.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Sources to index: intranet, extranet, db, or web for both web sources; joined by `,` or `+`.
    #[arg(long, default_value = "web+db")]
    pub sources: SourceSet,
    /// `new` uses org structure and link propagation; `base` uses name mentions only.
    #[arg(long, default_value = "new")]
    pub system: System,
    /// Index directory to write.
    #[arg(long, env = INDEX_DIR_ENV)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    /// Index directory.
    #[arg(long, env = INDEX_DIR_ENV)]
    pub index: PathBuf,
    /// Number of people to show.
    #[arg(short, long, default_value_t = 10)]
    pub k: usize,
    /// Only people holding this role.
    #[arg(long)]
    pub role: Option<String>,
    /// Print the JSON search response instead of a table.
    #[arg(long)]
    pub json: bool,
    /// Query text.
    #[arg(required = true, num_args = 1..)]
    pub query: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Index directory.
    #[arg(long, env = INDEX_DIR_ENV)]
    pub index: PathBuf,
    /// Topic file: `topic-id<TAB>query` per line.
    #[arg(long)]
    pub topics: PathBuf,
    /// People kept per topic.
    #[arg(long, default_value_t = DEFAULT_RUN_DEPTH)]
    pub depth: usize,
    /// Run tag; defaults to the index's system and sources, e.g. `new-web+db`.
    #[arg(long)]
    pub tag: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Index directory.
    #[arg(long, env = INDEX_DIR_ENV)]
    pub index: PathBuf,
    /// Address to listen on.
    #[arg(long, env = BIND_ENV, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
}

#[derive(Debug, Args)]
pub struct JudgmentArgs {
    /// Topic file: `topic-id<TAB>query` per line.
    #[arg(long)]
    pub topics: PathBuf,
    /// Judgments: `topic-id<TAB>person-id<TAB>grade` per line.
    #[arg(long)]
    pub qrels: PathBuf,
}

impl JudgmentArgs {
    fn load(&self) -> Result<(Topics, Qrels)> {
        let topics = parse_topics(&read(&self.topics)?).with_context(|| format!("parsing {}", self.topics.display()))?;
        let qrels = parse_qrels(&read(&self.qrels)?).with_context(|| format!("parsing {}", self.qrels.display()))?;
        for t in qrels.topics() {
            if !topics.ids().any(|id| id == t) {
                eprintln!("warning: judged topic {t} is not in the topic file");
            }
        }
        Ok((topics, qrels))
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub judgments: JudgmentArgs,
    /// Comma-separated cutoffs.
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,10", value_parser = clap::value_parser!(u64).range(1..))]
    pub cutoffs: Vec<u64>,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
    /// Run files.
    #[arg(required = true, num_args = 1..)]
    pub runs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub judgments: JudgmentArgs,
    /// Precision cutoff.
    #[arg(long, default_value_t = 5)]
    pub cutoff: usize,
    /// Run files; each is compared with every run listed before it.
    #[arg(required = true, num_args = 2..)]
    pub runs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub judgments: JudgmentArgs,
    /// Comma-separated cutoffs.
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,10", value_parser = clap::value_parser!(u64).range(1..))]
    pub cutoffs: Vec<u64>,
    /// Cutoff for the comparison matrix.
    #[arg(long, default_value_t = 5)]
    pub compare_cutoff: usize,
    /// Directory to write the seven run files into.
    #[arg(long)]
    pub runs_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub persons: usize,
    #[arg(long, default_value_t = 5)]
    pub projects: usize,
    #[arg(long, default_value_t = 200)]
    pub docs: usize,
    #[arg(long, default_value_t = 30)]
    pub topics: usize,
    /// Fraction of topics whose expert pages never name the expert.
    #[arg(long, default_value_t = 0.3)]
    pub structured_ratio: f64,
    /// Fraction of other topical pages that leave out the expert's name.
    #[arg(long, default_value_t = 0.5)]
    pub name_omit_ratio: f64,
    #[arg(long, default_value_t = 1)]
    pub experts_per_topic: usize,
    #[arg(long, default_value_t = 2)]
    pub pages_per_expert: usize,
    #[arg(long, default_value_t = 5)]
    pub group_size: usize,
}

fn to_usize(v: &[u64]) -> Vec<usize> {
    v.iter().map(|&k| k as usize).collect()
}

fn read(p: &Path) -> Result<String> {
    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn load_runs(paths: &[PathBuf]) -> Result<Vec<RunFile>> {
    paths
        .iter()
        .map(|p| parse_run(&read(p)?).with_context(|| format!("parsing {}", p.display())))
        .collect()
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Build(a) => build(a, out),
        Command::Query(a) => query(a, out),
        Command::Run(a) => run(a, out),
        Command::Serve(a) => serve(a),
        Command::Eval(a) => eval(a, out),
        Command::Compare(a) => compare(a, out),
        Command::Ablate(a) => ablate(a, out),
        Command::GenSynthetic(a) => gen(a, out),
    }
}

fn build(a: BuildArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = a.config.resolve()?;
    let collection = a.input.load(&cfg)?;
    for w in &collection.warnings {
        eprintln!("warning: {w}");
    }
    let engine = build_engine(&collection, &a.sources, a.system, &cfg)?;
    for w in &engine.warnings {
        eprintln!("warning: {w}");
    }
    let mut inputs = vec![
        digest_file("corpus", &a.input.corpus)?,
        digest_file("links", &a.input.links)?,
        digest_file("org", &a.input.org)?,
    ];
    if let Some(p) = &a.input.aliases {
        inputs.push(digest_file("aliases", p)?);
    }
    let manifest = save_snapshot(&engine, &cfg, inputs, &a.out)
        .with_context(|| format!("writing index to {}", a.out.display()))?;
    let s = &manifest.stats;
    writeln!(out, "built {} into {}", manifest.run_tag, a.out.display())?;
    writeln!(
        out,
        "documents {}  persons {}  fragments {}  vocabulary {}",
        s.documents, s.persons, s.fragments, s.vocabulary
    )?;
    Ok(())
}

fn query(a: QueryArgs, out: &mut dyn Write) -> Result<()> {
    let snap = load_snapshot(&a.index).with_context(|| format!("loading index {}", a.index.display()))?;
    let text = a.query.join(" ");
    let resp = search(&snap, &text, a.k, a.role.as_deref())?;
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&resp)?)?;
        return Ok(());
    }
    if resp.results.is_empty() {
        writeln!(out, "no matches")?;
        return Ok(());
    }
    let name_w = resp.results.iter().map(|r| r.display_name.len()).max().unwrap_or(0).max(4);
    let id_w = resp.results.iter().map(|r| r.person_id.len()).max().unwrap_or(0).max(6);
    writeln!(out, "{:>4}  {:<id_w$}  {:<name_w$}  {:>10}  top evidence", "rank", "person", "name", "score")?;
    for r in &resp.results {
        let top = r.evidence.first().map(|e| e.url.as_str()).unwrap_or("");
        writeln!(
            out,
            "{:>4}  {:<id_w$}  {:<name_w$}  {:>10.4}  {top}",
            r.rank, r.person_id, r.display_name, r.score
        )?;
    }
    Ok(())
}

fn run(a: RunArgs, out: &mut dyn Write) -> Result<()> {
    let snap = load_snapshot(&a.index).with_context(|| format!("loading index {}", a.index.display()))?;
    let topics = parse_topics(&read(&a.topics)?).with_context(|| format!("parsing {}", a.topics.display()))?;
    let mut run = RunFile::new(a.tag.unwrap_or_else(|| snap.manifest.run_tag.clone()));
    for t in topics.iter() {
        let ranked = peoplefinder_core::retrieval::score_experts(&t.query_text, None, &snap.index, &snap.org);
        run.topics.insert(
            t.topic_id.clone(),
            ranked
                .into_iter()
                .take(a.depth)
                .map(|r| peoplefinder_core::eval::RunEntry {
                    person_id: r.person_id,
                    score: r.score,
                })
                .collect(),
        );
    }
    let text = write_run(&run);
    match &a.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    let snap = load_snapshot(&a.index).with_context(|| format!("loading index {}", a.index.display()))?;
    eprintln!(
        "serving {} ({} persons) on http://{}",
        snap.manifest.run_tag, snap.manifest.stats.persons, a.bind
    );
    let state = Arc::new(AppState::new(snap, Some(a.index.clone())));
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(a.bind)
            .await
            .with_context(|| format!("binding {}", a.bind))?;
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

fn eval(a: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let (topics, qrels) = a.judgments.load()?;
    let runs = load_runs(&a.runs)?;
    let tables: Vec<MacroTable<Score>> = runs
        .iter()
        .map(|r| macro_average(r, &qrels, &topics, &to_usize(&a.cutoffs)))
        .collect();
    for w in tables.iter().flat_map(|t| t.warnings.iter().map(move |w| (t, w))) {
        eprintln!("warning: {}: {}", w.0.run_tag, w.1);
    }
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&tables)?)?;
    } else {
        write!(out, "{}", render_precision_table(&tables))?;
    }
    Ok(())
}

fn compare(a: CompareArgs, out: &mut dyn Write) -> Result<()> {
    if a.cutoff == 0 {
        bail!("cutoff must be positive");
    }
    let (topics, qrels) = a.judgments.load()?;
    let runs = load_runs(&a.runs)?;
    let refs: Vec<&RunFile> = runs.iter().collect();
    let m = ComparisonMatrix::pairwise(&refs, &qrels, &topics, a.cutoff)?;
    write!(out, "{}", m.render())?;
    Ok(())
}

fn ablate(a: AblateArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = a.config.resolve()?;
    let collection = a.input.load(&cfg)?;
    for w in &collection.warnings {
        eprintln!("warning: {w}");
    }
    let (topics, qrels) = a.judgments.load()?;
    let mut tables = Vec::new();
    let mut runs = Vec::new();
    for (system, sources) in standard_runs() {
        let r = run_ablation(&collection, &sources, system, &topics, &qrels, &cfg, &to_usize(&a.cutoffs))?;
        if let Some(dir) = &a.runs_dir {
            fs::create_dir_all(dir)?;
            let p = dir.join(format!("{}.run", r.run.run_tag));
            fs::write(&p, write_run(&r.run)).with_context(|| format!("writing {}", p.display()))?;
        }
        tables.push(r.summary);
        runs.push(r.run);
    }
    write!(out, "{}", render_precision_table(&tables))?;
    let refs: Vec<&RunFile> = runs.iter().collect();
    let m = ComparisonMatrix::pairwise(&refs, &qrels, &topics, a.compare_cutoff)?;
    writeln!(out)?;
    write!(out, "{}", m.render())?;
    Ok(())
}

fn gen(a: GenArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = SynthConfig {
        persons: a.persons,
        projects: a.projects,
        docs: a.docs,
        topics: a.topics,
        structured_ratio: a.structured_ratio,
        name_omit_ratio: a.name_omit_ratio,
        experts_per_topic: a.experts_per_topic,
        pages_per_expert: a.pages_per_expert,
        group_size: a.group_size,
    };
    let synth = gen_synthetic(&cfg, a.seed)?;
    synth.write_to(&a.out)?;
    writeln!(
        out,
        "wrote {} documents, {} links, {} persons, {} topics to {}",
        synth.documents.len(),
        synth.links.len(),
        synth.org.persons.len(),
        synth.topics.len(),
        a.out.display()
    )?;
    Ok(())
}
