//! `fragrag`: corpus tools, model training, optimisation runs and evaluation.
//!
//! Exit status: 0 success, 1 usage or configuration error, 2 data error,
//! 3 internal invariant violation, 130 interrupted.

mod error;
mod manifest;

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use fragrag_chem::corpus::{parse_corpus, CorpusRecord};
use fragrag_chem::{morgan_fingerprint, parse_smiles, slice_arm_linker_arm};
use fragrag_core::config::Config;
use fragrag_core::metrics::{summarize, METRICS_HEADER};
use fragrag_core::optimizer::{Optimizer, Variant};
use fragrag_core::oracles::{Oracle, OracleSpec};
use fragrag_core::pipeline;
use fragrag_core::synth::{corpus_property, CorpusSynth};
use fragrag_core::vocab::FragmentVocabulary;
use fragrag_lm::{load_injection, save_injection, LanguageModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use error::{CliError, CliResult};
use manifest::{file_digest, sha256_hex, DatasetInfo, Manifest, HISTORY_FILE, MANIFEST_FILE, SCHEMA_VERSION, VOCAB_FILE};

#[derive(Parser)]
#[command(name = "fragrag", version, about = "Fragment-retrieval-augmented molecular optimization")]
struct Cli {
    /// Random seed for every stochastic step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for run outputs.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Slice each corpus molecule into arm, linker and arm.
    Decompose(DecomposeArgs),
    /// Build the initial fragment vocabulary from the labelled corpus.
    BuildVocab(BuildVocabArgs),
    /// Pretrain the backbone language model on SAFE strings.
    PretrainLm(PretrainArgs),
    /// Train the fragment injection module with the backbone frozen.
    TrainInjection(InjectionArgs),
    /// Run the optimisation loop against the configured oracle.
    Run(RunArgs),
    /// Compute metrics for one or more run manifests.
    Eval(EvalArgs),
    /// Write a synthetic drug-like corpus.
    SynthCorpus(SynthArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Corpus file (SMILES and property per line).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Use only the first N corpus records.
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Args)]
struct VocabArgs {
    /// Fragments kept per pool (arms, linkers).
    #[arg(long)]
    n_frag: Option<usize>,
    /// Similarity threshold for admitting fragments into the vocabulary.
    #[arg(long)]
    delta: Option<f64>,
    /// Smallest admissible fragment, in heavy atoms.
    #[arg(long)]
    frag_min_atoms: Option<usize>,
    /// Largest admissible fragment, in heavy atoms.
    #[arg(long)]
    frag_max_atoms: Option<usize>,
}

#[derive(Args)]
struct OracleArgs {
    /// Shortcut for a similarity-to-target oracle.
    #[arg(long)]
    target: Option<String>,
}

#[derive(Args)]
struct DecomposeArgs {
    input: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BuildVocabArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    vocab: VocabArgs,
    #[command(flatten)]
    oracle: OracleArgs,
    /// Output file; `<out-dir>/vocab.tsv` when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PretrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    oracle: OracleArgs,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    d_model: Option<usize>,
    #[arg(long)]
    n_layers: Option<usize>,
    #[arg(long)]
    n_heads: Option<usize>,
    #[arg(long)]
    context: Option<usize>,
    /// Checkpoint to write; `[lm] backbone` when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct InjectionArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    oracle: OracleArgs,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Backbone layer whose output feeds the injection module.
    #[arg(long)]
    layer_l: Option<usize>,
    /// Molecules used to build training examples.
    #[arg(long)]
    molecules: Option<usize>,
    /// Soft fragments per generation.
    #[arg(long)]
    k_soft: Option<usize>,
    /// Backbone checkpoint; `[lm] backbone` when absent.
    #[arg(long)]
    backbone: Option<PathBuf>,
    /// Checkpoint to write; `[lm] injection` when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    vocab: VocabArgs,
    #[command(flatten)]
    oracle: OracleArgs,
    /// Oracle calls allowed.
    #[arg(long)]
    budget: Option<usize>,
    /// full, no_soft (hard fragments and GA only) or random_lm (unconditional samples).
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    /// Soft fragments per generation.
    #[arg(long)]
    k_soft: Option<usize>,
    /// Backbone checkpoint; `[lm] backbone` when absent.
    #[arg(long)]
    backbone: Option<PathBuf>,
    /// Injection module checkpoint; `[lm] injection` when absent.
    #[arg(long)]
    injection: Option<PathBuf>,
    /// Identifier written to the manifest; `<variant>-s<seed>` when absent.
    #[arg(long)]
    run_id: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    /// Run manifests (or run directories containing `manifest.json`).
    #[arg(required = true)]
    manifests: Vec<PathBuf>,
    /// Output file; `<out-dir>/metrics.csv` when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Molecules to write.
    #[arg(long, default_value_t = 12000)]
    count: usize,
    /// SMILES to keep out of the corpus (repeatable).
    #[arg(long)]
    exclude: Vec<String>,
    /// Output file; standard output when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    match s.replace('-', "_").as_str() {
        "full" => Ok(Variant::Full),
        "no_soft" => Ok(Variant::NoSoft),
        "random_lm" => Ok(Variant::RandomLm),
        _ => Err(format!("unknown variant {s:?} (full, no_soft, random_lm)")),
    }
}

struct Ctx {
    seed: u64,
    out_dir: PathBuf,
    quiet: bool,
    config: Config,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn apply_data(&mut self, a: &DataArgs) {
        if let Some(p) = &a.corpus {
            self.config.data.corpus = p.clone();
        }
        if a.limit.is_some() {
            self.config.data.limit = a.limit;
        }
    }

    fn apply_vocab(&mut self, a: &VocabArgs) {
        let v = &mut self.config.vocab;
        set(&mut v.n_frag, a.n_frag);
        if a.delta.is_some() {
            v.delta = a.delta;
        }
        set(&mut v.frag_min_atoms, a.frag_min_atoms);
        set(&mut v.frag_max_atoms, a.frag_max_atoms);
    }

    fn apply_oracle(&mut self, a: &OracleArgs) {
        if let Some(t) = &a.target {
            self.config.oracle = Some(OracleSpec::Similarity { target: t.clone() });
        }
    }

    /// Corpus bytes, their hash, and the parsed records (after `limit`).
    fn corpus(&self) -> CliResult<(String, Vec<CorpusRecord>)> {
        let path = &self.config.data.corpus;
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let hash = sha256_hex(&bytes);
        let text = String::from_utf8(bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let mut records = parse_corpus(&text).map_err(|e| CliError::corpus(path, e))?;
        if let Some(n) = self.config.data.limit {
            records.truncate(n);
        }
        Ok((hash, records))
    }

    /// Labelled corpus with oracle targets removed, plus the number removed.
    fn dataset(&self, records: &[CorpusRecord]) -> CliResult<(Vec<(fragrag_chem::MolGraph, f64)>, usize)> {
        let holdout = pipeline::oracle_holdout(self.config.oracle.as_ref());
        let data = pipeline::label_dataset(records, self.config.oracle.as_ref(), &holdout)?;
        let dropped = records.len() - data.len();
        Ok((data, dropped))
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn require_file(path: &Path, what: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Data(format!("{what} checkpoint not found: {}", path.display())))
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn ensure_parent(path: &Path) -> CliResult<()> {
    match path.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(dir) => std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e)),
        None => Ok(()),
    }
}

fn emit(output: Option<&Path>, contents: &str) -> CliResult<()> {
    match output {
        Some(p) => write_file(p, contents),
        None => std::io::stdout()
            .write_all(contents.as_bytes())
            .map_err(|e| CliError::Data(format!("stdout: {e}"))),
    }
}

fn load_config(path: Option<&Path>) -> CliResult<Config> {
    match path {
        None => Ok(Config::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            Config::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        }
    }
}

fn decompose(ctx: &Ctx, a: &DecomposeArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&a.input).map_err(|e| CliError::io(&a.input, e))?;
    let records = parse_corpus(&text).map_err(|e| CliError::corpus(&a.input, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut out = String::new();
    let mut undecomposable = 0;
    for r in &records {
        match slice_arm_linker_arm(&r.graph, &mut rng) {
            Some(s) => {
                for f in s.fragments() {
                    out.push_str(&format!("{}\t{}\t{}\n", r.line, f.kind().as_str(), f.to_smiles()));
                }
            }
            None => undecomposable += 1,
        }
    }
    emit(a.output.as_deref(), &out)?;
    ctx.note(format!(
        "decomposed {} of {} molecules; {undecomposable} undecomposable",
        records.len() - undecomposable,
        records.len()
    ));
    Ok(())
}

fn build_vocab(ctx: &mut Ctx, a: &BuildVocabArgs) -> CliResult<()> {
    ctx.apply_data(&a.data);
    ctx.apply_vocab(&a.vocab);
    ctx.apply_oracle(&a.oracle);
    let (_, records) = ctx.corpus()?;
    let (dataset, _) = ctx.dataset(&records)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let vocab = FragmentVocabulary::build_initial(&dataset, ctx.config.vocab_config(), &mut rng)?;
    let path = a.output.clone().unwrap_or_else(|| ctx.out_dir.join(VOCAB_FILE));
    write_file(&path, &vocab.dump())?;
    ctx.note(format!(
        "{} arms, {} linkers -> {}",
        vocab.arms().len(),
        vocab.linkers().len(),
        path.display()
    ));
    Ok(())
}

fn pretrain(ctx: &mut Ctx, a: &PretrainArgs) -> CliResult<()> {
    ctx.apply_data(&a.data);
    ctx.apply_oracle(&a.oracle);
    let lm = &mut ctx.config.lm;
    set(&mut lm.epochs, a.epochs);
    set(&mut lm.lr, a.lr);
    set(&mut lm.batch_size, a.batch_size);
    set(&mut lm.d_model, a.d_model);
    set(&mut lm.n_layers, a.n_layers);
    set(&mut lm.n_heads, a.n_heads);
    set(&mut lm.context, a.context);
    let path = a.output.clone().unwrap_or_else(|| ctx.config.lm.backbone.clone());
    let (_, records) = ctx.corpus()?;
    let (dataset, _) = ctx.dataset(&records)?;
    let molecules: Vec<_> = dataset.into_iter().map(|(g, _)| g).collect();
    ctx.note(format!("pretraining on {} molecules", molecules.len()));
    let quiet = ctx.quiet;
    let (model, report) = pipeline::pretrain_lm(&molecules, &ctx.config.lm, ctx.seed, |e, l| {
        if !quiet {
            eprintln!("epoch {e} loss {l:.4}");
        }
    })?;
    if report.skipped > 0 {
        ctx.note(format!("{} texts longer than the context were skipped", report.skipped));
    }
    ensure_parent(&path)?;
    model.save(&path)?;
    ctx.note(format!("backbone -> {}", path.display()));
    Ok(())
}

fn train_injection(ctx: &mut Ctx, a: &InjectionArgs) -> CliResult<()> {
    ctx.apply_data(&a.data);
    ctx.apply_oracle(&a.oracle);
    let lm = &mut ctx.config.lm;
    set(&mut lm.injection_epochs, a.epochs);
    set(&mut lm.injection_lr, a.lr);
    set(&mut lm.injection_batch_size, a.batch_size);
    set(&mut lm.layer, a.layer_l);
    set(&mut lm.injection_molecules, a.molecules);
    set(&mut lm.k_soft, a.k_soft);
    set(&mut lm.backbone, a.backbone.clone());
    let path = a.output.clone().unwrap_or_else(|| ctx.config.lm.injection.clone());
    require_file(&ctx.config.lm.backbone, "backbone")?;
    let model = LanguageModel::load(&ctx.config.lm.backbone)?;
    let (_, records) = ctx.corpus()?;
    let (dataset, _) = ctx.dataset(&records)?;
    let molecules: Vec<_> = dataset
        .into_iter()
        .take(ctx.config.lm.injection_molecules)
        .map(|(g, _)| g)
        .collect();
    let (examples, _) = pipeline::injection_examples(&model, &molecules, ctx.config.lm.k_soft, 0.0, ctx.seed)?;
    ctx.note(format!("{} injection examples from {} molecules", examples.len(), molecules.len()));
    let quiet = ctx.quiet;
    let (fi, _) = pipeline::train_injection_model(&model, &examples, &ctx.config.lm, ctx.seed.wrapping_add(1), |e, l| {
        if !quiet {
            eprintln!("epoch {e} loss {l:.4}");
        }
    })?;
    ensure_parent(&path)?;
    save_injection(&fi, &path)?;
    ctx.note(format!("injection module -> {}", path.display()));
    Ok(())
}

fn run(ctx: &mut Ctx, a: &RunArgs) -> CliResult<()> {
    ctx.apply_data(&a.data);
    ctx.apply_vocab(&a.vocab);
    ctx.apply_oracle(&a.oracle);
    set(&mut ctx.config.run.budget, a.budget);
    set(&mut ctx.config.run.variant, a.variant);
    set(&mut ctx.config.lm.k_soft, a.k_soft);
    set(&mut ctx.config.lm.backbone, a.backbone.clone());
    set(&mut ctx.config.lm.injection, a.injection.clone());
    let config = ctx.config.clone();
    let run_config = config.run_config();
    run_config.validate()?;
    let spec = config
        .oracle
        .clone()
        .ok_or_else(|| CliError::Usage("run needs an [oracle] section or --target".into()))?;
    let oracle = Oracle::new(spec)?;

    let variant = config.run.variant;
    require_file(&config.lm.backbone, "backbone")?;
    let backbone_digest = file_digest(&config.lm.backbone)?;
    let model = LanguageModel::load(&config.lm.backbone)?;
    let (injection, injection_digest) = if variant == Variant::Full {
        require_file(&config.lm.injection, "injection")?;
        (Some(load_injection(&config.lm.injection)?), Some(file_digest(&config.lm.injection)?))
    } else {
        (None, None)
    };

    let (hash, records) = ctx.corpus()?;
    let (dataset, held_out) = ctx.dataset(&records)?;
    let run_id = a
        .run_id
        .clone()
        .unwrap_or_else(|| format!("{}-s{}", variant_name(variant), ctx.seed));

    let stop = Arc::new(AtomicBool::new(false));
    {
        let stop = Arc::clone(&stop);
        // a second handler registration (only possible in-process) is harmless
        let _ = ctrlc::set_handler(move || stop.store(true, Ordering::SeqCst));
    }

    ctx.note(format!("{run_id}: budget {} on {} corpus molecules", run_config.budget, dataset.len()));
    let mut opt = Optimizer::new(run_config, &dataset, &oracle, Some(&model), injection.as_ref(), ctx.seed)?;
    opt.run(Some(&stop))?;
    let state = opt.into_state();

    std::fs::create_dir_all(&ctx.out_dir).map_err(|e| CliError::io(&ctx.out_dir, e))?;
    write_file(&ctx.out_dir.join(HISTORY_FILE), &state.history_csv())?;
    write_file(&ctx.out_dir.join(VOCAB_FILE), &state.vocab.dump())?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        run_id,
        complete: !state.interrupted,
        stalled: state.stalled,
        seed: ctx.seed,
        config,
        dataset: DatasetInfo {
            path: ctx.config.data.corpus.clone(),
            sha256: hash,
            records: records.len(),
            held_out,
        },
        backbone: Some(backbone_digest),
        injection: injection_digest,
        oracle_calls: state.calls,
        history_csv: HISTORY_FILE.into(),
        vocabulary: VOCAB_FILE.into(),
        history: state.history,
    };
    write_file(&ctx.out_dir.join(MANIFEST_FILE), &manifest.to_json())?;
    if state.stalled {
        ctx.note("stopped early: no new molecules were being produced");
    }
    ctx.note(format!(
        "{} oracle calls, best {:.4} -> {}",
        manifest.oracle_calls,
        manifest.history.iter().map(|h| h.y).fold(f64::NAN, f64::max),
        ctx.out_dir.display()
    ));
    if state.interrupted {
        return Err(CliError::Interrupted);
    }
    Ok(())
}

fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::Full => "full",
        Variant::NoSoft => "no_soft",
        Variant::RandomLm => "random_lm",
    }
}

fn eval(ctx: &Ctx, a: &EvalArgs) -> CliResult<()> {
    let mut out = format!("{METRICS_HEADER}\n");
    for p in &a.manifests {
        let path = if p.is_dir() { p.join(MANIFEST_FILE) } else { p.clone() };
        let m = Manifest::load(&path)?;
        let sub = Ctx {
            seed: m.seed,
            out_dir: ctx.out_dir.clone(),
            quiet: true,
            config: m.config.clone(),
        };
        let (hash, records) = sub.corpus()?;
        if hash != m.dataset.sha256 {
            return Err(CliError::Data(format!(
                "{}: corpus {} changed since the run",
                path.display(),
                m.config.data.corpus.display()
            )));
        }
        let holdout = pipeline::oracle_holdout(m.config.oracle.as_ref());
        let train: Vec<_> = pipeline::label_dataset(&records, None, &holdout)?
            .iter()
            .map(|(g, _)| morgan_fingerprint(g))
            .collect();
        let mut ys = Vec::with_capacity(m.history.len());
        let mut keys = Vec::with_capacity(m.history.len());
        let mut fps = Vec::with_capacity(m.history.len());
        for h in &m.history {
            let g = parse_smiles(&h.smiles)
                .map_err(|e| CliError::Data(format!("{}: call {}: {e}", path.display(), h.call)))?;
            ys.push(h.y);
            keys.push(h.key.clone());
            fps.push(morgan_fingerprint(&g));
        }
        let metrics = summarize(&ys, &keys, &fps, &train, m.config.run.budget)?;
        if !m.complete {
            ctx.note(format!("{}: run is incomplete", path.display()));
        }
        out.push_str(&metrics.csv_row(&m.run_id));
        out.push('\n');
    }
    let path = a.output.clone().unwrap_or_else(|| ctx.out_dir.join("metrics.csv"));
    write_file(&path, &out)?;
    ctx.note(format!("metrics -> {}", path.display()));
    Ok(())
}

fn synth_corpus(ctx: &Ctx, a: &SynthArgs) -> CliResult<()> {
    let mut exclude = HashSet::new();
    for s in &a.exclude {
        let g = parse_smiles(s).map_err(|e| CliError::Usage(format!("--exclude {s}: {e}")))?;
        exclude.insert(fragrag_chem::canonical_key(&g));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mols = CorpusSynth::new().generate(a.count, &exclude, &mut rng);
    let mut cmd = format!("fragrag synth-corpus --count {} --seed {}", a.count, ctx.seed);
    for s in &a.exclude {
        cmd.push_str(&format!(" --exclude {s}"));
    }
    let mut out = format!("# synthetic drug-like corpus: {cmd}\n# SMILES\tproperty\n");
    for (key, g) in &mols {
        out.push_str(&format!("{key}\t{:.4}\n", corpus_property(g)));
    }
    emit(a.output.as_deref(), &out)?;
    if mols.len() < a.count {
        ctx.note(format!("only {} distinct molecules generated", mols.len()));
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let config = load_config(cli.config.as_deref())?;
    let mut ctx = Ctx {
        seed: cli.seed,
        out_dir: cli.out_dir,
        quiet: cli.quiet,
        config,
    };
    match &cli.command {
        Command::Decompose(a) => decompose(&ctx, a),
        Command::BuildVocab(a) => build_vocab(&mut ctx, a),
        Command::PretrainLm(a) => pretrain(&mut ctx, a),
        Command::TrainInjection(a) => train_injection(&mut ctx, a),
        Command::Run(a) => run(&mut ctx, a),
        Command::Eval(a) => eval(&ctx, a),
        Command::SynthCorpus(a) => synth_corpus(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fragrag: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variants_parse_with_either_separator() {
        assert_eq!(parse_variant("no-soft"), Ok(Variant::NoSoft));
        assert_eq!(parse_variant("random_lm"), Ok(Variant::RandomLm));
        assert!(parse_variant("best").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
