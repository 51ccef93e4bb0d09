//! The `tspanytime` command line.
//!
//! Progress goes to stdout as `key=value` lines; diagnostics go to stderr.
//! Exit codes: 0 success, 1 internal error, 2 configuration error, 3 data
//! error.

mod config;

use std::collections::{BTreeMap, HashSet};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::analysis::{analyze, write_csvs, ReferenceRegistry};
use crate::error::{Error, Result};
use crate::generators::GeneratedInstance;
use crate::geometry::{tsplib, Instance};
use crate::runner::{self, ExperimentPlan, RunRecord, RunStatus};
use crate::solvers::{held_karp_exact, TimeMode, HELD_KARP_MAX_N};

pub use config::{
    load as load_config, ExportSection, GenerateSection, LoadedConfig, PipelineConfig,
    ReferencesSection,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "tspanytime",
    version,
    about = "Anytime benchmarking for Euclidean TSP solvers"
)]
pub struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Overrides the base seed of generation and plan.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the plan's clock.
    #[arg(long, global = true)]
    pub time_mode: Option<TimeMode>,
    /// Output root; relative paths in the config resolve against it.
    #[arg(long, global = true, env = "TSPANYTIME_OUT")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the instances of the `generate` section.
    Generate,
    /// Run (or resume) the experiment plan.
    Solve,
    /// Write success, hitting-time and curve tables for the plan.
    Analyze,
    /// Inspect or update the persistent reference registry.
    Registry {
        #[command(subcommand)]
        action: RegistryAction,
    },
    /// Check instance files and trajectory stores.
    Validate {
        /// `.tsp` files, `.jsonl` stores, or directories holding them.
        paths: Vec<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum RegistryAction {
    /// Print every reference.
    Show,
    /// Fold the plan's stored runs (and exact optima) into the registry.
    Update,
}

/// Maps an error to the process exit code.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) | Error::OutOfRange { .. } => 2,
        Error::GenerationFailure(_) => 1,
        _ => 3,
    }
}

/// Parses `args` and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

struct Context {
    root: PathBuf,
    loaded: Option<LoadedConfig>,
}

impl Context {
    fn config(&self) -> Result<&LoadedConfig> {
        self.loaded
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("this command needs --config".into()))
    }

    fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_owned()
        } else {
            self.root.join(p)
        }
    }

    fn plan(&self) -> Result<ExperimentPlan> {
        self.config()?
            .config
            .plan
            .clone()
            .ok_or_else(|| Error::InvalidConfig("config has no [plan] section".into()))
    }

    fn plan_dir(&self, plan: &ExperimentPlan) -> PathBuf {
        self.root.join("plans").join(&plan.id)
    }

    fn provenance(&self) -> Result<String> {
        Ok(format!(
            "config_hash={} version={VERSION}",
            self.config()?.hash
        ))
    }

    /// Instance paths of the plan, defaulting to the generation directory.
    fn instance_paths(&self, plan: &ExperimentPlan) -> Result<Vec<PathBuf>> {
        if !plan.instances.is_empty() {
            return Ok(plan.instances.iter().map(|p| self.path(p)).collect());
        }
        match &self.config()?.config.generate {
            Some(g) => Ok(vec![self.path(&g.dir)]),
            None => Err(Error::InvalidConfig(
                "plan lists no instances and there is no [generate] section".into(),
            )),
        }
    }

    fn load_plan_instances(&self, plan: &ExperimentPlan) -> Result<Vec<Instance>> {
        let paths = self.instance_paths(plan)?;
        let instances = runner::load_instances(&paths)
            .map_err(|e| Error::InvalidConfig(format!("loading instances: {e}")))?;
        if instances.is_empty() {
            return Err(Error::InvalidConfig("plan resolves to no instances".into()));
        }
        Ok(instances)
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let mut loaded = cli.config.as_deref().map(load_config).transpose()?;
    if let Some(l) = loaded.as_mut() {
        let cfg = &mut l.config;
        if let Some(seed) = cli.seed {
            if let Some(g) = cfg.generate.as_mut() {
                g.seed = seed;
            }
            if let Some(p) = cfg.plan.as_mut() {
                p.base_seed = seed;
            }
        }
        if let Some(p) = cfg.plan.as_mut() {
            if let Some(j) = cli.jobs {
                p.jobs = j;
            }
            if let Some(m) = cli.time_mode {
                p.time_mode = m;
            }
        }
    }
    if let Some(j) = cli.jobs {
        // only the first call can configure the global pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global();
    }
    let ctx = Context {
        root: cli.out.clone().unwrap_or_else(|| PathBuf::from(".")),
        loaded,
    };
    match &cli.command {
        Command::Generate => cmd_generate(&ctx),
        Command::Solve => cmd_solve(&ctx).map(|_| ()),
        Command::Analyze => cmd_analyze(&ctx),
        Command::Registry { action } => cmd_registry(&ctx, action),
        Command::Validate { paths } => cmd_validate(paths),
    }
}

fn cmd_generate(ctx: &Context) -> Result<()> {
    let gen = ctx
        .config()?
        .config
        .generate
        .clone()
        .ok_or_else(|| Error::InvalidConfig("config has no [generate] section".into()))?;
    let dir = ctx.path(&gen.dir);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut all: Vec<GeneratedInstance> = Vec::new();
    for job in &gen.jobs {
        all.extend(job.run(gen.seed)?);
    }
    let mut manifest = Vec::new();
    for g in &all {
        let (tsp, _) = g.write(&dir)?;
        println!(
            "event=generated id={} group={} n={} seed={} file={}",
            g.metadata.id,
            g.metadata.group,
            g.instance.len(),
            g.metadata.seed,
            tsp.display()
        );
        manifest.push(serde_json::json!({
            "id": g.metadata.id,
            "group": g.metadata.group,
            "seed": g.metadata.seed,
            "generator": g.metadata.generator,
        }));
    }
    let doc = serde_json::json!({
        "config_hash": ctx.config()?.hash,
        "version": VERSION,
        "instances": manifest,
    });
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")
        .map_err(|e| Error::io(&path, e))?;
    println!("event=done command=generate instances={}", all.len());
    Ok(())
}

fn cmd_solve(ctx: &Context) -> Result<Vec<RunRecord>> {
    let plan = ctx.plan()?;
    let instances = ctx.load_plan_instances(&plan)?;
    let dir = ctx.plan_dir(&plan);
    let records = runner::run_experiment_with(&plan, &instances, &dir, |r| {
        println!(
            "event=run instance={} solver={} run={} status={} final_len={} events={}",
            r.instance,
            r.solver,
            r.run,
            match r.status {
                RunStatus::Completed => "completed",
                RunStatus::Crashed => "crashed",
            },
            r.final_len
                .map_or_else(|| "none".to_owned(), |l| l.to_string()),
            r.events.len()
        );
    })?;
    println!(
        "event=done command=solve plan={} records={} store={}",
        plan.id,
        records.len(),
        dir.join(runner::STORE_FILE).display()
    );
    Ok(records)
}

fn read_plan_store(ctx: &Context, plan: &ExperimentPlan) -> Result<Vec<RunRecord>> {
    let path = ctx.plan_dir(plan).join(runner::STORE_FILE);
    if !path.exists() {
        return Err(Error::InvalidInput(format!(
            "no trajectory store at {}",
            path.display()
        )));
    }
    runner::read_store(&path)
}

/// Exact optima for the small instances of the plan, computed in parallel.
fn exact_references(
    ctx: &Context,
    plan: &ExperimentPlan,
    ids: &HashSet<&str>,
) -> Result<BTreeMap<String, f64>> {
    let instances = ctx.load_plan_instances(plan)?;
    instances
        .par_iter()
        .filter(|i| i.len() <= HELD_KARP_MAX_N && ids.contains(i.id()))
        .map(|i| Ok((i.id().to_owned(), held_karp_exact(i)?.1)))
        .collect()
}

fn derive_registry(
    ctx: &Context,
    plan: &ExperimentPlan,
    records: &[RunRecord],
    exact: bool,
) -> Result<ReferenceRegistry> {
    let mut reg = ReferenceRegistry::new();
    if exact && records.iter().any(|r| r.n <= HELD_KARP_MAX_N) {
        let ids: HashSet<&str> = records.iter().map(|r| r.instance.as_str()).collect();
        for (id, len) in exact_references(ctx, plan, &ids)? {
            reg.set_exact(&id, len);
        }
    }
    for r in records.iter().filter(|r| r.status == RunStatus::Completed) {
        if let Some(l) = r.final_len {
            reg.observe(&r.instance, l, &r.plan);
        }
    }
    Ok(reg)
}

fn cmd_analyze(ctx: &Context) -> Result<()> {
    let loaded = ctx.config()?;
    let plan = ctx.plan()?;
    let records = read_plan_store(ctx, &plan)?;
    let refs = &loaded.config.references;
    let registry = match &refs.registry {
        Some(p) => {
            let p = ctx.path(p);
            if p.exists() {
                ReferenceRegistry::load(&p)?
            } else {
                ReferenceRegistry::new()
            }
        }
        None => derive_registry(ctx, &plan, &records, refs.exact)?,
    };
    let report = analyze(&records, &registry, &loaded.config.analyze)?;
    let out = ctx.path(&loaded.config.export.dir).join(&plan.id);
    let files = write_csvs(&report, &out, &ctx.provenance()?)?;
    let reg_path = out.join("registry.json");
    registry.save(&reg_path)?;
    for f in files.iter().chain([&reg_path]) {
        println!("event=wrote file={}", f.display());
    }
    println!(
        "event=done command=analyze plan={} success_rows={} fht_rows={} curve_files={}",
        plan.id,
        report.success.len(),
        report.hitting.len(),
        report.curves.len()
    );
    Ok(())
}

fn registry_path(ctx: &Context) -> Result<PathBuf> {
    Ok(ctx.path(
        ctx.config()?
            .config
            .references
            .registry
            .as_deref()
            .unwrap_or(Path::new("registry.json")),
    ))
}

fn cmd_registry(ctx: &Context, action: &RegistryAction) -> Result<()> {
    let path = registry_path(ctx)?;
    let mut reg = if path.exists() {
        ReferenceRegistry::load(&path)?
    } else {
        ReferenceRegistry::new()
    };
    match action {
        RegistryAction::Show => {
            for (id, e) in reg.entries() {
                println!(
                    "instance={id} ref={} source={} revision={} plans={}",
                    e.length,
                    serde_json::to_value(e.source)?.as_str().unwrap_or_default(),
                    e.revision,
                    e.provenance.join("|")
                );
            }
            println!(
                "event=done command=registry revision={} entries={}",
                reg.revision(),
                reg.len()
            );
        }
        RegistryAction::Update => {
            let plan = ctx.plan()?;
            let records = read_plan_store(ctx, &plan)?;
            let before = reg.revision();
            if ctx.config()?.config.references.exact {
                let ids: HashSet<&str> = records
                    .iter()
                    .filter(|r| {
                        reg.get(&r.instance)
                            .is_none_or(|e| e.source != crate::analysis::RefSource::ExactDp)
                    })
                    .map(|r| r.instance.as_str())
                    .collect();
                if records
                    .iter()
                    .any(|r| r.n <= HELD_KARP_MAX_N && ids.contains(r.instance.as_str()))
                {
                    for (id, len) in exact_references(ctx, &plan, &ids)? {
                        reg.set_exact(&id, len);
                    }
                }
            }
            for r in records.iter().filter(|r| r.status == RunStatus::Completed) {
                if let Some(l) = r.final_len {
                    reg.observe(&r.instance, l, &r.plan);
                }
            }
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            reg.save(&path)?;
            println!(
                "event=done command=registry revision={} changes={} entries={} stale={}",
                reg.revision(),
                reg.revision() - before,
                reg.len(),
                reg.is_stale(before)
            );
        }
    }
    Ok(())
}

fn lint_store(path: &Path) -> Result<Vec<String>> {
    let records = runner::read_store(path)?;
    let mut problems = Vec::new();
    let mut keys = HashSet::new();
    for r in &records {
        let key = format!("{}/{}/{}", r.instance, r.solver, r.run);
        if !keys.insert(key.clone()) {
            problems.push(format!("duplicate key {key}"));
        }
        if let Err(e) = r.trajectory().check_monotone() {
            problems.push(format!("{key}: {e}"));
        }
        if r.final_len != r.events.last().map(|e| e.length) {
            problems.push(format!("{key}: final_len disagrees with last event"));
        }
        if r.events
            .iter()
            .any(|e| e.elapsed_ms > r.cutoff_ms + r.overshoot_ms)
        {
            problems.push(format!("{key}: event after cutoff"));
        }
    }
    Ok(problems)
}

fn lint_instance(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let inst = tsplib::parse(&text, path)?;
    Ok(inst
        .duplicate_points()
        .into_iter()
        .map(|i| format!("city {i} duplicates an earlier point"))
        .collect())
}

fn cmd_validate(paths: &[PathBuf]) -> Result<()> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "tsp" || x == "jsonl"))
                .collect();
            inner.sort();
            files.extend(inner);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(Error::InvalidConfig("validate: nothing to check".into()));
    }
    let mut bad = 0;
    for f in &files {
        let outcome = if f.extension().is_some_and(|x| x == "jsonl") {
            lint_store(f)
        } else {
            lint_instance(f)
        };
        let problems = outcome.unwrap_or_else(|e| vec![e.to_string()]);
        if problems.is_empty() {
            println!("file={} status=ok", f.display());
        } else {
            bad += 1;
            for p in problems {
                println!("file={} status=invalid problem={p:?}", f.display());
            }
        }
    }
    println!(
        "event=done command=validate files={} invalid={bad}",
        files.len()
    );
    if bad > 0 {
        return Err(Error::InvalidInput(format!(
            "{bad} of {} files failed validation",
            files.len()
        )));
    }
    Ok(())
}
