//! The `pdm` command line.
//!
//! Every command writes data to `out` and diagnostics to `err`, and returns
//! the process exit code. The codes are stable:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success, all checked properties hold |
//! | 1 | parse, I/O or usage error |
//! | 2 | model validation error |
//! | 3 | replay divergence |
//! | 4 | property violation |
//! | 5 | verdict unknown because a bound was hit |
//! | 6 | export threshold exceeded |
//!
//! A model argument is a path to a `.pdm` file, or the name of a bundled
//! model when no such file exists.

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use paradigm::bundled::{self, prepare_migration, LoadError};
use paradigm::dot::{phases_dot, statespace_dot, std_dot, DotError, DEFAULT_NODE_LIMIT};
use paradigm::dsl::{parse_model, parse_properties, Pred, PropertyExpr, SourceModel};
use paradigm::engine::{Chooser, Engine, EngineError, Policy, StepLabel, Successor, Trace};
use paradigm::evolution::{McPalSkeleton};
use paradigm::explorer::{explore_with, shortest_trace_to, Bounds, Checks, Explorer};
use paradigm::{Configuration, Diagnostic, StdModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_VIOLATION: i32 = 4;
pub const EXIT_UNKNOWN: i32 = 5;
pub const EXIT_TOO_LARGE: i32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DotKind {
    Std,
    Phases,
    Statespace,
}

#[derive(Debug, Parser)]
#[command(name = "pdm", version, about = "Validate, simulate and model-check Paradigm coordination models")]
pub struct Cli {
    /// Output format for data written to standard output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct ModelArgs {
    /// Model file, or the name of a bundled model.
    pub model: String,
    /// Weave McPal into the model and load this migration fragment.
    #[arg(long)]
    pub fragment: Option<PathBuf>,
    /// Let claimed manager steps also fire as plain detailed steps.
    #[arg(long)]
    pub permissive: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a model.
    Validate {
        model: String,
    },
    /// Run the model and write a JSON-lines trace.
    Simulate {
        #[command(flatten)]
        input: ModelArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// Replay a recorded trace instead of choosing steps.
        #[arg(long, conflicts_with = "interactive")]
        script: Option<PathBuf>,
        /// Choose each step from a numbered list read on standard input.
        #[arg(long)]
        interactive: bool,
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Explore the state space and check properties.
    Explore {
        #[command(flatten)]
        input: ModelArgs,
        /// Property file; bundled models default to their own.
        #[arg(long)]
        props: Option<PathBuf>,
        #[arg(long, default_value_t = paradigm::explorer::DEFAULT_MAX_STATES)]
        max_states: usize,
        #[arg(long, default_value_t = paradigm::explorer::DEFAULT_MAX_DEPTH)]
        max_depth: usize,
        #[arg(long)]
        report_out: Option<PathBuf>,
        /// Check bounded progress of every component with this bound.
        #[arg(long, value_name = "K")]
        check_progress: Option<usize>,
        /// Check that the loaded migration completes at this model version.
        #[arg(long, value_name = "VERSION")]
        check_termination: Option<u64>,
        /// Directory for counterexample traces.
        #[arg(long)]
        cex_dir: Option<PathBuf>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Narrate a bundled scenario step by step.
    Demo {
        name: String,
        /// Steps for scenarios without a migration.
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Write Graphviz DOT.
    ExportDot {
        #[command(flatten)]
        input: ModelArgs,
        #[arg(long, value_enum, default_value_t = DotKind::Std)]
        what: DotKind,
        #[arg(long)]
        component: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Largest state space exported.
        #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
        limit: usize,
    },
}

/// Standard streams of one invocation.
pub struct Io<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
    pub input: &'a mut dyn BufRead,
}

struct Ctx<'a, 'b> {
    io: &'b mut Io<'a>,
    format: Format,
}

/// A command failure carrying its exit code.
struct Fail(i32);

type Res<T = ()> = Result<T, Fail>;

macro_rules! say {
    ($w:expr, $($arg:tt)*) => {{
        let _ = writeln!($w, $($arg)*);
    }};
}

impl Ctx<'_, '_> {
    fn error(&mut self, code: i32, msg: impl std::fmt::Display) -> Fail {
        say!(self.io.err, "error: {msg}");
        Fail(code)
    }

    fn diagnostics(&mut self, source: &str, diags: &[Diagnostic]) {
        for d in diags {
            match self.format {
                Format::Text => say!(self.io.err, "{source}:{d}"),
                Format::Json => say!(self.io.err, "{}", serde_json::to_string(d).unwrap_or_default()),
            }
        }
    }

    fn write_file(&mut self, path: &Path, text: &str) -> Res {
        fs::write(path, text).map_err(|e| self.error(EXIT_USAGE, format!("cannot write {}: {e}", path.display())))
    }

    fn read_file(&mut self, path: &Path) -> Res<String> {
        fs::read_to_string(path).map_err(|e| self.error(EXIT_USAGE, format!("cannot read {}: {e}", path.display())))
    }

    fn emit(&mut self, text: &str) {
        let _ = self.io.out.write_all(text.as_bytes());
    }
}

/// A model ready to run, from a file or the bundle.
struct Input {
    name: String,
    model: Arc<StdModel>,
    config: Configuration,
    properties: Vec<PropertyExpr>,
    engine: Engine,
}

fn load_error(ctx: &mut Ctx, e: LoadError) -> Fail {
    let code = match &e {
        LoadError::Parse { .. } => EXIT_USAGE,
        LoadError::Invalid { .. } | LoadError::Evolution { .. } => EXIT_INVALID,
    };
    let name = match &e {
        LoadError::Parse { name, .. } | LoadError::Invalid { name, .. } | LoadError::Evolution { name, .. } => {
            name.clone()
        }
    };
    ctx.diagnostics(&name, e.diagnostics());
    ctx.error(code, e)
}

fn load(ctx: &mut Ctx, args: &ModelArgs) -> Res<Input> {
    let engine = if args.permissive { Engine::permissive() } else { Engine::default() };
    let path = Path::new(&args.model);
    if !path.exists() {
        if let Some(b) = bundled::find(&args.model) {
            if args.fragment.is_none() {
                let l = b.load().map_err(|e| load_error(ctx, e))?;
                return Ok(Input {
                    name: b.name.to_string(),
                    model: l.model,
                    config: l.config,
                    properties: l.properties,
                    engine,
                });
            }
            return load_text(ctx, b.name, b.source, args, engine);
        }
    }
    let text = ctx.read_file(path)?;
    load_text(ctx, &args.model, &text, args, engine)
}

fn load_text(ctx: &mut Ctx, name: &str, text: &str, args: &ModelArgs, engine: Engine) -> Res<Input> {
    let parsed = bundled::parse_valid(name, text).map_err(|e| load_error(ctx, e))?;
    let (model, config) = match &args.fragment {
        None => {
            let config = parsed.model.initial_configuration();
            (parsed.model, config)
        }
        Some(frag) => {
            let ftext = ctx.read_file(frag)?;
            prepare_migration(name, &parsed, &ftext).map_err(|e| load_error(ctx, e))?
        }
    };
    Ok(Input {
        name: name.to_string(),
        model: Arc::new(model),
        config,
        properties: Vec::new(),
        engine,
    })
}

pub fn run(cli: Cli, io: &mut Io) -> i32 {
    let mut ctx = Ctx { io, format: cli.format };
    let result = match cli.command {
        Command::Validate { model } => cmd_validate(&mut ctx, &model),
        Command::Simulate { input, seed, steps, script, interactive, trace_out } => {
            cmd_simulate(&mut ctx, &input, seed, steps, script.as_deref(), interactive, trace_out.as_deref())
        }
        Command::Explore {
            input,
            props,
            max_states,
            max_depth,
            report_out,
            check_progress,
            check_termination,
            cex_dir,
            threads,
        } => {
            let opts = ExploreOpts {
                props,
                bounds: Bounds { max_states, max_depth },
                report_out,
                checks: Checks { termination: check_termination, progress: check_progress },
                cex_dir,
                threads,
            };
            cmd_explore(&mut ctx, &input, &opts)
        }
        Command::Demo { name, steps, seed } => cmd_demo(&mut ctx, &name, steps, seed),
        Command::ExportDot { input, what, component, out, limit } => {
            cmd_export_dot(&mut ctx, &input, what, component.as_deref(), out.as_deref(), limit)
        }
    };
    match result {
        Ok(code) => code,
        Err(Fail(code)) => code,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_args<I, S>(args: I, io: &mut Io) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, io),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = io.err.write_all(text.as_bytes());
            } else {
                let _ = io.out.write_all(text.as_bytes());
            }
            code
        }
    }
}

// ---- validate ----

fn cmd_validate(ctx: &mut Ctx, model: &str) -> Res<i32> {
    let path = Path::new(model);
    let (name, text) = match (path.exists(), bundled::find(model)) {
        (false, Some(b)) => (b.name.to_string(), b.source.to_string()),
        _ => (model.to_string(), ctx.read_file(path)?),
    };
    let (code, diags, summary) = match parse_model(&SourceModel::new(name.as_str(), text.as_str())) {
        Err(diags) => (EXIT_USAGE, diags, None),
        Ok(p) if !p.is_valid() => (EXIT_INVALID, p.diagnostics, None),
        Ok(p) => (EXIT_OK, Vec::new(), Some((p.model.components.len(), p.model.rules.len()))),
    };
    ctx.diagnostics(&name, &diags);
    match ctx.format {
        Format::Text => match summary {
            Some((c, r)) => say!(ctx.io.out, "{name}: ok ({c} components, {r} rules)"),
            None => say!(ctx.io.err, "{name}: {} problem(s)", diags.len()),
        },
        Format::Json => say!(
            ctx.io.out,
            "{}",
            json!({ "model": name, "valid": code == EXIT_OK, "diagnostics": diags })
        ),
    }
    Ok(code)
}

// ---- simulate ----

/// Reads successor choices from standard input.
struct LinePrompt<'a, 'b> {
    io: &'b mut Io<'a>,
}

impl Chooser for LinePrompt<'_, '_> {
    fn choose(&mut self, index: usize, config: &Configuration, options: &[Successor]) -> Option<usize> {
        let states: Vec<String> = config.detailed.iter().map(|(c, s)| format!("{c}={s}")).collect();
        say!(self.io.err, "step {index}: {}", states.join(" "));
        for (i, s) in options.iter().enumerate() {
            say!(self.io.err, "  [{i}] {}", s.label);
        }
        loop {
            let _ = write!(self.io.err, "choice> ");
            let _ = self.io.err.flush();
            let mut line = String::new();
            match self.io.input.read_line(&mut line) {
                Ok(0) | Err(_) => return None,
                Ok(_) => {}
            }
            let line = line.trim();
            if line.is_empty() || line == "q" {
                return None;
            }
            match line.parse::<usize>() {
                Ok(n) if n < options.len() => return Some(n),
                _ => say!(self.io.err, "enter a number below {}, or q", options.len()),
            }
        }
    }
}

fn cmd_simulate(
    ctx: &mut Ctx,
    args: &ModelArgs,
    seed: u64,
    steps: usize,
    script: Option<&Path>,
    interactive: bool,
    trace_out: Option<&Path>,
) -> Res<i32> {
    let input = load(ctx, args)?;
    let result = if let Some(path) = script {
        let text = ctx.read_file(path)?;
        let trace = Trace::from_jsonl(&text).map_err(|e| ctx.error(EXIT_USAGE, e))?;
        if trace.initial != input.config {
            return Err(ctx.error(EXIT_DIVERGENCE, "recorded trace does not start at the model's initial configuration"));
        }
        input.engine.replay(&input.model, &trace)
    } else if interactive {
        let mut prompt = LinePrompt { io: ctx.io };
        input.engine.run(&input.model, &input.config, Policy::Interactive(&mut prompt), steps)
    } else {
        input.engine.run(&input.model, &input.config, Policy::Seeded(seed), steps)
    };
    let run = match result {
        Ok(run) => run,
        Err(e @ EngineError::ReplayDivergence { .. }) => return Err(ctx.error(EXIT_DIVERGENCE, e)),
        Err(e) => return Err(ctx.error(EXIT_USAGE, e)),
    };
    let text = run.trace.to_jsonl();
    match trace_out {
        Some(path) => {
            ctx.write_file(path, &text)?;
            say!(ctx.io.err, "{}: {} step(s) written to {}", input.name, run.trace.len(), path.display());
        }
        None => ctx.emit(&text),
    }
    Ok(EXIT_OK)
}

// ---- explore ----

struct ExploreOpts {
    props: Option<PathBuf>,
    bounds: Bounds,
    report_out: Option<PathBuf>,
    checks: Checks,
    cex_dir: Option<PathBuf>,
    threads: usize,
}

fn cmd_explore(ctx: &mut Ctx, args: &ModelArgs, opts: &ExploreOpts) -> Res<i32> {
    let mut input = load(ctx, args)?;
    if let Some(path) = &opts.props {
        let text = ctx.read_file(path)?;
        input.properties = parse_properties(&text).map_err(|diags| {
            ctx.diagnostics(&path.display().to_string(), &diags);
            Fail(EXIT_USAGE)
        })?;
    }
    let explorer = Explorer { bounds: opts.bounds, threads: opts.threads, engine: input.engine };
    let report = explore_with(&explorer, &input.model, &input.config, &input.properties, &opts.checks);
    let json = report.to_json();
    if let Some(path) = &opts.report_out {
        ctx.write_file(path, &format!("{json}\n"))?;
    }
    if let Some(dir) = &opts.cex_dir {
        fs::create_dir_all(dir).map_err(|e| ctx.error(EXIT_USAGE, format!("cannot create {}: {e}", dir.display())))?;
        for (i, v) in report.violations.iter().enumerate().filter(|(_, v)| !v.trace.is_empty()) {
            let text: String = v.trace.iter().map(|l| format!("{l}\n")).collect();
            ctx.write_file(&dir.join(format!("cex-{i}.jsonl")), &text)?;
        }
    }
    match ctx.format {
        Format::Json => say!(ctx.io.out, "{json}"),
        Format::Text => {
            let out = &mut *ctx.io.out;
            say!(out, "{}: {} states, {} transitions, versions {:?}", input.name, report.states_visited, report.transitions_visited, report.model_versions_seen);
            if report.bounds.max_states_hit || report.bounds.max_depth_hit {
                say!(out, "bounds hit: maxStates={} maxDepth={}", report.bounds.max_states_hit, report.bounds.max_depth_hit);
            }
            if report.inconsistent_states > 0 {
                say!(out, "inconsistent states: {}", report.inconsistent_states);
            }
            for p in &report.properties {
                match p.max_depth {
                    Some(d) => say!(out, "{:<9} {} (max depth {d})", p.verdict, p.property),
                    None => say!(out, "{:<9} {}", p.verdict, p.property),
                }
            }
            if let Some(t) = &report.termination {
                match t.max_depth {
                    Some(d) => say!(out, "termination to version {}: {} (max depth {d})", t.target_version, t.verdict),
                    None => say!(out, "termination to version {}: {}", t.target_version, t.verdict),
                }
            }
            for p in &report.progress {
                match p.minimal_k {
                    Some(k) => say!(out, "progress {} (k={}): {} (minimal k {k})", p.component, p.k, p.verdict),
                    None => say!(out, "progress {} (k={}): {}", p.component, p.k, p.verdict),
                }
            }
            if report.deadlock_count > 0 {
                say!(out, "deadlocks: {}", report.deadlock_count);
            }
            for v in report.violations.iter().filter(|v| !v.trace.is_empty()) {
                say!(out, "counterexample for {} ({} steps)", v.property, v.trace.len().saturating_sub(1));
            }
        }
    }
    let incomplete = report.bounds.max_states_hit || report.bounds.max_depth_hit;
    Ok(if report.has_violation() {
        EXIT_VIOLATION
    } else if report.has_unknown() || incomplete {
        EXIT_UNKNOWN
    } else {
        EXIT_OK
    })
}

// ---- demo ----

fn narrate(out: &mut dyn Write, index: usize, label: &StepLabel, before: &Configuration, after: &Configuration) {
    say!(out, "{index:>3}. {label}");
    // Transfers are part of the label; only roles added or dropped by a change clause are not.
    for (role, ph) in &after.phases {
        if !before.phases.contains_key(role) {
            say!(out, "       {role} enters {ph}");
        }
    }
    for (role, ph) in &before.phases {
        if !after.phases.contains_key(role) {
            say!(out, "       {role} leaves {ph}");
        }
    }
    if before.model_version != after.model_version {
        say!(out, "       model version {} -> {}", before.model_version, after.model_version);
    }
}

fn cmd_demo(ctx: &mut Ctx, name: &str, steps: usize, seed: u64) -> Res<i32> {
    let Some(b) = bundled::find(name) else {
        let names: Vec<&str> = bundled::EXAMPLES.iter().chain(bundled::FIXTURES).map(|b| b.name).collect();
        return Err(ctx.error(EXIT_USAGE, format!("unknown demo {name}; available: {}", names.join(", "))));
    };
    let l = b.load().map_err(|e| load_error(ctx, e))?;
    let engine = Engine::default();
    let trace = match l.target_version {
        Some(target) => {
            let sk = McPalSkeleton::default();
            let goal = Pred::And(
                Box::new(Pred::ModelVersionIs(target)),
                Box::new(Pred::And(
                    Box::new(Pred::InState { component: sk.component.clone(), state: sk.hibernation_state.clone() }),
                    Box::new(Pred::InPhase {
                        component: sk.component.clone(),
                        partition: sk.evol_partition.clone(),
                        phase: sk.hibernating_phase.clone(),
                    }),
                )),
            );
            match shortest_trace_to(&l.model, &l.config, &goal, Bounds::default()) {
                Some(t) => t,
                None => {
                    say!(ctx.io.out, "{}: the migration cannot complete; run explore --check-termination {target} for a witness", b.name);
                    return Ok(EXIT_VIOLATION);
                }
            }
        }
        None => match engine.run(&l.model, &l.config, Policy::Seeded(seed), steps) {
            Ok(run) => run.trace,
            Err(e) => return Err(ctx.error(EXIT_USAGE, e)),
        },
    };
    let run = engine.replay(&l.model, &trace).map_err(|e| ctx.error(EXIT_DIVERGENCE, e))?;
    if ctx.format == Format::Json {
        ctx.emit(&run.trace.to_jsonl());
        return Ok(EXIT_OK);
    }
    let out = &mut *ctx.io.out;
    say!(out, "{}: {}", b.name, b.summary);
    let states: Vec<String> = l.config.detailed.iter().map(|(c, s)| format!("{c}={s}")).collect();
    say!(out, "  start: {} (model version {})", states.join(" "), l.config.model_version);
    let mut prev = &run.trace.initial;
    for (i, step) in run.trace.steps.iter().enumerate() {
        narrate(out, i + 1, &step.label, prev, &step.config);
        prev = &step.config;
    }
    match l.target_version {
        Some(_) => say!(out, "migration complete, model version {}, McPal hibernating", run.model.version),
        None => say!(out, "run finished after {} steps, model version {}", run.trace.len(), run.model.version),
    }
    Ok(EXIT_OK)
}

// ---- export-dot ----

fn cmd_export_dot(
    ctx: &mut Ctx,
    args: &ModelArgs,
    what: DotKind,
    component: Option<&str>,
    out: Option<&Path>,
    limit: usize,
) -> Res<i32> {
    let input = load(ctx, args)?;
    let dot = match what {
        DotKind::Std => std_dot(&input.model, component),
        DotKind::Phases => phases_dot(&input.model, component),
        DotKind::Statespace => {
            let explorer = Explorer {
                bounds: Bounds { max_states: limit.saturating_add(1), ..Bounds::default() },
                threads: 1,
                engine: input.engine,
            };
            statespace_dot(&explorer.build(&input.model, &input.config), limit)
        }
    };
    let dot = match dot {
        Ok(d) => d,
        Err(e @ DotError::TooLarge { .. }) => return Err(ctx.error(EXIT_TOO_LARGE, e)),
        Err(e) => return Err(ctx.error(EXIT_USAGE, e)),
    };
    match out {
        Some(path) => ctx.write_file(path, &dot)?,
        None => ctx.emit(&dot),
    }
    Ok(EXIT_OK)
}
