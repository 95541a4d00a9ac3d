use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use humorph::analytics::{run_audits, trace_report, AuditKind};
use humorph::gateway::Gateway;
use humorph::know::load_corpus;
use humorph::reflexion::{apply_revision, install_default_constitution, run_improve, validate_improve};
use humorph::runtime::{replay, run_daemon, Config, KnowStage, ReplayScript};
use humorph::{Harness, IsoWeek, Settings, Vault};

#[derive(Parser)]
#[command(name = "humorph", version, about = "Partnership harness and audit engine over a plain-text vault")]
struct Cli {
    /// Runtime config (JSON). Needed by commands that call a model.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Vault root; overrides the config's.
    #[arg(long, global = true)]
    vault: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Create the vault layout and the default constitution.
    Init,
    /// Talk to a running daemon.
    Chat(ChatArgs),
    /// Serve the API and run the Notice and Know schedules.
    Daemon {
        #[arg(long)]
        bind: Option<String>,
    },
    /// Generate the weekly partner profile, agent profile and delta.
    Triad {
        #[arg(long)]
        week: IsoWeek,
        /// Run even if the week is still open.
        #[arg(long)]
        force: bool,
    },
    /// Rate a source corpus and write the week's digest.
    Scout {
        #[arg(long)]
        week: IsoWeek,
        /// JSON array of sources; the configured sources when absent.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Propose a revision of a skill prompt.
    Improve {
        #[arg(long)]
        skill: String,
        /// Allow a revision that drops the skill's history.
        #[arg(long)]
        force: bool,
        /// Apply the revision and record a verdict.
        #[arg(long)]
        apply: bool,
    },
    /// Audit the vault. With no flag every audit runs.
    Audit(AuditArgs),
    /// Run a scripted trace into a fresh vault.
    Replay {
        #[arg(long)]
        scenario: PathBuf,
        /// Destination vault; must be empty or missing.
        #[arg(long, default_value = "replay-vault")]
        out: PathBuf,
    },
    /// Write report.md and report.json for the vault.
    Report {
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ChatArgs {
    #[arg(long, default_value = "http://127.0.0.1:7878")]
    url: String,
    /// Send one message and exit.
    #[arg(long)]
    message: Option<String>,
    #[arg(long)]
    archetype: Option<String>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    conformance: bool,
    #[arg(long)]
    honesty: bool,
    #[arg(long)]
    uptake: bool,
    #[arg(long)]
    entropy: bool,
    /// Print the full JSON report instead of one line per audit.
    #[arg(long)]
    json: bool,
}

type CliResult = Result<ExitCode, Box<dyn std::error::Error>>;

fn load_config(cli: &Cli) -> Result<Config, Box<dyn std::error::Error>> {
    let path = match &cli.config {
        Some(p) => p.clone(),
        None => {
            let p = PathBuf::from("humorph.json");
            if !p.exists() {
                return Err("no config: pass --config or create humorph.json".into());
            }
            p
        }
    };
    let mut cfg = Config::load(&path)?;
    if let Some(v) = &cli.vault {
        cfg.vault = std::path::absolute(v)?;
    }
    Ok(cfg)
}

/// Vault and settings for read-only commands; a config is optional.
fn read_harness(cli: &Cli) -> Result<Harness, Box<dyn std::error::Error>> {
    let (root, settings) = match (&cli.vault, &cli.config) {
        (Some(v), None) => (v.clone(), Settings::default()),
        _ => {
            let cfg = load_config(cli)?;
            (cfg.vault_root(), cfg.settings.clone())
        }
    };
    if !root.is_dir() {
        return Err(format!("no vault at {}", root.display()).into());
    }
    let vault = Vault::open(&root)?;
    Ok(Harness::new(Arc::new(vault), Arc::new(Gateway::new(&root)), "none").with_settings(settings))
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).unwrap_or_default());
}

fn chat(args: &ChatArgs) -> CliResult {
    let endpoint = format!("{}/chat", args.url.trim_end_matches('/'));
    let send = |text: &str| -> Result<(), Box<dyn std::error::Error>> {
        let mut body = serde_json::json!({"text": text, "surface": "cli"});
        if let Some(a) = &args.archetype {
            body["archetype"] = a.as_str().into();
        }
        let mut resp = ureq::post(&endpoint).config().http_status_as_error(false).build().send_json(&body)?;
        let v: serde_json::Value = resp.body_mut().read_json()?;
        match v.get("agent_text").and_then(|t| t.as_str()) {
            Some(reply) if v.get("error").is_none_or(|e| e.is_null()) => {
                let badge = v.get("archetype").and_then(|a| a.as_str()).unwrap_or("-");
                println!("[{badge}] {reply}");
            }
            _ => eprintln!("error: {}", v.get("error").unwrap_or(&v)),
        }
        Ok(())
    };
    if let Some(m) = &args.message {
        send(m)?;
        return Ok(ExitCode::SUCCESS);
    }
    let stdin = std::io::stdin();
    loop {
        print!("> ");
        std::io::stdout().flush()?;
        let mut line = String::new();
        if stdin.lock().read_line(&mut line)? == 0 {
            break;
        }
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if matches!(line, "/quit" | "/exit") {
            break;
        }
        send(line)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn know(cli: &Cli, week: IsoWeek, force: bool, corpus: Option<&Path>, stages: &[KnowStage]) -> CliResult {
    let rt = load_config(cli)?.build()?;
    let items = corpus.map(|p| {
        let (items, diags) = load_corpus(p);
        for d in diags {
            eprintln!("corpus: {d}");
        }
        items
    });
    let summary = rt.know_tick_with(week, force, items.as_deref(), stages)?;
    for o in &summary.stages {
        let path = o.path.as_ref().map(|p| format!(" {}", p.display())).unwrap_or_default();
        println!("{week} {:<15} {:?}{path}: {}", o.stage.as_str(), o.status, o.detail);
    }
    Ok(if summary.failed().next().is_some() { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn run(cli: Cli) -> CliResult {
    match &cli.cmd {
        Cmd::Init => {
            let root = match (&cli.vault, &cli.config) {
                (Some(v), None) => v.clone(),
                _ => load_config(&cli)?.vault_root(),
            };
            let vault = Vault::open(&root)?;
            vault.init_dirs()?;
            let fresh = install_default_constitution(&vault)?;
            println!(
                "{} {}",
                root.display(),
                if fresh { "initialised" } else { "already initialised" }
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Chat(args) => chat(args),
        Cmd::Daemon { bind } => {
            let cfg = load_config(&cli)?;
            let bind = bind.clone().unwrap_or_else(|| cfg.bind.clone());
            let rt = Arc::new(cfg.build()?);
            rt.init()?;
            let tokio = tokio::runtime::Runtime::new()?;
            tokio.block_on(run_daemon(rt, &bind))?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Triad { week, force } => know(
            &cli,
            *week,
            *force,
            None,
            &[KnowStage::PartnerProfile, KnowStage::AgentProfile, KnowStage::Delta],
        ),
        Cmd::Scout { week, corpus, force } => know(&cli, *week, *force, corpus.as_deref(), &[KnowStage::Scout]),
        Cmd::Improve { skill, force, apply } => {
            let rt = load_config(&cli)?.build()?;
            let h = &rt.harness;
            let rev = run_improve(h, skill, *force)?;
            print_json(&rev);
            if rev.blocked {
                return Ok(ExitCode::FAILURE);
            }
            if *apply {
                apply_revision(h, &rev.run_id)?;
                print_json(&validate_improve(h, &rev.run_id)?);
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Audit(a) => {
            let h = read_harness(&cli)?;
            let picked: Vec<AuditKind> = [
                (a.conformance, AuditKind::Conformance),
                (a.honesty, AuditKind::Honesty),
                (a.uptake, AuditKind::Uptake),
                (a.entropy, AuditKind::Entropy),
            ]
            .into_iter()
            .filter_map(|(on, k)| on.then_some(k))
            .collect();
            let kinds = if picked.is_empty() { AuditKind::ALL.to_vec() } else { picked };
            let results = run_audits(&h, &kinds)?;
            if a.json {
                print_json(&results);
            } else {
                for r in &results {
                    let tag = if r.passed { "PASS" } else { "FAIL" };
                    println!("{tag} {:?}: {}", r.kind, r.summary);
                }
            }
            Ok(if results.iter().all(|r| r.passed) { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Cmd::Replay { scenario, out } => {
            let script = ReplayScript::load(scenario)?;
            let t = std::time::Instant::now();
            let outcome = replay(&script, out)?;
            for n in &outcome.notes {
                println!("note: {n}");
            }
            for e in &outcome.errors {
                eprintln!("error: {e}");
            }
            println!(
                "{} events, {} messages into {} in {:.2}s",
                outcome.events,
                outcome.messages,
                outcome.vault.display(),
                t.elapsed().as_secs_f64()
            );
            Ok(if outcome.errors.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Cmd::Report { out } => {
            let h = read_harness(&cli)?;
            let report = trace_report(&h)?;
            std::fs::create_dir_all(out)?;
            let md = report.to_markdown();
            std::fs::write(out.join("report.md"), &md)?;
            std::fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)?)?;
            print!("{md}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
