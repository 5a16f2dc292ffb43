//! The `bic` command line.
//!
//! Exit codes: 0 proved or realized, 1 refuted or rejected, 2 inconclusive,
//! 3 usage or input error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::apps::{self, Expectation, Fixture};
use crate::ci::{self, CiImplication, FalsifyBudget, FalsifyOutcome};
use crate::constraint::BooleanConstraint;
use crate::distributions::Distribution;
use crate::error::{BicError, Result};
use crate::expr::VarSet;
use crate::parser::{format_constraint, format_set, parse_constraint};
use crate::rational::parse_rational;
use crate::recognizer::{check_candidate, CandidateRepr, RealizeBudget, Recognition};
use crate::reductions::{self, reduce, MaxOptions, Schedule, TightOutcome};
use crate::refuter::{refute_parallel, violation_trace, Budget, RefuteOutcome, Search};
use crate::shannon::{elemental, prove, prove_convex, ConvexOutcome, GeneratorSet};

pub const EXIT_POSITIVE: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

/// Directory holding `manifest.json` and fixture files; overrides the
/// built-in corpus.
pub const CORPUS_ENV: &str = "BIC_CORPUS";

#[derive(Parser, Debug)]
#[command(name = "bic", version, about = "Prove and refute Boolean information constraints")]
struct Cli {
    /// Human-readable output instead of JSON.
    #[arg(long, global = true, conflicts_with = "json")]
    text: bool,
    /// JSON output (the default).
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for searches; defaults to the available parallelism.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for random sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Input {
    /// Constraint file (`.iic`).
    #[arg(long, conflicts_with = "fixture")]
    file: Option<PathBuf>,
    /// Name of a corpus fixture.
    #[arg(long)]
    fixture: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct Gens {
    /// File of additional valid inequalities, one per line.
    #[arg(long = "extra-gens")]
    extra_gens: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Shannon provability with a certificate.
    Prove {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        gens: Gens,
    },
    /// Search finite models for a counterexample.
    Refute {
        #[command(flatten)]
        input: Input,
        /// Model search limits: distribution domains, denominators, vector spaces.
        #[arg(long, default_value_t = Budget::default())]
        budget: Budget,
        /// Check this many randomly chosen candidates instead of a full scan.
        #[arg(long)]
        sample: Option<u64>,
        /// Write the counterexample model to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Route each clause to the tight, slack or max reduction.
    Reduce {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        gens: Gens,
        /// Values of p and the largest q for the tight regime.
        #[arg(long, default_value_t = Schedule::default())]
        schedule: Schedule,
        /// Refuter limits for the max reduction.
        #[arg(long, default_value_t = Budget::default())]
        budget: Budget,
        /// Largest Σλ tried by the max reduction.
        #[arg(long, default_value_t = MaxOptions::default().max_lambda_sum)]
        max_lambda: u64,
    },
    /// Conditional independence implications.
    Ci {
        #[command(subcommand)]
        verb: CiVerb,
    },
    /// Recognize a candidate vector given as `subset a b c` lines.
    Recognize {
        /// Candidate file.
        #[arg(long)]
        file: PathBuf,
        #[command(flatten)]
        gens: Gens,
        /// Realization search limits (only `s` and `D` are used).
        #[arg(long, default_value = "s=2,D=4")]
        budget: Budget,
    },
    /// List, show or check the fixture corpus.
    Corpus {
        #[command(subcommand)]
        verb: Option<CorpusVerb>,
    },
    /// Generate (and optionally prove) a secret-sharing constraint.
    SecretShare {
        /// Number of participants; the dealer is one more variable.
        #[arg(long)]
        participants: usize,
        /// Qualified sets, e.g. `12` or `12,13,23`; closed under supersets.
        #[arg(long)]
        access: String,
        /// Information ratio ℓ, a rational such as `1` or `3/2`.
        #[arg(long, default_value = "1")]
        ratio: String,
        /// Run the tight reduction on the generated constraint.
        #[arg(long)]
        prove: bool,
        /// Values of p and the largest q for the tight regime.
        #[arg(long, default_value_t = Schedule::default())]
        schedule: Schedule,
    },
    /// Entropic vector of a distribution, optionally checked against a constraint.
    CheckDist {
        /// Distribution file.
        #[arg(long)]
        file: PathBuf,
        /// Constraint file to evaluate on the distribution.
        #[arg(long)]
        constraint: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum CiVerb {
    /// Prove by identity, then by the tight reduction.
    Prove {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        gens: Gens,
        /// Values of p and the largest q for the tight regime.
        #[arg(long, default_value_t = Schedule::default())]
        schedule: Schedule,
    },
    /// Search uniform-domain distributions for a counterexample.
    Falsify {
        #[command(flatten)]
        input: Input,
        /// Largest domain size N and denominator D.
        #[arg(long, default_value = "N=2,D=4")]
        budget: FalsifyBudget,
    },
    /// Print Δ as SMT-LIB 2.
    Export {
        #[command(flatten)]
        input: Input,
        /// Domain size of every variable.
        #[arg(long, default_value_t = 2)]
        domain: usize,
    },
}

#[derive(Subcommand, Debug)]
enum CorpusVerb {
    /// Fixture names, expectations and descriptions.
    List,
    /// Print a fixture's source.
    Show { name: String },
    /// Run each fixture and compare with its expected verdict.
    Check { name: Option<String> },
}

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Ctx {
    text: bool,
    workers: usize,
    seed: u64,
}

struct Report {
    code: i32,
    json: Value,
    text: String,
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable report")
}

/// Runs the command line `args` (including the program name).
pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_POSITIVE };
            let rendered = e.render().to_string();
            return if code == EXIT_POSITIVE {
                Output { code, stdout: rendered, stderr: String::new() }
            } else {
                Output { code, stdout: String::new(), stderr: rendered }
            };
        }
    };
    let ctx = Ctx {
        text: cli.text,
        workers: cli
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1),
        seed: cli.seed,
    };
    match dispatch(&ctx, cli.command) {
        Ok(r) => {
            let stdout = if ctx.text {
                r.text
            } else {
                serde_json::to_string_pretty(&r.json).expect("json") + "\n"
            };
            Output { code: r.code, stdout, stderr: String::new() }
        }
        Err(e) => Output {
            code: EXIT_ERROR,
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

fn dispatch(ctx: &Ctx, cmd: Command) -> Result<Report> {
    match cmd {
        Command::Prove { input, gens } => cmd_prove(&load_constraint(&input)?, &gens),
        Command::Refute { input, budget, sample, out } => {
            cmd_refute(ctx, &load_constraint(&input)?, &budget, sample, out.as_deref())
        }
        Command::Reduce { input, gens, schedule, budget, max_lambda } => {
            let c = load_constraint(&input)?;
            let options = MaxOptions {
                max_lambda_sum: max_lambda,
                workers: ctx.workers,
                ..MaxOptions::default()
            };
            cmd_reduce(&c, &gens, &schedule, &budget, &options)
        }
        Command::Ci { verb } => cmd_ci(ctx, verb),
        Command::Recognize { file, gens, budget } => cmd_recognize(ctx, &file, &gens, &budget),
        Command::Corpus { verb } => cmd_corpus(ctx, verb.unwrap_or(CorpusVerb::List)),
        Command::SecretShare { participants, access, ratio, prove, schedule } => {
            cmd_secret_share(participants, &access, &ratio, prove, &schedule)
        }
        Command::CheckDist { file, constraint } => cmd_check_dist(&file, constraint.as_deref()),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| BicError::Io(format!("{}: {e}", path.display())))
}

/// The corpus from `$BIC_CORPUS` if set, otherwise the built-in one.
pub fn active_corpus() -> Result<Vec<Fixture>> {
    match std::env::var_os(CORPUS_ENV) {
        Some(dir) if !dir.is_empty() => apps::load_corpus(Path::new(&dir)),
        _ => Ok(apps::corpus()),
    }
}

fn find_fixture(name: &str) -> Result<Fixture> {
    active_corpus()?
        .into_iter()
        .find(|f| f.entry.name == name)
        .ok_or_else(|| BicError::Invalid(format!("no fixture named {name:?}; see `bic corpus list`")))
}

fn load_source(input: &Input) -> Result<String> {
    match (&input.file, &input.fixture) {
        (Some(p), _) => read(p),
        (None, Some(name)) => Ok(find_fixture(name)?.source),
        (None, None) => Err(BicError::Invalid("give --file or --fixture".into())),
    }
}

fn load_constraint(input: &Input) -> Result<BooleanConstraint> {
    parse_constraint(&load_source(input)?)
}

fn load_gens(gens: &Gens, vars: &[String]) -> Result<GeneratorSet> {
    let mut set = elemental(vars.len())?;
    if let Some(path) = &gens.extra_gens {
        set.load_user(&read(path)?, vars, &path.display().to_string())?;
    }
    Ok(set)
}

fn cmd_prove(c: &BooleanConstraint, gens: &Gens) -> Result<Report> {
    let set = load_gens(gens, &c.vars)?;
    let mut all = true;
    let mut clauses = Vec::new();
    let mut text = String::new();
    for (i, cl) in c.clauses.iter().enumerate() {
        let (proved, value) = if cl.consequents.len() == 1 {
            let out = prove(&cl.consequents[0], &set, &cl.antecedents)?;
            (out.is_proved(), to_json(&out))
        } else {
            let out = prove_convex(&cl.consequents, &set, &cl.antecedents)?;
            (matches!(out, ConvexOutcome::Proved { .. }), to_json(&out))
        };
        all &= proved;
        let verdict = if proved { "proved" } else { "not provable at the generator set" };
        text.push_str(&format!("clause {i}: {verdict}\n"));
        if let Some(cert) = value.get("certificate") {
            if let Some(m) = cert.get("generator_multipliers").and_then(Value::as_object) {
                for (id, q) in m {
                    text.push_str(&format!("  {} * {}\n", q.as_str().unwrap_or("?"), id));
                }
            }
        }
        clauses.push(value);
    }
    let status = if all { "proved" } else { "not-provable-at-generator-set" };
    Ok(Report {
        code: if all { EXIT_POSITIVE } else { EXIT_INCONCLUSIVE },
        json: json!({ "command": "prove", "status": status, "generators": set.len(), "clauses": clauses }),
        text: format!("{status}\n{text}"),
    })
}

fn cmd_refute(ctx: &Ctx, c: &BooleanConstraint, budget: &Budget, sample: Option<u64>, out: Option<&Path>) -> Result<Report> {
    let outcome = match sample {
        None => refute_parallel(c, budget, ctx.workers)?,
        Some(k) => {
            let search = Search::new(c, budget)?;
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            let mut found = None;
            if !search.is_empty() {
                for _ in 0..k {
                    let i = rand::Rng::gen_range(&mut rng, 0..search.len());
                    if let Some(cx) = search.check(i)? {
                        found = Some(cx);
                        break;
                    }
                }
            }
            match found {
                Some(cx) => RefuteOutcome::Counterexample(cx),
                None => RefuteOutcome::NotFound { budget: budget.clone(), searched: k },
            }
        }
    };
    let mut json = to_json(&outcome);
    json["command"] = json!("refute");
    match &outcome {
        RefuteOutcome::Counterexample(cx) => {
            if let Some(p) = out {
                std::fs::write(p, cx.model.file_text()).map_err(|e| BicError::Io(format!("{}: {e}", p.display())))?;
            }
            let mut text = format!("refuted: clause {} fails on {} #{}\n", cx.clause, cx.model.kind(), cx.index);
            text.push_str(&cx.model.file_text());
            for t in &cx.trace {
                text.push_str(&format!("  {} {} = {} ≈ {}\n", t.role, t.expr, t.value, t.approx));
            }
            Ok(Report { code: EXIT_NEGATIVE, json, text })
        }
        RefuteOutcome::NotFound { budget, searched } => Ok(Report {
            code: EXIT_INCONCLUSIVE,
            json,
            text: format!("no counterexample among {searched} candidates at budget {budget}\n"),
        }),
    }
}

fn cmd_reduce(c: &BooleanConstraint, gens: &Gens, schedule: &Schedule, budget: &Budget, options: &MaxOptions) -> Result<Report> {
    let set = load_gens(gens, &c.vars)?;
    let mut reports = Vec::new();
    let mut verdicts = Vec::new();
    let mut text = String::new();
    for (i, cl) in c.clauses.iter().enumerate() {
        let r = reduce(cl, &c.vars, &set, schedule, budget, options)?;
        let v = r.verdict();
        let j = to_json(&r);
        text.push_str(&format!(
            "clause {i}: {} regime, {}\n",
            j["regime"].as_str().unwrap_or("?"),
            verdict_word(v)
        ));
        verdicts.push(v);
        reports.push(j);
    }
    let overall = combine(&verdicts);
    Ok(Report {
        code: code_of(overall),
        json: json!({ "command": "reduce", "status": verdict_word(overall), "schedule": schedule.to_string(), "budget": budget.to_string(), "clauses": reports }),
        text: format!("{}\n{text}", verdict_word(overall)),
    })
}

/// Every clause proved, else any refuted, else inconclusive.
fn combine(vs: &[Option<bool>]) -> Option<bool> {
    if vs.iter().all(|v| *v == Some(true)) {
        Some(true)
    } else if vs.contains(&Some(false)) {
        Some(false)
    } else {
        None
    }
}

fn verdict_word(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "proved",
        Some(false) => "refuted",
        None => "inconclusive",
    }
}

fn code_of(v: Option<bool>) -> i32 {
    match v {
        Some(true) => EXIT_POSITIVE,
        Some(false) => EXIT_NEGATIVE,
        None => EXIT_INCONCLUSIVE,
    }
}

fn load_ci(input: &Input) -> Result<CiImplication> {
    CiImplication::parse(&load_source(input)?)
}

fn cmd_ci(ctx: &Ctx, verb: CiVerb) -> Result<Report> {
    match verb {
        CiVerb::Prove { input, gens, schedule } => {
            let imp = load_ci(&input)?;
            let set = load_gens(&gens, &imp.vars)?;
            let out = ci::prove(&imp, &set, &schedule)?;
            let mut json = to_json(&out);
            json["command"] = json!("ci prove");
            json["statement"] = json!(imp.to_string());
            let word = match &out {
                ci::CiProveOutcome::Identity { .. } => "proved by identity",
                ci::CiProveOutcome::Tight { .. } => "proved by the tight schedule",
                ci::CiProveOutcome::NotProved { .. } => "not proved",
            };
            Ok(Report {
                code: if out.is_proved() { EXIT_POSITIVE } else { EXIT_INCONCLUSIVE },
                json,
                text: format!("{imp}\n{word}\n"),
            })
        }
        CiVerb::Falsify { input, budget } => {
            let imp = load_ci(&input)?;
            let out = ci::falsify(&imp, budget, ctx.workers)?;
            let mut json = to_json(&out);
            json["command"] = json!("ci falsify");
            match &out {
                FalsifyOutcome::Counterexample { domain, counterexample, .. } => Ok(Report {
                    code: EXIT_NEGATIVE,
                    json,
                    text: format!("falsified at N={domain}\n{}", counterexample.model.file_text()),
                }),
                FalsifyOutcome::NotFound { searched, .. } => Ok(Report {
                    code: EXIT_INCONCLUSIVE,
                    json,
                    text: format!("no counterexample among {searched} candidates\n"),
                }),
            }
        }
        CiVerb::Export { input, domain } => {
            let imp = load_ci(&input)?;
            let smt = ci::export_delta(&ci::build_delta(&imp, domain)?);
            Ok(Report {
                code: EXIT_POSITIVE,
                json: json!({ "command": "ci export", "domain": domain, "smtlib": smt }),
                text: smt,
            })
        }
    }
}

fn cmd_recognize(ctx: &Ctx, file: &Path, gens: &Gens, budget: &Budget) -> Result<Report> {
    let r = CandidateRepr::parse(&read(file)?)?;
    let set = load_gens(gens, &r.vars)?;
    let out = check_candidate(&r, &set, RealizeBudget { s: budget.s, d: budget.d }, ctx.workers)?;
    let mut json = to_json(&out);
    json["command"] = json!("recognize");
    let (code, text) = match &out {
        Recognition::Rejected { generator, expr, approx, .. } => {
            (EXIT_NEGATIVE, format!("rejected: {generator}: {expr} = {approx} < 0\n"))
        }
        Recognition::Realized { distribution, .. } => (EXIT_POSITIVE, format!("realized by\n{distribution}")),
        Recognition::Inconclusive { searched } => (EXIT_INCONCLUSIVE, format!("inconclusive after {searched} candidates\n")),
    };
    Ok(Report { code, json, text })
}

/// What the tools conclude about a fixture, in the terms of its manifest.
pub fn evaluate_fixture(f: &Fixture, workers: usize) -> Result<Option<Expectation>> {
    if let Some(imp) = f.ci() {
        let imp = imp?;
        let gens = elemental(imp.n())?;
        if ci::prove(&imp, &gens, &Schedule::default())?.is_proved() {
            return Ok(Some(Expectation::Provable));
        }
        return Ok(match ci::falsify(&imp, FalsifyBudget { max_domain: 2, d: 4 }, workers)? {
            FalsifyOutcome::Counterexample { .. } => Some(Expectation::Refutable),
            FalsifyOutcome::NotFound { .. } => Some(Expectation::NotProvableAtElemental),
        });
    }
    let c = f.constraint()?;
    let gens = elemental(c.n())?;
    let budget = Budget::default();
    let options = MaxOptions { workers, ..MaxOptions::default() };
    let mut verdicts = Vec::new();
    for cl in &c.clauses {
        verdicts.push(reduce(cl, &c.vars, &gens, &Schedule::default(), &budget, &options)?.verdict());
    }
    Ok(match combine(&verdicts) {
        Some(true) => Some(Expectation::Provable),
        Some(false) => Some(Expectation::Refutable),
        None => match refute_parallel(&c, &budget, workers)? {
            RefuteOutcome::Counterexample(_) => Some(Expectation::Refutable),
            RefuteOutcome::NotFound { .. } => Some(Expectation::NotProvableAtElemental),
        },
    })
}

fn cmd_corpus(ctx: &Ctx, verb: CorpusVerb) -> Result<Report> {
    let all = active_corpus()?;
    match verb {
        CorpusVerb::List => {
            let text = all
                .iter()
                .map(|f| format!("{:<20} {:<26} {}\n", f.entry.name, to_json(&f.entry.expect).as_str().unwrap_or(""), f.entry.description))
                .collect();
            let entries: Vec<Value> = all.iter().map(|f| to_json(&f.entry)).collect();
            Ok(Report { code: EXIT_POSITIVE, json: json!({ "command": "corpus", "fixtures": entries }), text })
        }
        CorpusVerb::Show { name } => {
            let f = find_fixture(&name)?;
            let c = f.constraint()?;
            Ok(Report {
                code: EXIT_POSITIVE,
                json: json!({ "command": "corpus show", "fixture": to_json(&f), "normalized": format_constraint(&c) }),
                text: f.source,
            })
        }
        CorpusVerb::Check { name } => {
            let mut rows = Vec::new();
            let mut text = String::new();
            let mut ok = true;
            for f in all.iter().filter(|f| name.as_ref().is_none_or(|n| *n == f.entry.name)) {
                let got = evaluate_fixture(f, ctx.workers)?;
                let pass = got == Some(f.entry.expect);
                ok &= pass;
                let exp = to_json(&f.entry.expect);
                let obs = to_json(&got);
                text.push_str(&format!(
                    "{} {:<20} expected {} observed {}\n",
                    if pass { "ok  " } else { "FAIL" },
                    f.entry.name,
                    exp.as_str().unwrap_or(""),
                    obs.as_str().unwrap_or("none")
                ));
                rows.push(json!({ "name": f.entry.name, "expected": exp, "observed": obs, "pass": pass }));
            }
            if rows.is_empty() {
                return Err(BicError::Invalid("no matching fixture".into()));
            }
            Ok(Report {
                code: if ok { EXIT_POSITIVE } else { EXIT_NEGATIVE },
                json: json!({ "command": "corpus check", "results": rows }),
                text,
            })
        }
    }
}

fn cmd_secret_share(participants: usize, access: &str, ratio: &str, run: bool, schedule: &Schedule) -> Result<Report> {
    let ratio = parse_rational(ratio).ok_or_else(|| BicError::Invalid(format!("ratio {ratio:?} is not a rational")))?;
    let sets = apps::parse_access(access)?;
    let c = apps::secret_sharing_constraint(participants, &sets, &ratio)?;
    let source = format_constraint(&c);
    if !run {
        return Ok(Report {
            code: EXIT_POSITIVE,
            json: json!({ "command": "secret-share", "constraint": source }),
            text: source,
        });
    }
    let gens = elemental(c.n())?;
    let out = reductions::reduce_tight(&c.clauses[0], &gens, schedule)?;
    let proved = matches!(out, TightOutcome::Proved { .. });
    Ok(Report {
        code: if proved { EXIT_POSITIVE } else { EXIT_INCONCLUSIVE },
        json: json!({ "command": "secret-share", "constraint": source, "outcome": to_json(&out) }),
        text: format!("{source}{}\n", if proved { "proved" } else { "not proved" }),
    })
}

fn cmd_check_dist(file: &Path, constraint: Option<&Path>) -> Result<Report> {
    let d = Distribution::parse(&read(file)?)?;
    let h = d.entropic_vector();
    let names = crate::expr::default_names(d.n());
    let mut vector = Vec::new();
    let mut text = String::new();
    for s in VarSet::all(d.n()).skip(1) {
        let v = h.get(s);
        let label = format_set(s, &names);
        text.push_str(&format!("H({label}) = {v} ≈ {}\n", v.approx(12)));
        vector.push(json!({ "set": label, "value": to_json(v), "approx": v.approx(12) }));
    }
    let mut json = json!({ "command": "check-dist", "distribution": to_json(&d), "entropies": vector });
    let mut code = EXIT_POSITIVE;
    if let Some(path) = constraint {
        let c = parse_constraint(&read(path)?)?;
        if c.n() != d.n() {
            return Err(BicError::DimensionMismatch { expected: c.n(), found: d.n() });
        }
        match violation_trace(&c, &h)? {
            None => {
                text.push_str("constraint holds\n");
                json["holds"] = json!(true);
            }
            Some((clause, trace)) => {
                code = EXIT_NEGATIVE;
                text.push_str(&format!("clause {clause} fails\n"));
                for t in &trace {
                    text.push_str(&format!("  {} {} ≈ {}\n", t.role, t.expr, t.approx));
                }
                json["holds"] = json!(false);
                json["clause"] = json!(clause);
                json["trace"] = to_json(&trace);
            }
        }
    }
    Ok(Report { code, json, text })
}
