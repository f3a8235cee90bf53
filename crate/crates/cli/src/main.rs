use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rlocal::bass_serre::{classify_element, required_radius, BassSerreTreePortion, ElementAction};
use rlocal::decomposition::{build_nerve_complex, BagStrategy, NerveComplex};
use rlocal::fixtures;
use rlocal::gog::GraphOfGroups;
use rlocal::matrix::Matrix;
use rlocal::pipeline::{self, Caps, ReportBundle, RunConfig, StageStatus};
use rlocal::spec::GroupSpec;
use rlocal::subgroups::{
    index_lower_bound, index_upper_bound, kernel_subgroup, torsion_representatives, transport_atoms,
    verify_torsion_free, FiniteQuotientHom, Presentation,
};
use rlocal::{Element, Group};

const EXIT_ERROR: u8 = 1;
const EXIT_CAPPED: u8 = 2;
const EXIT_VERIFY: u8 = 3;
const CACHE_ENV: &str = "RLOCAL_CACHE_DIR";

#[derive(Parser, Debug)]
#[command(name = "rlocal", version, about = "Local covers, canonical decompositions and splittings of groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum Format {
    Json,
    Dot,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum Bags {
    Cosets,
    Clusters,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
enum Method {
    Quotient,
    Congruence,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    /// Group spec: a JSON file or a bundled fixture name. `report`
    /// accepts it more than once.
    #[arg(long)]
    group: Vec<String>,
    #[arg(long, default_value_t = 6)]
    r: usize,
    #[arg(long, default_value_t = 10)]
    radius: usize,
    /// Cover depth.
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value_t = 2)]
    r0: usize,
    #[arg(long, default_value_t = 3)]
    max_doublings: usize,
    /// Radius of the Bass–Serre tree portion.
    #[arg(long, default_value_t = 3)]
    tree_radius: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Periodicity samples.
    #[arg(long, default_value_t = 20)]
    samples: usize,
    /// e.g. `vertices=100000,tree=5000`.
    #[arg(long, default_value = "")]
    caps: String,
    #[arg(long, value_enum, default_value_t = Bags::Cosets)]
    bags: Bags,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
enum Command {
    /// Cayley ball around the identity.
    Ball(Common),
    /// Truncated r-local cover of the ball.
    Cover(Common),
    /// Canonical decomposition of the ball.
    Decompose {
        #[command(flatten)]
        common: Common,
        /// DOT output shows every bag instead of the model graph.
        #[arg(long)]
        bag_graph: bool,
    },
    /// Doubling search for a stable graph of groups.
    Discover(Common),
    /// Elliptic, reflection or hyperbolic action on the Bass–Serre tree.
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        element: String,
    },
    /// Finite-index free subgroup certificate.
    Subgroup {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Method::Quotient)]
        method: Method,
        /// Congruence method: reduce modulo this.
        #[arg(long)]
        modulus: Option<u64>,
        /// Congruence method: matrix spec with the same generator names.
        #[arg(long)]
        matrices: Option<String>,
    },
    /// Index bounds for given B, n and k_max.
    Bounds {
        #[arg(long = "B")]
        b: u64,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        kmax: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        #[serde(skip)]
        out: Option<PathBuf>,
    },
    /// Nerve of the bag covering.
    Nerve(Common),
    /// Full pipeline; repeat --group for a summary table.
    Report(Common),
}

struct Failure {
    code: u8,
    message: String,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure { code: EXIT_ERROR, message: e.to_string() }
    }
}

type CliResult<T> = Result<T, Failure>;

/// Rendered output plus the exit code it should end with.
#[derive(Serialize, Deserialize)]
struct Outcome {
    code: u8,
    output: String,
}

impl Outcome {
    fn ok(output: String) -> Self {
        Outcome { code: 0, output }
    }
}

fn load_spec(source: &str) -> CliResult<(GroupSpec, String)> {
    let text = if Path::new(source).is_file() {
        std::fs::read_to_string(source)?
    } else if fixtures::NAMES.contains(&source) {
        fixtures::text(source)?.to_string()
    } else {
        return Err(format!("`{source}` is neither a file nor a fixture ({})", fixtures::NAMES.join(", ")).into());
    };
    Ok((GroupSpec::from_json(&text)?, text))
}

fn require_group(c: &Common) -> CliResult<&str> {
    match c.group.as_slice() {
        [one] => Ok(one),
        [] => Err("--group is required".into()),
        _ => Err("--group may only be repeated for report".into()),
    }
}

fn run_config(c: &Common) -> CliResult<RunConfig> {
    let cfg = RunConfig {
        r: c.r,
        radius: c.radius,
        depth: c.depth,
        r0: c.r0,
        max_doublings: c.max_doublings,
        tree_radius: c.tree_radius,
        strategy: match c.bags {
            Bags::Cosets => BagStrategy::Cosets,
            Bags::Clusters => BagStrategy::Clusters,
        },
        seed: c.seed,
        samples: c.samples,
        caps: c.caps.parse::<Caps>()?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn no_dot(what: &str) -> Failure {
    Failure { code: EXIT_ERROR, message: format!("DOT output is not available for {what}") }
}

/// Cap errors map to exit code 2, everything else to 1.
fn staged<T>(r: rlocal::Result<T>) -> CliResult<T> {
    r.map_err(|e| Failure {
        code: if matches!(e, rlocal::Error::CapExceeded { .. }) { EXIT_CAPPED } else { EXIT_ERROR },
        message: e.to_string(),
    })
}

fn build_group(spec: &GroupSpec) -> CliResult<Arc<Group>> {
    if let Some(reason) = &spec.out_of_scope {
        return Err(Failure { code: EXIT_ERROR, message: format!("{} is out of scope: {reason}", spec.name) });
    }
    Ok(Arc::new(spec.build()?))
}

/// The declared graph of groups, or the discovered one for other backends.
fn splitting(group: &Arc<Group>, cfg: &RunConfig) -> CliResult<(GraphOfGroups, &'static str)> {
    if let Some(g) = group.gog() {
        return Ok((g.clone(), "spec"));
    }
    let (gog, art) = staged(pipeline::discovery_stage(group.clone(), cfg))?;
    match gog.filter(|_| art.stabilized) {
        Some(g) => Ok((g, "discovery")),
        None => Err(Failure {
            code: EXIT_CAPPED,
            message: format!("discovery did not stabilize: {}", art.diagnosis.unwrap_or_default()),
        }),
    }
}

#[derive(Serialize)]
struct ClassifyOutput {
    element: String,
    tree_radius: usize,
    tree_vertices: usize,
    action: ElementAction,
}

#[derive(Serialize)]
struct CongruenceOutput {
    modulus: u64,
    image_order: usize,
    index: usize,
    torsion_free: bool,
    torsion_witnesses: Vec<String>,
}

#[derive(Serialize)]
struct BoundsOutput {
    b: u64,
    n: u32,
    kmax: u64,
    lower: u64,
    upper: String,
}

#[derive(Serialize)]
struct NerveOutput {
    bags: usize,
    nerve: NerveComplex,
}

fn execute(cmd: &Command, specs: &[(GroupSpec, String)]) -> CliResult<Outcome> {
    match cmd {
        Command::Ball(c) => {
            let cfg = run_config(c)?;
            let group = build_group(&specs[0].0)?;
            let (ball, art) = staged(pipeline::ball_stage(group, &cfg))?;
            Ok(Outcome::ok(match c.format {
                Format::Json => json(&art),
                Format::Dot => pipeline::ball_dot(&ball),
                Format::Text => format!(
                    "{}: {} vertices, {} edges within radius {}\nlayers: {:?}\n",
                    ball.group().name(),
                    art.vertices,
                    art.edges,
                    art.radius,
                    art.layer_counts
                ),
            }))
        }
        Command::Cover(c) => {
            let cfg = run_config(c)?;
            let group = build_group(&specs[0].0)?;
            let (ball, _) = staged(pipeline::ball_stage(group, &cfg))?;
            let (_, art) = staged(pipeline::cover_stage(ball, &cfg))?;
            let output = match c.format {
                Format::Json => json(&art),
                Format::Dot => return Err(no_dot("cover")),
                Format::Text => format!(
                    "r = {}: {} cover vertices, {} certified to depth {}; displacement {}; ball preservation at radius {}: {}\n",
                    art.r,
                    art.vertices,
                    art.certified_vertices,
                    art.certified_depth,
                    art.displacement.map_or(format!("> {}", art.displacement_lower_bound), |d| d.to_string()),
                    art.ball_preservation.radius,
                    if art.ball_preservation.pass { "pass" } else { "FAIL" }
                ),
            };
            Ok(Outcome { code: if art.ball_preservation.pass { 0 } else { EXIT_VERIFY }, output })
        }
        Command::Decompose { common: c, bag_graph } => {
            let cfg = run_config(c)?;
            let group = build_group(&specs[0].0)?;
            let (ball, _) = staged(pipeline::ball_stage(group, &cfg))?;
            let (d, art) = staged(pipeline::decomposition_stage(ball, &cfg))?;
            let ok = art.checks.h1() && art.checks.h2() && art.periodicity.mismatches == 0;
            let output = match c.format {
                Format::Json => json(&art),
                Format::Dot if *bag_graph => pipeline::bag_graph_dot(&d),
                Format::Dot => pipeline::model_dot(&art),
                Format::Text => {
                    let ends: Vec<(usize, usize)> = art.model_edges.iter().map(|e| (e.from, e.to)).collect();
                    let sizes: Vec<usize> = art.model_vertices.iter().map(|v| v.bag_size).collect();
                    let mut s = format!(
                        "{} / {}\n",
                        pipeline::describe_model_graph(art.model_vertices.len(), &ends),
                        pipeline::describe_bag_sizes(&sizes)
                    );
                    for e in &art.model_edges {
                        let _ = writeln!(s, "edge {} -- {}: adhesion {}", e.from, e.to, e.adhesion_size);
                    }
                    let _ = writeln!(
                        s,
                        "H1 violations {}, H2 violations {}, periodicity mismatches {}",
                        art.checks.h1_violations, art.checks.h2_violations, art.periodicity.mismatches
                    );
                    s
                }
            };
            Ok(Outcome { code: if ok { 0 } else { EXIT_VERIFY }, output })
        }
        Command::Discover(c) => {
            let cfg = run_config(c)?;
            let group = build_group(&specs[0].0)?;
            let (_, art) = staged(pipeline::discovery_stage(group, &cfg))?;
            let output = match c.format {
                Format::Json => json(&art),
                Format::Dot => return Err(no_dot("discover")),
                Format::Text => {
                    let mut s = String::new();
                    for it in &art.iterations {
                        let shape = it.splitting.as_ref().map_or("-".to_string(), |sp| {
                            format!("vertex groups {:?}, edges {:?}", sp.vertex_orders, sp.edges)
                        });
                        let _ = writeln!(s, "r = {:<3} ball {:<8} {shape}", it.r, it.ball_size);
                    }
                    match art.final_r {
                        Some(r) => {
                            let _ = writeln!(s, "stabilized at r = {r}");
                        }
                        None => {
                            let _ = writeln!(s, "not stabilized: {}", art.diagnosis.clone().unwrap_or_default());
                        }
                    }
                    s
                }
            };
            Ok(Outcome { code: if art.stabilized { 0 } else { EXIT_CAPPED }, output })
        }
        Command::Classify { common: c, element } => {
            let cfg = run_config(c)?;
            let group = build_group(&specs[0].0)?;
            if group.gog().is_none() {
                return Err("classify needs a graph-of-groups spec".into());
            }
            let g = group.normal_form(element)?;
            let Element::NormalForm(nf) = &g else { unreachable!("graph-of-groups backend") };
            let radius = cfg.tree_radius.max(required_radius(nf));
            let tree = staged(BassSerreTreePortion::build_with_cap(
                group.gog().expect("checked"),
                radius,
                cfg.caps.tree,
            ))?;
            let action = staged(classify_element(&tree, &g))?;
            let out = ClassifyOutput { element: group.render(&g), tree_radius: radius, tree_vertices: tree.len(), action };
            Ok(Outcome::ok(match c.format {
                Format::Json => json(&out),
                Format::Dot => tree.to_dot(),
                Format::Text => match &out.action {
                    ElementAction::Hyperbolic { translation_length, .. } => {
                        format!("{}: hyperbolic, translation length {translation_length}\n", out.element)
                    }
                    a => format!("{}: {}\n", out.element, a.name()),
                },
            }))
        }
        Command::Subgroup { common: c, method, modulus, matrices } => {
            let cfg = run_config(c)?;
            let group = build_group(&specs[0].0)?;
            match method {
                Method::Quotient => {
                    let (gog, source) = splitting(&group, &cfg)?;
                    let art = pipeline::subgroup_stage(&gog, source).map_err(|e| Failure {
                        code: if matches!(e, rlocal::Error::NotFound(_)) { EXIT_CAPPED } else { EXIT_ERROR },
                        message: e.to_string(),
                    })?;
                    let output = match c.format {
                        Format::Json => json(&art),
                        Format::Dot => return Err(no_dot("subgroup")),
                        Format::Text => format!(
                            "quotient {} (image order {}): index {}, rank {}, chi {}, torsion-free {}\n",
                            art.target,
                            art.image_order,
                            art.index,
                            art.rank.map_or("not certified".into(), |r| r.to_string()),
                            art.euler_characteristic,
                            art.torsion_free
                        ),
                    };
                    Ok(Outcome { code: if art.verified() { 0 } else { EXIT_VERIFY }, output })
                }
                Method::Congruence => {
                    let m = modulus.ok_or_else(|| Failure::from("--modulus is required"))?;
                    let mspec = matrices.as_ref().ok_or_else(|| Failure::from("--matrices is required"))?;
                    let target = build_group(&load_spec(mspec)?.0)?;
                    let gog = group.gog().ok_or_else(|| Failure::from("congruence needs a graph-of-groups spec"))?;
                    let imgs: Vec<Matrix> = staged(transport_atoms(&group, &target, cfg.radius))?
                        .into_iter()
                        .map(|e| match e {
                            Element::Matrix(m) => Ok(m),
                            _ => Err(Failure::from("--matrices must be a matrix spec")),
                        })
                        .collect::<CliResult<_>>()?;
                    let (pres, _) = Presentation::of_gog(gog);
                    let hom = staged(FiniteQuotientHom::from_matrices(pres, &imgs, m, cfg.caps.cosets))?;
                    let mut cert = kernel_subgroup(&hom);
                    let torsion_free = verify_torsion_free(&hom, &mut cert, &torsion_representatives(gog));
                    let out = CongruenceOutput {
                        modulus: m,
                        image_order: hom.image_order,
                        index: cert.index,
                        torsion_free,
                        torsion_witnesses: cert.torsion_witnesses.clone(),
                    };
                    let output = match c.format {
                        Format::Json => json(&out),
                        Format::Dot => return Err(no_dot("subgroup")),
                        Format::Text => format!(
                            "mod {m} kernel: index {}, torsion-free {}{}\n",
                            out.index,
                            out.torsion_free,
                            out.torsion_witnesses.first().map_or(String::new(), |w| format!(", witness {w}"))
                        ),
                    };
                    Ok(Outcome { code: if torsion_free { 0 } else { EXIT_VERIFY }, output })
                }
            }
        }
        Command::Bounds { b, n, kmax, format, .. } => {
            let out = BoundsOutput {
                b: *b,
                n: *n,
                kmax: *kmax,
                lower: index_lower_bound(*b, *kmax)?,
                upper: index_upper_bound(*b, *n)?.to_string(),
            };
            Ok(Outcome::ok(match format {
                Format::Json => json(&out),
                Format::Dot => return Err(no_dot("bounds")),
                Format::Text => format!("{} <= index <= {}\n", out.lower, out.upper),
            }))
        }
        Command::Nerve(c) => {
            let cfg = run_config(c)?;
            let group = build_group(&specs[0].0)?;
            let (ball, _) = staged(pipeline::ball_stage(group, &cfg))?;
            let (d, _) = staged(pipeline::decomposition_stage(ball, &cfg))?;
            let nerve = build_nerve_complex(&d);
            Ok(Outcome::ok(match c.format {
                Format::Json => json(&NerveOutput { bags: d.bags.len(), nerve }),
                Format::Dot => {
                    let mut s = String::from("graph nerve {\n");
                    for v in &nerve.vertices {
                        let _ = writeln!(s, "  b{v};");
                    }
                    for sx in &nerve.maximal_simplices {
                        for (i, a) in sx.iter().enumerate() {
                            for b in &sx[i + 1..] {
                                let _ = writeln!(s, "  b{a} -- b{b};");
                            }
                        }
                    }
                    s.push_str("}\n");
                    s
                }
                Format::Text => format!(
                    "{} vertices, {} maximal simplices, dimension {}, {} component{}\n",
                    nerve.vertices.len(),
                    nerve.maximal_simplices.len(),
                    nerve.dimension,
                    nerve.components,
                    if nerve.components == 1 { "" } else { "s" }
                ),
            }))
        }
        Command::Report(c) => {
            let cfg = run_config(c)?;
            let mut bundles: Vec<ReportBundle> = Vec::new();
            for (spec, _) in specs {
                bundles.push(pipeline::run_pipeline(spec, &cfg)?);
            }
            let code = if bundles.iter().any(|b| b.any_status(StageStatus::VerificationFailed)) {
                EXIT_VERIFY
            } else if bundles.iter().any(|b| b.any_status(StageStatus::Capped)) {
                EXIT_CAPPED
            } else {
                0
            };
            let output = match c.format {
                Format::Json if bundles.len() == 1 => bundles[0].to_json(),
                Format::Json => json(&bundles),
                Format::Dot => match bundles.first().and_then(|b| b.artifacts.decomposition.as_ref()) {
                    Some(d) => pipeline::model_dot(d),
                    None => return Err(no_dot("a report without a decomposition")),
                },
                Format::Text => {
                    let rows: Vec<_> = bundles.iter().map(|b| b.summary.clone()).collect();
                    let mut s = pipeline::render_table1(&rows);
                    for b in &bundles {
                        s.push('\n');
                        s.push_str(&b.to_text());
                    }
                    s
                }
            };
            Ok(Outcome { code, output })
        }
    }
}

fn group_sources(cmd: &Command) -> CliResult<Vec<String>> {
    Ok(match cmd {
        Command::Bounds { .. } => Vec::new(),
        Command::Report(c) if c.group.is_empty() => return Err("--group is required".into()),
        Command::Report(c) => c.group.clone(),
        Command::Ball(c) | Command::Cover(c) | Command::Discover(c) | Command::Nerve(c) => {
            vec![require_group(c)?.to_string()]
        }
        Command::Decompose { common, .. } | Command::Classify { common, .. } => {
            vec![require_group(common)?.to_string()]
        }
        Command::Subgroup { common, matrices, .. } => {
            let mut v = vec![require_group(common)?.to_string()];
            v.extend(matrices.iter().cloned());
            v
        }
    })
}

fn format_and_out(cmd: &Command) -> (Format, Option<&PathBuf>) {
    match cmd {
        Command::Bounds { format, out, .. } => (*format, out.as_ref()),
        Command::Ball(c) | Command::Cover(c) | Command::Discover(c) | Command::Nerve(c) | Command::Report(c) => {
            (c.format, c.out.as_ref())
        }
        Command::Decompose { common: c, .. } | Command::Classify { common: c, .. } | Command::Subgroup { common: c, .. } => {
            (c.format, c.out.as_ref())
        }
    }
}

/// SHA-256 over the tool version, the command with its arguments and the
/// spec texts involved.
fn cache_key(cmd: &Command, texts: &[String]) -> String {
    let mut h = Sha256::new();
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    h.update([0]);
    h.update(serde_json::to_string(cmd).expect("command serializes").as_bytes());
    for t in texts {
        h.update([0]);
        h.update(t.as_bytes());
    }
    h.finalize().iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn run(cli: Cli) -> CliResult<Outcome> {
    let sources = group_sources(&cli.command)?;
    let mut specs = Vec::new();
    for s in &sources {
        specs.push(load_spec(s)?);
    }
    let (format, _) = format_and_out(&cli.command);
    // text reports carry timings, so only JSON and DOT are cached
    let cache = std::env::var_os(CACHE_ENV).filter(|_| format != Format::Text).map(PathBuf::from);
    let key = cache_key(&cli.command, &specs.iter().map(|(_, t)| t.clone()).collect::<Vec<_>>());
    if let Some(dir) = &cache {
        let path = dir.join(format!("{key}.json"));
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(hit) = serde_json::from_str::<Outcome>(&text) {
                return Ok(hit);
            }
        }
    }
    let outcome = execute(&cli.command, &specs)?;
    if let Some(dir) = &cache {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{key}.json")), json(&outcome))?;
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out_path = format_and_out(&cli.command).1.cloned();
    match run(cli) {
        Ok(outcome) => {
            match out_path {
                Some(p) => {
                    if let Err(e) = std::fs::write(&p, &outcome.output) {
                        eprintln!("error: cannot write {}: {e}", p.display());
                        return ExitCode::from(EXIT_ERROR);
                    }
                }
                None => print!("{}", outcome.output),
            }
            ExitCode::from(outcome.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
