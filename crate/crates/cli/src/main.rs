//! Command line front end over the screening toolkit: load a network, bound
//! every parameter's influence on a query, inspect single sensitivity
//! functions, run the verification oracle, and dump plot data.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use senscreen_core::{
    bound_surface_grid, bounding_curves, emit, emit_verify, envelope_csv, filter_rank,
    linear_coeffs, load_network, parse_evidence, parse_parameter, parse_state_ref, posterior,
    screen, sensitivity_constants, surface_csv, verify, classify, CoeffRole, Error, FunctionKind,
    NetworkDef, OutputFormat, Query, Result, ScreenOptions, ThroughPoint, VertexQuery,
    VertexWindow,
};

#[derive(Parser)]
#[command(
    name = "senscreen",
    version,
    about = "Screens Bayesian network parameters for influence on a posterior"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a network document and report its shape.
    Validate {
        #[arg(long)]
        network: PathBuf,
    },
    /// Posterior probability of the target given the evidence.
    Infer {
        #[arg(long)]
        network: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
    },
    /// Full sensitivity function of one parameter.
    Sensfun {
        #[arg(long)]
        network: PathBuf,
        /// Parameter address, e.g. 'B=b|A=a' or 'A=a|' for a root.
        #[arg(long)]
        parameter: String,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, default_value = "table")]
        format: String,
    },
    /// Bound every parameter's influence on the query without computing
    /// sensitivity functions.
    Screen {
        #[arg(long)]
        network: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, default_value = "table")]
        format: String,
        /// Drop rows whose ceiling is below this, unless a vertex rescues them.
        #[arg(long = "sv-threshold", default_value_t = 0.0)]
        sv_threshold: f64,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Compute every sensitivity function and check each screening bound.
    Verify {
        #[arg(long)]
        network: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, default_value = "table")]
        format: String,
    },
    /// CSV data behind the envelope and bound-surface plots.
    Plotdata {
        #[command(subcommand)]
        plot: Plot,
    },
}

#[derive(Args)]
struct QueryArgs {
    /// Target assignment, e.g. A=a.
    #[arg(long)]
    target: String,
    /// Comma-separated evidence, e.g. B=b,C=c2. May be empty.
    #[arg(long, default_value = "")]
    evidence: String,
}

#[derive(Args)]
struct WindowArgs {
    /// Vertex window bounds, two values.
    #[arg(long = "vertex-window", num_args = 2, value_names = ["A", "B"],
          conflicts_with = "vicinity")]
    vertex_window: Option<Vec<f64>>,
    /// Per-parameter window of this radius around the current value.
    #[arg(long, num_args = 0..=1, default_missing_value = "0.1")]
    vicinity: Option<f64>,
}

#[derive(Subcommand)]
enum Plot {
    /// The two extreme admissible hyperbolas through an anchor, sampled on a
    /// grid over [0, 1]. Anchor from a network parameter or from bare numbers.
    Envelope {
        #[arg(long)]
        network: Option<PathBuf>,
        #[arg(long, requires = "network")]
        parameter: Option<String>,
        #[arg(long, requires = "network")]
        target: Option<String>,
        #[arg(long, default_value = "")]
        evidence: String,
        #[arg(long, conflicts_with = "network")]
        x0: Option<f64>,
        #[arg(long, conflicts_with = "network")]
        p0: Option<f64>,
        /// Asymptote position; required with --x0/--p0.
        #[arg(long = "s-value", allow_negative_numbers = true)]
        s_value: Option<f64>,
        /// Number of sample points.
        #[arg(long, default_value_t = 101)]
        grid: usize,
    },
    /// sv_bound and the anchor-only ceiling over a grid of interior anchors.
    Surface {
        #[arg(long = "s-value", allow_negative_numbers = true)]
        s_value: f64,
        /// Anchors per axis, at i / (grid + 1).
        #[arg(long, default_value_t = 99)]
        grid: usize,
    },
}

fn load(path: &Path) -> Result<NetworkDef> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    load_network(&text)
}

fn build_query(net: &NetworkDef, qa: &QueryArgs) -> Result<Query> {
    let target = parse_state_ref(net, &qa.target)?;
    let evidence = parse_evidence(net, &qa.evidence)?;
    Query::new(target, evidence)
}

fn vertex_query(w: &WindowArgs) -> Result<VertexQuery> {
    if let Some(v) = &w.vertex_window {
        Ok(VertexQuery::Window(VertexWindow::new(v[0], v[1])?))
    } else if let Some(radius) = w.vicinity {
        Ok(VertexQuery::Vicinity(radius))
    } else {
        Ok(VertexQuery::Window(VertexWindow::UNIT))
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn run_sensfun(net: &NetworkDef, parameter: &str, qa: &QueryArgs, format: &str) -> Result<()> {
    let format: OutputFormat = format.parse()?;
    let pref = parse_parameter(net, parameter)?;
    let q = build_query(net, qa)?;
    let x0 = net.entry(&pref);
    let p0 = posterior(net, &q)?;
    let c = sensitivity_constants(net, &pref, &q)?;
    let den0 = c.c3 * x0 + c.c4;
    let sv = ((c.c1 * c.c4 - c.c2 * c.c3) / (den0 * den0)).abs();
    let (kind, s, t, r, vertex) = match classify(&c) {
        Ok(FunctionKind::Hyperbolic { form, quadrant }) => {
            let v = form.vertex();
            (
                format!("hyperbolic({quadrant})"),
                Some(form.s),
                Some(form.t),
                Some(form.r),
                Some(v),
            )
        }
        Ok(FunctionKind::Linear { .. }) => ("linear".into(), None, None, None, None),
        Ok(FunctionKind::Constant(_)) => ("constant".into(), None, None, None, None),
        Err(Error::AsymptoteInWindow(s)) => {
            ("asymptote-in-window".into(), Some(s), None, None, None)
        }
        Err(e) => return Err(e),
    };
    match format {
        OutputFormat::Table => {
            println!("parameter: {}", net.parameter_string(&pref));
            println!("x0: {x0}");
            println!("p0: {p0}");
            println!("c1 c2 c3 c4: {} {} {} {}", c.c1, c.c2, c.c3, c.c4);
            println!("kind: {kind}");
            if let Some(s) = s {
                println!("s: {s}");
            }
            if let (Some(t), Some(r)) = (t, r) {
                println!("t: {t}");
                println!("r: {r}");
            }
            println!("sv: {sv}");
            if let Some(v) = vertex {
                println!("vertex: {} {}", v.x_v, v.y_v);
            }
        }
        OutputFormat::Csv => {
            println!("parameter,x0,p0,c1,c2,c3,c4,kind,s,t,r,sv,x_v,y_v");
            let quoted = if parameter.contains(',') {
                format!("\"{}\"", net.parameter_string(&pref))
            } else {
                net.parameter_string(&pref)
            };
            println!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                quoted,
                x0,
                p0,
                c.c1,
                c.c2,
                c.c3,
                c.c4,
                kind,
                opt(s),
                opt(t),
                opt(r),
                sv,
                opt(vertex.map(|v| v.x_v)),
                opt(vertex.map(|v| v.y_v)),
            );
        }
        OutputFormat::Json => {
            let doc = serde_json::json!({
                "parameter": net.parameter_string(&pref),
                "x0": x0,
                "p0": p0,
                "c": [c.c1, c.c2, c.c3, c.c4],
                "kind": kind,
                "s": s,
                "t": t,
                "r": r,
                "sv": sv,
                "vertex": vertex.map(|v| [v.x_v, v.y_v]),
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("plain data"));
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { network } => {
            let net = load(&network)?;
            println!(
                "ok: {} variables, {} parameters",
                net.n_vars(),
                net.enumerate_parameters().len()
            );
        }
        Command::Infer { network, query } => {
            let net = load(&network)?;
            let q = build_query(&net, &query)?;
            println!("{}", posterior(&net, &q)?);
        }
        Command::Sensfun {
            network,
            parameter,
            query,
            format,
        } => {
            let net = load(&network)?;
            run_sensfun(&net, &parameter, &query, &format)?;
        }
        Command::Screen {
            network,
            query,
            format,
            sv_threshold,
            window,
        } => {
            let format: OutputFormat = format.parse()?;
            let net = load(&network)?;
            let q = build_query(&net, &query)?;
            let opts = ScreenOptions {
                vertex_query: vertex_query(&window)?,
            };
            let rows = filter_rank(screen(&net, &q, &opts)?, sv_threshold, None);
            print!("{}", emit(&rows, format));
        }
        Command::Verify {
            network,
            query,
            format,
        } => {
            let format: OutputFormat = format.parse()?;
            let net = load(&network)?;
            let q = build_query(&net, &query)?;
            let report = verify(&net, &q)?;
            print!("{}", emit_verify(&report, format));
            let s = &report.summary;
            let line = format!(
                "checks: {} run, {} failed, max violation {}",
                s.checks_run, s.checks_failed, s.max_violation
            );
            match format {
                OutputFormat::Table => println!("{line}"),
                // JSON already embeds the summary; keep CSV stdout pure rows.
                OutputFormat::Csv => eprintln!("{line}"),
                OutputFormat::Json => {}
            }
        }
        Command::Plotdata { plot } => match plot {
            Plot::Envelope {
                network,
                parameter,
                target,
                evidence,
                x0,
                p0,
                s_value,
                grid,
            } => {
                if grid < 2 {
                    return Err(Error::InvalidArgument(format!(
                        "envelope grid must have at least 2 points, got {grid}"
                    )));
                }
                let (x0, p0, s) = match network {
                    Some(path) => {
                        let net = load(&path)?;
                        let parameter = parameter.ok_or_else(|| {
                            Error::InvalidArgument("--parameter is required with --network".into())
                        })?;
                        let target = target.ok_or_else(|| {
                            Error::InvalidArgument("--target is required with --network".into())
                        })?;
                        let pref = parse_parameter(&net, &parameter)?;
                        let q = build_query(
                            &net,
                            &QueryArgs {
                                target,
                                evidence,
                            },
                        )?;
                        let p0 = posterior(&net, &q)?;
                        let den = linear_coeffs(
                            &net,
                            &pref,
                            &q.evidence,
                            CoeffRole::EvidenceDenominator,
                        )?;
                        if den.slope.abs() < 1e-12 * den.intercept.abs() {
                            return Err(Error::InvalidArgument(
                                "the evidence does not depend on this parameter; \
                                 the sensitivity function is linear and has no envelope"
                                    .into(),
                            ));
                        }
                        (net.entry(&pref), p0, -den.intercept / den.slope)
                    }
                    None => {
                        let (Some(x0), Some(p0), Some(s)) = (x0, p0, s_value) else {
                            return Err(Error::InvalidArgument(
                                "provide --network with --parameter and --target, \
                                 or all of --x0, --p0, --s-value"
                                    .into(),
                            ));
                        };
                        (x0, p0, s)
                    }
                };
                let tp = ThroughPoint::new(x0, p0)?;
                let xs: Vec<f64> = (0..grid)
                    .map(|i| i as f64 / (grid - 1) as f64)
                    .collect();
                let curves = bounding_curves(tp, s, &xs)?;
                print!("{}", envelope_csv(&curves));
            }
            Plot::Surface { s_value, grid } => {
                let surface = bound_surface_grid(grid, s_value)?;
                print!("{}", surface_csv(&surface));
            }
        },
    }
    Ok(())
}

fn main() {
    // Die quietly when a pipe downstream closes early, like any stream tool.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Exit 2 stays reserved for zero-probability evidence.
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(match e {
            Error::ZeroEvidence => 2,
            _ => 1,
        });
    }
}
