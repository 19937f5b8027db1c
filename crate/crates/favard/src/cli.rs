//! Command-line front end: reproducible experiments emitting CSV, JSON, and
//! SVG artifacts.
//!
//! Every output embeds the seed, grids, sample counts, and mode that produced
//! it, so a file is self-describing and re-runnable. Identical configurations
//! produce byte-identical outputs: floats are serialized with the shortest
//! round-trip representation, '.' decimal separator, no locale, and nothing
//! time- or host-dependent is ever written.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::estimators::{
    decay_table, estimate_dk, estimate_favard, estimate_overlap_expectation, verify_recursion,
    Estimate, RECURSION_CONSTANT,
};
use crate::geometry::{favard_length, projection_length};
use crate::model::{
    build_generation, quarter_corner, AngleMode, AngleTree, DiskSet, SquareSet,
};
use crate::rng::{parse_seed, SeedKey};
use crate::verify::{
    check_at_most_two, check_jacobian_bound, check_nesting, check_shift_lemma, find_triple_hit,
    VerificationReport,
};
use crate::Error;

/// Largest element count the SVG renderer accepts.
pub const RENDER_LIMIT: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Model {
    /// Random Cantor disks in the unit disk.
    Disk,
    /// Deterministic 1/4-corner squares in the unit square.
    QuarterCorner,
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Model::Disk => write!(f, "disk"),
            Model::QuarterCorner => write!(f, "quarter-corner"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl std::fmt::Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Format::Csv => write!(f, "csv"),
            Format::Json => write!(f, "json"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EstimateTarget {
    /// Expected projection length of generation k.
    Dk,
    /// Expected Favard length of generation n.
    Favard,
    /// Angle-integrated expected sibling-group overlap at level k.
    Overlap,
    /// The level-to-level recursion report.
    Recursion,
}

impl std::fmt::Display for EstimateTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EstimateTarget::Dk => write!(f, "dk"),
            EstimateTarget::Favard => write!(f, "favard"),
            EstimateTarget::Overlap => write!(f, "overlap"),
            EstimateTarget::Recursion => write!(f, "recursion"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CheckKind {
    AtMostTwo,
    Shift,
    Jacobian,
    Nesting,
    TripleHit,
    All,
}

/// Parsed command line; the whole run is a pure function of this value.
#[derive(Parser, Debug)]
#[command(
    name = "favard",
    about = "Random Cantor disk sets: exact projections, Favard lengths, and checks of their decay laws"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Emit one generation of a set family as CSV or JSON.
    Generate {
        #[arg(long, value_enum, default_value_t = Model::Disk)]
        model: Model,
        /// Construction height n.
        #[arg(short = 'n', long)]
        depth: u32,
        /// Generation k to emit (default: the full height).
        #[arg(short = 'k', long)]
        gen: Option<u32>,
        /// Master seed, decimal or 0x-prefixed hex.
        #[arg(long, default_value = "0")]
        seed: String,
        #[arg(long, default_value = "independent")]
        mode: AngleMode,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact projection length of one generation at a single angle.
    Project {
        #[arg(long, value_enum, default_value_t = Model::Disk)]
        model: Model,
        #[arg(short = 'n', long)]
        depth: u32,
        #[arg(short = 'k', long)]
        gen: Option<u32>,
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        #[arg(long, default_value = "0")]
        seed: String,
        #[arg(long, default_value = "independent")]
        mode: AngleMode,
    },
    /// Exact Favard quadrature of one generation.
    Favard {
        #[arg(long, value_enum, default_value_t = Model::Disk)]
        model: Model,
        #[arg(short = 'n', long)]
        depth: u32,
        #[arg(short = 'k', long)]
        gen: Option<u32>,
        /// Midpoint quadrature nodes on [0, pi).
        #[arg(long, default_value_t = 180)]
        theta_grid: usize,
        #[arg(long, default_value = "0")]
        seed: String,
        #[arg(long, default_value = "independent")]
        mode: AngleMode,
    },
    /// Monte Carlo estimates: D_k, Favard, overlap, or the recursion report.
    Estimate {
        #[arg(long, value_enum, default_value_t = EstimateTarget::Dk)]
        target: EstimateTarget,
        #[arg(short = 'n', long)]
        depth: u32,
        #[arg(short = 'k', long)]
        gen: Option<u32>,
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 180)]
        theta_grid: usize,
        #[arg(long, default_value = "0")]
        seed: String,
        #[arg(long, default_value = "independent")]
        mode: AngleMode,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate n * Fav(generation n) for n = 1..=depth on shared trees.
    Decay {
        #[arg(short = 'n', long)]
        depth: u32,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 180)]
        theta_grid: usize,
        #[arg(long, default_value = "0")]
        seed: String,
        #[arg(long, default_value = "independent")]
        mode: AngleMode,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact geometric checks; exits 1 when any check fails.
    Verify {
        #[arg(long, value_enum, default_value_t = CheckKind::All)]
        check: CheckKind,
        /// Angles scanned by the at-most-two check.
        #[arg(long, default_value_t = 10_000)]
        omega_grid: usize,
        /// Angles scanned by the shift and Jacobian checks.
        #[arg(long, default_value_t = 10_001)]
        psi_grid: usize,
        /// Line directions scanned by the triple-hit search.
        #[arg(long, default_value_t = 720)]
        theta_grid: usize,
        /// Offsets per direction scanned by the triple-hit search.
        #[arg(long, default_value_t = 4096)]
        t_grid: usize,
        /// Tree height for the nesting check; generation for triple-hit.
        #[arg(short = 'n', long, default_value_t = 6)]
        depth: u32,
        /// Single generation to check (nesting; default: all of 1..=depth).
        #[arg(short = 'k', long)]
        gen: Option<u32>,
        /// Sibling-group level for the shift check.
        #[arg(long, default_value_t = 4)]
        level: u32,
        #[arg(long, default_value = "0")]
        seed: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render one generation as a stroke-only SVG.
    Render {
        #[arg(long, value_enum, default_value_t = Model::Disk)]
        model: Model,
        #[arg(short = 'n', long)]
        depth: u32,
        #[arg(short = 'k', long)]
        gen: Option<u32>,
        #[arg(long, default_value = "0")]
        seed: String,
        #[arg(long, default_value = "independent")]
        mode: AngleMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn disk_tree(depth: u32, seed: &str, mode: AngleMode) -> Result<(SeedKey, AngleTree), Error> {
    let key = SeedKey::new(parse_seed(seed)?);
    let tree = AngleTree::sample(depth, &key, mode)?;
    Ok((key, tree))
}

enum Built {
    Disks(DiskSet),
    Squares(SquareSet),
}

fn build_set(
    model: Model,
    depth: u32,
    gen: Option<u32>,
    seed: &str,
    mode: AngleMode,
) -> Result<(u32, Built), Error> {
    let k = gen.unwrap_or(depth);
    match model {
        Model::Disk => {
            let (_, tree) = disk_tree(depth.max(1), seed, mode)?;
            if k > depth {
                return Err(Error::GenerationOutOfRange {
                    generation: k,
                    depth,
                });
            }
            Ok((k, Built::Disks(build_generation(&tree, k)?)))
        }
        Model::QuarterCorner => {
            if mode == AngleMode::PerLevel {
                return Err(Error::PerLevelSquares);
            }
            Ok((k, Built::Squares(quarter_corner(k)?)))
        }
    }
}

fn set_csv(set: &Built, meta: &str) -> String {
    let mut s = String::new();
    s.push_str(meta);
    match set {
        Built::Disks(d) => {
            s.push_str("id,cx,cy,radius\n");
            for disk in d.disks() {
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    disk.number,
                    disk.center_x,
                    disk.center_y,
                    disk.radius()
                );
            }
        }
        Built::Squares(q) => {
            s.push_str("id,x,y,side\n");
            for sq in q.squares() {
                let _ = writeln!(s, "{},{},{},{}", sq.number, sq.corner_x, sq.corner_y, sq.side());
            }
        }
    }
    s
}

fn set_json(set: &Built, meta: serde_json::Value) -> String {
    let body = match set {
        Built::Disks(d) => serde_json::json!({
            "meta": meta,
            "disks": d.disks().iter().map(|disk| serde_json::json!({
                "id": disk.number,
                "cx": disk.center_x,
                "cy": disk.center_y,
                "radius": disk.radius(),
            })).collect::<Vec<_>>(),
        }),
        Built::Squares(q) => serde_json::json!({
            "meta": meta,
            "squares": q.squares().iter().map(|sq| serde_json::json!({
                "id": sq.number,
                "x": sq.corner_x,
                "y": sq.corner_y,
                "side": sq.side(),
            })).collect::<Vec<_>>(),
        }),
    };
    let mut text = serde_json::to_string_pretty(&body).expect("reports serialize");
    text.push('\n');
    text
}

fn estimate_csv(meta: &str, estimates: &[(u32, u32, f64, &Estimate)]) -> String {
    let mut s = String::new();
    s.push_str(meta);
    s.push_str("label,n,k,theta,mean,stderr,samples,seed\n");
    for (n, k, theta, e) in estimates {
        let _ = writeln!(
            s,
            "\"{}\",{},{},{},{},{},{},{}",
            e.label, n, k, theta, e.mean, e.stderr, e.samples, e.seed
        );
    }
    s
}

fn json_with_meta(meta: serde_json::Value, payload: impl serde::Serialize) -> String {
    let body = serde_json::json!({
        "meta": meta,
        "result": payload,
    });
    let mut text = serde_json::to_string_pretty(&body).expect("reports serialize");
    text.push('\n');
    text
}

/// Render a disk generation: stroke-only circles in enumeration order on the
/// fixed viewport around the unit disk.
pub fn render_svg_disks(set: &DiskSet) -> Result<String, Error> {
    if set.len() as u64 > RENDER_LIMIT {
        return Err(Error::RenderTooLarge {
            count: set.len() as u64,
            limit: RENDER_LIMIT,
        });
    }
    let mut s = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-1.05 -1.05 2.1 2.1\">\n",
    );
    for d in set.disks() {
        let _ = writeln!(
            s,
            "  <circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"0.003\"/>",
            d.center_x,
            d.center_y,
            d.radius()
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Render a square generation on the fixed viewport around the unit square.
pub fn render_svg_squares(set: &SquareSet) -> Result<String, Error> {
    if set.len() as u64 > RENDER_LIMIT {
        return Err(Error::RenderTooLarge {
            count: set.len() as u64,
            limit: RENDER_LIMIT,
        });
    }
    let mut s = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-0.05 -0.05 1.1 1.1\">\n",
    );
    for sq in set.squares() {
        let _ = writeln!(
            s,
            "  <rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"0.002\"/>",
            sq.corner_x,
            sq.corner_y,
            sq.side(),
            sq.side()
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Execute one parsed configuration. Returns the process exit code:
/// 0 on success, 1 when a verification check fails.
pub fn run(config: RunConfig) -> Result<i32, Error> {
    match config.command {
        Command::Generate {
            model,
            depth,
            gen,
            seed,
            mode,
            format,
            out,
        } => {
            let (k, set) = build_set(model, depth, gen, &seed, mode)?;
            let content = match format {
                Format::Csv => {
                    let meta = format!(
                        "# favard generate\n# model={model} depth={depth} gen={k} seed={} mode={mode}\n",
                        parse_seed(&seed)?
                    );
                    set_csv(&set, &meta)
                }
                Format::Json => set_json(
                    &set,
                    serde_json::json!({
                        "command": "generate",
                        "model": model.to_string(),
                        "depth": depth,
                        "gen": k,
                        "seed": parse_seed(&seed)?,
                        "mode": mode.to_string(),
                    }),
                ),
            };
            emit(&out, &content)?;
            Ok(0)
        }
        Command::Project {
            model,
            depth,
            gen,
            theta,
            seed,
            mode,
        } => {
            let (_, set) = build_set(model, depth, gen, &seed, mode)?;
            let length = match &set {
                Built::Disks(d) => projection_length(d, theta),
                Built::Squares(q) => projection_length(q, theta),
            };
            println!("{length}");
            Ok(0)
        }
        Command::Favard {
            model,
            depth,
            gen,
            theta_grid,
            seed,
            mode,
        } => {
            if theta_grid < 1 {
                return Err(Error::GridTooSmall {
                    min: 1,
                    got: theta_grid,
                });
            }
            let (_, set) = build_set(model, depth, gen, &seed, mode)?;
            let value = match &set {
                Built::Disks(d) => favard_length(d, theta_grid),
                Built::Squares(q) => favard_length(q, theta_grid),
            };
            println!("{value}");
            Ok(0)
        }
        Command::Estimate {
            target,
            depth,
            gen,
            theta,
            samples,
            theta_grid,
            seed,
            mode,
            format,
            out,
        } => {
            let key = SeedKey::new(parse_seed(&seed)?);
            let k = gen.unwrap_or(depth);
            let meta_line = format!(
                "# favard estimate\n# target={target} depth={depth} gen={k} theta={theta} samples={samples} theta-grid={theta_grid} seed={} mode={mode}\n",
                key.master_seed()
            );
            let meta_json = serde_json::json!({
                "command": "estimate",
                "target": target.to_string(),
                "depth": depth,
                "gen": k,
                "theta": theta,
                "samples": samples,
                "theta_grid": theta_grid,
                "seed": key.master_seed(),
                "mode": mode.to_string(),
            });
            let content = match target {
                EstimateTarget::Dk => {
                    let e = estimate_dk(depth, k, theta, samples, &key, mode)?;
                    match format {
                        Format::Csv => estimate_csv(&meta_line, &[(depth, k, theta, &e)]),
                        Format::Json => json_with_meta(meta_json, &e),
                    }
                }
                EstimateTarget::Favard => {
                    let e = estimate_favard(depth, samples, theta_grid, &key, mode)?;
                    match format {
                        Format::Csv => estimate_csv(&meta_line, &[(depth, depth, theta, &e)]),
                        Format::Json => json_with_meta(meta_json, &e),
                    }
                }
                EstimateTarget::Overlap => {
                    let e = estimate_overlap_expectation(k, samples, &key)?;
                    match format {
                        Format::Csv => estimate_csv(&meta_line, &[(k, k, 0.0, &e)]),
                        Format::Json => json_with_meta(meta_json, &e),
                    }
                }
                EstimateTarget::Recursion => {
                    let report = verify_recursion(depth, samples, &key, theta, mode)?;
                    match format {
                        Format::Csv => {
                            let mut s = meta_line;
                            let _ = writeln!(s, "# c={RECURSION_CONSTANT}");
                            s.push_str("k,d_k,d_k_next,slack,stderr,pass\n");
                            for row in &report.rows {
                                let _ = writeln!(
                                    s,
                                    "{},{},{},{},{},{}",
                                    row.k, row.d_k, row.d_k_next, row.slack, row.stderr, row.pass
                                );
                            }
                            s
                        }
                        Format::Json => json_with_meta(meta_json, &report),
                    }
                }
            };
            emit(&out, &content)?;
            Ok(0)
        }
        Command::Decay {
            depth,
            samples,
            theta_grid,
            seed,
            mode,
            format,
            out,
        } => {
            let key = SeedKey::new(parse_seed(&seed)?);
            let table = decay_table(depth, samples, theta_grid, &key, mode)?;
            let content = match format {
                Format::Csv => {
                    let mut s = format!(
                        "# favard decay\n# depth={depth} samples={samples} theta-grid={theta_grid} seed={} mode={mode} monotone={}\n",
                        key.master_seed(),
                        table.monotone
                    );
                    s.push_str("n,favard,n_favard,stderr\n");
                    for row in &table.rows {
                        let _ = writeln!(
                            s,
                            "{},{},{},{}",
                            row.n, row.favard, row.n_favard, row.stderr
                        );
                    }
                    s
                }
                Format::Json => json_with_meta(
                    serde_json::json!({
                        "command": "decay",
                        "depth": depth,
                        "samples": samples,
                        "theta_grid": theta_grid,
                        "seed": key.master_seed(),
                        "mode": mode.to_string(),
                    }),
                    &table,
                ),
            };
            emit(&out, &content)?;
            Ok(0)
        }
        Command::Verify {
            check,
            omega_grid,
            psi_grid,
            theta_grid,
            t_grid,
            depth,
            gen,
            level,
            seed,
            out,
        } => {
            let key = SeedKey::new(parse_seed(&seed)?);
            let mut reports: Vec<VerificationReport> = Vec::new();
            if matches!(check, CheckKind::AtMostTwo | CheckKind::All) {
                reports.push(check_at_most_two(omega_grid));
            }
            if matches!(check, CheckKind::Shift | CheckKind::All) {
                reports.push(check_shift_lemma(level, psi_grid.max(1), &key)?);
            }
            if matches!(check, CheckKind::Jacobian | CheckKind::All) {
                reports.push(check_jacobian_bound(psi_grid.max(2)));
            }
            if matches!(check, CheckKind::Nesting | CheckKind::All) {
                let tree = AngleTree::sample(depth, &key, AngleMode::Independent)?;
                match gen {
                    Some(k) => reports.push(check_nesting(&tree, k)?),
                    None => {
                        for k in 1..=depth {
                            reports.push(check_nesting(&tree, k)?);
                        }
                    }
                }
            }
            if matches!(check, CheckKind::TripleHit | CheckKind::All) {
                reports.push(find_triple_hit(gen.unwrap_or(2), theta_grid, t_grid)?);
            }
            let all_pass = reports.iter().all(|r| r.pass);
            let meta = serde_json::json!({
                "command": "verify",
                "check": format!("{check:?}"),
                "omega_grid": omega_grid,
                "psi_grid": psi_grid,
                "theta_grid": theta_grid,
                "t_grid": t_grid,
                "depth": depth,
                "level": level,
                "seed": key.master_seed(),
            });
            let content = if reports.len() == 1 {
                json_with_meta(meta, &reports[0])
            } else {
                json_with_meta(meta, &reports)
            };
            emit(&out, &content)?;
            Ok(if all_pass { 0 } else { 1 })
        }
        Command::Render {
            model,
            depth,
            gen,
            seed,
            mode,
            out,
        } => {
            let (_, set) = build_set(model, depth, gen, &seed, mode)?;
            let content = match &set {
                Built::Disks(d) => render_svg_disks(d)?,
                Built::Squares(q) => render_svg_squares(q)?,
            };
            emit(&out, &content)?;
            Ok(0)
        }
    }
}

/// Entry point used by the binary: honors `FAVARD_THREADS` and maps errors to
/// exit code 2 (usage/domain) while verification failures exit 1.
pub fn main_entry() -> i32 {
    if let Ok(threads) = std::env::var("FAVARD_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let config = RunConfig::parse();
    match run(config) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AngleTree;

    #[test]
    fn svg_unit_disk() {
        let tree = AngleTree::constant(1, 0.0).unwrap();
        let set = build_generation(&tree, 0).unwrap();
        let svg = render_svg_disks(&set).unwrap();
        assert!(svg.contains("viewBox=\"-1.05 -1.05 2.1 2.1\""));
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.contains("r=\"1\""));
    }

    #[test]
    fn svg_first_generation_circles() {
        let tree = AngleTree::constant(1, 0.0).unwrap();
        let set = build_generation(&tree, 1).unwrap();
        let svg = render_svg_disks(&set).unwrap();
        assert_eq!(svg.matches("<circle").count(), 4);
        assert!(svg.contains("cx=\"0.75\" cy=\"0\" r=\"0.25\""));
    }

    #[test]
    fn svg_quarter_corner_rects() {
        let set = quarter_corner(1).unwrap();
        let svg = render_svg_squares(&set).unwrap();
        assert!(svg.contains("viewBox=\"-0.05 -0.05 1.1 1.1\""));
        assert_eq!(svg.matches("<rect").count(), 4);
        assert!(svg.contains("width=\"0.25\""));
    }

    #[test]
    fn set_csv_has_header_and_rows() {
        let tree = AngleTree::constant(1, 0.0).unwrap();
        let set = Built::Disks(build_generation(&tree, 1).unwrap());
        let csv = set_csv(&set, "# meta\n");
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# meta");
        assert_eq!(lines[1], "id,cx,cy,radius");
        assert_eq!(lines.len(), 6);
        assert!(lines[2].starts_with("1,0.75,0,0.25"));
    }
}
