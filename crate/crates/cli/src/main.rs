//! Command-line front end: batch verifications over module documents with
//! machine-readable reports on stdout and human summaries on stderr.
//!
//! Exit codes: 0 success/verified; 2 malformed input; 3 insufficient
//! precision; 4 counterexample or mismatch found; 5 search budget exceeded.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use bkmod::classify;
use bkmod::cohom;
use bkmod::document::{CochainDocument, ModuleDocument, RankOneDoc};
use bkmod::error::Error;
use bkmod::factor;
use bkmod::field::FieldSpec;
use bkmod::indres;
use bkmod::module::{build_extension, BKModule};

#[derive(Parser)]
#[command(name = "bkmod", version, about = "exact computations with p-torsion Breuil-Kisin modules")]
struct Cli {
    /// Override the default working precision used by derived computations.
    #[arg(long, global = true)]
    precision: Option<i64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Weight multisets of a module, one per embedding.
    Weights { module: PathBuf },
    /// Strong-divisibility report (weights and graded tables).
    SdCheck { module: PathBuf },
    /// Dimension of the phi-fixed vectors.
    H0 { module: PathBuf },
    /// Dimension of H^1_SD, by both computation routes.
    H1sd { module: PathBuf },
    /// Hom and Ext^1_SD dimensions of a pair of strongly divisible modules.
    ExtDim { p_module: PathBuf, m_module: PathBuf },
    /// Build the extension attached to a Hom-valued cochain and print it.
    BuildExt { p_module: PathBuf, m_module: PathBuf, cochain: PathBuf },
    /// Normal form of a rank-one module.
    NormalizeRank1 { module: PathBuf },
    /// Restriction of scalars down to the given embedding count.
    Restrict {
        module: PathBuf,
        #[arg(long)]
        to_degree: usize,
    },
    /// Unramified base change up to the given embedding count.
    Induce {
        module: PathBuf,
        #[arg(long)]
        to_degree: usize,
    },
    /// Lattice classification sweep.
    Classify {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        max_rank: usize,
        /// Restrict to the Fontaine-Laffaille weight window [0, p-1].
        #[arg(long)]
        fl_range: bool,
        /// Report proper findings instead of failing on them.
        #[arg(long)]
        rank5_explore: bool,
    },
    /// Extension-dimension table over rank-one pairs.
    VerifyDimform {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        max_d: usize,
    },
    /// The explicit rank-4 case-matrix eliminations.
    RegressQpcase {
        #[arg(long)]
        p: u32,
        /// Parameter trials per case.
        #[arg(long, default_value_t = 5)]
        trials: usize,
    },
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InsufficientPrecision(_) | Error::ZeroLeadingCoefficient { .. } => 3,
        Error::CounterexampleFound(_)
        | Error::MethodDisagreement { .. }
        | Error::FormulaMismatch { .. }
        | Error::RegressionMismatch(_)
        | Error::CriterionDisagreement(_) => 4,
        Error::SearchBudgetExceeded(_) => 5,
        _ => 2,
    }
}

fn read_module(path: &Path, precision: Option<i64>) -> Result<BKModule, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::BadInput(format!("cannot read {}: {e}", path.display())))?;
    ModuleDocument::parse(&text)?.to_module(precision)
}

fn emit(command: &str, precision: i64, result: serde_json::Value, summary: &str) {
    let report = json!({
        "command": command,
        "precision": precision,
        "result": result,
    });
    println!("{report}");
    eprintln!("{summary}");
}

fn run(cli: Cli) -> Result<(), Error> {
    let precision = cli.precision;
    match cli.cmd {
        Cmd::Weights { module } => {
            let m = read_module(&module, precision)?;
            let weights = factor::weights_all(&m)?;
            emit(
                "weights",
                m.prec(),
                serde_json::to_value(&weights).unwrap(),
                &format!("weights per embedding: {weights:?}"),
            );
        }
        Cmd::SdCheck { module } => {
            let m = read_module(&module, precision)?;
            let report = factor::is_strongly_divisible(&m)?;
            let summary = if report.sd {
                "strongly divisible".to_string()
            } else {
                format!("not strongly divisible: {:?}", report.witness)
            };
            emit("sd-check", m.prec(), serde_json::to_value(&report).unwrap(), &summary);
        }
        Cmd::H0 { module } => {
            let m = read_module(&module, precision)?;
            let h0 = cohom::h0_dim(&m)?;
            emit("h0", m.prec(), json!({ "h0": h0 }), &format!("dim H^0 = {h0}"));
        }
        Cmd::H1sd { module } => {
            let m = read_module(&module, precision)?;
            let report = cohom::cohom_report(&m)?;
            emit(
                "h1sd",
                m.prec(),
                serde_json::to_value(&report).unwrap(),
                &format!("dim H^1_SD = {} (chi = {}, both methods agree)", report.h1_sd, report.chi),
            );
        }
        Cmd::ExtDim { p_module, m_module } => {
            let p_mod = read_module(&p_module, precision)?;
            let m_mod = read_module(&m_module, precision)?;
            let ext = cohom::ext1_sd_dim(&p_mod, &m_mod)?;
            let hom = cohom::hom_dim(&p_mod, &m_mod)?;
            let count = cohom::negative_pair_count(&p_mod, &m_mod)?;
            emit(
                "ext-dim",
                p_mod.prec().max(m_mod.prec()),
                json!({ "count": count, "ext": ext, "hom": hom }),
                &format!("dim Ext^1_SD = {ext}, dim Hom = {hom}, negative pairs = {count}"),
            );
        }
        Cmd::BuildExt { p_module, m_module, cochain } => {
            let p_mod = read_module(&p_module, precision)?;
            let m_mod = read_module(&m_module, precision)?;
            let text = std::fs::read_to_string(&cochain)
                .map_err(|e| Error::BadInput(format!("cannot read {}: {e}", cochain.display())))?;
            let (cfield, mats) = CochainDocument::parse(&text)?.to_matrices()?;
            if &cfield != p_mod.field() {
                return Err(Error::BadInput("cochain field differs from the module field".into()));
            }
            if mats.len() != p_mod.embeddings()
                || mats[0].rows() != m_mod.rank()
                || mats[0].cols() != p_mod.rank()
            {
                return Err(Error::BadInput("cochain shape must be d matrices of size n_M x n_P".into()));
            }
            let n = build_extension(&p_mod, &m_mod, &mats)?;
            let min_prec = precision.unwrap_or_else(|| bkmod::module::n_work(cfield.p(), n.rank()));
            let doc = ModuleDocument::from_module(&n, min_prec);
            println!("{}", doc.to_json());
            eprintln!("extension of rank {} built", n.rank());
        }
        Cmd::NormalizeRank1 { module } => {
            let m = read_module(&module, precision)?;
            let data = indres::normalize_rank_one(&m)?;
            let doc = RankOneDoc::from_data(m.field(), &data);
            emit(
                "normalize-rank1",
                m.prec(),
                serde_json::to_value(&doc).unwrap(),
                &format!("r = {:?}, x_total = {:?}", data.r, m.field().coeffs(data.x_total)),
            );
        }
        Cmd::Restrict { module, to_degree } => {
            let m = read_module(&module, precision)?;
            let down = indres::restrict(&m, to_degree)?;
            let min_prec = precision.unwrap_or_else(|| bkmod::module::n_work(down.field().p(), down.rank()));
            println!("{}", ModuleDocument::from_module(&down, min_prec).to_json());
            eprintln!("restricted to {} embedding(s), rank {}", down.embeddings(), down.rank());
        }
        Cmd::Induce { module, to_degree } => {
            let m = read_module(&module, precision)?;
            let up = indres::induce(&m, to_degree)?;
            let min_prec = precision.unwrap_or_else(|| bkmod::module::n_work(up.field().p(), up.rank()));
            println!("{}", ModuleDocument::from_module(&up, min_prec).to_json());
            eprintln!("induced to {} embedding(s)", up.embeddings());
        }
        Cmd::Classify { p, max_rank, fl_range, rank5_explore } => {
            let _ = FieldSpec::default_field(p, 1)?; // validates p
            let report = if rank5_explore {
                classify::explore_rank(p, max_rank)?
            } else if fl_range {
                classify::verify_fontaine_laffaille_range(p, max_rank)?
            } else {
                classify::verify_low_rank_classification(p, max_rank)?
            };
            let summary = format!(
                "mode {}: {} candidates, {} evaluated, {} counterexample(s)",
                report.mode, report.candidates_total, report.evaluated_total, report.counterexample_count
            );
            emit("classify", precision.unwrap_or(0), serde_json::to_value(&report).unwrap(), &summary);
        }
        Cmd::VerifyDimform { p, max_d } => {
            let rows = cohom::dimform_table(p, max_d)?;
            let ok = rows.iter().all(|r| r.ext as i64 - r.hom as i64 == r.count);
            emit(
                "verify-dimform",
                precision.unwrap_or(0),
                serde_json::to_value(&rows).unwrap(),
                &format!("{} rows, all satisfying ext - hom = count: {ok}", rows.len()),
            );
            if !ok {
                return Err(Error::FormulaMismatch { ext: -1, hom: -1, count: -1 });
            }
        }
        Cmd::RegressQpcase { p, trials } => {
            let report = classify::case_matrix_regressions(p, trials)?;
            emit(
                "regress-qpcase",
                precision.unwrap_or(0),
                serde_json::to_value(&report).unwrap(),
                &format!("{} case eliminations verified at p = {p}", report.outcomes.len()),
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
