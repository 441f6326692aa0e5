//! `isea`: encrypt, decrypt and attack images with the bit-scrambling cipher.

mod oracle;

use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use isea_core::coa::{coa_attack_with, AxisOrder, CoaOptions};
use isea_core::cpa::{cpa_attack, prior_estimate, required_images};
use isea_core::imgio::{parse_key, read_eqkey, read_pgm, write_eqkey, write_pgm};
use isea_core::kpa::kpa_attack;
use isea_core::{apply_equivalent, compose, composite_equivalent_key, decrypt, encrypt, Direction, GrayImage, SecretKey};

use crate::oracle::CommandOracle;

#[derive(Parser, Debug)]
#[command(name = "isea", version, about = "Bit-level image scrambling cipher and its cryptanalysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Encrypt a PGM image with a secret key file.
    Encrypt(CryptArgs),
    /// Decrypt a PGM image with a secret key file.
    Decrypt(CryptArgs),
    /// Write the equivalent (composite) key of a secret key for one image size.
    Eqkey {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        height: usize,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encrypt or decrypt with an equivalent key.
    Apply {
        #[arg(long)]
        eqkey: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        direction: DirectionArg,
    },
    /// Ciphertext-only reassembly of a cipher image.
    Coa {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "cols-first")]
        axis_order: AxisOrderArg,
        /// Passes over both axes.
        #[arg(long, default_value_t = 1)]
        passes: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Known-plaintext attack from PLAIN:CIPHER pairs of PGM files.
    Kpa {
        #[arg(long = "pair", required = true, value_parser = parse_pair)]
        pairs: Vec<(PathBuf, PathBuf)>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Chosen-plaintext attack against an encryption oracle.
    Cpa {
        #[arg(long)]
        height: usize,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        oracle: OracleArgs,
    },
    /// Print the chosen-plaintext counts for an image size.
    Info {
        #[arg(long)]
        height: usize,
        #[arg(long)]
        width: usize,
    },
}

#[derive(Args, Debug)]
struct CryptArgs {
    #[arg(long)]
    key: PathBuf,
    /// Input PGM, `-` for standard input.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output PGM, `-` for standard output.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct OracleArgs {
    /// Shell command that reads a PGM on stdin and writes its ciphertext on stdout.
    #[arg(long)]
    oracle_cmd: Option<String>,
    /// Key file for an in-process oracle.
    #[arg(long)]
    oracle_key: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DirectionArg {
    Encrypt,
    Decrypt,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AxisOrderArg {
    ColsFirst,
    RowsFirst,
}

fn parse_pair(s: &str) -> Result<(PathBuf, PathBuf), String> {
    match s.split_once(':') {
        Some((p, c)) if !p.is_empty() && !c.is_empty() => Ok((p.into(), c.into())),
        _ => Err(format!("expected PLAIN:CIPHER, got {s:?}")),
    }
}

/// Diagnostic categories, each with its own prefix.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
    Input(String),
    Oracle(String),
    Attack(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Io(m) => write!(f, "io error: {m}"),
            Failure::Input(m) => write!(f, "input error: {m}"),
            Failure::Oracle(m) => write!(f, "oracle error: {m}"),
            Failure::Attack(m) => write!(f, "attack error: {m}"),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn attack_failure(e: isea_core::Error) -> Failure {
    match e {
        isea_core::Error::Protocol(m) => Failure::Oracle(m),
        other => Failure::Attack(other.to_string()),
    }
}

fn is_stdio(path: &Path) -> bool {
    path.as_os_str() == "-"
}

fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    if is_stdio(path) {
        let mut buf = Vec::new();
        io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| Failure::Io(format!("stdin: {e}")))?;
        return Ok(buf);
    }
    fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> CliResult<String> {
    String::from_utf8(read_bytes(path)?).map_err(|_| Failure::Input(format!("{}: not UTF-8 text", path.display())))
}

fn load_image(path: &Path) -> CliResult<GrayImage> {
    read_pgm(&read_bytes(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_key(path: &Path) -> CliResult<SecretKey> {
    parse_key(&read_text(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so a failed run leaves no partial output.
fn write_output(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let io_err = |e: io::Error| Failure::Io(format!("{}: {e}", path.display()));
    if is_stdio(path) {
        let mut out = io::stdout().lock();
        out.write_all(bytes).map_err(io_err)?;
        return out.flush().map_err(io_err);
    }
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Encrypt(args) => crypt(&args, Direction::Encrypt),
        Command::Decrypt(args) => crypt(&args, Direction::Decrypt),
        Command::Eqkey {
            key,
            height,
            width,
            out,
        } => {
            let key = load_key(&key)?;
            let eq = composite_equivalent_key(&key, height, width).map_err(|e| Failure::Usage(e.to_string()))?;
            write_output(&out, write_eqkey(&eq).as_bytes())
        }
        Command::Apply {
            eqkey,
            input,
            out,
            direction,
        } => {
            let eq = read_eqkey(&read_text(&eqkey)?).map_err(|e| Failure::Input(format!("{}: {e}", eqkey.display())))?;
            let img = load_image(&input)?;
            let direction = match direction {
                DirectionArg::Encrypt => Direction::Encrypt,
                DirectionArg::Decrypt => Direction::Decrypt,
            };
            let res = apply_equivalent(&img, &eq, direction).map_err(|e| Failure::Input(e.to_string()))?;
            write_output(&out, &write_pgm(&res))
        }
        Command::Coa {
            input,
            out,
            axis_order,
            passes,
            report,
        } => {
            let img = load_image(&input)?;
            let opts = CoaOptions {
                axis_order: match axis_order {
                    AxisOrderArg::ColsFirst => AxisOrder::ColsThenRows,
                    AxisOrderArg::RowsFirst => AxisOrder::RowsThenCols,
                },
                passes,
            };
            let res = coa_attack_with(&img, &opts).map_err(attack_failure)?;
            let recovered = compose(&res.matrix).map_err(attack_failure)?;
            if let Some(report) = report {
                let join = |p: &isea_core::Permutation| {
                    p.as_slice().iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
                };
                let text = format!(
                    "adjacency_before={:.6}\nadjacency_after={:.6}\naxis_order={}\npasses={}\nrow_order={}\ncol_order={}\n",
                    res.adjacency_before,
                    res.adjacency_after,
                    match axis_order {
                        AxisOrderArg::ColsFirst => "cols-first",
                        AxisOrderArg::RowsFirst => "rows-first",
                    },
                    passes,
                    join(&res.row_order),
                    join(&res.col_order),
                );
                write_output(&report, text.as_bytes())?;
            }
            write_output(&out, &write_pgm(&recovered))
        }
        Command::Kpa { pairs, out, trace } => {
            let images = pairs
                .iter()
                .map(|(p, c)| Ok((load_image(p)?, load_image(c)?)))
                .collect::<CliResult<Vec<_>>>()?;
            let (key, sets) = kpa_attack(&images).map_err(attack_failure)?;
            if let Some(trace) = trace {
                write_output(&trace, sets.trace_table().as_bytes())?;
            }
            write_output(&out, write_eqkey(&key).as_bytes())?;
            println!("R_size={}", sets.resolved_row_count());
            println!("C_size={}", sets.resolved_col_count());
            println!("fallback_rows={}", sets.fallback_rows());
            println!("fallback_cols={}", sets.fallback_cols());
            Ok(())
        }
        Command::Cpa {
            height,
            width,
            out,
            oracle,
        } => {
            let mut queries = 0;
            let key = match (oracle.oracle_cmd, oracle.oracle_key) {
                (Some(cmd), None) => {
                    let mut o = CommandOracle::new(cmd);
                    let key = cpa_attack(&mut o, height, width);
                    queries = o.queries();
                    key
                }
                (None, Some(path)) => {
                    let secret = load_key(&path)?;
                    let mut o = |p: &GrayImage| {
                        queries += 1;
                        encrypt(p, &secret)
                    };
                    cpa_attack(&mut o, height, width)
                }
                _ => return Err(Failure::Usage("give exactly one of --oracle-cmd or --oracle-key".into())),
            }
            .map_err(attack_failure)?;
            write_output(&out, write_eqkey(&key).as_bytes())?;
            println!("queries={queries}");
            Ok(())
        }
        Command::Info { height, width } => {
            if height == 0 || width == 0 {
                return Err(Failure::Usage("height and width must be positive".into()));
            }
            println!("n_star={}", required_images(height, width));
            println!("n_prior={}", prior_estimate(height, width));
            Ok(())
        }
    }
}

fn crypt(args: &CryptArgs, direction: Direction) -> CliResult<()> {
    let key = load_key(&args.key)?;
    let img = load_image(&args.input)?;
    let res = match direction {
        Direction::Encrypt => encrypt(&img, &key),
        Direction::Decrypt => decrypt(&img, &key),
    }
    .map_err(|e| Failure::Input(e.to_string()))?;
    write_output(&args.out, &write_pgm(&res))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let line = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("{}", Failure::Usage(line.trim_start_matches("error: ").to_string()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::FAILURE
        }
    }
}
