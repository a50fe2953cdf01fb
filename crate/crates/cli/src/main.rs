mod commands;
mod output;
mod repl;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Exit statuses shared by every subcommand.
pub mod status {
    pub const OK: u8 = 0;
    pub const DIAGNOSTICS: u8 = 1;
    pub const RUNTIME: u8 = 2;
    pub const USAGE: u8 = 3;
    pub const IO: u8 = 4;
}

#[derive(Parser, Debug)]
#[command(name = "m", version, about = "Run, check and manage M programs and models")]
pub struct Cli {
    /// Model store directory [default: ~/.mstore]
    #[arg(long, global = true, env = "M_STORE", value_name = "DIR")]
    pub store: Option<PathBuf>,

    /// Seed for every random choice the run makes
    #[arg(long, global = true, default_value_t = 0, value_name = "N")]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check and run a program
    Run { file: PathBuf },
    /// Report diagnostics without running
    Check {
        file: PathBuf,
        /// Print diagnostics as a JSON array on stdout
        #[arg(long)]
        json: bool,
    },
    /// Interactive session; `:quit` leaves, `:type EXPR` shows a static type
    Repl,
    /// Manage the model store
    Model {
        #[command(subcommand)]
        action: ModelAction,
    },
    /// Speak the host protocol on stdin/stdout until shutdown
    Serve,
}

#[derive(Subcommand, Debug)]
pub enum ModelAction {
    /// List stored models with their latest version
    List,
    /// Describe a stored model (NAME or NAME@vN)
    Show { reference: String },
    /// Copy a .mmod file into the store as its next version
    Import { path: PathBuf },
    /// Write the built-in pretrained models into the store
    Seed,
}

impl Cli {
    pub fn store_dir(&self) -> PathBuf {
        self.store.clone().unwrap_or_else(|| {
            let home = std::env::var_os("HOME").unwrap_or_else(|| OsString::from("."));
            PathBuf::from(home).join(".mstore")
        })
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { status::USAGE } else { status::OK });
        }
    };
    ExitCode::from(commands::dispatch(&cli))
}
