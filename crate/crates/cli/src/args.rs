use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "deltasys", version, about = "Set systems with restricted intersections")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Family file format, for input and output.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Append a JSON-lines run report to this file.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Skip self-verification of outputs and preconditions.
    #[arg(long, global = true)]
    pub no_verify: bool,
    /// Write the primary output here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate a construction.
    #[command(subcommand)]
    Gen(Gen),
    /// Colour certificate for one level ell.
    Certify {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        ell: usize,
        #[arg(long)]
        m: usize,
    },
    /// Subfamily avoiding intersection sizes in L.
    Extract {
        #[arg(long)]
        family: PathBuf,
        #[arg(long = "L", value_delimiter = ',')]
        l: Vec<usize>,
        #[arg(long)]
        m: usize,
        /// Verification is on by default; kept for compatibility.
        #[arg(long)]
        verify: bool,
    },
    /// Delta-system subfamily with intersection-closed traces.
    WeakFuredi {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        m: usize,
    },
    /// Atomic structure extraction for sizes divisible by d.
    Atomic {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        m: usize,
        /// JSON array of weights (integers or "num/den" strings).
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        verify: bool,
    },
    /// Subfamily whose pairwise intersections are all a mod p.
    ModularExtract {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        a: usize,
        #[arg(long)]
        m: usize,
    },
    /// Fractional colouring by multiplicative weights.
    Color {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        a: usize,
        #[arg(long)]
        m: usize,
    },
    /// Validate a fractional colouring file.
    ColorValidate {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        a: usize,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Find an L-sunflower with m petals.
    Sunflower {
        #[arg(long)]
        family: PathBuf,
        #[arg(long = "L", value_delimiter = ',')]
        l: Vec<usize>,
        #[arg(long)]
        m: usize,
        /// Enumerate every candidate kernel regardless of k.
        #[arg(long)]
        exact: bool,
    },
    /// Largest L-clique.
    Clique {
        #[arg(long)]
        family: PathBuf,
        #[arg(long = "L", value_delimiter = ',')]
        l: Vec<usize>,
        /// Fail unless there is no clique of this size.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Exhaustive checks and exact optimizers.
    #[command(subcommand)]
    Oracle(Oracle),
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Gen {
    Chain {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
    },
    Tree {
        #[arg(long)]
        k: usize,
        #[arg(long = "L", value_delimiter = ',')]
        l: Vec<usize>,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
    },
    Product {
        #[arg(long)]
        k: usize,
        #[arg(long = "L", value_delimiter = ',')]
        l: Vec<usize>,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        a: usize,
        /// Family file for the base construction.
        #[arg(long)]
        base: PathBuf,
    },
    Residue {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        a: usize,
        #[arg(long)]
        n: usize,
    },
    Hadamard {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        k: usize,
    },
    Parity {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
    },
    Fftest {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        ell: usize,
        #[arg(long)]
        p: usize,
        /// Index pattern, e.g. `1-2,1-3` for {{1,2},{1,3}}.
        #[arg(long = "I")]
        pattern: String,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 20)]
        kernels: usize,
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
        /// Enumerate all of GL when small enough.
        #[arg(long)]
        micro: bool,
    },
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case", tag = "check")]
pub enum Oracle {
    /// Maximum subfamily avoiding L.
    Mis {
        #[arg(long)]
        family: PathBuf,
        #[arg(long = "L", value_delimiter = ',')]
        l: Vec<usize>,
    },
    /// Exact L-clique number.
    Clique {
        #[arg(long)]
        family: PathBuf,
        #[arg(long = "L", value_delimiter = ',')]
        l: Vec<usize>,
    },
    /// Exhaustive check that no L-sunflower with m petals exists.
    Sunflower {
        #[arg(long)]
        family: PathBuf,
        #[arg(long = "L", value_delimiter = ',')]
        l: Vec<usize>,
        #[arg(long)]
        m: usize,
    },
    /// Longest convex decreasing sequence in L, or in the sizes below k not a mod p.
    Convex {
        #[arg(long = "L", value_delimiter = ',')]
        l: Vec<usize>,
        #[arg(long, requires_all = ["p", "a"])]
        k: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        a: Option<usize>,
    },
    /// Search for an intersection-closed covering family with sizes in L mod p.
    Prop45 {
        #[arg(long = "X")]
        x: usize,
        #[arg(long)]
        p: usize,
        #[arg(long = "L", value_delimiter = ',')]
        l: Vec<usize>,
    },
    /// Replay a certificate file against its family.
    VerifyCert {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        cert: PathBuf,
    },
    /// Check an atomic structure file.
    VerifyAtomic {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        weights: Option<PathBuf>,
    },
}
