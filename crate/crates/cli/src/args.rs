use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

use steklov_core::experiments::Regime;
use steklov_core::geometry::{ChartFn, DomainKind, Profile};
use steklov_core::Result;

use crate::config::{RunConfig, KEY_TABLE};

#[derive(Parser, Debug)]
#[command(name = "steklov", version, about = "Trace eigenvalues with boundary windows on oscillating domains")]
#[command(after_help = KEY_TABLE)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Tabulate the homogenized weight m(x) over the chart.
    Weight,
    /// Solve for one eigenpair with a window anchored at the bottom-left corner.
    Solve,
    /// Optimize the window for a single domain.
    Optimize,
    /// Run a sweep over k and write the CSV report.
    Sweep,
    /// Evaluate the change-of-variables invariants for every k.
    CheckTransform,
    /// Run a sweep and write the CSV report plus full diagnostics as JSON.
    Report,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum RegimeArg {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum ProfileArg {
    Zero,
    Sin2,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum DomainArg {
    Square,
    Disk,
}

/// Overrides for the config file; every flag is optional.
#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// Config file, TOML by extension or JSON.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub regime: Option<RegimeArg>,
    #[arg(long, global = true)]
    pub a: Option<f64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Cell counts, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub profile: Option<ProfileArg>,
    /// Chart polynomial coefficients, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub phi: Option<Vec<f64>>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub phi_slope: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub domain: Option<DomainArg>,
    #[arg(long, global = true)]
    pub h: Option<f64>,
    #[arg(long, global = true)]
    pub h_factor: Option<f64>,
    #[arg(long, global = true)]
    pub h_min: Option<f64>,
    #[arg(long, global = true)]
    pub boundary_refine: Option<usize>,
    #[arg(long, global = true)]
    pub band_refine: Option<usize>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub intervals: Option<usize>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

impl Flags {
    /// File values (or defaults) with every given flag applied on top.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(r) = self.regime {
            c.regime = Some(match r {
                RegimeArg::Subcritical => Regime::Subcritical,
                RegimeArg::Critical => Regime::Critical,
                RegimeArg::Supercritical => Regime::Supercritical,
            });
            if self.a.is_none() {
                c.a = None;
            }
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field.clone() {
                    c.$field = v;
                }
            )*};
        }
        set!(alpha, p, k, h_factor, h_min, boundary_refine, band_refine, delta, intervals, samples, seed);
        if self.a.is_some() {
            c.a = self.a;
        }
        if self.eps.is_some() {
            c.eps = self.eps;
        }
        if self.h.is_some() {
            c.h = self.h;
        }
        if self.phi_slope.is_some() {
            c.phi_slope = self.phi_slope;
        }
        if self.output.is_some() {
            c.output = self.output.clone();
        }
        if let Some(p) = self.profile {
            c.profile = match p {
                ProfileArg::Zero => Profile::Zero,
                ProfileArg::Sin2 => Profile::SinSquared,
            };
        }
        if let Some(coeffs) = &self.phi {
            c.phi = ChartFn::polynomial(coeffs.clone());
        }
        if let Some(d) = self.domain {
            c.domain = match d {
                DomainArg::Square => DomainKind::SquareTopChart,
                DomainArg::Disk => DomainKind::UnitDisk,
            };
        }
        c.verbosity = c.verbosity.max(self.verbose);
        c.validate()?;
        Ok(c)
    }
}
