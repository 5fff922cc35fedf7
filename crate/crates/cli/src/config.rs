//! Experiment options from flags and `key = value` config files.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, ValueEnum};
use closecap::asymptotics::scaling_regimes;
use closecap::geometry::{build_pair, BodySpec, MeshOptions, ResonatorPair};
use closecap::materials::MaterialParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Sphere,
    Superellipsoid,
    Ellipsoid,
}

/// Flags shared by every subcommand. Each one can also be given as
/// `name = value` in a `--config` file; flags win over the file.
#[derive(Args, Clone, Debug, Default)]
pub struct ExperimentArgs {
    /// Flat `key = value` file mirroring these flags.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Contact order of superellipsoids (2 for spheres and ellipsoids).
    #[arg(long)]
    pub m: Option<u32>,
    /// Radius / half-width of the upper body.
    #[arg(long)]
    pub a1: Option<f64>,
    /// Radius / half-width of the lower body (defaults to `a1`).
    #[arg(long)]
    pub a2: Option<f64>,
    /// Ellipsoid semi-axes `A,B,C` (both bodies).
    #[arg(long, value_delimiter = ',', value_name = "A,B,C")]
    pub axes: Option<Vec<f64>>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Log-spaced gap sweep.
    #[arg(long, num_args = 3, value_names = ["START", "STOP", "COUNT"])]
    pub eps_sweep: Option<Vec<f64>>,
    /// Density contrast ρ_b/ρ.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Log-spaced contrast sweep for coupled runs (needs `--beta`).
    #[arg(long, num_args = 3, value_names = ["START", "STOP", "COUNT"])]
    pub delta_sweep: Option<Vec<f64>>,
    /// Wave speed inside the resonators (default 1).
    #[arg(long)]
    pub vb: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub rho_b: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub kappa_b: Option<f64>,
    /// Couple the gap to the contrast, ε = ε(δ), so that ω₂ ∼ δ^{β/2}.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub level: Option<u32>,
    /// Growth ratio of the polar rings near the contact poles.
    #[arg(long)]
    pub grading: Option<f64>,
    /// First pole ring as a fraction of the flat-gap radius.
    #[arg(long)]
    pub cap_fraction: Option<f64>,
    /// Image-charge truncation tolerance (relative charge size).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Add image-charge columns (two spheres only).
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Print the output columns and exit.
    #[arg(long)]
    pub schema: bool,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<closecap::Error> for ConfigError {
    fn from(e: closecap::Error) -> Self {
        ConfigError(e.to_string())
    }
}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Parser for config files: the file's lines become flags.
#[derive(Parser)]
#[command(no_binary_name = true)]
struct FileArgs {
    #[command(flatten)]
    args: ExperimentArgs,
}

fn read_config(path: &Path) -> Result<ExperimentArgs, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let mut tokens = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return bad(format!("{}:{}: expected `key = value`", path.display(), n + 1));
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key == "config" {
            return bad(format!("{}:{}: config files cannot nest", path.display(), n + 1));
        }
        match value {
            "true" => tokens.push(format!("--{key}")),
            "false" => {}
            _ => {
                tokens.push(format!("--{key}"));
                tokens.extend(value.split_whitespace().map(str::to_owned));
            }
        }
    }
    FileArgs::try_parse_from(tokens)
        .map(|f| f.args)
        .map_err(|e| ConfigError(format!("{}: {}", path.display(), e.to_string().trim())))
}

impl ExperimentArgs {
    /// Fill unset flags from the `--config` file, if any.
    pub fn with_config_file(self) -> Result<Self, ConfigError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let file = read_config(&path)?;
        Ok(ExperimentArgs {
            config: Some(path),
            family: self.family.or(file.family),
            m: self.m.or(file.m),
            a1: self.a1.or(file.a1),
            a2: self.a2.or(file.a2),
            axes: self.axes.or(file.axes),
            eps: self.eps.or(file.eps),
            eps_sweep: self.eps_sweep.or(file.eps_sweep),
            delta: self.delta.or(file.delta),
            delta_sweep: self.delta_sweep.or(file.delta_sweep),
            vb: self.vb.or(file.vb),
            rho: self.rho.or(file.rho),
            rho_b: self.rho_b.or(file.rho_b),
            kappa: self.kappa.or(file.kappa),
            kappa_b: self.kappa_b.or(file.kappa_b),
            beta: self.beta.or(file.beta),
            level: self.level.or(file.level),
            grading: self.grading.or(file.grading),
            cap_fraction: self.cap_fraction.or(file.cap_fraction),
            tol: self.tol.or(file.tol),
            oracle: self.oracle || file.oracle,
            out: self.out.or(file.out),
            schema: self.schema || file.schema,
        })
    }
}

/// One point of a sweep: the gap and, for coupled runs, its own contrast.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub eps: f64,
    pub materials: Option<MaterialParams<f64>>,
}

/// Fully resolved experiment.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub family: Family,
    pub upper: BodySpec<f64>,
    pub lower: BodySpec<f64>,
    pub points: Vec<SweepPoint>,
    pub mesh: MeshOptions<f64>,
    pub tol: f64,
    pub oracle: bool,
    pub out: Option<PathBuf>,
}

impl Experiment {
    pub fn pair(&self, eps: f64) -> closecap::Result<ResonatorPair<f64>> {
        build_pair(self.upper.clone(), self.lower.clone(), eps)
    }

    pub fn order(&self) -> u32 {
        self.upper.order
    }

    pub fn is_two_spheres(&self) -> bool {
        self.family == Family::Sphere
    }
}

fn log_space(name: &str, spec: &[f64]) -> Result<Vec<f64>, ConfigError> {
    let [start, stop, count] = spec else {
        return bad(format!("--{name} takes START STOP COUNT"));
    };
    if !(count.fract() == 0.0 && *count >= 1.0) {
        return bad(format!("--{name} count must be a positive integer, got {count}"));
    }
    if !(*start > 0.0 && *stop > 0.0) {
        return bad(format!("--{name} bounds must be positive"));
    }
    let n = *count as usize;
    if n == 1 {
        return Ok(vec![*start]);
    }
    let (a, b) = (start.ln(), stop.ln());
    Ok((0..n)
        .map(|k| match k {
            0 => *start,
            k if k == n - 1 => *stop,
            k => (a + (b - a) * k as f64 / (n - 1) as f64).exp(),
        })
        .collect())
}

fn positive(name: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        bad(format!("--{name} must be positive, got {v}"))
    }
}

fn materials(args: &ExperimentArgs, delta: Option<f64>) -> Result<Option<MaterialParams<f64>>, ConfigError> {
    let explicit = [args.rho, args.rho_b, args.kappa, args.kappa_b];
    if explicit.iter().any(Option::is_some) {
        let [Some(rho), Some(rho_b), Some(kappa), Some(kappa_b)] = explicit else {
            return bad("--rho, --rho-b, --kappa and --kappa-b go together");
        };
        if delta.is_some() || args.vb.is_some() {
            return bad("give either (--rho, --rho-b, --kappa, --kappa-b) or (--delta, --vb)");
        }
        let m = MaterialParams::new(rho, rho_b, kappa, kappa_b)?;
        if !(m.delta() < 1.0) {
            return bad(format!("contrast δ = ρ_b/ρ = {} must lie in (0, 1)", m.delta()));
        }
        return Ok(Some(m));
    }
    match delta {
        Some(d) => Ok(Some(MaterialParams::from_contrast(d, positive("vb", args.vb.unwrap_or(1.0))?)?)),
        None if args.vb.is_some() => bad("--vb needs --delta"),
        None => Ok(None),
    }
}

fn shapes(args: &ExperimentArgs) -> Result<(Family, BodySpec<f64>, BodySpec<f64>), ConfigError> {
    let family = args.family.unwrap_or(Family::Sphere);
    let a1 = positive("a1", args.a1.unwrap_or(1.0))?;
    let a2 = positive("a2", args.a2.unwrap_or(a1))?;
    if family != Family::Ellipsoid && args.axes.is_some() {
        return bad("--axes applies to the ellipsoid family only");
    }
    let (upper, lower) = match family {
        Family::Sphere => {
            if args.m.is_some_and(|m| m != 2) {
                return bad("spheres have contact order m = 2");
            }
            (BodySpec::sphere(a1)?, BodySpec::sphere(a2)?)
        }
        Family::Superellipsoid => {
            let m = args.m.unwrap_or(4);
            (BodySpec::superellipsoid(a1, m)?, BodySpec::superellipsoid(a2, m)?)
        }
        Family::Ellipsoid => {
            if args.m.is_some_and(|m| m != 2) {
                return bad("ellipsoids have contact order m = 2");
            }
            let Some(&[a, b, c]) = args.axes.as_deref() else {
                return bad("the ellipsoid family needs --axes A,B,C");
            };
            (BodySpec::ellipsoid(a, b, c)?, BodySpec::ellipsoid(a, b, c)?)
        }
    };
    Ok((family, upper, lower))
}

impl ExperimentArgs {
    /// Validate and expand into sweep points.
    pub fn resolve(&self) -> Result<Experiment, ConfigError> {
        let (family, upper, lower) = shapes(self)?;
        let m = upper.order;
        if self.eps.is_some() && self.eps_sweep.is_some() {
            return bad("--eps and --eps-sweep are exclusive");
        }
        if self.delta.is_some() && self.delta_sweep.is_some() {
            return bad("--delta and --delta-sweep are exclusive");
        }
        let points = if let Some(beta) = self.beta {
            if self.eps.is_some() || self.eps_sweep.is_some() {
                return bad("--beta derives ε from δ; drop --eps/--eps-sweep");
            }
            if self.rho.is_some() {
                return bad("coupled sweeps take --delta or --delta-sweep, not explicit densities");
            }
            let deltas = match (&self.delta, &self.delta_sweep) {
                (Some(d), None) => vec![*d],
                (None, Some(s)) => log_space("delta-sweep", s)?,
                _ => return bad("--beta needs --delta or --delta-sweep"),
            };
            deltas
                .into_iter()
                .map(|d| {
                    Ok(SweepPoint {
                        eps: scaling_regimes(m, d, beta)?,
                        materials: materials(self, Some(d))?,
                    })
                })
                .collect::<Result<Vec<_>, ConfigError>>()?
        } else {
            if self.delta_sweep.is_some() {
                return bad("--delta-sweep needs --beta");
            }
            let gaps = match (&self.eps, &self.eps_sweep) {
                (Some(e), None) => vec![positive("eps", *e)?],
                (None, Some(s)) => log_space("eps-sweep", s)?,
                _ => return bad("give --eps, --eps-sweep, or --beta with --delta"),
            };
            let mat = materials(self, self.delta)?;
            gaps.into_iter().map(|eps| SweepPoint { eps, materials: mat }).collect()
        };
        let mut mesh = MeshOptions::new(self.level.unwrap_or(3));
        if let Some(g) = self.grading {
            mesh = mesh.grading(g);
        }
        if let Some(c) = self.cap_fraction {
            mesh = mesh.cap_fraction(positive("cap-fraction", c)?);
        }
        if !(mesh.grading > 1.0 && mesh.grading <= 3.0) {
            return bad(format!("--grading must lie in (1, 3], got {}", mesh.grading));
        }
        let tol = self.tol.unwrap_or(1e-12);
        if !(tol > 1e-14 && tol < 1e-6) {
            return bad(format!("--tol must lie in (1e-14, 1e-6), got {tol}"));
        }
        if self.oracle && family != Family::Sphere {
            return bad("--oracle needs the sphere family");
        }
        Ok(Experiment {
            family,
            upper,
            lower,
            points,
            mesh,
            tol,
            oracle: self.oracle,
            out: self.out.clone(),
        })
    }
}
