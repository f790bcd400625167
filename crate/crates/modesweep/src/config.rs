//! Declarative run configuration.
//!
//! A run is described by a single TOML file.  Every field has a default,
//! so an empty file (or no file at all) describes the standard sweep;
//! command-line flags may override the output directory, the worker
//! count, and the grid size after the file is parsed.  [`RunConfig`]
//! stores names (flow, data family, inequality ids) as strings and
//! resolves them on demand, so a typo is reported with the offending
//! name rather than as a deserialization failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use serde::Deserialize;

use crate::bounds::BoundId;
use crate::error::{Error, Result};
use crate::grid::{Domain, Grid};
use crate::hydrostatic::ChannelData;
use crate::mode::Mode;
use crate::shearflow::ShearFlow;
use crate::tripledeck::DataFamily;

/// Top-level configuration for a sweep or evolution run.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Background flow name, resolved by [`ShearFlow::from_name`].
    pub flow: String,
    /// Cutoff height for the `cutoff-linear` flow; ignored otherwise.
    pub cutoff: Option<f64>,
    /// Half-line initial-data family.
    pub data: String,
    /// Channel initial-data family.
    pub channel_data: String,
    /// Output directory for CSV and JSON reports.
    pub out: PathBuf,
    /// Worker threads; `0` means one per available core.
    pub workers: usize,
    /// Discretization parameters.
    pub grid: GridConfig,
    /// Mode list for the resolvent sweep.
    pub sweep: SweepConfig,
    /// Time-marching parameters.
    pub evolve: EvolveConfig,
    /// Inequality selection and ceilings.
    pub bounds: BoundsConfig,
}

/// Spectral grid parameters shared by the half-line and the channel.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Polynomial degree (the grid carries `n + 1` nodes).
    pub n: usize,
    /// Truncation height of the half-line.
    pub y_max: f64,
    /// Node-clustering strength towards the wall.
    pub stretch: f64,
}

/// Which `(lambda, k)` modes the resolvent sweep visits.
///
/// For each wavenumber `k` the sweep places modes on the vertical ray
/// `Re lambda = k_star |k|^{2/3}` at `Im lambda = m k^2` for each
/// multiplier `m`, plus near-resonant samples at
/// `lambda = f k^2 / 2 - i k |k|` for each fraction `f`, which sit
/// inside the disc where the resonant-mode decomposition switches
/// branch.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Wavenumbers to visit; each must be nonzero.
    pub k: Vec<f64>,
    /// Coefficient of `|k|^{2/3}` fixing the real part of the ray.
    pub k_star: f64,
    /// Imaginary parts, in units of `k^2`.
    pub im_multipliers: Vec<f64>,
    /// Radii of near-resonant samples, as fractions of the disc radius.
    pub case2_fractions: Vec<f64>,
}

/// Time-marching parameters for trajectories and growth-rate fits.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    /// Wavenumbers to march; each must be nonzero.
    pub k: Vec<f64>,
    /// Final time of each trajectory.
    pub t_final: f64,
    /// Time-step safety factor: `dt = margin / (|k| max V_s)`.
    pub margin: f64,
    /// Number of H-norm samples retained along each trajectory.
    pub samples: usize,
}

/// Inequality selection and per-inequality ceilings.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    /// Inequality ids to check; empty means every known inequality.
    pub include: Vec<String>,
    /// Ceiling overrides keyed by inequality id; ids absent here use
    /// [`default_ceiling`].
    pub ceilings: BTreeMap<String, f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            flow: "exp-concave".to_string(),
            cutoff: None,
            data: "gaussian".to_string(),
            channel_data: "skew".to_string(),
            out: PathBuf::from("out"),
            workers: 0,
            grid: GridConfig::default(),
            sweep: SweepConfig::default(),
            evolve: EvolveConfig::default(),
            bounds: BoundsConfig::default(),
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n: 512,
            y_max: 40.0,
            stretch: 0.12,
        }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            k: vec![8.0, 16.0, 32.0, 64.0, 128.0],
            k_star: 10.0,
            im_multipliers: vec![0.0, 1.0, -1.0, 4.0, -4.0],
            case2_fractions: vec![0.5],
        }
    }
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            k: vec![16.0, 32.0, 64.0, 128.0, 256.0],
            t_final: 1.0,
            margin: 0.05,
            samples: 64,
        }
    }
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            include: Vec::new(),
            ceilings: BTreeMap::new(),
        }
    }
}

/// Default ceiling for an inequality's implied constant.
///
/// Most constants sit at order one on the default grids, so a ceiling
/// of ten flags a regression without tripping on roundoff; the three
/// exceptions are comparisons whose constants are genuinely large
/// (weight equivalence carries `(1 + y)^6` across the matching height,
/// corrector moments grow with `|Im lambda|`, and the decay comparison
/// pays the Gevrey exponent), and their ceilings are set one order
/// above the worst value observed on the default sweep.
pub fn default_ceiling(id: BoundId) -> f64 {
    match id {
        BoundId::CorrectorMoments => 2.5e5,
        BoundId::ResolventDecay | BoundId::ResolventDecayWeighted => 100.0,
        BoundId::WeightSandwich => 3500.0,
        _ => 10.0,
    }
}

impl RunConfig {
    /// Parse a configuration file and validate the result.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::ReadFile {
            path: path.to_path_buf(),
            source,
        })?;
        let config: RunConfig = toml::from_str(&text).map_err(|err| Error::ParseConfig {
            path: path.to_path_buf(),
            message: err.message().to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Check every invariant the commands rely on.
    pub fn validate(&self) -> Result<()> {
        self.flow()?;
        self.data_family()?;
        self.channel_data()?;
        self.half_line_ids()?;
        for (name, &ceiling) in &self.bounds.ceilings {
            let id = BoundId::from_str(name)?;
            if !(ceiling > 0.0 && ceiling.is_finite()) {
                return Err(Error::Config(format!(
                    "ceiling for {id} must be positive and finite, got {ceiling}"
                )));
            }
        }
        check_wavenumbers("sweep.k", &self.sweep.k)?;
        check_wavenumbers("evolve.k", &self.evolve.k)?;
        if !(self.sweep.k_star > 0.0 && self.sweep.k_star.is_finite()) {
            return Err(Error::Config(format!(
                "sweep.k_star must be positive, got {}",
                self.sweep.k_star
            )));
        }
        for &m in &self.sweep.im_multipliers {
            if !m.is_finite() {
                return Err(Error::Config(
                    "sweep.im_multipliers must be finite".to_string(),
                ));
            }
        }
        for &f in &self.sweep.case2_fractions {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Config(format!(
                    "sweep.case2_fractions must lie strictly between 0 and 1, got {f}"
                )));
            }
        }
        if !(self.evolve.t_final > 0.0 && self.evolve.t_final.is_finite()) {
            return Err(Error::Config(format!(
                "evolve.t_final must be positive, got {}",
                self.evolve.t_final
            )));
        }
        if !(self.evolve.margin > 0.0 && self.evolve.margin <= 0.5) {
            return Err(Error::Config(format!(
                "evolve.margin must lie in (0, 0.5], got {}",
                self.evolve.margin
            )));
        }
        if self.evolve.samples < 2 {
            return Err(Error::Config(format!(
                "evolve.samples must be at least 2, got {}",
                self.evolve.samples
            )));
        }
        // Grid parameters are validated by the builders themselves; run
        // both here so a bad file fails before any work starts.
        self.half_line_grid(None, None)?;
        self.channel_grid(None)?;
        Ok(())
    }

    /// Resolve the background flow.
    pub fn flow(&self) -> Result<ShearFlow> {
        ShearFlow::from_name(&self.flow, self.cutoff)
    }

    /// Resolve the half-line data family.
    pub fn data_family(&self) -> Result<DataFamily> {
        DataFamily::from_str(&self.data)
    }

    /// Resolve the channel data family.
    pub fn channel_data(&self) -> Result<ChannelData> {
        ChannelData::from_str(&self.channel_data)
    }

    /// Build the half-line grid, honoring command-line overrides.
    pub fn half_line_grid(&self, n: Option<usize>, y_max: Option<f64>) -> Result<Grid> {
        Grid::build(
            Domain::HalfLine,
            n.unwrap_or(self.grid.n),
            y_max.unwrap_or(self.grid.y_max),
            self.grid.stretch,
        )
    }

    /// Build the channel grid, honoring a command-line override.
    pub fn channel_grid(&self, n: Option<usize>) -> Result<Grid> {
        Grid::build(Domain::UnitInterval, n.unwrap_or(self.grid.n), 1.0, 0.0)
    }

    /// Half-line inequalities to check, in report order; an empty
    /// `include` list selects all of them.
    pub fn half_line_ids(&self) -> Result<Vec<BoundId>> {
        self.filtered_ids(&BoundId::HALF_LINE)
    }

    /// Channel inequalities to check, in report order.
    pub fn channel_ids(&self) -> Result<Vec<BoundId>> {
        self.filtered_ids(&BoundId::CHANNEL)
    }

    fn filtered_ids(&self, all: &[BoundId]) -> Result<Vec<BoundId>> {
        if self.bounds.include.is_empty() {
            return Ok(all.to_vec());
        }
        let chosen: Vec<BoundId> = self
            .bounds
            .include
            .iter()
            .map(|name| BoundId::from_str(name))
            .collect::<Result<_>>()?;
        Ok(all.iter().copied().filter(|id| chosen.contains(id)).collect())
    }

    /// Ceiling for one inequality, with the configured override if any.
    pub fn ceiling(&self, id: BoundId) -> f64 {
        self.bounds
            .ceilings
            .get(id.id())
            .copied()
            .unwrap_or_else(|| default_ceiling(id))
    }

    /// The modes the sweep visits for one wavenumber, in a fixed order:
    /// the ray modes in multiplier order, then the near-resonant
    /// samples in fraction order.
    pub fn modes_for(&self, k: f64) -> Result<Vec<Mode>> {
        let re = self.sweep.k_star * k.abs().powf(2.0 / 3.0);
        let mut modes = Vec::new();
        for &m in &self.sweep.im_multipliers {
            modes.push(Mode::new(k, Complex64::new(re, m * k * k))?);
        }
        for &f in &self.sweep.case2_fractions {
            let lambda = Complex64::new(f * k * k / 2.0, -k * k.abs());
            modes.push(Mode::new(k, lambda)?);
        }
        Ok(modes)
    }
}

fn check_wavenumbers(field: &str, list: &[f64]) -> Result<()> {
    if list.is_empty() {
        return Err(Error::Config(format!("{field} must not be empty")));
    }
    for &k in list {
        if k == 0.0 || !k.is_finite() {
            return Err(Error::Config(format!(
                "{field} entries must be nonzero and finite, got {k}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn empty_file_equals_defaults() {
        let parsed: RunConfig = toml::from_str("").unwrap();
        let defaults = RunConfig::default();
        assert_eq!(parsed.flow, defaults.flow);
        assert_eq!(parsed.grid.n, defaults.grid.n);
        assert_eq!(parsed.sweep.k, defaults.sweep.k);
        assert_eq!(parsed.evolve.margin, defaults.evolve.margin);
    }

    #[test]
    fn partial_file_overrides_only_named_fields() {
        let text = r#"
            flow = "rational-concave"

            [grid]
            n = 128

            [bounds]
            include = ["amplitude", "alpha0"]

            [bounds.ceilings]
            amplitude = 25.0
        "#;
        let parsed: RunConfig = toml::from_str(text).unwrap();
        parsed.validate().unwrap();
        assert_eq!(parsed.grid.n, 128);
        assert_eq!(parsed.grid.y_max, 40.0);
        let ids = parsed.half_line_ids().unwrap();
        assert_eq!(ids, vec![BoundId::Amplitude, BoundId::Alpha0]);
        assert_eq!(parsed.channel_ids().unwrap(), vec![BoundId::Alpha0]);
        assert_eq!(parsed.ceiling(BoundId::Amplitude), 25.0);
        assert_eq!(parsed.ceiling(BoundId::Alpha0), 10.0);
    }

    #[test]
    fn unknown_names_are_rejected() {
        let bad_flow: RunConfig = toml::from_str("flow = \"plug\"").unwrap();
        assert!(bad_flow.validate().is_err());
        let bad_bound: RunConfig =
            toml::from_str("[bounds]\ninclude = [\"no-such-bound\"]").unwrap();
        assert!(matches!(
            bad_bound.validate(),
            Err(Error::UnknownBound(_))
        ));
    }

    #[test]
    fn invalid_numbers_are_rejected() {
        for text in [
            "[sweep]\nk = []",
            "[sweep]\nk = [0.0]",
            "[evolve]\nmargin = 0.0",
            "[evolve]\nmargin = 0.6",
            "[evolve]\nt_final = -1.0",
            "[sweep]\ncase2_fractions = [1.5]",
            "[grid]\nn = 4",
        ] {
            let parsed: RunConfig = toml::from_str(text).unwrap();
            assert!(parsed.validate().is_err(), "accepted {text:?}");
        }
    }

    #[test]
    fn unknown_keys_fail_to_parse() {
        assert!(toml::from_str::<RunConfig>("typo = 3").is_err());
    }

    #[test]
    fn mode_list_covers_ray_and_resonant_samples() {
        let config = RunConfig::default();
        let modes = config.modes_for(16.0).unwrap();
        assert_eq!(modes.len(), 6);
        let re = 10.0 * 16.0f64.powf(2.0 / 3.0);
        assert!((modes[0].lambda().re - re).abs() < 1e-12);
        assert!((modes[1].lambda().im - 256.0).abs() < 1e-12);
        let resonant = modes.last().unwrap().lambda();
        assert!((resonant + Complex64::new(0.0, 256.0)).norm() < 0.5 * 256.0);
    }
}
