//! TOML run configuration.
//!
//! ```toml
//! [protocol]
//! n_qubits = 3
//! W_db = 10.0        # or W = 3.2, not both
//! P_q = 3.5449       # default 2√π
//! theta_v = 2.6
//! phi_v = 0.0
//! omega_v = 0.0
//!
//! [grid]             # optional
//! q_min = -12.0
//! q_max = 12.0
//! n_points = 2048
//!
//! [dispersive]       # optional
//! alpha0 = 30.0
//! n_flips = 7
//! fock_cutoff = 80
//! # dt = 1e-4
//! number_term = true
//! check_cutoff = false
//! [dispersive.noise]
//! kappa_phi = 0.0
//!
//! [output]           # optional
//! directory = "out"
//! formats = ["csv", "json"]
//! ```

use std::path::{Path, PathBuf};

use gkpforge::dispersive::{NoiseRates, SimConfig};
use gkpforge::oscillator::{db_to_width, PositionGrid};
use gkpforge::protocol::{default_peak_spacing, ProtocolParams};
use gkpforge::qudit::{QuditDims, VPrepParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub dispersive: DispersiveSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub n_qubits: usize,
    #[serde(rename = "W_db", default, skip_serializing_if = "Option::is_none")]
    pub w_db: Option<f64>,
    #[serde(rename = "W", default, skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    #[serde(rename = "P_q", default = "default_peak_spacing")]
    pub p_q: f64,
    #[serde(default = "default_theta")]
    pub theta_v: f64,
    #[serde(default)]
    pub phi_v: f64,
    #[serde(default)]
    pub omega_v: f64,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            n_qubits: 3,
            w_db: None,
            w: Some(3.2),
            p_q: default_peak_spacing(),
            theta_v: default_theta(),
            phi_v: 0.0,
            omega_v: 0.0,
        }
    }
}

fn default_theta() -> f64 {
    VPrepParams::default().theta_v
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub q_min: f64,
    pub q_max: f64,
    pub n_points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = PositionGrid::default();
        Self {
            q_min: g.q_min(),
            q_max: g.q_max(),
            n_points: g.n_points(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersiveSection {
    pub alpha0: f64,
    pub n_flips: usize,
    pub fock_cutoff: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub number_term: bool,
    /// Repeats the run at twice the cutoff and records the change.
    pub check_cutoff: bool,
    pub noise: NoiseRates,
}

impl Default for DispersiveSection {
    fn default() -> Self {
        Self {
            alpha0: 30.0,
            n_flips: 7,
            fock_cutoff: 80,
            dt: None,
            number_term: true,
            check_cutoff: false,
            noise: NoiseRates::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<String>,
    /// Grid stride of `density.csv`.
    pub density_stride: usize,
    /// Half-width of the square written to `wigner.csv`.
    pub wigner_extent: f64,
    /// Sample stride of `wigner.csv` along both axes.
    pub wigner_stride: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec!["csv".into(), "json".into()],
            density_stride: 4,
            wigner_extent: 8.0,
            wigner_stride: 1,
        }
    }
}

const FORMATS: [&str; 2] = ["csv", "json"];

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        match (self.protocol.w_db, self.protocol.w) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("[protocol] sets both W_db and W".into()))
            }
            (None, None) => return Err(CliError::Config("[protocol] needs W_db or W".into())),
            _ => {}
        }
        for f in &self.output.formats {
            if !FORMATS.contains(&f.as_str()) {
                return Err(CliError::Config(format!("unknown output format `{f}`")));
            }
        }
        if self.output.density_stride == 0 || self.output.wigner_stride == 0 {
            return Err(CliError::Config("output strides must be positive".into()));
        }
        let invalid = |e: CliError| match e {
            CliError::Run(e) => CliError::Config(e.to_string()),
            other => other,
        };
        self.protocol_params().map_err(invalid)?;
        self.sim_config().map_err(invalid)?;
        Ok(())
    }

    pub fn width(&self) -> f64 {
        match (self.protocol.w, self.protocol.w_db) {
            (Some(w), _) => w,
            (None, Some(db)) => db_to_width(db),
            (None, None) => f64::NAN,
        }
    }

    pub fn grid(&self) -> Result<PositionGrid, CliError> {
        Ok(PositionGrid::new(self.grid.q_min, self.grid.q_max, self.grid.n_points)?)
    }

    pub fn vprep(&self) -> Result<VPrepParams, CliError> {
        let p = &self.protocol;
        Ok(VPrepParams::new(p.theta_v, p.phi_v, p.omega_v)?)
    }

    pub fn protocol_params(&self) -> Result<ProtocolParams, CliError> {
        let dims = QuditDims::new(self.protocol.n_qubits)?;
        Ok(ProtocolParams::new(
            dims,
            self.width(),
            self.protocol.p_q,
            self.vprep()?,
            self.grid()?,
        )?)
    }

    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        let d = &self.dispersive;
        let mut c = SimConfig::standard(self.protocol_params()?);
        c.alpha0 = d.alpha0;
        c.n_flips = d.n_flips;
        c.fock_cutoff = d.fock_cutoff;
        c.dt = d.dt;
        c.number_term = d.number_term;
        c.noise = d.noise;
        c.validate()?;
        Ok(c)
    }

    pub fn wants(&self, format: &str) -> bool {
        self.output.formats.iter().any(|f| f == format)
    }

    /// Configuration with every default filled in, as TOML.
    pub fn resolved_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of [`Self::resolved_toml`].
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.resolved_toml().as_bytes()))
    }
}
