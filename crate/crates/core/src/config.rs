//! Sectioned `key = value` run configuration (TOML).
//!
//! ```toml
//! [nfunction]
//! kind = "power_log"        # power | power_normalized | power_log | tabulated
//! p = 2.0
//!
//! [domain]
//! dim = 1
//! box_lo = [-0.5]
//! box_hi = [1.5]
//! h = 0.01
//! omega = { shape = "box", lo = [0.0], hi = [1.0] }
//! ball = { shape = "ball", center = [1.3], radius = 0.2 }
//!
//! [fractional]
//! s = 0.5
//!
//! [nonlinearity]
//! form = "pure_power"       # pure_power | shifted_power | custom
//! theta1 = 1.0
//! theta2 = 1.0
//! q = 1.5
//!
//! [solver]
//! grad_tol = 1e-6
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{GridDomain, KernelTable, Region};
use crate::energy::{Form, Nonlinearity, SampledSource, SolverConfig};
use crate::error::{Error, Result};
use crate::nfunction::NFunction;
use crate::reduce::Reduction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NFunctionSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// `[t, a(t)]` samples for the tabulated kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<[f64; 2]>>,
    /// Overrides of the stored indices, for fault injection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub dim: usize,
    pub box_lo: Vec<f64>,
    pub box_hi: Vec<f64>,
    pub h: f64,
    pub omega: Region,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0: Option<Region>,
    /// Ball `B_R` for the Poincaré check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball: Option<Region>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FractionalSpec {
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonlinearitySpec {
    pub form: String,
    pub theta1: f64,
    pub theta2: f64,
    pub q: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    /// `[t, f(t)]` samples for the custom form.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<[f64; 2]>>,
}

impl Default for NonlinearitySpec {
    fn default() -> Self {
        Self { form: "pure_power".into(), theta1: 1.0, theta2: 1.0, q: 1.5, shift: None, table: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub nfunction: NFunctionSpec,
    pub domain: DomainSpec,
    pub fractional: FractionalSpec,
    #[serde(default)]
    pub nonlinearity: NonlinearitySpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub run: RunSpec,
}

fn pairs(table: &[[f64; 2]]) -> Vec<(f64, f64)> {
    table.iter().map(|&[t, v]| (t, v)).collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    fn validate(&self) -> Result<()> {
        let s = self.fractional.s;
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Config(format!("s must lie in (0, 1), got {s}")));
        }
        if !(self.nonlinearity.q > 1.0) {
            return Err(Error::Config(format!("q must exceed 1, got {}", self.nonlinearity.q)));
        }
        self.solver.validate()
    }

    pub fn nfunction(&self) -> Result<NFunction> {
        let spec = &self.nfunction;
        let p = || spec.p.ok_or_else(|| Error::Config(format!("kind {} needs p", spec.kind)));
        let mut nf = match spec.kind.as_str() {
            "power" => NFunction::power(p()?),
            "power_normalized" => NFunction::power_normalized(p()?),
            "power_log" => NFunction::power_log(p()?),
            "tabulated" => {
                let table = spec
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::Config("tabulated kind needs table".into()))?;
                NFunction::tabulated(&pairs(table))
            }
            other => return Err(Error::Config(format!("unknown N-function kind `{other}`"))),
        }
        .map_err(|e| Error::Config(e.to_string()))?;
        if let Some(tol) = spec.quad_tol {
            if !(tol > 0.0) {
                return Err(Error::Config("quad_tol must be positive".into()));
            }
            nf = nf.with_quad_tol(tol);
        }
        if spec.p_lower.is_some() || spec.p_upper.is_some() {
            let lo = spec.p_lower.unwrap_or(nf.p_lower());
            let hi = spec.p_upper.unwrap_or(nf.p_upper());
            nf = nf.with_indices(lo, hi);
        }
        Ok(nf)
    }

    pub fn grid(&self) -> Result<GridDomain> {
        let d = &self.domain;
        GridDomain::build(d.dim, &d.box_lo, &d.box_hi, d.h, d.omega.clone(), d.omega0.clone())
            .map_err(|e| match e {
                Error::Domain(m) => Error::Config(m),
                other => other,
            })
    }

    pub fn reduction(&self) -> Reduction {
        if self.solver.deterministic_reduction {
            Reduction::Ordered
        } else {
            Reduction::Unordered
        }
    }

    pub fn kernel(&self, gd: &GridDomain) -> Result<KernelTable> {
        KernelTable::build(gd, self.fractional.s)
            .map(|kt| kt.with_reduction(self.reduction()))
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn nonlinearity(&self, gd: &GridDomain) -> Result<Nonlinearity> {
        let spec = &self.nonlinearity;
        let form = match spec.form.as_str() {
            "pure_power" => Form::PurePower,
            "shifted_power" => Form::ShiftedPower { shift: spec.shift.unwrap_or(0.0) },
            "custom" => {
                let table = spec
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::Config("custom nonlinearity needs table".into()))?;
                Form::Custom(SampledSource::new(&pairs(table))?)
            }
            other => return Err(Error::Config(format!("unknown nonlinearity form `{other}`"))),
        };
        Nonlinearity::new(form, spec.theta1, spec.theta2, spec.q, gd)
    }
}
