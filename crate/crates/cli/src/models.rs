//! Model selection and per-model configuration keys.

use std::str::FromStr;

use lpf_core::format::fmt_g17;
use lpf_core::models::{BodyGeometry, BodyModel, DiskModel, LinearGaussianModel, ToyBinaryModel};

use crate::error::CliError;
use crate::settings::Settings;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Disk,
    Toy,
    Lingauss,
    Body,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Disk => "disk",
            Self::Toy => "toy",
            Self::Lingauss => "lingauss",
            Self::Body => "body",
        }
    }

    /// `(n, trials, steps)` used when neither flag nor config sets them.
    pub fn run_defaults(self) -> (&'static str, usize, usize) {
        match self {
            Self::Disk => ("64", 200, 40),
            Self::Toy => ("10", 200, 20),
            Self::Lingauss => ("128", 200, 21),
            Self::Body => ("256", 100, 40),
        }
    }

    /// Model parameters with their defaults.
    pub fn parameter_defaults(self) -> Vec<(&'static str, Option<String>)> {
        let g = fmt_g17;
        match self {
            Self::Disk => {
                let d = DiskModel::default();
                vec![
                    ("image_size", Some(d.width.to_string())),
                    ("radius", Some(g(d.radius))),
                    ("sigma_x", Some(g(d.sigma_x))),
                    ("sigma_d", Some(g(d.sigma_d))),
                    ("sigma_nu", Some(g(d.sigma_nu))),
                    ("margin", Some(g(d.margin))),
                    ("generator", None),
                ]
            }
            Self::Toy => {
                let d = ToyBinaryModel::default();
                vec![("threshold", Some(g(d.threshold))), ("generator", Some("1".into()))]
            }
            Self::Lingauss => {
                let d = LinearGaussianModel::default();
                vec![
                    ("sigma_transition", Some(g(d.transition_std))),
                    ("sigma_obs", Some(g(d.observation_std))),
                    ("initial_state", Some(g(d.initial_state))),
                    ("initial_var", Some(g(d.initial_var))),
                    ("generator", None),
                ]
            }
            Self::Body => {
                let d = BodyModel::default();
                let geo = &d.geometry;
                vec![
                    ("sigma_obs", Some(g(d.sigma_obs))),
                    ("sigma_a", Some(g(d.sigma_a))),
                    ("sigma_truth", Some(g(d.sigma_truth))),
                    ("pelvis_width", Some(g(geo.pelvis_width))),
                    ("thigh_length", Some(g(geo.thigh_length))),
                    ("shin_length", Some(g(geo.shin_length))),
                    ("camera_distance", Some(g(geo.camera_distance))),
                    ("camera_baseline", Some(g(geo.camera_baseline))),
                    ("camera_height", Some(g(geo.camera_height))),
                    ("generator", None),
                ]
            }
        }
    }
}

impl FromStr for ModelKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "disk" => Ok(Self::Disk),
            "toy" => Ok(Self::Toy),
            "lingauss" => Ok(Self::Lingauss),
            "body" => Ok(Self::Body),
            other => Err(CliError::Usage(format!(
                "unknown model `{other}` (expected disk|toy|lingauss|body)"
            ))),
        }
    }
}

pub fn disk(s: &Settings) -> Result<DiskModel, CliError> {
    let size: usize = s.get("image_size")?;
    let m = DiskModel {
        width: size,
        height: size,
        radius: s.get("radius")?,
        sigma_x: s.get("sigma_x")?,
        sigma_d: s.get("sigma_d")?,
        sigma_nu: s.get("sigma_nu")?,
        margin: s.get("margin")?,
    };
    m.validate()?;
    Ok(m)
}

pub fn toy(s: &Settings) -> Result<ToyBinaryModel, CliError> {
    let threshold: f64 = s.get("threshold")?;
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(CliError::Config(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    Ok(ToyBinaryModel {
        threshold,
        ..Default::default()
    })
}

pub fn lingauss(s: &Settings) -> Result<LinearGaussianModel, CliError> {
    let m = LinearGaussianModel {
        transition_std: s.get("sigma_transition")?,
        observation_std: s.get("sigma_obs")?,
        initial_state: s.get("initial_state")?,
        initial_var: s.get("initial_var")?,
    };
    m.validate()?;
    Ok(m)
}

pub fn body(s: &Settings) -> Result<BodyModel, CliError> {
    let m = BodyModel {
        geometry: BodyGeometry {
            pelvis_width: s.get("pelvis_width")?,
            thigh_length: s.get("thigh_length")?,
            shin_length: s.get("shin_length")?,
            camera_distance: s.get("camera_distance")?,
            camera_baseline: s.get("camera_baseline")?,
            camera_height: s.get("camera_height")?,
        },
        sigma_obs: s.get("sigma_obs")?,
        sigma_a: s.get("sigma_a")?,
        sigma_truth: s.get("sigma_truth")?,
        ..Default::default()
    };
    m.validate()?;
    Ok(m)
}
