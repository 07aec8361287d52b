use std::path::{Path, PathBuf};

use vb_ensemble::EnsembleError;
use vb_mesh::MeshError;
use vb_metrics::MetricsError;
use vb_motion::MotionError;
use vb_sim::SimError;
use vb_skinning::SkinningError;

/// Exit code for configuration / usage problems.
pub const EXIT_CONFIG: u8 = 2;
/// Exit code for numerical failures (explosions, divergence, non-finite loss).
pub const EXIT_NUMERICAL: u8 = 3;
/// Exit code for everything else that is not a success.
pub const EXIT_RUNTIME: u8 = 1;

/// Top-level command error, bucketed by exit code. Library errors are
/// classified on conversion so `main` only has to look at the variant.
#[derive(Debug)]
pub enum CliError {
    /// Bad config, bad flags, or inconsistent artifacts (exit 2).
    Config(String),
    /// A pipeline input that an earlier command should have produced (exit 2).
    Missing { path: PathBuf, prerequisite: String },
    /// The numbers went bad: explosion, divergence, non-finite loss (exit 3).
    Numerical(String),
    /// I/O and other environment failures (exit 1).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Missing { .. } => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> CliError {
        CliError::Runtime(format!("{}: {source}", path.display()))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Missing { path, prerequisite } => write!(
                f,
                "missing artifact {}; run `{prerequisite}` first",
                path.display()
            ),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            CliError::Runtime(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        let numerical = match &e {
            SimError::Explosion { .. } => true,
            SimError::Sequence { source, .. } => {
                matches!(**source, SimError::Explosion { .. })
            }
            _ => false,
        };
        if numerical {
            return CliError::Numerical(e.to_string());
        }
        match e {
            SimError::Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<SkinningError> for CliError {
    fn from(e: SkinningError) -> Self {
        match e {
            SkinningError::Singular
            | SkinningError::Diverged { .. }
            | SkinningError::BadRotation { .. } => CliError::Numerical(e.to_string()),
            SkinningError::Mesh(inner) => CliError::from(inner),
            SkinningError::Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<vb_autodiff::AutodiffError> for CliError {
    fn from(e: vb_autodiff::AutodiffError) -> Self {
        match e {
            vb_autodiff::AutodiffError::Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<MeshError> for CliError {
    fn from(e: MeshError) -> Self {
        match e {
            MeshError::NonFinitePosition { .. } => CliError::Numerical(e.to_string()),
            MeshError::Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<MotionError> for CliError {
    fn from(e: MotionError) -> Self {
        match e {
            MotionError::NonFiniteLoss { .. } => CliError::Numerical(e.to_string()),
            MotionError::Autodiff(inner) => CliError::from(inner),
            MotionError::Skinning(inner) => CliError::from(inner),
            MotionError::Mesh(inner) => CliError::from(inner),
            MotionError::Sim(inner) => CliError::from(inner),
            MotionError::Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<EnsembleError> for CliError {
    fn from(e: EnsembleError) -> Self {
        match e {
            EnsembleError::FitDiverged { .. } => CliError::Numerical(e.to_string()),
            EnsembleError::Motion(inner) => CliError::from(inner),
            EnsembleError::Autodiff(inner) => CliError::from(inner),
            EnsembleError::Mesh(inner) => CliError::from(inner),
            EnsembleError::Sim(inner) => CliError::from(inner),
            EnsembleError::Metrics(inner) => CliError::from(inner),
            EnsembleError::Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explosion_maps_to_exit_3() {
        let e = CliError::from(SimError::Explosion {
            frame: 4,
            speed: 99.0,
        });
        assert_eq!(e.exit_code(), EXIT_NUMERICAL);
        let wrapped = CliError::from(SimError::Sequence {
            name: "seq_000_sway".into(),
            source: Box::new(SimError::Explosion {
                frame: 4,
                speed: 99.0,
            }),
        });
        assert_eq!(wrapped.exit_code(), EXIT_NUMERICAL);
        assert!(wrapped.to_string().contains("seq_000_sway"));
    }

    #[test]
    fn config_problems_map_to_exit_2() {
        assert_eq!(
            CliError::from(SimError::BadParams("x".into())).exit_code(),
            EXIT_CONFIG
        );
        let missing = CliError::Missing {
            path: "out/dataset/manifest.json".into(),
            prerequisite: "vb simulate".into(),
        };
        assert_eq!(missing.exit_code(), EXIT_CONFIG);
        assert!(missing.to_string().contains("vb simulate"));
    }
}
