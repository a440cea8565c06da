//! Numerical lab for continuous frames in reproducing kernel Hilbert spaces:
//! kernels, index measures, Beurling densities, localization defects and the
//! scenario runner that ties them together.

pub mod density;
pub mod error;
pub mod finframe;
pub mod kernels;
pub mod linalg;
pub mod localization;
pub mod quad;
pub mod space;
pub mod verify;

pub use density::{density, DensityEstimate, DensitySchedule};
pub use error::{Error, Result};
pub use finframe::{FiniteFrame, Omega};
pub use kernels::{KernelConfig, KernelKind, KernelParams, KernelSpec};
pub use localization::{FramePairSpec, LocalizationConfig, LocalizationRow};
pub use quad::{CompensatedSum, QuadConfig, TailModel};
pub use space::{Atoms, Ball, Lattice, MeasureSpec, Point, PointSet, Thinning, Weight};
pub use verify::{run, ScenarioConfig, ScenarioReport, Scenario, Verdict, VerdictRecord};
