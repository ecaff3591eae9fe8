//! Receding-horizon HEMS controller and its 5-minute dispatch layer.

pub mod audit;
pub mod dispatch;
pub mod plan;
pub mod output;
pub mod run;

pub use audit::{audit_run, AuditIssue, AuditReport};
pub use dispatch::{dispatch_5min, DispatchPlan, Element, SlotInputs, SlotRecord};
pub use plan::{
    horizon_program, plan_step, plan_step_ess, plan_step_ftl, Committed, ControlStepResult, Forecast, ObjectiveBreakdown,
    PlanSettings, PlantState, StepStatus,
};
pub use output::{read_profiles_xy, write_breakdown_csv, write_profiles_csv, write_reports_csv};
pub use run::{required_samples, run_receding_horizon, run_with, RunOutput, RunReport, StepRecord};
