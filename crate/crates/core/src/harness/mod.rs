//! Document format, random systems, run reports and the end-to-end
//! pipelines behind the command-line tool.

mod doc;
mod pipeline;
mod random;
mod report;

pub use doc::{parse_system, DivisionProbe, MonomialRecord, ProbeExpectation, SystemDoc};
pub use pipeline::{
    default_init, default_samples, demo_doc, demo_report, derive_report, ensemble, sweep, sweep_csv,
    verify_report, RunOptions, SweepOptions, SweepRow, REFINE_TOL, SWEEP_HEADER,
};
pub use random::gen_random;
pub use report::{
    BoundRecord, CertificateKind, CertificateRecord, CheckRecord, ConfigEcho, DerivationSection,
    GeneratorRecord, PerturbationSection, ProbeRecord, RunReport, SampleRecord, SystemSummary,
    WitnessRecord,
};
