//! Integrity checks for the Mentcare case-study corpus.

use std::fmt;
use std::path::Path;

use crate::dsl::{parse, Document};
use crate::model::{find_stage, model_isomorphic, ActionKind, StaticModel};
use crate::transform::{expand, kind_counts, simplify};
use crate::validate::{error_count, validate_behavior, validate_events, validate_static};

pub const MODEL_FILE: &str = "mentcare.tm";
pub const ACTIVITY_FILE: &str = "mentcare.act.json";

/// Guard on the uniqueness constraint's trigger, kept verbatim.
pub const UNIQUENESS_GUARD: &str = "the record is not in the file";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IntegrityReport {
    pub checks: Vec<Check>,
}

impl IntegrityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: &'static str, problems: Vec<String>) {
        let passed = problems.is_empty();
        self.checks.push(Check { name, passed, detail: problems.join("; ") });
    }
}

impl fmt::Display for IntegrityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            if c.passed {
                writeln!(f, "ok   {}", c.name)?;
            } else {
                writeln!(f, "FAIL {}: {}", c.name, c.detail)?;
            }
        }
        Ok(())
    }
}

/// Reads `mentcare.tm` from `dir` and checks it.
pub fn corpus_integrity(dir: &Path) -> std::io::Result<IntegrityReport> {
    let text = std::fs::read_to_string(dir.join(MODEL_FILE))?;
    Ok(check_text(&text))
}

pub fn check_text(text: &str) -> IntegrityReport {
    let mut report = IntegrityReport::default();
    let doc = match parse(text) {
        Ok(doc) => doc,
        Err(diags) => {
            report.push("parses", diags.iter().map(|d| d.to_string()).collect());
            return report;
        }
    };
    report.push("parses", Vec::new());
    report
        .push("fmt fixpoint", if doc.to_text() == text { vec![] } else { vec!["formatting changes the file".into()] });
    check_document(&doc, &mut report);
    report
}

fn check_document(doc: &Document, report: &mut IntegrityReport) {
    let model = &doc.model;
    let mut diags = validate_static(model);
    diags.extend(validate_events(model, &doc.events));
    diags.extend(validate_behavior(model, &doc.events, &doc.behavior));
    let errors = error_count(&diags);
    report.push("validates clean", if errors == 0 { vec![] } else { vec![format!("{errors} errors")] });

    let ids: Vec<String> = doc.events.iter().map(|e| e.id.clone()).collect();
    let expected: Vec<String> = (1..=19).map(|i| format!("E{i}")).collect();
    let mut problems = Vec::new();
    if ids.len() != 19 {
        problems.push(format!("{} events declared", ids.len()));
    }
    problems.extend(expected.iter().filter(|e| !ids.contains(e)).map(|e| format!("{e} missing")));
    report.push("19 events", problems);

    let simple = match simplify(model) {
        Ok(s) => s,
        Err(e) => {
            report.push("simplifies", vec![e.to_string()]);
            return;
        }
    };
    let counts = kind_counts(&simple);
    let gates = counts[2] + counts[3] + counts[4];
    let full = kind_counts(model);
    let mut problems = Vec::new();
    if gates != 0 {
        problems.push(format!("{gates} gate stages survive"));
    }
    if simple.all_stages().len() != full[0] + full[1] {
        problems.push("stage count differs from create + process count".into());
    }
    report.push("simplifies", problems);
    let back = expand(&simple).map(|m| model_isomorphic(&m, model)).unwrap_or(false);
    report.push("expand inverts simplify", if back { vec![] } else { vec!["not isomorphic".into()] });

    report.push("walkthrough", walkthrough(model, &simple));
    report.push("receptionist functions", receptionist(model, &simple));
    report.push("uniqueness constraint", uniqueness(model, &simple));
}

fn has_flow(m: &StaticModel, from: &str, to: &str) -> bool {
    m.flows().iter().any(|f| f.source == from && f.target == to)
}

fn has_trigger(m: &StaticModel, from: &str, to: &str, guard: Option<&str>) -> bool {
    m.triggers().iter().any(|t| t.source == from && t.target == to && t.guard.as_deref() == guard)
}

fn need_stage(model: &StaticModel, path: &[&str], kind: ActionKind, problems: &mut Vec<String>) {
    if !matches!(find_stage(model, path, kind), Ok(Some(_))) {
        problems.push(format!("{} has no {kind} stage", path.join(".")));
    }
}

/// Flows are checked on the simplified model so that each one stands for a
/// whole release/transfer/receive chain.
fn need_flow(simple: &StaticModel, from: &str, to: &str, problems: &mut Vec<String>) {
    if !has_flow(simple, from, to) {
        problems.push(format!("no flow {from} to {to}"));
    }
}

fn walkthrough(model: &StaticModel, simple: &StaticModel) -> Vec<String> {
    use ActionKind::*;
    let mut p = Vec::new();
    need_stage(model, &["Community"], Create, &mut p);
    for name in [
        "ConfirmDetention",
        "InformRights",
        "FindSecurePlace",
        "TransferToPolice",
        "TransferToSecureHospital",
        "AdmitToHospital",
    ] {
        need_stage(model, &["Mentcare", name], Process, &mut p);
    }
    need_stage(model, &["Mentcare", "Notification"], Create, &mut p);
    for path in [
        &["Police"][..],
        &["SecureHospital"],
        &["SocialServices"],
        &["NextOfKin"],
        &["InformationSystem", "DetentionRegister"],
    ] {
        need_stage(model, path, Process, &mut p);
    }
    if !p.is_empty() {
        return p;
    }
    need_flow(simple, "Community.create", "Mentcare.ConfirmDetention.process", &mut p);
    need_flow(simple, "Mentcare.ConfirmDetention.process", "Mentcare.InformRights.process", &mut p);
    need_flow(simple, "Mentcare.TransferToPolice.process", "Police.process", &mut p);
    need_flow(simple, "Mentcare.TransferToSecureHospital.process", "SecureHospital.process", &mut p);
    for to in ["SocialServices.process", "NextOfKin.process", "InformationSystem.DetentionRegister.process"] {
        need_flow(simple, "Mentcare.Notification.create", to, &mut p);
    }
    let decisions = [
        ("Mentcare.InformRights.process", "Mentcare.FindSecurePlace.process", "dangerous"),
        ("Mentcare.InformRights.process", "Mentcare.AdmitToHospital.process", "not dangerous"),
        ("Mentcare.FindSecurePlace.process", "Mentcare.TransferToPolice.process", "no secure location available"),
        ("Mentcare.FindSecurePlace.process", "Mentcare.TransferToSecureHospital.process", "secure location available"),
    ];
    for (from, to, guard) in decisions {
        if !has_trigger(model, from, to, Some(guard)) {
            p.push(format!("no trigger {from} to {to} if \"{guard}\""));
        }
    }
    for from in ["TransferToPolice", "TransferToSecureHospital", "AdmitToHospital"] {
        let from = format!("Mentcare.{from}.process");
        if !has_trigger(model, &from, "Mentcare.Notification.create", None) {
            p.push(format!("{from} does not generate the notification"));
        }
    }
    p
}

fn receptionist(model: &StaticModel, simple: &StaticModel) -> Vec<String> {
    use ActionKind::*;
    let mut p = Vec::new();
    need_stage(model, &["MedicalReceptionist"], Create, &mut p);
    need_stage(model, &["MedicalReceptionist"], Process, &mut p);
    for name in ["RegisterPatient", "UnregisterPatient", "ViewPatientInfo"] {
        need_stage(model, &["MedicalReceptionist", name], Create, &mut p);
    }
    for name in ["TransferData", "ContactPatient"] {
        need_stage(model, &["MedicalReceptionist", name], Process, &mut p);
    }
    if !p.is_empty() {
        return p;
    }
    if !model.stage("MedicalReceptionist.create").is_some_and(|s| s.has_storage) {
        p.push("the security clearance is not stored".into());
    }
    // request and permission
    need_flow(simple, "MedicalReceptionist.create", "InformationSystem.Access.process", &mut p);
    need_flow(simple, "InformationSystem.Access.process", "MedicalReceptionist.process", &mut p);
    for name in ["RegisterPatient", "UnregisterPatient", "ViewPatientInfo"] {
        let to = format!("MedicalReceptionist.{name}.create");
        if !has_trigger(model, "MedicalReceptionist.process", &to, None) {
            p.push(format!("permission does not trigger {to}"));
        }
    }
    need_flow(
        simple,
        "MedicalReceptionist.RegisterPatient.create",
        "InformationSystem.UniquenessConstraint.process",
        &mut p,
    );
    need_flow(
        simple,
        "MedicalReceptionist.UnregisterPatient.create",
        "InformationSystem.RecordDeletion.process",
        &mut p,
    );
    need_flow(
        simple,
        "MedicalReceptionist.ViewPatientInfo.create",
        "InformationSystem.RecordRetrieval.process",
        &mut p,
    );
    need_flow(simple, "InformationSystem.RecordRetrieval.create", "MedicalReceptionist.ReceivedRecord.process", &mut p);
    need_flow(simple, "MedicalReceptionist.TransferData.process", "HealthAuthority.process", &mut p);
    need_flow(simple, "MedicalReceptionist.ContactPatient.process", "Patient.process", &mut p);
    p
}

fn uniqueness(model: &StaticModel, simple: &StaticModel) -> Vec<String> {
    let constraints: Vec<_> = model.all_machines().into_iter().filter(|m| m.is_constraint).collect();
    if constraints.len() != 1 {
        return vec![format!("{} constraint machines", constraints.len())];
    }
    let Some(process) = constraints[0].stage(ActionKind::Process) else {
        return vec!["constraint machine has no process stage".into()];
    };
    let guarded: Vec<_> = model.triggers().iter().filter(|t| t.source == process.id && t.guard.is_some()).collect();
    let mut p = Vec::new();
    if guarded.len() != 1 || guarded[0].guard.as_deref() != Some(UNIQUENESS_GUARD) {
        p.push(format!("expected one trigger guarded by \"{UNIQUENESS_GUARD}\""));
        return p;
    }
    // The guarded insert produces a new version of the stored file.
    let insert = &guarded[0].target;
    let new_version = model
        .triggers()
        .iter()
        .filter(|t| t.source == *insert)
        .any(|t| model.stage(&t.target).is_some_and(|s| s.kind == ActionKind::Create && s.has_storage));
    if !new_version {
        p.push(format!("{insert} does not create a new version of a stored file"));
    }
    // the record and the file both arrive at the check
    for from in ["MedicalReceptionist.RegisterPatient.create", "InformationSystem.PatientFile.create"] {
        need_flow(simple, from, &process.id, &mut p);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unparsable_text_stops_early() {
        let r = check_text("machine {");
        assert!(!r.passed());
        assert_eq!(r.checks.len(), 1);
        assert!(r.to_string().starts_with("FAIL parses"));
    }

    #[test]
    fn tiny_model_fails_content_checks() {
        let r = check_text("machine A {\n  create;\n}\n");
        let failed: Vec<_> = r.failures().map(|c| c.name).collect();
        assert!(failed.contains(&"19 events"));
        assert!(failed.contains(&"walkthrough"));
        assert!(failed.contains(&"uniqueness constraint"));
        assert!(!failed.contains(&"validates clean"));
    }
}
