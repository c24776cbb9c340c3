use std::fs;
use std::path::{Path, PathBuf};

use abocs::automaton::hoa::{hoa_import, HoaImportOptions};
use abocs::pipeline::{
    cmd_abstract, cmd_check_efrr, cmd_export, cmd_simulate, cmd_spec_compile, cmd_synthesize, ExportFormat,
    PipelineError, SimulateFlags, SynthesizeFlags, ABSTRACT, CONTROLLER, PROBLEM, SPEC,
};
use abocs::refinement::BranchMode;
use abocs::synthesis::{MealyController, SynthesisError};

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn bundle_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn finite_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let bundle = tmp.path().join("s2");
    let s = cmd_abstract(&example("s2_safety.toml"), &bundle, None).unwrap();
    assert_eq!((s.states, s.inputs, s.outputs), (2, 2, 2));
    for f in [PROBLEM, ABSTRACT, SPEC] {
        assert!(bundle.join(f).exists(), "{f}");
    }

    let syn = cmd_synthesize(&bundle, SynthesizeFlags::default(), None).unwrap();
    assert_eq!(syn.k, 0);
    let written = syn.written.unwrap();
    assert_eq!(written, bundle.join(CONTROLLER));
    let ctrl = MealyController::from_text(&fs::read_to_string(&written).unwrap()).unwrap();
    assert_eq!(ctrl.to_text(), syn.controller.to_text());

    let check = cmd_check_efrr(&bundle, 10, 0, true).unwrap();
    assert!(check.passed, "{}", check.jsonl);

    let flags = SimulateFlags { steps: 6, seed: 0, mode: BranchMode::All, policy: None, plot: false };
    let sim = cmd_simulate(&bundle, &written, &flags).unwrap();
    assert!(sim.csv.lines().count() > 1);
    assert!(!sim.csv.contains("x1,"), "the controller never lets p hold:\n{}", sim.csv);

    assert!(cmd_export(&written, ExportFormat::Dot, false).unwrap().starts_with("digraph"));
    assert!(cmd_export(&bundle, ExportFormat::Hoa, true).unwrap().starts_with("HOA: v1"));
}

#[test]
fn stages_are_idempotent() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        cmd_abstract(&example("linear_1d.toml"), dir, None).unwrap();
        cmd_synthesize(dir, SynthesizeFlags::default(), None).unwrap();
    }
    assert_eq!(bundle_files(&a), bundle_files(&b));
    cmd_abstract(&example("linear_1d.toml"), &a, None).unwrap();
    assert_eq!(bundle_files(&a), bundle_files(&b));
}

#[test]
fn edited_abstractions() {
    let tmp = tempfile::tempdir().unwrap();
    let bundle = tmp.path().join("b");
    cmd_abstract(&example("s2_safety.toml"), &bundle, None).unwrap();
    cmd_synthesize(&bundle, SynthesizeFlags::default(), None).unwrap();
    // Synthesis reads the stored abstraction as is: with `b` leaking into x1 nothing is safe.
    let text = fs::read_to_string(bundle.join(ABSTRACT)).unwrap();
    fs::write(bundle.join(ABSTRACT), text.replace("x0 b -> x0", "x0 b -> x1")).unwrap();
    let flags = SynthesizeFlags { k_max: Some(2), ..Default::default() };
    assert!(matches!(cmd_synthesize(&bundle, flags, None), Err(PipelineError::Synthesis(_))));
    // Simulation runs the plant, so the bundle must still match its problem.
    let sim = SimulateFlags { steps: 3, seed: 0, mode: BranchMode::All, policy: None, plot: false };
    assert!(matches!(cmd_simulate(&bundle, &bundle.join(CONTROLLER), &sim), Err(PipelineError::Usage(_))));
}

#[test]
fn unrealizable_specs_report_the_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let problem = tmp.path().join("p.toml");
    let text = fs::read_to_string(example("s2_safety.toml")).unwrap();
    fs::write(&problem, text.replace("G !p", "F p")).unwrap();
    fs::copy(example("s2.sys"), tmp.path().join("s2.sys")).unwrap();
    let flags = SynthesizeFlags { k_max: Some(3), ..Default::default() };
    assert!(matches!(
        cmd_synthesize(&problem, flags, None),
        Err(PipelineError::Synthesis(SynthesisError::Unrealizable { k_max: 3 }))
    ));
}

#[test]
fn compiled_specs_import_back() {
    let hoa = cmd_spec_compile("G (r -> F g)", &["g".into()], &["r".into()]).unwrap();
    let uca = hoa_import(&hoa, &HoaImportOptions::default()).unwrap();
    assert!(uca.num_states() >= 2);
    assert!(cmd_spec_compile("G (r ->", &[], &["r".into()]).is_err());
}
