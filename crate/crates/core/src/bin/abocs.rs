use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use abocs::pipeline::{self, ExportFormat, PipelineError, SimulateFlags, Suite, SynthesizeFlags};
use abocs::refinement::{BranchMode, Policy};
use abocs::synthesis::SynthesisError;

#[derive(Parser)]
#[command(name = "abocs", version, about = "Output-feedback controller synthesis for LTL over hidden state predicates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Specification tools.
    Spec {
        #[command(subcommand)]
        command: SpecCommand,
    },
    /// Build the finite abstraction and write a bundle directory.
    Abstract {
        problem: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Bounded synthesis on a problem file or bundle.
    Synthesize {
        input: PathBuf,
        #[arg(long)]
        k_max: Option<usize>,
        /// Only allow inputs enabled at every state of the current belief.
        #[arg(long)]
        strict_def3: bool,
        /// Solve on the fly, dropping dominated counter functions.
        #[arg(long)]
        antichain: bool,
        #[arg(long)]
        jobs: Option<usize>,
        /// Controller output file (defaults to controller.txt in a bundle).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Relation checks.
    Check {
        #[command(subcommand)]
        command: CheckCommand,
    },
    /// Run a controller in closed loop with the concrete plant.
    Simulate {
        input: PathBuf,
        #[arg(long)]
        controller: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Branch exploration for finite plants: all or random.
        #[arg(long, default_value = "random")]
        mode: BranchMode,
        /// Selection policy for concretizing outputs and inputs: lowest, highest or seeded:N.
        #[arg(long)]
        policy: Option<Policy>,
        /// Also write an SVG plot next to the CSV.
        #[arg(long)]
        plot: bool,
        /// CSV output file (stdout otherwise).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Export an artifact as hoa, dot, csv or svg.
    Export {
        artifact: PathBuf,
        #[arg(long)]
        format: ExportFormat,
        /// With hoa: export the product with the abstraction.
        #[arg(long)]
        product: bool,
    },
    /// Run the reference oracles on seeded random instances (JSON lines).
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        count: u64,
        /// One of efrr, blocking, soundness, completeness, refinement, ltl (all by default).
        #[arg(long)]
        suite: Vec<Suite>,
    },
}

#[derive(Subcommand)]
enum SpecCommand {
    /// Compile an LTL formula, or a problem's specification, to HOA.
    Compile {
        /// A formula, or a problem file / bundle with --problem.
        formula: String,
        #[arg(long, value_delimiter = ',')]
        inputs: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        outputs: Vec<String>,
        #[arg(long)]
        problem: bool,
    },
}

#[derive(Subcommand)]
enum CheckCommand {
    /// Check the relation of a bundle; exact for finite pairs, sampled for gridded ones.
    Efrr {
        bundle: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also check the inverse relation.
        #[arg(long)]
        realization: bool,
    },
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), PipelineError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|source| PipelineError::Io { path: p.to_path_buf(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, PipelineError> {
    match cli.command {
        Command::Spec { command: SpecCommand::Compile { formula, inputs, outputs, problem } } => {
            let hoa = if problem {
                pipeline::cmd_spec_compile_problem(Path::new(&formula))?
            } else {
                pipeline::cmd_spec_compile(&formula, &inputs, &outputs)?
            };
            print!("{hoa}");
        }
        Command::Abstract { problem, out, jobs } => {
            let s = pipeline::cmd_abstract(&problem, &out, jobs)?;
            println!(
                "abstraction: {} states, {} inputs, {} outputs, {} transitions -> {}",
                s.states,
                s.inputs,
                s.outputs,
                s.transitions,
                out.display()
            );
        }
        Command::Synthesize { input, k_max, strict_def3, antichain, jobs, out } => {
            let flags = SynthesizeFlags { k_max, strict: strict_def3, antichain, jobs };
            match pipeline::cmd_synthesize(&input, flags, out.as_deref()) {
                Ok(s) => {
                    println!(
                        "realizable at k={} ({} memory states, {} product states, {} game nodes)",
                        s.k, s.memory_states, s.product_states, s.game_nodes
                    );
                    match &s.written {
                        Some(p) => println!("controller written to {}", p.display()),
                        None => print!("{}", s.controller.to_text()),
                    }
                }
                Err(PipelineError::Synthesis(SynthesisError::Unrealizable { k_max })) => {
                    println!("unrealizable up to k={k_max}");
                    return Ok(ExitCode::from(2));
                }
                Err(e) => return Err(e),
            }
        }
        Command::Check { command: CheckCommand::Efrr { bundle, samples, seed, realization } } => {
            let r = pipeline::cmd_check_efrr(&bundle, samples, seed, realization)?;
            print!("{}", r.jsonl);
            if !r.passed {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Simulate { input, controller, steps, seed, mode, policy, plot, out } => {
            let controller = match controller {
                Some(c) => c,
                None if input.is_dir() => input.join(pipeline::CONTROLLER),
                None => return Err(PipelineError::Usage("--controller is required unless simulating a bundle".into())),
            };
            let flags = SimulateFlags { steps, seed, mode, policy, plot };
            let sim = pipeline::cmd_simulate(&input, &controller, &flags)?;
            write_or_print(out.as_deref(), &sim.csv)?;
            if let Some(svg) = sim.svg {
                let path = out.as_ref().map_or_else(|| PathBuf::from("trace.svg"), |p| p.with_extension("svg"));
                write_or_print(Some(&path), &svg)?;
                eprintln!("plot written to {}", path.display());
            }
        }
        Command::Export { artifact, format, product } => {
            print!("{}", pipeline::cmd_export(&artifact, format, product)?);
        }
        Command::Verify { seed, count, suite } => {
            let suites = if suite.is_empty() { Suite::ALL.to_vec() } else { suite };
            let (jsonl, ok) = pipeline::cmd_verify(seed, count, &suites);
            print!("{jsonl}");
            if !ok {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
