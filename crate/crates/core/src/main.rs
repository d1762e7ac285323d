use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;

use hyperbell::analysis::{emit_csv, emit_svg_heatmap, linspace, run_sweep, SweepColumn, SweepGrid};
use hyperbell::blocks::{heralded_block, BlockConfig};
use hyperbell::cavity::{reflection_coefficients, CavityParams, DephasingParams, ReflectionPair};
use hyperbell::hilbert::{mode, HybridState, Layout, Outcome, PhotonModes, PolFilter, Polarization, Spin, SpinX};
use hyperbell::optics::{parse_circuit, run_circuit};
use hyperbell::protocols::{
    classify, hbsg_target, make_bell, make_bell_in, pattern_table, run_hbsa, run_hbsa_stage1, run_hbsg, BellFrame,
    DetectorPattern, HyperBellLabel, SpinOutcome,
};
use hyperbell::{Error, Result};

#[derive(Parser)]
#[command(
    name = "hyperbell",
    version,
    about = "Quantum-dot cavity hyperentangled Bell-state simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct CavityArgs {
    /// Coupling strength, in units of kappa.
    #[arg(long, default_value_t = 1.0)]
    g: f64,
    /// Side leakage rate.
    #[arg(long, default_value_t = 0.0)]
    kappa_s: f64,
    /// Trion decay rate.
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    /// Photon detuning from cavity and trion.
    #[arg(long, default_value_t = 0.0)]
    detuning: f64,
    /// Use the lossless pair r_o = -1, r_h = 1 instead.
    #[arg(long)]
    ideal: bool,
}

impl CavityArgs {
    fn pair(&self) -> Result<ReflectionPair> {
        if self.ideal {
            return Ok(ReflectionPair::ideal());
        }
        reflection_coefficients(&CavityParams::resonant(self.g, self.kappa_s, self.gamma).with_detuning(self.detuning))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Reflection coefficients of one QD-cavity unit.
    Coeffs(CavityArgs),
    /// One heralded block acting on L light.
    Block {
        #[command(flatten)]
        cavity: CavityArgs,
        /// Initial spin: plus, minus, up or down.
        #[arg(long, default_value = "plus")]
        spin: String,
    },
    /// Heralded hyperentangled-state generation.
    Hbsg(CavityArgs),
    /// Complete analysis of one hyperentangled input.
    Hbsa {
        /// Input as `<pol>,<spatial>`, e.g. `phi+,psi-`.
        #[arg(long)]
        input: HyperBellLabel,
        #[command(flatten)]
        cavity: CavityArgs,
    },
    /// Map from spin outcomes and detector pattern to the identified state.
    ClassifyTable,
    /// Efficiency, heralding, leakage and fidelity over a parameter grid.
    Sweep(SweepArgs),
    /// Run a circuit file.
    Run {
        file: PathBuf,
        /// Input photon as `ID=POL@PATH` with POL one of R, L, H, V.
        /// Photons not listed start in H on their first path.
        #[arg(long = "photon")]
        photons: Vec<String>,
        #[command(flatten)]
        cavity: CavityArgs,
        /// Print the nonzero amplitudes of each branch.
        #[arg(long)]
        amplitudes: bool,
    },
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 0.0)]
    ks_min: f64,
    #[arg(long, default_value_t = 1.0)]
    ks_max: f64,
    #[arg(long, default_value_t = 101)]
    ks_steps: usize,
    #[arg(long, default_value_t = 0.0)]
    g_min: f64,
    #[arg(long, default_value_t = 2.5)]
    g_max: f64,
    #[arg(long, default_value_t = 101)]
    g_steps: usize,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    detuning: f64,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG heatmap output.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Column drawn in the heatmap.
    #[arg(long, default_value = "eta_sim")]
    column: SweepColumn,
    /// Cavity photon lifetime in ps; adds dephasing columns.
    #[arg(long, requires = "big_gamma")]
    tau: Option<f64>,
    /// Trion coherence time in ps.
    #[arg(long, requires = "tau")]
    big_gamma: Option<f64>,
}

fn coeffs(args: &CavityArgs) -> Result<()> {
    let p = args.pair()?;
    let s = p.success_amplitude();
    println!("r_o_re={}", p.r_o.re);
    println!("r_o_im={}", p.r_o.im);
    println!("r_h_re={}", p.r_h.re);
    println!("r_h_im={}", p.r_h.im);
    println!("phi_o={}", p.phi_o());
    println!("phi_h={}", p.phi_h());
    println!("phase_difference={}", p.phase_difference());
    println!("success_probability={}", s.norm_sqr());
    println!("leak_probability={}", p.leak_amplitude().norm_sqr());
    Ok(())
}

fn spin_ket(name: &str) -> Result<[C64; 2]> {
    match name {
        "plus" | "+" => Ok(SpinX::Plus.ket()),
        "minus" | "-" => Ok(SpinX::Minus.ket()),
        "up" => Ok(Spin::Up.ket()),
        "down" => Ok(Spin::Down.ket()),
        other => Err(Error::Config(format!("unknown spin `{other}`"))),
    }
}

fn block(cavity: &CavityArgs, spin: &str) -> Result<()> {
    let pair = cavity.pair()?;
    let ket = spin_ket(spin)?;
    let layout = Layout::new(vec![PhotonModes::new("A", &["a1", "a2"])], vec!["QD1".into()])?;
    let mut photon = vec![C64::default(); 4];
    photon[mode(Polarization::L, 0, 2)] = C64::new(1.0, 0.0);
    let input = HybridState::product(layout, &[photon], &[ket])?;
    let cfg = BlockConfig::heralded("QD1", pair, "herald");
    let branches = heralded_block(&input, "A", "a1", &cfg)?;
    let mut success = 0.0;
    let mut herald = 0.0;
    for b in &branches {
        let fired = b.record.iter().any(|(_, o)| *o == Outcome::Click);
        if fired {
            herald += b.probability;
        } else {
            success += b.probability;
        }
        println!(
            "branch herald={} probability={}",
            if fired { "click" } else { "none" },
            b.probability
        );
        for (label, a) in b.residual.terms(1e-12) {
            println!("  {label}: {}{:+}i", a.re, a.im);
        }
    }
    println!("success_probability={success}");
    println!("herald_probability={herald}");
    println!("lost_probability={}", (1.0 - success - herald).max(0.0));
    Ok(())
}

fn print_state(state: &HybridState) {
    for (label, a) in state.terms(1e-12) {
        println!("  {label}: {}{:+}i", a.re, a.im);
    }
}

fn hbsg(cavity: &CavityArgs) -> Result<()> {
    let pair = cavity.pair()?;
    let run = run_hbsg(&pair)?;
    for b in &run.branches {
        let heralds = match (b.herald_a, b.herald_b) {
            (false, false) => "none",
            (true, false) => "hA",
            (false, true) => "hB",
            (true, true) => "hA,hB",
        };
        print!(
            "branch spins={} herald={heralds} probability={}",
            b.spins, b.probability
        );
        if !b.heralded() {
            let target = hbsg_target(b.spins);
            let ideal = make_bell_in(target, BellFrame::OUTPUT);
            let f = hyperbell::analysis::fidelity(&b.state, &ideal)?;
            print!(" target={target} fidelity={f}");
        }
        println!();
        if !b.heralded() {
            print_state(&b.state);
        }
    }
    println!("herald_rate={}", run.herald_rate());
    println!("success_probability={}", run.success_probability());
    match run.conditional_fidelity() {
        Some(f) => println!("conditional_fidelity={f}"),
        None => println!("conditional_fidelity=undefined"),
    }
    Ok(())
}

fn hbsa(input: HyperBellLabel, cavity: &CavityArgs) -> Result<()> {
    let pair = cavity.pair()?;
    let state = make_bell(input);
    let branches = run_hbsa(&state, &pair)?;
    let mut correct = 0.0;
    println!("spins,pattern,probability,label");
    for b in &branches {
        let label = match &b.label {
            Ok(l) => {
                if *l == input {
                    correct += b.probability;
                }
                l.to_string()
            }
            Err(e) => format!("error: {e}"),
        };
        println!("{},{},{},\"{label}\"", b.spins, b.pattern, b.probability);
    }
    let stage1 = run_hbsa_stage1(&state, &pair)?;
    println!("correct_probability={correct}");
    println!("leakage_fraction={}", stage1.leakage_fraction());
    println!("output_probability={}", stage1.state.norm_sqr());
    Ok(())
}

fn classify_table() -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(["e1", "e2", "pattern", "pol", "spatial"]).map_err(io)?;
    let table = pattern_table();
    for spins in SpinOutcome::all() {
        for pattern in DetectorPattern::all() {
            let label = classify(spins, pattern)?;
            debug_assert!(table[&label].contains(&pattern));
            w.write_record([
                spins.e1.to_string(),
                spins.e2.to_string(),
                pattern.to_string(),
                label.pol.to_string(),
                label.spatial.to_string(),
            ])
            .map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    print!("{}", String::from_utf8_lossy(&bytes));
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    for (name, steps) in [("ks-steps", args.ks_steps), ("g-steps", args.g_steps)] {
        if steps == 0 {
            return Err(Error::Config(format!("--{name} must be at least 1")));
        }
    }
    let mut grid = SweepGrid::new(
        linspace(args.ks_min, args.ks_max, args.ks_steps),
        linspace(args.g_min, args.g_max, args.g_steps),
        args.gamma,
    )?;
    grid.detuning = args.detuning;
    if let (Some(tau), Some(big_gamma)) = (args.tau, args.big_gamma) {
        grid.dephasing = Some(DephasingParams::new(tau, big_gamma)?);
    }
    let records = run_sweep(&grid)?;
    let csv = emit_csv(&records)?;
    match &args.out {
        Some(path) => write_file(path, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(path) = &args.svg {
        write_file(path, &emit_svg_heatmap(&records, args.column)?)?;
    }
    Ok(())
}

fn write_file(path: &PathBuf, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn parse_photon_spec(spec: &str) -> Result<(String, PolFilter, String)> {
    let bad = || Error::Config(format!("expected ID=POL@PATH, got `{spec}`"));
    let (id, rest) = spec.split_once('=').ok_or_else(bad)?;
    let (pol, path) = rest.split_once('@').ok_or_else(bad)?;
    Ok((id.to_string(), pol.parse()?, path.to_string()))
}

fn run_file(file: &PathBuf, specs: &[String], cavity: &CavityArgs, amplitudes: bool) -> Result<()> {
    let text = fs::read_to_string(file).map_err(|e| Error::Config(format!("{}: {e}", file.display())))?;
    let circuit = parse_circuit(&text)?;
    let mut inputs: Vec<(PolFilter, usize)> = circuit
        .photons
        .iter()
        .map(|_| ("H".parse().expect("known filter"), 0))
        .collect();
    for spec in specs {
        let (id, pol, path) = parse_photon_spec(spec)?;
        let k = circuit
            .photons
            .iter()
            .position(|p| p.id == id)
            .ok_or_else(|| Error::Config(format!("unknown photon {id}")))?;
        let p = circuit.photons[k]
            .paths
            .iter()
            .position(|q| *q == path)
            .ok_or_else(|| Error::Config(format!("photon {id} has no path {path}")))?;
        inputs[k] = (pol, p);
    }
    let photons: Vec<Vec<C64>> = circuit
        .photons
        .iter()
        .zip(&inputs)
        .map(|(ph, (pol, p))| {
            let n = ph.paths.len();
            let mut v = vec![C64::default(); 2 * n];
            let ket = pol.ket();
            v[mode(Polarization::R, *p, n)] = ket[0];
            v[mode(Polarization::L, *p, n)] = ket[1];
            v
        })
        .collect();
    let input = circuit.input_state(&photons)?;
    let pair = cavity.pair()?;
    for b in run_circuit(&circuit, &input, &pair)? {
        let record: Vec<String> = b.record.iter().map(|(l, o)| format!("{l}={o}")).collect();
        println!("branch [{}] probability={}", record.join(" "), b.probability);
        if amplitudes {
            print_state(&b.residual);
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Coeffs(c) => coeffs(&c),
        Command::Block { cavity, spin } => block(&cavity, &spin),
        Command::Hbsg(c) => hbsg(&c),
        Command::Hbsa { input, cavity } => hbsa(input, &cavity),
        Command::ClassifyTable => classify_table(),
        Command::Sweep(args) => sweep(&args),
        Command::Run {
            file,
            photons,
            cavity,
            amplitudes,
        } => run_file(&file, &photons, &cavity, amplitudes),
    }
}

fn main() -> ExitCode {
    // Exit quietly when piped into `head` and the like.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => {
            let _ = std::io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hyperbell::analysis::{parse_csv, CSV_COLUMNS};

    fn run(args: &[&str]) -> Result<()> {
        let cli =
            Cli::try_parse_from(std::iter::once("hyperbell").chain(args.iter().copied())).expect("arguments parse");
        dispatch(cli)
    }

    fn code(args: &[&str]) -> i32 {
        run(args).err().map_or(0, |e| e.exit_code())
    }

    #[test]
    fn subcommands_succeed() {
        assert_eq!(
            code(&[
                "coeffs",
                "--g",
                "1",
                "--kappa-s",
                "0",
                "--gamma",
                "0.1",
                "--detuning",
                "0"
            ]),
            0
        );
        assert_eq!(code(&["block", "--spin", "up"]), 0);
        assert_eq!(code(&["hbsg", "--ideal"]), 0);
        assert_eq!(code(&["hbsa", "--input", "psi-,phi+"]), 0);
        assert_eq!(code(&["classify-table"]), 0);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(code(&["coeffs", "--g=-1"]), 3);
        assert_eq!(code(&["sweep", "--gamma=-0.1", "--ks-steps", "1", "--g-steps", "1"]), 3);
        assert_eq!(code(&["sweep", "--ks-steps", "0"]), 2);
        assert_eq!(code(&["block", "--spin", "sideways"]), 2);
        assert_eq!(
            code(&[
                "sweep",
                "--ks-steps",
                "1",
                "--g-steps",
                "1",
                "--tau=-1",
                "--big-gamma",
                "300"
            ]),
            3
        );
        assert!(Cli::try_parse_from(["hyperbell", "hbsa", "--input", "phi+"]).is_err());
        assert!(Cli::try_parse_from(["hyperbell", "sweep", "--tau", "20"]).is_err());
    }

    #[test]
    fn sweep_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("s.csv");
        let svg = dir.path().join("s.svg");
        let args = [
            "sweep",
            "--ks-steps",
            "2",
            "--g-steps",
            "2",
            "--g-min",
            "0.5",
            "--out",
            csv.to_str().unwrap(),
            "--svg",
            svg.to_str().unwrap(),
            "--tau",
            "20",
            "--big-gamma",
            "300",
            "--column",
            "leakage_rate",
        ];
        run(&args).unwrap();
        let text = fs::read_to_string(&csv).unwrap();
        assert!(text.starts_with(&CSV_COLUMNS.join(",")));
        let recs = parse_csv(&text).unwrap();
        assert_eq!(recs.len(), 4);
        assert!(recs.iter().all(|r| r.dephasing.is_some()));
        let svg = fs::read_to_string(&svg).unwrap();
        assert_eq!(svg.matches("class=\"cell\"").count(), 4);
        assert!(svg.contains("leakage_rate"));
    }

    #[test]
    fn run_circuit_files() {
        let block = concat!(env!("CARGO_MANIFEST_DIR"), "/circuits/block.circ");
        run(&["run", block, "--photon", "A=L@a1", "--amplitudes"]).unwrap();
        run(&["run", block, "--photon", "A=H@a1"]).unwrap();
        assert_eq!(code(&["run", block, "--photon", "A=L"]), 2);
        assert_eq!(code(&["run", block, "--photon", "B=L@a1"]), 2);
        assert_eq!(code(&["run", "/nonexistent.circ"]), 2);

        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.circ");
        fs::write(&bad, "photon A paths=a1\nop frobnicate photon=A\n").unwrap();
        assert!(matches!(
            run(&["run", bad.to_str().unwrap()]),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn photon_spec_parsing() {
        let (id, pol, path) = parse_photon_spec("B=V@d2").unwrap();
        assert_eq!((id.as_str(), pol.to_string().as_str(), path.as_str()), ("B", "V", "d2"));
        assert!(parse_photon_spec("B=X@d2").is_err());
        assert!(parse_photon_spec("B").is_err());
    }
}
