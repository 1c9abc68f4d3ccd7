use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Result};
use deltasys::certificate::{ceil_count, colour_certificate, meets_guarantee, CertificateResult};
use deltasys::clique::{max_clique, DEFAULT_CAP};
use deltasys::constructions::{
    self, block_product_family, chain_family, check_tree_properties, finite_field_family, hadamard_family,
    parity_triple_family, residue_avoiding_family, Construction, FiniteFieldOptions,
};
use deltasys::extraction::{avoid_intersections, is_intersection_closed, weak_furedi, weak_furedi_beta};
use deltasys::fractional::{mwu_colouring, validate_colouring, FractionalColouring};
use deltasys::modular::{atomic_extract, forbidden_sizes, reduce_and_extract_mod, AtomicStructure, WeightedFamily};
use deltasys::oracle::{self, OracleReport};
use deltasys::setcore::{build_graph_sizes, first_violation, SetFamily, SizeSet};
use deltasys::sunflower::find_l_sunflower;
use deltasys::Error;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::args::{Cli, Command, Common, Gen, Oracle};
use crate::io;

#[derive(Serialize)]
struct Guarantee {
    name: String,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: Option<String>,
}

/// One JSON line per invocation; enough to replay the run.
#[derive(Serialize)]
struct RunReport {
    subcommand: String,
    parameters: Value,
    seed: u64,
    input_digest: Option<String>,
    outputs: Vec<String>,
    guarantees: Vec<Guarantee>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    /// Timings kept out of the primary output so it stays byte-identical.
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_elapsed_ms: Option<f64>,
    exit_code: u8,
    wall_ms: f64,
}

struct Run<'a> {
    common: &'a Common,
    hasher: Sha256,
    hashed: bool,
    outputs: Vec<String>,
    guarantees: Vec<Guarantee>,
    oracle_elapsed_ms: Option<f64>,
}

impl<'a> Run<'a> {
    fn verify(&self) -> bool {
        !self.common.no_verify
    }

    fn family(&mut self, path: &Path) -> Result<SetFamily> {
        self.hashed = true;
        io::read_family(path, self.common.format, &mut self.hasher)
    }

    fn json<T: serde::de::DeserializeOwned>(&mut self, path: &Path) -> Result<T> {
        self.hashed = true;
        io::read_json(path, &mut self.hasher)
    }

    fn weights(&mut self, path: Option<&Path>, f: &SetFamily) -> Result<WeightedFamily> {
        match path {
            None => Ok(WeightedFamily::uniform(f)),
            Some(p) => {
                self.hashed = true;
                let w = io::read_weights(p, &mut self.hasher)?;
                Ok(WeightedFamily::new(f.n(), f.members().to_vec(), w)?)
            }
        }
    }

    fn check(&mut self, name: &str, passed: bool, detail: Option<String>) {
        if !passed {
            eprintln!(
                "guarantee failed: {name}{}",
                detail.as_deref().map(|d| format!(": {d}")).unwrap_or_default()
            );
        }
        self.guarantees.push(Guarantee {
            name: name.into(),
            passed,
            detail,
        });
    }

    /// Writes to `--out` or standard output.
    fn emit(&mut self, contents: &str) -> Result<()> {
        match &self.common.out {
            Some(path) => {
                io::write_file(path, contents)?;
                self.outputs.push(path.display().to_string());
            }
            None => print!("{contents}"),
        }
        Ok(())
    }

    fn emit_json<T: Serialize>(&mut self, value: &T) -> Result<()> {
        self.emit(&io::json_bytes(value)?)
    }

    /// Family plus a `.meta.json` sidecar next to `--out`.
    fn emit_family(&mut self, f: &SetFamily, meta: &Value) -> Result<()> {
        self.emit(&io::family_bytes(f, self.common.format))?;
        if let Some(out) = &self.common.out {
            let side = io::sidecar_path(out);
            io::write_file(&side, &io::json_bytes(meta)?)?;
            self.outputs.push(side.display().to_string());
        }
        Ok(())
    }

    fn emit_oracle(&mut self, rep: &OracleReport) -> Result<()> {
        self.check(
            &format!("oracle {}", rep.check),
            rep.verdict,
            rep.failures.first().cloned(),
        );
        self.oracle_elapsed_ms = Some(rep.elapsed_ms);
        let mut v = serde_json::to_value(rep)?;
        if let Value::Object(m) = &mut v {
            m.remove("elapsed_ms");
        }
        self.emit_json(&v)
    }
}

fn sizes(l: &[usize]) -> SizeSet {
    SizeSet::new(l.iter().copied())
}

fn subcommand_name(c: &Command) -> String {
    let v = serde_json::to_value(c).unwrap_or(Value::Null);
    let outer = match &v {
        Value::Object(m) => m.keys().next().cloned().unwrap_or_default(),
        Value::String(s) => s.clone(),
        _ => String::new(),
    };
    let inner = v
        .get(&outer)
        .and_then(|x| x.get("kind").or_else(|| x.get("check")))
        .and_then(Value::as_str);
    match inner {
        Some(i) => format!("{outer} {i}"),
        None => outer,
    }
}

/// Runs the command, appends the report, and returns the exit code.
pub fn execute(cli: &Cli) -> u8 {
    let start = Instant::now();
    let mut run = Run {
        common: &cli.common,
        hasher: Sha256::new(),
        hashed: false,
        outputs: Vec::new(),
        guarantees: Vec::new(),
        oracle_elapsed_ms: None,
    };
    let result = dispatch(&mut run, &cli.command);
    let (code, error) = match &result {
        Ok(()) if run.guarantees.iter().all(|g| g.passed) => (0, None),
        Ok(()) => (1, None),
        Err(e) => {
            eprintln!("error: {e:#}");
            (exit_code(e), Some(format!("{e:#}")))
        }
    };
    let summary: Vec<String> = run
        .guarantees
        .iter()
        .map(|g| format!("{} {}", if g.passed { "ok" } else { "FAIL" }, g.name))
        .collect();
    if !summary.is_empty() {
        eprintln!("{}", summary.join("\n"));
    }
    if let Some(path) = &cli.common.report {
        let report = RunReport {
            subcommand: subcommand_name(&cli.command),
            parameters: json!({"common": cli.common, "command": cli.command}),
            seed: cli.common.seed,
            input_digest: run.hashed.then(|| hex::encode(run.hasher.clone().finalize())),
            outputs: run.outputs.clone(),
            guarantees: std::mem::take(&mut run.guarantees),
            error,
            oracle_elapsed_ms: run.oracle_elapsed_ms,
            exit_code: code,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        let line = serde_json::to_string(&report).expect("report serializes");
        if let Err(e) = io::append_line(path, &line) {
            eprintln!("error: {e:#}");
            return 2;
        }
    }
    code
}

/// Guarantee failures inside the library exit 1; everything else is a usage or input problem.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::GuaranteeViolated(_)) | Some(Error::SearchFailed(_)) => 1,
        _ => 2,
    }
}

fn dispatch(run: &mut Run, cmd: &Command) -> Result<()> {
    let seed = run.common.seed;
    match cmd {
        Command::Gen(g) => generate(run, g),
        Command::Certify { family, ell, m } => {
            let f = run.family(family)?;
            let r = colour_certificate(&f, *ell, *m, seed)?;
            if run.verify() {
                run.check(
                    "size bound",
                    meets_guarantee(&f, &r),
                    Some(format!("{} of {}", r.subfamily.len(), f.len())),
                );
                let rep = oracle::verify_certificate(&f, &r);
                run.check("phi table", rep.verdict, rep.failures.first().cloned());
            }
            eprintln!("kept {} of {} members (trial {})", r.subfamily.len(), f.len(), r.trial);
            run.emit_json(&r)
        }
        Command::Extract {
            family,
            l,
            m,
            verify: _,
        } => {
            let f = run.family(family)?;
            let l = sizes(l);
            let r = avoid_intersections(&f, &l, *m, seed, run.verify())?;
            if run.verify() {
                let v = first_violation(&f, &r.subfamily, &l);
                run.check("avoids L", v.is_none(), v.map(|(i, j)| format!("members {i} and {j}")));
                let need = ceil_count(&r.guaranteed_fraction, f.len());
                run.check(
                    "size bound",
                    r.subfamily.len() >= need,
                    Some(format!("{} >= {need}", r.subfamily.len())),
                );
            }
            eprintln!("kept {} of {} members", r.subfamily.len(), f.len());
            run.emit_json(&r)
        }
        Command::WeakFuredi { family, m } => {
            let f = run.family(family)?;
            let r = weak_furedi(&f, *m, seed)?;
            if run.verify() {
                let need = ceil_count(&weak_furedi_beta(f.k(), *m), f.len());
                run.check(
                    "size bound",
                    r.subfamily.len() >= need,
                    Some(format!("{} >= {need}", r.subfamily.len())),
                );
                if let Some(c) = &r.closures {
                    run.check("intersection-closed", c.iter().all(|x| is_intersection_closed(x)), None);
                }
            }
            run.emit_json(&r)
        }
        Command::Atomic {
            family,
            d,
            m,
            weights,
            verify: _,
        } => {
            let f = run.family(family)?;
            let wf = run.weights(weights.as_deref(), &f)?;
            let s = atomic_extract(&wf, f.k(), *d, *m, run.verify())?;
            if run.verify() {
                let rep = oracle::verify_atomicity(&wf, &s, f.k(), *d, *m);
                run.check("atomic structure", rep.verdict, rep.failures.first().cloned());
            }
            run.emit_json(&s)
        }
        Command::ModularExtract { family, p, a, m } => {
            let f = run.family(family)?;
            let r = reduce_and_extract_mod(&f, *p, *a, *m, run.verify(), None)?;
            if run.verify() {
                let v = first_violation(&f, &r.subfamily, &forbidden_sizes(f.k(), *p, *a));
                run.check(
                    "intersections a mod p",
                    v.is_none(),
                    v.map(|(i, j)| format!("members {i} and {j}")),
                );
                let need = ceil_count(&r.guaranteed_fraction, f.len());
                run.check(
                    "size bound",
                    r.subfamily.len() >= need,
                    Some(format!("{} >= {need}", r.subfamily.len())),
                );
            }
            run.emit_json(&r)
        }
        Command::Color { family, p, a, m } => {
            let f = run.family(family)?;
            let (fc, rep) = mwu_colouring(&f, *p, *a, *m, run.verify())?;
            run.check("monotone total weight", rep.monotone, None);
            run.check("terminal weights at most 1", rep.terminal, None);
            run.check(
                "coverage floor",
                rep.min_coverage >= rep.coverage_floor,
                Some(format!("{} >= {}", rep.min_coverage, rep.coverage_floor)),
            );
            eprintln!("chi={} T={} min coverage {}", fc.chi, fc.t, rep.min_coverage);
            run.emit_json(&fc)
        }
        Command::ColorValidate { family, p, a, input } => {
            let f = run.family(family)?;
            let fc: FractionalColouring = run.json(input)?;
            let v = validate_colouring(&f, &forbidden_sizes(f.k(), *p, *a), &fc);
            run.check(
                "rounds independent",
                v.valid,
                v.violation.map(|(r, i, j)| format!("round {r}: {i}, {j}")),
            );
            run.emit_json(&v)
        }
        Command::Sunflower { family, l, m, exact } => {
            let f = run.family(family)?;
            let l = sizes(l);
            let w = if *exact {
                oracle::verify_no_l_sunflower(&f, &l, *m).1
            } else {
                find_l_sunflower(&f, &l, *m)
            };
            if let Some(w) = &w {
                run.check("witness verifies", w.verify(&f), None);
            }
            match w {
                Some(w) => run.emit_json(&w),
                None => run.emit_json(&"none"),
            }
        }
        Command::Clique { family, l, m } => {
            let f = run.family(family)?;
            let cap = io::cap(DEFAULT_CAP.max(f.len()))?;
            let c = max_clique(&build_graph_sizes(&f, &sizes(l)), cap)?;
            if let Some(m) = m {
                run.check("no m-clique", c.len() < *m, Some(format!("clique number {}", c.len())));
            }
            run.emit_json(&json!({"clique_number": c.len(), "members": c}))
        }
        Command::Oracle(o) => run_oracle(run, o),
    }
}

fn generate(run: &mut Run, g: &Gen) -> Result<()> {
    let mut extra = serde_json::Map::new();
    let c: Construction = match g {
        Gen::Chain { k, m, n } => chain_family(*k, *m, *n)?,
        Gen::Tree { k, l, m, n } => {
            let tf = constructions::tree_family_with_cap(*k, l, *m, *n, io::cap(constructions::TREE_CAP)?)?;
            if run.verify() {
                let problems = check_tree_properties(&tf);
                run.check("tree properties", problems.is_empty(), problems.first().cloned());
            }
            extra.insert("decomposition".into(), serde_json::to_value(&tf.decomposition)?);
            tf.construction
        }
        Gen::Product { k, l, m, a, base } => {
            let b = run.family(base)?;
            block_product_family(*k, l, *m, &b, *a)?
        }
        Gen::Residue { k, p, a, n } => residue_avoiding_family(*k, *p, *a, *n)?,
        Gen::Hadamard { p, k } => hadamard_family(*p, *k)?,
        Gen::Parity { k, n } => parity_triple_family(*k, *n)?,
        Gen::Fftest {
            k,
            ell,
            p,
            pattern,
            samples,
            kernels,
            pairs,
            micro,
        } => {
            let pattern = io::parse_pattern(pattern)?;
            let opts = FiniteFieldOptions {
                samples: *samples,
                kernels: *kernels,
                pairs: *pairs,
                micro: *micro,
                seed: run.common.seed,
            };
            let (_, c, rep) = finite_field_family(*k, *ell, *p, &pattern, &opts)?;
            if run.verify() {
                run.check(
                    "dimension properties",
                    rep.dimension_failures.is_empty(),
                    rep.dimension_failures.first().cloned(),
                );
                let counts_ok = rep.kernel_counts.iter().all(|kc| kc.count == rep.expected_extensions);
                run.check(
                    "extension counts",
                    counts_ok,
                    Some(format!("expected {}", rep.expected_extensions)),
                );
                run.check(
                    "pair agreements",
                    rep.pair_failures.is_empty(),
                    rep.pair_failures.first().cloned(),
                );
            }
            extra.insert("report".into(), serde_json::to_value(&rep)?);
            c
        }
    };
    if run.verify() {
        let res = c.check_guarantee();
        run.check("construction guarantee", res.is_ok(), res.err().map(|e| e.to_string()));
    }
    eprintln!("{} members on {} points", c.family.len(), c.family.n());
    let mut meta = serde_json::to_value(c.metadata())?;
    if let Value::Object(m) = &mut meta {
        m.extend(extra);
    }
    run.emit_family(&c.family, &meta)
}

fn run_oracle(run: &mut Run, o: &Oracle) -> Result<()> {
    let start = Instant::now();
    match o {
        Oracle::Mis { family, l } => {
            let f = run.family(family)?;
            let cap = io::cap(DEFAULT_CAP.max(f.len()))?;
            let (size, members) = oracle::exact_max_avoiding(&f, &sizes(l), cap)?;
            let rep = oracle::report(
                "mis",
                json!({"L": l, "members": f.len(), "size": size}),
                true,
                Some(json!(members)),
                vec![],
                start,
            );
            run.emit_oracle(&rep)
        }
        Oracle::Clique { family, l } => {
            let f = run.family(family)?;
            let cap = io::cap(DEFAULT_CAP.max(f.len()))?;
            let c = max_clique(&build_graph_sizes(&f, &sizes(l)), cap)?;
            let rep = oracle::report(
                "clique",
                json!({"L": l, "members": f.len(), "clique_number": c.len()}),
                true,
                Some(json!(c)),
                vec![],
                start,
            );
            run.emit_oracle(&rep)
        }
        Oracle::Sunflower { family, l, m } => {
            let f = run.family(family)?;
            let (ok, w) = oracle::verify_no_l_sunflower(&f, &sizes(l), *m);
            let witness = w.map(serde_json::to_value).transpose()?;
            let rep = oracle::report("sunflower", json!({"L": l, "m": m}), ok, witness, vec![], start);
            run.emit_oracle(&rep)
        }
        Oracle::Convex { l, k, p, a } => {
            let set: BTreeSet<usize> = match (k, p, a) {
                (Some(k), Some(p), Some(a)) => (0..*k).filter(|x| x % p != *a).collect(),
                _ => l.iter().copied().collect(),
            };
            let s = oracle::longest_convex_decreasing(&set);
            let (verdict, notes) = match (k, p) {
                (Some(k), Some(p)) => {
                    let bound = oracle::convex_residue_bound(*k, *p);
                    (s <= bound, vec![format!("bound {bound}")])
                }
                _ => (true, vec![]),
            };
            let rep = oracle::report(
                "convex",
                json!({"L": set, "k": k, "p": p, "a": a}),
                verdict,
                Some(json!(s)),
                notes,
                start,
            );
            run.emit_oracle(&rep)
        }
        Oracle::Prop45 { x, p, l } => {
            let set: BTreeSet<usize> = l.iter().copied().collect();
            let out = oracle::prop45_search(*x, *p, &set)?;
            let rep = oracle::report(
                "prop45",
                json!({"X": x, "p": p, "L": set, "nodes": out.nodes}),
                out.family.is_none(),
                out.family.map(|f| json!(f)),
                vec![out.note],
                start,
            );
            run.emit_oracle(&rep)
        }
        Oracle::VerifyCert { family, cert } => {
            let f = run.family(family)?;
            let r: CertificateResult = run.json(cert)?;
            if let Some(&bad) = r.subfamily.iter().find(|&&i| i >= f.len()) {
                bail!("certificate references member {bad} but the family has {}", f.len());
            }
            let rep = oracle::verify_certificate(&f, &r);
            run.emit_oracle(&rep)
        }
        Oracle::VerifyAtomic {
            family,
            structure,
            d,
            m,
            weights,
        } => {
            let f = run.family(family)?;
            let wf = run.weights(weights.as_deref(), &f)?;
            let s: AtomicStructure = run.json(structure)?;
            let rep = oracle::verify_atomicity(&wf, &s, f.k(), *d, *m);
            run.emit_oracle(&rep)
        }
    }
}
