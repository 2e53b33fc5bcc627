//! Command-line surface: build-gens, fill, verify, bound, closure, check,
//! sample, oracle. Exit codes: 0 ok, 1 verdict failure, 2 input error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ambient::{Ambient, AmbientRepr};
use crate::applications::{
    check_quadratic_conditions, raag_psplit_check, raag_psplit_search, Graph, QuadraticParams, RaagVerdict, SPFSpec,
    GRAPH_SCHEMA, SPF_SCHEMA,
};
use crate::dehn_tools::{
    brute_force_area, format_rational, parse_rational, sample_dehn, superadditive_closure, FinitePresentation,
    FunctionTable, PresentationRepr,
};
use crate::group_core::IntVector;
use crate::homs::Factoring;
use crate::kernel_gens::{build_square_gens, build_triangle_gens, GensRepr, KernelGenSet, Method};
use crate::tessellate::{
    area_bound, build_certificate, random_loop, verify_certificate, BoundB, Branch, FillingCertificate,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "spf", about = "Fillings and Dehn function bounds for kernels in products of free groups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// write the main output here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// seed for every random choice
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Triangle,
    Square,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Triangle => Method::Triangle,
            MethodArg::Square => Method::Square,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    Superadditive,
    Log,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// ambient spec (spf-ambient/1) -> kernel generating set (spf-gens/1)
    BuildGens {
        spec: PathBuf,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
    },
    /// generating set + null-homotopic word -> filling certificate
    Fill {
        gens: PathBuf,
        /// word in the generator names; omit to fill a random loop
        word: Option<String>,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// random walk length when no word is given
        #[arg(long, default_value_t = 12)]
        random: usize,
    },
    /// re-check a certificate from its serialized data alone
    Verify { certificate: PathBuf },
    /// area bound report for a certificate and a function table
    Bound {
        certificate: PathBuf,
        f: PathBuf,
        /// "symbolic" or an exact rational p/q
        #[arg(long = "B", default_value = "symbolic")]
        b: String,
        #[arg(long, value_enum)]
        branch: Option<BranchArg>,
    },
    /// superadditive closure of an n,value table
    Closure { f: PathBuf },
    /// hypothesis checker for an SPF spec (spf-spec/1) or a RAAG input (spf-graph/1)
    Check {
        input: PathBuf,
        /// minimal block size with finite index image (computed when absent)
        #[arg(long)]
        block_size: Option<usize>,
    },
    /// certificate statistics for random loops
    Sample {
        gens: PathBuf,
        /// walk lengths, comma separated
        #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        samples: usize,
        /// function table; n^2 when absent
        #[arg(long)]
        f: Option<PathBuf>,
    },
    /// exact area by relator-application search
    Oracle {
        presentation: PathBuf,
        word: String,
        #[arg(long, default_value_t = 1_000_000)]
        budget: usize,
    },
}

/// RAAG input for `check`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RaagInput {
    pub schema: String,
    pub graph: Graph,
    pub phi: Vec<IntVector>,
    pub factoring: Factoring,
    #[serde(default)]
    pub delta1: Option<Vec<usize>>,
    #[serde(default)]
    pub delta2: Option<Vec<usize>>,
}

struct Failure {
    code: i32,
    msg: String,
}

fn input_err(msg: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_INPUT, msg: msg.to_string() }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn read_table(path: &Path) -> Result<FunctionTable, Failure> {
    let s = read(path)?;
    FunctionTable::read_csv(s.as_bytes()).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn load_gens(path: &Path) -> Result<KernelGenSet, Failure> {
    let repr: GensRepr = read_json(path)?;
    KernelGenSet::from_repr(&repr).map_err(input_err)
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

/// Output text and exit code of one command.
fn dispatch(cli: &Cli) -> Result<(String, i32), Failure> {
    match &cli.command {
        Command::BuildGens { spec, method } => {
            let repr: AmbientRepr = read_json(spec)?;
            let amb = Ambient::from_repr(&repr).map_err(input_err)?;
            let method = match method {
                Some(m) => Method::from(*m),
                None if amb.num_slots() == 3 => Method::Triangle,
                None => Method::Square,
            };
            let gens = match method {
                Method::Triangle => build_triangle_gens(amb),
                Method::Square => build_square_gens(amb),
            }
            .map_err(input_err)?;
            Ok((pretty(&gens.to_repr()), EXIT_OK))
        }
        Command::Fill { gens, word, method, random } => {
            let gens = load_gens(gens)?;
            if let Some(m) = method {
                if Method::from(*m) != gens.method {
                    return Err(input_err(format!("generating set is for the {} method", gens.method)));
                }
            }
            let (w, seed) = match word {
                Some(s) => (gens.parse_word(s).map_err(input_err)?, None),
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
                    (random_loop(&gens, &mut rng, *random), Some(cli.seed))
                }
            };
            let mut cert = build_certificate(&gens, &w).map_err(input_err)?;
            cert.seed = seed;
            Ok((cert.to_json() + "\n", EXIT_OK))
        }
        Command::Verify { certificate } => {
            let cert = FillingCertificate::from_json(&read(certificate)?).map_err(input_err)?;
            match verify_certificate(&cert) {
                Ok(()) => Ok(("ok\n".into(), EXIT_OK)),
                Err(v) => Err(Failure { code: EXIT_VERDICT, msg: format!("violation: {v}") }),
            }
        }
        Command::Bound { certificate, f, b, branch } => {
            let cert = FillingCertificate::from_json(&read(certificate)?).map_err(input_err)?;
            let f = read_table(f)?;
            let b = if b == "symbolic" {
                BoundB::Symbolic
            } else {
                BoundB::Value(parse_rational(b).ok_or_else(|| input_err(format!("bad --B value {b:?}")))?)
            };
            let branch = branch.map(|x| match x {
                BranchArg::Superadditive => Branch::SuperadditiveQuotient,
                BranchArg::Log => Branch::LogClosure,
            });
            let report = area_bound(&cert, &f, b, branch).map_err(input_err)?;
            let code = if report.holds { EXIT_OK } else { EXIT_VERDICT };
            Ok((pretty(&report.to_json()), code))
        }
        Command::Closure { f } => {
            let f = read_table(f)?;
            Ok((superadditive_closure(&f).to_csv_string(), EXIT_OK))
        }
        Command::Check { input, block_size } => {
            let value: serde_json::Value = read_json(input)?;
            match value.get("schema").and_then(|s| s.as_str()) {
                Some(SPF_SCHEMA) => {
                    let spec: SPFSpec = serde_json::from_value(value).map_err(input_err)?;
                    spec.validate().map_err(input_err)?;
                    let report = check_quadratic_conditions(&spec, &QuadraticParams { block_size: *block_size });
                    let code = if report.applies() { EXIT_OK } else { EXIT_VERDICT };
                    Ok((report.to_json() + "\n", code))
                }
                Some(GRAPH_SCHEMA) => {
                    let raag: RaagInput = serde_json::from_value(value).map_err(input_err)?;
                    let g = Graph::new(raag.graph.vertices.clone(), raag.graph.edges.clone()).map_err(input_err)?;
                    let verdict = match (&raag.delta1, &raag.delta2) {
                        (Some(d1), Some(d2)) => raag_psplit_check(&g, &raag.phi, &raag.factoring, d1, d2)
                            .map_err(input_err)?,
                        _ => match raag_psplit_search(&g, &raag.phi, &raag.factoring).map_err(input_err)? {
                            Some(v) => v,
                            None => RaagVerdict {
                                pass: false,
                                witness: Some("no clique pair found".into()),
                                delta1: Vec::new(),
                                delta2: Vec::new(),
                            },
                        },
                    };
                    let code = if verdict.pass { EXIT_OK } else { EXIT_VERDICT };
                    let out = serde_json::json!({ "schema": "spf-raag-verdict/1", "verdict": verdict });
                    Ok((pretty(&out), code))
                }
                other => Err(input_err(format!("unknown input schema {other:?}"))),
            }
        }
        Command::Sample { gens, n, samples, f } => {
            let gens = load_gens(gens)?;
            let max_n = n.iter().copied().max().unwrap_or(0);
            let f = match f {
                Some(p) => read_table(p)?,
                None => FunctionTable::power(576 * (max_n + 4), 2),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let mut wr = csv::Writer::from_writer(Vec::new());
            let header = [
                "seed",
                "walk_length",
                "samples",
                "max_loop_length",
                "mean_loop_length",
                "max_bound",
                "mean_bound",
                "max_bigons",
                "max_regions",
                "max_edges",
                "max_diameter",
            ];
            wr.write_record(header).map_err(input_err)?;
            for &len in n {
                let st = sample_dehn(&gens, len, *samples, &f, &mut rng).map_err(input_err)?;
                wr.write_record([
                    cli.seed.to_string(),
                    st.walk_length.to_string(),
                    st.samples.to_string(),
                    st.max_loop_length.to_string(),
                    format!("{:.6}", st.mean_loop_length),
                    format_rational(&st.max_bound),
                    format!("{:.6}", st.mean_bound),
                    st.max_bigons.to_string(),
                    st.max_regions.to_string(),
                    st.max_edges.to_string(),
                    st.max_diameter.to_string(),
                ])
                .map_err(input_err)?;
            }
            let bytes = wr.into_inner().map_err(|e| input_err(e.to_string()))?;
            Ok((String::from_utf8(bytes).expect("utf8"), EXIT_OK))
        }
        Command::Oracle { presentation, word, budget } => {
            let repr: PresentationRepr = read_json(presentation)?;
            let p = FinitePresentation::from_repr(&repr).map_err(input_err)?;
            let w = p.alphabet.parse(word).map_err(input_err)?;
            let (area, code, note) = match brute_force_area(&p, &w, *budget) {
                Ok(a) => (Some(a), EXIT_OK, None),
                Err(e) => (None, EXIT_VERDICT, Some(e.to_string())),
            };
            let out = serde_json::json!({
                "schema": "spf-oracle/1",
                "word": word,
                "budget": budget,
                "area": area,
                "note": note,
            });
            Ok((pretty(&out), code))
        }
    }
}

/// Run one command; the main output goes to `--out` or `stdout`, messages to `stderr`.
pub fn run(args: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return EXIT_INPUT;
            }
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
    };
    match dispatch(&cli) {
        Ok((text, code)) => {
            match &cli.out {
                Some(path) => {
                    if let Err(e) = fs::write(path, &text) {
                        let _ = writeln!(stderr, "{}: {e}", path.display());
                        return EXIT_INPUT;
                    }
                }
                None => {
                    let _ = stdout.write_all(text.as_bytes());
                }
            }
            code
        }
        Err(f) => {
            let _ = writeln!(stderr, "{}", f.msg);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::{simple_component, SlotRepr, AMBIENT_SCHEMA};

    fn call(args: &[&str]) -> (i32, String, String) {
        let args: Vec<String> = std::iter::once("spf").chain(args.iter().copied()).map(String::from).collect();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(&args, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("spf-cli-test-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    fn sb3_spec() -> AmbientRepr {
        let slots = (1..=3)
            .map(|i| SlotRepr {
                components: vec![simple_component(&[&format!("a{i}"), &format!("b{i}")], vec![vec![1, 0]])],
            })
            .collect();
        AmbientRepr { schema: AMBIENT_SCHEMA.into(), m: 1, factoring: Factoring::whole(1), slots }
    }

    #[test]
    fn build_fill_verify_round_trip() {
        let spec = tmp("sb3.json");
        fs::write(&spec, serde_json::to_string(&sb3_spec()).unwrap()).unwrap();
        let gens = tmp("sb3-gens.json");
        let (code, _, err) = call(&["build-gens", spec.to_str().unwrap(), "--out", gens.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
        let repr: GensRepr = serde_json::from_str(&fs::read_to_string(&gens).unwrap()).unwrap();
        assert_eq!(repr.generators.len(), 6);
        let cert = tmp("cert.json");
        let (code, _, err) = call(&["fill", gens.to_str().unwrap(), "--seed", "5", "--out", cert.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
        let (code, out, _) = call(&["verify", cert.to_str().unwrap()]);
        assert_eq!((code, out.as_str()), (0, "ok\n"));
        // corrupt one region length
        let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&cert).unwrap()).unwrap();
        let len = v["regions"][0]["length"].as_u64().unwrap();
        v["regions"][0]["length"] = serde_json::json!(len + 1);
        let bad = tmp("bad.json");
        fs::write(&bad, v.to_string()).unwrap();
        let (code, _, err) = call(&["verify", bad.to_str().unwrap()]);
        assert_eq!(code, 1);
        assert!(err.contains("region r0"), "{err}");
    }

    #[test]
    fn input_errors_exit_2() {
        let bad = tmp("malformed.json");
        fs::write(&bad, "{ not json").unwrap();
        let (code, _, err) = call(&["build-gens", bad.to_str().unwrap()]);
        assert_eq!(code, 2);
        assert!(!err.is_empty());
        let (code, _, _) = call(&["no-such-command"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn closure_example() {
        let f = tmp("f.csv");
        fs::write(&f, "n,value\n1,5\n2,6\n3,7\n").unwrap();
        let (code, out, _) = call(&["closure", f.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert_eq!(out, "n,value\n1,5\n2,10\n3,15\n");
    }

    #[test]
    fn check_verdicts() {
        let spec = crate::applications::build_dison(2, 4, 2).unwrap();
        let p = tmp("k242.json");
        fs::write(&p, serde_json::to_string(&spec).unwrap()).unwrap();
        let (code, out, _) = call(&["check", p.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert!(out.contains("Theorem applies: quadratic"));
        let spec = crate::applications::build_dison(2, 3, 2).unwrap();
        fs::write(&p, serde_json::to_string(&spec).unwrap()).unwrap();
        let (code, out, _) = call(&["check", p.to_str().unwrap()]);
        assert_eq!(code, 1);
        assert!(out.contains("\"inequality\""));

        let raag = RaagInput {
            schema: GRAPH_SCHEMA.into(),
            graph: Graph::cycle(6),
            phi: (0..6).map(|i| if i % 2 == 0 { vec![1, 0] } else { vec![0, 1] }).collect(),
            factoring: Factoring::new(vec![vec![1, 0]], vec![vec![0, 1]]).unwrap(),
            delta1: Some(vec![0]),
            delta2: Some(vec![1]),
        };
        let p = tmp("hex.json");
        fs::write(&p, serde_json::to_string(&raag).unwrap()).unwrap();
        let (code, _, _) = call(&["check", p.to_str().unwrap()]);
        assert_eq!(code, 0);
    }

    #[test]
    fn oracle_and_sample() {
        let pres = tmp("z2.json");
        let repr = PresentationRepr {
            schema: crate::dehn_tools::PRESENTATION_SCHEMA.into(),
            generators: vec!["a".into(), "b".into()],
            relators: vec!["a b a^-1 b^-1".into()],
        };
        fs::write(&pres, serde_json::to_string(&repr).unwrap()).unwrap();
        let (code, out, err) = call(&["oracle", pres.to_str().unwrap(), "a a b b a^-1 a^-1 b^-1 b^-1"]);
        assert_eq!(code, 0, "{err}");
        assert!(out.contains("\"area\": 4"), "{out}");

        let spec = tmp("sb3b.json");
        fs::write(&spec, serde_json::to_string(&sb3_spec()).unwrap()).unwrap();
        let gens = tmp("sb3b-gens.json");
        call(&["build-gens", spec.to_str().unwrap(), "--out", gens.to_str().unwrap()]);
        let a = call(&["sample", gens.to_str().unwrap(), "--n", "4,8", "--samples", "3", "--seed", "9"]);
        let b = call(&["sample", gens.to_str().unwrap(), "--n", "4,8", "--samples", "3", "--seed", "9"]);
        assert_eq!(a.0, 0, "{}", a.2);
        assert_eq!(a.1, b.1);
        assert_eq!(a.1.lines().count(), 3);
    }
}
