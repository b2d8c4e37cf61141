use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mtensor::baselines::{HosvdTruncation, MatrixOrientation, RankSpec};
use mtensor::compress::{compress, report, AnyRep, Method, MethodTag};
use mtensor::container::{self, Container};
use mtensor::fourd::{patchify, unpatchify};
use mtensor::io::{load_images, load_raw, save_raw, stack_images, unstack_images, write_pgm, ImageOrientation, RawTensor};
use mtensor::multiside::SideSpec;
use mtensor::sweep::{parse_grid, sweep, write_csv, Cell};
use mtensor::synthetic::{gen_synthetic, SyntheticKind, SyntheticParams};
use mtensor::TransformKind;

#[derive(Parser)]
#[command(name = "mtensor", version, about = "Tensor compression with transform-based t-SVDs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a tensor or image stack into a container.
    Compress {
        input: PathBuf,
        #[command(flatten)]
        opts: MethodOpts,
        #[arg(long)]
        output: PathBuf,
    },
    /// Rebuild a tensor from a container.
    Reconstruct {
        input: PathBuf,
        /// Raw tensor file, or a directory of PGM frames when
        /// `--orientation` is given.
        #[arg(long)]
        output: PathBuf,
        /// Unstack frames with this orientation and write them as PGM.
        #[arg(long)]
        orientation: Option<String>,
        /// Undo a `--patch x,y` layout and write the frames as PGM.
        #[arg(long, value_parser = parse_pair)]
        patch: Option<(usize, usize)>,
        /// Original frame size `rows,cols` for `--patch`.
        #[arg(long, value_parser = parse_pair)]
        frame: Option<(usize, usize)>,
    },
    /// Describe a container or raw tensor file.
    Info { input: PathBuf },
    /// CR/RE table over methods, transforms and parameter grids.
    Sweep {
        input: PathBuf,
        #[command(flatten)]
        opts: MethodOpts,
        /// CSV destination; standard output when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a seeded synthetic tensor.
    Gen {
        /// circulant_slices, random_dense or lowrank_plus_noise.
        #[arg(long, default_value = "circulant_slices")]
        kind: String,
        #[arg(long, value_parser = parse_triple)]
        dims: [usize; 3],
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Relative Gaussian noise level.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Number of rank-one terms for lowrank_plus_noise.
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Relative error of an approximation against a reference.
    Compare {
        reference: PathBuf,
        /// Raw tensor or container.
        approx: PathBuf,
    },
}

#[derive(Args, Clone)]
struct MethodOpts {
    /// tsvdm, tsvdm2, matrix, hosvd, sequential, convex or fourd; a comma
    /// list for `sweep`.
    #[arg(long, default_value = "tsvdm2")]
    method: String,
    /// identity, dft, dct, haar or randorth; a comma list for `sweep`.
    #[arg(long, default_value = "dct")]
    transform: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Energy level; a grid (`0.9,0.99` or `lo:hi:step`) for `sweep`.
    #[arg(long)]
    gamma: Option<String>,
    /// Truncation rank; a grid for `sweep`.
    #[arg(long)]
    trank: Option<String>,
    /// HOSVD truncation triple.
    #[arg(long, value_parser = parse_triple)]
    triple: Option<[usize; 3]>,
    /// Convex weight on the unpermuted side.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// `k,q` for sequential; `k1,k2` t-ranks for convex.
    #[arg(long, value_parser = parse_pair)]
    pair: Option<(usize, usize)>,
    /// Image placement: lateral, lateral-transposed or frontal.
    #[arg(long, default_value = "lateral")]
    orientation: String,
    /// Slice matrix of the matrix baseline: lateral or horizontal.
    #[arg(long, default_value = "lateral")]
    slices: String,
    /// Split each image into an x-by-y patch grid (fourth-order input).
    #[arg(long, value_parser = parse_pair)]
    patch: Option<(usize, usize)>,
    /// Store only the independent half of conjugate-symmetric data.
    #[arg(long)]
    conjsym: bool,
}

fn parse_list(s: &str, n: usize) -> std::result::Result<Vec<usize>, String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| format!("'{x}': {e}")))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated integers"));
    }
    Ok(v)
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let v = parse_list(s, 2)?;
    Ok((v[0], v[1]))
}

fn parse_triple(s: &str) -> std::result::Result<[usize; 3], String> {
    let v = parse_list(s, 3)?;
    Ok([v[0], v[1], v[2]])
}

fn parse_slices(s: &str) -> Result<MatrixOrientation> {
    match s {
        "lateral" => Ok(MatrixOrientation::Lateral),
        "horizontal" => Ok(MatrixOrientation::Horizontal),
        _ => bail!("unknown slice orientation '{s}' (lateral or horizontal)"),
    }
}

fn ranks(grid: &[f64]) -> Result<Vec<usize>> {
    grid.iter()
        .map(|&x| {
            if x >= 1.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(anyhow!("rank {x} is not a positive integer"))
            }
        })
        .collect()
}

impl MethodOpts {
    fn gammas(&self) -> Result<Option<Vec<f64>>> {
        self.gamma.as_deref().map(parse_grid).transpose().map_err(Into::into)
    }

    fn tranks(&self) -> Result<Option<Vec<usize>>> {
        self.trank.as_deref().map(|s| ranks(&parse_grid(s)?)).transpose()
    }

    /// Every parameter setting of one method.
    fn methods(&self, tag: MethodTag) -> Result<Vec<Method>> {
        let gammas = self.gammas()?;
        let tranks = self.tranks()?;
        let need_gamma = || gammas.clone().ok_or_else(|| anyhow!("{tag} needs --gamma"));
        let out = match tag {
            MethodTag::Tsvdm => tranks
                .ok_or_else(|| anyhow!("tsvdm needs --trank"))?
                .into_iter()
                .map(|k| Method::Tsvdm { k })
                .collect(),
            MethodTag::Tsvdm2 => need_gamma()?.into_iter().map(|gamma| Method::Tsvdm2 { gamma }).collect(),
            MethodTag::Fourd => need_gamma()?.into_iter().map(|gamma| Method::Fourd { gamma }).collect(),
            MethodTag::Matrix => {
                let orientation = parse_slices(&self.slices)?;
                let specs: Vec<RankSpec> = match (tranks, gammas) {
                    (Some(k), _) => k.into_iter().map(RankSpec::Rank).collect(),
                    (None, Some(g)) => g.into_iter().map(RankSpec::Energy).collect(),
                    (None, None) => bail!("matrix needs --trank or --gamma"),
                };
                specs.into_iter().map(|spec| Method::Matrix { spec, orientation }).collect()
            }
            MethodTag::Hosvd => match (self.triple, tranks) {
                (Some(t), _) => vec![Method::Hosvd { truncation: HosvdTruncation::Triple(t) }],
                (None, Some(k)) => {
                    k.into_iter().map(|k| Method::Hosvd { truncation: HosvdTruncation::Balanced(k) }).collect()
                }
                (None, None) => bail!("hosvd needs --triple or --trank"),
            },
            MethodTag::Sequential => {
                let (k, q) = self.pair.ok_or_else(|| anyhow!("sequential needs --pair k,q"))?;
                vec![Method::Sequential { k, q }]
            }
            MethodTag::Convex => {
                let alpha = self.alpha;
                match (self.pair, tranks, gammas) {
                    (Some((a, b)), _, _) => vec![Method::Convex { spec: SideSpec::TRank(a, b), alpha }],
                    (None, Some(k), _) => {
                        k.into_iter().map(|k| Method::Convex { spec: SideSpec::TRank(k, k), alpha }).collect()
                    }
                    (None, None, Some(g)) => {
                        g.into_iter().map(|g| Method::Convex { spec: SideSpec::Energy(g, g), alpha }).collect()
                    }
                    _ => bail!("convex needs --pair, --trank or --gamma"),
                }
            }
        };
        Ok(out)
    }

    fn single_method(&self) -> Result<Method> {
        let tag = MethodTag::parse(&self.method)?;
        let mut all = self.methods(tag)?;
        if all.len() != 1 {
            bail!("compress takes a single parameter value, got {}", all.len());
        }
        Ok(all.remove(0))
    }

    fn transform(&self) -> Result<TransformKind> {
        Ok(TransformKind::parse(&self.transform)?)
    }
}

/// Raw tensor file, PGM image, or directory of PGM images.
fn load_input(path: &Path, opts: &MethodOpts) -> Result<RawTensor> {
    let raw = path.is_file()
        && std::fs::read(path)
            .map(|b| b.starts_with(b"TEN3") || b.starts_with(b"TEN4"))
            .unwrap_or(false);
    if raw {
        if opts.patch.is_some() {
            bail!("--patch applies to image input");
        }
        return Ok(load_raw(path)?);
    }
    let images = load_images(path).with_context(|| format!("reading images from {}", path.display()))?;
    if let Some((x, y)) = opts.patch {
        return Ok(RawTensor::Four(patchify(&images, x, y)?));
    }
    let orientation = ImageOrientation::parse(&opts.orientation)?;
    Ok(RawTensor::Three(stack_images(&images, orientation)?))
}

fn out_writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn load_any(path: &Path) -> Result<RawTensor> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.starts_with(container::MAGIC) {
        Ok(container::decode(&Container::from_bytes(&bytes)?)?.reconstruct()?)
    } else {
        Ok(RawTensor::from_bytes(&bytes)?)
    }
}

fn write_frames(dir: &Path, frames: &[nalgebra::DMatrix<f64>]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let width = frames.len().to_string().len().max(3);
    for (i, f) in frames.iter().enumerate() {
        std::fs::write(dir.join(format!("frame_{i:0width$}.pgm")), write_pgm(f))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Compress { input, opts, output } => {
            let a = load_input(&input, &opts)?;
            let method = opts.single_method()?;
            let rep: AnyRep = compress(&a, &method, opts.transform()?, opts.seed)?;
            let r = report(&a, &method, &rep, opts.conjsym)?;
            container::encode(&rep, opts.conjsym)?.save(&output)?;
            println!("method      {}", r.method);
            println!("parameter   {}", r.parameter);
            println!("dims        {:?}", a.dims());
            println!("payload     {} floats, {} integers", r.payload.floats, r.payload.integers);
            println!("cr          {:.6}", r.compression_ratio);
            println!("re          {:.6e}", r.relative_error);
        }
        Command::Reconstruct { input, output, orientation, patch, frame } => {
            let rep = container::load(&input)?;
            let t = rep.reconstruct()?;
            match (orientation, patch, t) {
                (None, None, t) => save_raw(&t, &output)?,
                (_, Some((x, y)), RawTensor::Four(a4)) => {
                    let (m0, n0) = frame.ok_or_else(|| anyhow!("--patch needs --frame rows,cols"))?;
                    write_frames(&output, &unpatchify(&a4, x, y, m0, n0)?)?;
                }
                (Some(o), None, RawTensor::Three(a3)) => {
                    write_frames(&output, &unstack_images(&a3, ImageOrientation::parse(&o)?))?;
                }
                _ => bail!("frame output options do not match the tensor order"),
            }
        }
        Command::Info { input } => {
            let bytes = std::fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            if bytes.starts_with(container::MAGIC) {
                let c = Container::from_bytes(&bytes)?;
                let rep = container::decode(&c)?;
                let storage = rep.storage(c.meta.conjsym);
                println!("container   TTCR v{}", container::VERSION);
                println!("method      {}", c.method);
                println!("dims        {:?}", c.dims);
                let ts: Vec<String> = c.transforms.iter().map(|t| format!("{}({})", t.kind(), t.n())).collect();
                println!("transforms  {}", ts.join(", "));
                println!("scalars     {}", if c.meta.complex { "complex" } else { "real" });
                println!("conjsym     {}", c.meta.conjsym);
                println!("payload     {} floats, {} integers", c.payload_floats(), storage.integers);
                if !c.index.is_empty() {
                    println!("ranks       {:?}", c.index);
                }
                println!("meta        {}", serde_json::to_string(&c.meta)?);
                println!("bytes       {}", bytes.len());
            } else {
                let t = RawTensor::from_bytes(&bytes)?;
                println!("tensor      order {}", t.dims().len());
                println!("dims        {:?}", t.dims());
                println!("norm        {:.6e}", t.frobenius_norm());
            }
        }
        Command::Sweep { input, opts, output } => {
            let a = load_input(&input, &opts)?;
            let kinds: Vec<TransformKind> =
                opts.transform.split(',').map(|s| TransformKind::parse(s.trim())).collect::<mtensor::Result<_>>()?;
            let mut cells = Vec::new();
            for name in opts.method.split(',') {
                let tag = MethodTag::parse(name.trim())?;
                let methods = opts.methods(tag)?;
                let kinds_here = if methods.first().is_some_and(Method::uses_transform) { &kinds[..] } else { &kinds[..1] };
                for &transform in kinds_here {
                    cells.extend(methods.iter().map(|&method| Cell { method, transform }));
                }
            }
            let rows = sweep(&a, &cells, opts.seed, opts.conjsym);
            write_csv(&rows, out_writer(output.as_deref())?)?;
        }
        Command::Gen { kind, dims, seed, noise, rank, output } => {
            let kind = SyntheticKind::parse(&kind)?;
            let a = gen_synthetic(kind, dims, seed, SyntheticParams { rank, noise })?;
            save_raw(&RawTensor::Three(a), &output)?;
        }
        Command::Compare { reference, approx } => {
            let a = load_any(&reference)?;
            let b = load_any(&approx)?;
            let d = a.distance(&b)?;
            let norm = a.frobenius_norm();
            println!("distance    {d:.6e}");
            println!("re          {:.6e}", if norm > 0.0 { d / norm } else { d });
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
