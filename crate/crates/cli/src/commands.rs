use std::path::{Path, PathBuf};

use hapforge::compose::Resample;
use hapforge::dataset::{build, AugmentPolicy, BuildConfig, DatasetManifest, Split};
use hapforge::infer::Generator;
use hapforge::pipeline::{self, RenderOptions};
use hapforge::signals::{
    spectrogram_to_image, stft, GriffinLim, Reference, Spectrogram, StftParams, DEFAULT_DB_FLOOR,
};
use hapforge::synth::{default_classes, make_corpus, CorpusConfig, VisualImage};
use hapforge::{formats, metrics, seed};

use crate::config::{parse_size, RunConfig};
use crate::{BuildArgs, Cli, CliError, Command, EvalArgs, PlotArgs, RenderArgs, SynthArgs};

pub const RUN_CONFIG_FILE: &str = "run_config.txt";

pub fn name(c: &Command) -> &'static str {
    match c {
        Command::Synth(_) => "synth",
        Command::Build(_) => "build",
        Command::Render(_) => "render",
        Command::Eval(_) => "eval",
        Command::Plot(_) => "plot",
    }
}

struct Ctx {
    cfg: RunConfig,
    seed: u64,
    out: PathBuf,
}

impl Ctx {
    /// Records a derived seed in the echoed configuration and returns it.
    fn derived_seed(&mut self, label: &str) -> u64 {
        let s = seed::derive(self.seed, label);
        self.cfg.set(&format!("derived_seed.{label}"), s);
        s
    }

    fn path(&self, key: &str) -> Result<Option<PathBuf>, CliError> {
        self.cfg.get::<PathBuf>(key)
    }

    fn echo(&self) -> Result<(), CliError> {
        let path = self.out.join(RUN_CONFIG_FILE);
        std::fs::create_dir_all(&self.out).map_err(|e| {
            CliError::Core(hapforge::Error::Io {
                path: self.out.clone(),
                source: e,
            })
        })?;
        std::fs::write(&path, self.cfg.to_text())
            .map_err(|e| CliError::Core(hapforge::Error::Io { path, source: e }))
    }
}

pub fn run(cli: Cli) -> Result<String, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.set_flag("seed", cli.seed);
    cfg.set_flag("out", cli.out.as_ref().map(|p| p.display().to_string()));
    let seed_value = cfg.get_or("seed", 0u64)?;
    let out = cfg.get::<PathBuf>("out")?.ok_or_else(|| {
        CliError::Usage("an output directory is required (--out or `out=` in the config)".into())
    })?;
    let mut ctx = Ctx {
        cfg,
        seed: seed_value,
        out,
    };
    match cli.command {
        Command::Synth(a) => synth(&mut ctx, a),
        Command::Build(a) => build_cmd(&mut ctx, a),
        Command::Render(a) => render(&mut ctx, a),
        Command::Eval(a) => eval(&mut ctx, a),
        Command::Plot(a) => plot(&mut ctx, a),
    }
}

fn synth(ctx: &mut Ctx, a: SynthArgs) -> Result<String, CliError> {
    ctx.cfg.set_flag("classes", a.classes);
    ctx.cfg.set_flag("samples_per_class", a.samples_per_class);
    let classes = ctx.cfg.get_or("classes", 15usize)?;
    let per_class = ctx.cfg.get_or("samples_per_class", 5usize)?;
    let s = ctx.derived_seed("synth");
    let config = CorpusConfig {
        seed: s,
        samples_per_class: per_class,
        ..CorpusConfig::default()
    };
    let index = make_corpus(&default_classes(classes, s), &config, &ctx.out)?;
    ctx.echo()?;
    Ok(format!(
        "classes={classes} samples={} out={}",
        index.samples.len(),
        ctx.out.display()
    ))
}

fn build_cmd(ctx: &mut Ctx, a: BuildArgs) -> Result<String, CliError> {
    ctx.cfg
        .set_flag("raw", a.raw.as_ref().map(|p| p.display().to_string()));
    ctx.cfg.set_flag("augmentations", a.augmentations);
    ctx.cfg.set_flag("trace_window", a.trace_window);
    ctx.cfg.set_flag("max_rotation", a.max_rotation);
    ctx.cfg.set_flag("noise", a.noise);
    let raw = ctx
        .path("raw")?
        .ok_or_else(|| CliError::Usage("build needs --raw DIR".into()))?;
    let defaults = BuildConfig::default();
    let config = BuildConfig {
        seed: ctx.derived_seed("dataset"),
        augmentations_per_sample: ctx
            .cfg
            .get_or("augmentations", defaults.augmentations_per_sample)?,
        trace_window: ctx.cfg.get_or("trace_window", defaults.trace_window)?,
        policy: AugmentPolicy {
            max_rotation_deg: ctx
                .cfg
                .get_or("max_rotation", defaults.policy.max_rotation_deg)?,
            noise_sigma: ctx.cfg.get_or("noise", defaults.policy.noise_sigma)?,
            ..defaults.policy
        },
        ..defaults
    };
    let m = build(&raw, &ctx.out, &config)?;
    ctx.echo()?;
    Ok(format!(
        "records={} train={} val={} test={} out={}",
        m.records.len(),
        m.counts.train,
        m.counts.val,
        m.counts.test,
        ctx.out.display()
    ))
}

fn parse_split(s: &str) -> Result<Split, CliError> {
    match s {
        "train" => Ok(Split::Train),
        "val" => Ok(Split::Val),
        "test" => Ok(Split::Test),
        _ => Err(CliError::Usage(format!(
            "unknown split `{s}` (train, val or test)"
        ))),
    }
}

fn load_generators(ctx: &Ctx) -> Result<(Generator, Generator), CliError> {
    let need = |key: &str| -> Result<PathBuf, CliError> {
        let p = ctx.path(key)?.ok_or_else(|| {
            CliError::Missing(format!("missing weights: pass --{}", key.replace('_', "-")))
        })?;
        if !p.is_file() {
            return Err(CliError::Missing(format!(
                "missing weights: {} does not exist",
                p.display()
            )));
        }
        Ok(p)
    };
    let (h, s) = (need("weights_h")?, need("weights_s")?);
    Ok((Generator::load(&h)?, Generator::load(&s)?))
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into())
}

fn render(ctx: &mut Ctx, a: RenderArgs) -> Result<String, CliError> {
    ctx.cfg.set_flag(
        "manifest",
        a.manifest.as_ref().map(|p| p.display().to_string()),
    );
    ctx.cfg.set_flag("split", a.split.clone());
    ctx.cfg.set_flag("limit", a.limit);
    if a.ground_truth {
        ctx.cfg.set("ground_truth", true);
    }
    ctx.cfg.set_flag(
        "weights_h",
        a.weights_h.as_ref().map(|p| p.display().to_string()),
    );
    ctx.cfg.set_flag(
        "weights_s",
        a.weights_s.as_ref().map(|p| p.display().to_string()),
    );
    ctx.cfg.set_flag("display_size", a.display_size.clone());
    ctx.cfg.set_flag("resample", a.resample.clone());
    ctx.cfg.set_flag("iterations", a.iterations);

    let split = parse_split(&ctx.cfg.get_or("split", "test".to_string())?)?;
    let limit = ctx.cfg.get::<usize>("limit")?;
    let ground_truth = ctx.cfg.get_or("ground_truth", false)?;
    let iterations = ctx
        .cfg
        .get_or("iterations", GriffinLim::default().iterations)?;
    let display = match ctx.cfg.raw("display_size").map(str::to_string) {
        Some(s) => {
            let mode = match ctx.cfg.get_or("resample", "nearest".to_string())?.as_str() {
                "nearest" => Resample::Nearest,
                "bilinear" => Resample::Bilinear,
                other => return Err(CliError::Usage(format!("unknown resample mode `{other}`"))),
            };
            Some((parse_size(&s)?, mode))
        }
        None => None,
    };
    let opts = RenderOptions {
        griffin_lim: GriffinLim {
            iterations,
            ..GriffinLim::default()
        },
        display,
    };
    let manifest_dir = ctx.path("manifest")?;
    let manifest = manifest_dir
        .as_deref()
        .map(DatasetManifest::read)
        .transpose()?;
    let records: Vec<_> = manifest
        .iter()
        .flat_map(|m| m.records_in(split))
        .take(limit.unwrap_or(usize::MAX))
        .cloned()
        .collect();

    let batch = if ground_truth {
        let (dir, m) = match (&manifest_dir, &manifest) {
            (Some(d), Some(m)) => (d, m),
            _ => {
                return Err(CliError::Missing(
                    "ground-truth rendering needs --manifest DIR".into(),
                ))
            }
        };
        if records.is_empty() {
            return Err(CliError::Missing(format!(
                "no records in split {}",
                split.as_str()
            )));
        }
        let items = records
            .iter()
            .map(|r| {
                Ok((
                    r.id.clone(),
                    formats::read_height_png(&dir.join(&r.height_path))?,
                    formats::read_trace_csv(&dir.join(&r.trace_path))?,
                ))
            })
            .collect::<hapforge::Result<Vec<_>>>()?;
        pipeline::render_ground_truth(items, &m.config.stft, m.config.reference(), &opts)?
    } else {
        let mut images: Vec<(String, VisualImage)> = Vec::new();
        for p in &a.inputs {
            images.push((stem(p), VisualImage::new(formats::read_rgb_png(p)?)?));
        }
        if let Some(dir) = &manifest_dir {
            for r in &records {
                images.push((
                    r.id.clone(),
                    VisualImage::new(formats::read_rgb_png(&dir.join(&r.visual_path))?)?,
                ));
            }
        }
        if images.is_empty() {
            return Err(CliError::Missing("no inputs to render".into()));
        }
        let (gh, gs) = load_generators(ctx)?;
        pipeline::render_generated(&gh, &gs, &images, &opts)?
    };
    pipeline::write_render(&batch, &ctx.out)?;
    ctx.echo()?;
    let pixels = batch
        .objects
        .iter()
        .flat_map(|o| o.friction.pixels.iter().copied());
    let (lo, hi) = pixels.fold((u8::MAX, u8::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Ok(format!(
        "objects={} min_pixel={lo} max_pixel={hi} global_min={} global_max={} out={}",
        batch.objects.len(),
        batch.context.global_min,
        batch.context.global_max,
        ctx.out.display()
    ))
}

fn eval(ctx: &mut Ctx, a: EvalArgs) -> Result<String, CliError> {
    ctx.cfg.set_flag(
        "manifest",
        a.manifest.as_ref().map(|p| p.display().to_string()),
    );
    ctx.cfg.set_flag("split", a.split.clone());
    ctx.cfg.set_flag(
        "weights_h",
        a.weights_h.as_ref().map(|p| p.display().to_string()),
    );
    ctx.cfg.set_flag(
        "weights_s",
        a.weights_s.as_ref().map(|p| p.display().to_string()),
    );
    ctx.cfg.set_flag("iterations", a.iterations);
    let dir = ctx
        .path("manifest")?
        .ok_or_else(|| CliError::Missing("eval needs --manifest DIR".into()))?;
    let split = parse_split(&ctx.cfg.get_or("split", "test".to_string())?)?;
    let iterations = ctx
        .cfg
        .get_or("iterations", GriffinLim::default().iterations)?;
    let manifest = DatasetManifest::read(&dir)?;
    let (gh, gs) = load_generators(ctx)?;
    let gl = GriffinLim {
        iterations,
        ..GriffinLim::default()
    };
    let (report, scores) = pipeline::evaluate(&dir, &manifest, split, &gh, &gs, &gl)?;
    formats::write_file(
        &ctx.out.join("eval_report.txt"),
        report.to_record().as_bytes(),
    )?;
    formats::write_file(
        &ctx.out.join("eval_samples.csv"),
        metrics::scores_to_csv(&scores).as_bytes(),
    )?;
    ctx.echo()?;
    Ok(format!(
        "samples={} mae={} mae_ratio={} ssim_mean={} t_statistic={} p_value={}",
        report.sample_count,
        report.mae,
        report.mae_ratio,
        report.ssim_mean,
        report.t_statistic,
        report.p_value
    ))
}

fn spectrogram_png(
    ctx: &Ctx,
    name: &str,
    spec: &Spectrogram,
    reference: Reference,
) -> Result<PathBuf, CliError> {
    let img = spectrogram_to_image(spec, DEFAULT_DB_FLOOR, reference)?;
    let path = ctx.out.join(format!("spectrogram_{name}.png"));
    formats::write_gray_png(&path, &pipeline::spectrogram_png_pixels(&img))?;
    Ok(path)
}

fn plot(ctx: &mut Ctx, a: PlotArgs) -> Result<String, CliError> {
    if a.inputs.is_empty() {
        return Err(CliError::Missing("no inputs to plot".into()));
    }
    let params = StftParams::default();
    let mut written = Vec::new();
    for p in &a.inputs {
        let name = stem(p);
        match p.extension().and_then(|e| e.to_str()) {
            Some("csv") => {
                let t = formats::read_trace_csv(p)?;
                let path = ctx.out.join(format!("trace_{name}.png"));
                formats::write_gray_png(&path, &pipeline::plot_trace(&t, 640, 240)?)?;
                written.push(path);
                let spec = stft(&t, &params)?;
                written.push(spectrogram_png(
                    ctx,
                    &name,
                    &spec,
                    Reference::Fixed(params.window_length as f64 / 2.0),
                )?);
            }
            Some("png") => {
                let h = formats::read_height_png(p)?;
                let path = ctx.out.join(format!("relief_{name}.png"));
                formats::write_rgb_png(&path, &pipeline::shaded_relief(&h)?)?;
                written.push(path);
            }
            Some("v2hs") => {
                let data = formats::read_spectrogram(p)?;
                let (bins, frames) = match &data {
                    hapforge::signals::SpectrogramData::Complex(c) => c.dim(),
                    hapforge::signals::SpectrogramData::Magnitude(m) => m.dim(),
                };
                let fft_length = 2 * (bins.max(1) - 1);
                let plot_params = StftParams::hann(fft_length.max(1), (fft_length / 4).max(1));
                let len = plot_params.window_length + (frames.max(1) - 1) * plot_params.hop_length;
                let spec = Spectrogram::from_data(
                    data,
                    plot_params,
                    len,
                    hapforge::signals::DEFAULT_SAMPLE_RATE_HZ,
                )?;
                written.push(spectrogram_png(ctx, &name, &spec, Reference::Max)?);
            }
            _ => {
                return Err(CliError::Usage(format!(
                    "cannot plot {}: expected .csv, .png or .v2hs",
                    p.display()
                )))
            }
        }
    }
    let index: String = std::iter::once("source,figure\n".to_string())
        .chain(
            a.inputs
                .iter()
                .zip(written.iter())
                .map(|(s, f)| format!("{},{}\n", s.display(), f.display())),
        )
        .collect();
    formats::write_file(&ctx.out.join("figures.csv"), index.as_bytes())?;
    ctx.echo()?;
    Ok(format!(
        "figures={} out={}",
        written.len(),
        ctx.out.display()
    ))
}
