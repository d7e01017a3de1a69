use std::fs;
use std::path::{Path, PathBuf};

use phscrn::estimation::{estimate_params, EstimateOptions};
use phscrn::io::{
    export_curve, export_grid, export_stack_csv, import_frame_files, import_long_csv, read_stack, write_file_atomic,
    write_stack, Dtype, Metadata, ParamsFile, Provenance,
};
use phscrn::metrics::{evaluate_ensemble, BlockLengths, Preset, Statistics, PERCENTILE_RULE};
use phscrn::screens::{generate_series, GenSpec};
use phscrn::{Error, FrameSeries};
use serde_json::json;

use crate::{DtypeArg, EstimateArgs, EvaluateArgs, ExportArgs, GenerateArgs, ImportArgs, ImportFormat, PresetArg};

pub enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome = Result<(), Failure>;

fn io_error(path: &Path, source: std::io::Error) -> Failure {
    Failure::Lib(Error::Io { path: path.to_path_buf(), source })
}

fn dtype(arg: DtypeArg) -> Dtype {
    match arg {
        DtypeArg::F32 => Dtype::F32,
        DtypeArg::F64 => Dtype::F64,
    }
}

pub fn estimate(args: EstimateArgs) -> Outcome {
    let mut series = read_stack(&args.input)?;
    if let Some(f) = args.split {
        series = series.split_fraction(f)?.0;
    }
    let opts = EstimateOptions {
        lag: args.lag as usize,
        max_shift: args.max_shift,
        remove_ttp: args.remove_ttp,
    };
    let est = estimate_params(&series, &opts)?;
    let provenance = Provenance {
        input: Some(args.input.display().to_string()),
        lag: Some(opts.lag),
        tool_version: phscrn::VERSION.to_string(),
        seed: None,
        fs_hz: Some(series.fs_hz()),
        lambda_m: Some(series.lambda_m()),
        warnings: est.warnings.iter().map(|w| w.to_string()).collect(),
    };
    ParamsFile::new(est.params, provenance).write(&args.out)?;

    let p = est.params;
    let name = args.input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    println!("{:<12} {:>10} {:>10} {:>24} {:>9}", "data set", "L0 (m)", "r0 (m)", "(vx, vy) (px/step)", "alpha");
    println!(
        "{:<12} {:>10.5} {:>10.5} {:>24} {:>9.5}",
        name,
        p.l0_m,
        p.r0_m,
        format!("({:.5}, {:.5})", p.vx_px, p.vy_px),
        p.alpha
    );
    Ok(())
}

pub fn generate(args: GenerateArgs) -> Outcome {
    let file = ParamsFile::read(&args.params)?;
    let params = file.params();
    params.validate()?;

    let reference = args.reference.as_deref().map(read_stack).transpose()?;
    let n_steps = match (&reference, args.steps) {
        (Some(r), _) => r.nt().checked_mul(args.multiplier).ok_or_else(|| {
            Failure::Usage(format!("{} x {} frames overflows", r.nt(), args.multiplier))
        })?,
        (None, Some(n)) => n,
        (None, None) => return Err(Failure::Usage("either --steps or --ref is required".into())),
    };
    let fs_hz = reference
        .as_ref()
        .map(FrameSeries::fs_hz)
        .or(args.fs_hz)
        .or(file.provenance.fs_hz)
        .ok_or_else(|| Failure::Usage("no sampling frequency: pass --fs-hz or --ref".into()))?;
    let lambda_m = reference
        .as_ref()
        .map(FrameSeries::lambda_m)
        .or(args.lambda_m)
        .or(file.provenance.lambda_m)
        .ok_or_else(|| Failure::Usage("no wavelength: pass --lambda-m or --ref".into()))?;

    fs::create_dir_all(&args.out_dir).map_err(|e| io_error(&args.out_dir, e))?;
    let width = (args.ensemble - 1).to_string().len().max(3);
    for m in 0..args.ensemble {
        let spec = GenSpec {
            n_out: args.size,
            n_steps,
            seed: args.seed.wrapping_add(m),
            lambda_m,
            fs_hz,
        };
        let series = generate_series(&params, &spec)?;
        let path = args.out_dir.join(format!("member_{m:0width$}.phs"));
        write_stack(&series, &path, dtype(args.dtype))?;
        log::info!("wrote {}", path.display());
        println!("{}", path.display());
    }
    Ok(())
}

fn block_lengths(args: &EvaluateArgs) -> Result<BlockLengths, Failure> {
    let preset = args.preset.map(|p| match p {
        PresetArg::F06 => Preset::F06.block_lengths(),
        PresetArg::F12 => Preset::F12.block_lengths(),
    });
    let phase = args.nb_phase.or(preset.map(|b| b.phase));
    let slope = args.nb_slope.or(preset.map(|b| b.slope));
    match (phase, slope) {
        (Some(phase), Some(slope)) => Ok(BlockLengths { phase, slope }),
        _ => Err(Failure::Usage("block lengths needed: pass --nb-phase and --nb-slope, or --preset".into())),
    }
}

fn write_statistics(dir: &Path, prefix: &str, stats: &Statistics) -> Result<Vec<PathBuf>, Error> {
    let path = |what: &str| dir.join(format!("{prefix}_{what}.csv"));
    let written = vec![path("slope_tpsd"), path("phase_tpsd"), path("structure")];
    export_curve(&stats.slope_tpsd, &written[0])?;
    export_curve(&stats.phase_tpsd, &written[1])?;
    export_grid(&stats.structure, &written[2])?;
    Ok(written)
}

pub fn evaluate(args: EvaluateArgs) -> Outcome {
    let blocks = block_lengths(&args)?;
    let mut measured = read_stack(&args.measured)?;
    if let Some(f) = args.split {
        measured = measured.split_fraction(f)?.1;
    }
    let report = evaluate_ensemble(&measured, args.synthetic.iter().map(read_stack), blocks)?;

    fs::create_dir_all(&args.out_dir).map_err(|e| io_error(&args.out_dir, e))?;
    let mut files = write_statistics(&args.out_dir, "measured", &report.measured)?;
    files.extend(write_statistics(&args.out_dir, "synthetic", &report.synthetic)?);

    let doc = json!({
        "tool_version": phscrn::VERSION,
        "measured": args.measured.display().to_string(),
        "synthetic": args.synthetic.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "split": args.split,
        "ensemble_size": report.ensemble_size,
        "block_lengths": { "phase": blocks.phase, "slope": blocks.slope },
        "percentile_rule": PERCENTILE_RULE,
        "metrics": report.metrics.rows().iter().map(|(name, value)| json!({ "name": name, "value": value })).collect::<Vec<_>>(),
        "files": files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect::<Vec<_>>(),
    });
    let path = args.out_dir.join("report.json");
    let text = serde_json::to_string_pretty(&doc).expect("report serializes");
    write_file_atomic(&path, format!("{text}\n").as_bytes())?;

    for (name, value) in report.metrics.rows() {
        println!("{name:<46} {value:.5}");
    }
    Ok(())
}

pub fn import(args: ImportArgs) -> Outcome {
    let meta = Metadata { delta_m: args.delta_m, fs_hz: args.fs_hz, lambda_m: args.lambda_m };
    let series = match args.format {
        ImportFormat::Long => {
            let [input] = args.inputs.as_slice() else {
                return Err(Failure::Usage("long format takes exactly one input file".into()));
            };
            import_long_csv(input, meta)?
        }
        ImportFormat::Frames => import_frame_files(&args.inputs, meta)?,
    };
    write_stack(&series, &args.out, dtype(args.dtype))?;
    println!(
        "{}: {} frames of {}x{}",
        args.out.display(),
        series.nt(),
        series.ny(),
        series.nx()
    );
    Ok(())
}

pub fn export(args: ExportArgs) -> Outcome {
    let series = read_stack(&args.input)?;
    export_stack_csv(&series, &args.out)?;
    Ok(())
}
