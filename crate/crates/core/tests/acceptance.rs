//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use auddt_core::audio::{fit_duration, resample, AudioBuffer};
use auddt_core::metrics::{auc, confusion_at_threshold, eer, LabeledScores};
use auddt_core::orchestrator::regenerate_report;
use auddt_core::parse_config;
use auddt_core::registry::{select_group, Category, GenerativeMethod, Registry};
use auddt_core::report::{emit_latex, plot_rows, RUN_META_FILE};
use auddt_core::synthcorpus::{CorpusSpec, LabelFormat, Separability};
use common::*;
use rand::Rng;

type Outcome = Result<String, String>;

/// (id, category, [wild, perturbation], language, [accent, vocal, expressive, vocoder, codec], method)
type TableRow = (&'static str, Category, [u8; 2], &'static str, [u8; 5], GenerativeMethod);
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, started: Instant) -> Result<Duration, String> {
    let took = started.elapsed();
    ensure(took < limit, || format!("took {took:.1?}, limit {limit:?}"))?;
    Ok(took)
}

fn metrics_oracle() -> Outcome {
    let started = Instant::now();
    let mut r = rng(0x000a_0dd7);
    let mut worst = 0.0f64;
    let n_instances = 1000;
    for case in 0..n_instances {
        let (scores, labels) = random_instance(&mut r, 200);
        let data = LabeledScores::new(scores.clone(), labels.clone()).map_err(|e| e.to_string())?;
        let a = auc(&data).map_err(|e| e.to_string())?;
        let e = eer(&data).map_err(|e| e.to_string())?.eer;
        let da = (a - auc_oracle(&scores, &labels)).abs();
        let de = (e - eer_oracle(&scores, &labels).0).abs();
        worst = worst.max(da).max(de);
        ensure(da <= 1e-9 && de <= 1e-9, || {
            format!("case {case}: |dAUC|={da:e} |dEER|={de:e}")
        })?;
    }
    let took = within(Duration::from_secs(60), started)?;
    Ok(format!("{n_instances} instances, max deviation {worst:e}, {took:.1?}"))
}

fn hand_worked_case() -> Outcome {
    let d = LabeledScores::from_classes(&[0.9, 0.4], &[0.6, 0.1]).map_err(|e| e.to_string())?;
    let a = auc(&d).map_err(|e| e.to_string())?;
    let c = confusion_at_threshold(&d, 0.5).map_err(|e| e.to_string())?;
    ensure((a - 0.75).abs() < 1e-12, || format!("AUC {a}"))?;
    ensure(c.accuracy == 0.5 && c.tpr == Some(0.5) && c.tnr == Some(0.5), || {
        format!("{c:?}")
    })?;
    Ok(format!("AUC {a}, acc {} TPR {:?} TNR {:?}", c.accuracy, c.tpr, c.tnr))
}

fn one_class() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = tmp.path().join("data");
    let mut spec = CorpusSpec::new("bonafide_only", LabelFormat::ListingRealOnly);
    spec.n_spoof = 0;
    let reg = synth_workspace(&data, &[spec]);
    let out = run_config(
        &config_text(&data, &tmp.path().join("r"), "builtin:constant:0.3", ""),
        &reg,
        2,
    )
    .map_err(|e| e.to_string())?;
    let r = &out.result.reports["bonafide_only"];
    ensure(r.accuracy == Some(1.0) && r.tnr == Some(1.0), || {
        format!("acc {:?} tnr {:?}", r.accuracy, r.tnr)
    })?;
    ensure(r.eer.is_none() && r.auc.is_none() && r.tpr.is_none(), || {
        format!("{r:?}")
    })?;
    Ok(format!(
        "n={} acc {:?} TNR {:?}, EER/AUC absent",
        r.n_bonafide, r.accuracy, r.tnr
    ))
}

fn preprocessing() -> Outcome {
    let started = Instant::now();
    for n in [8000usize, 96000] {
        let x = AudioBuffer::new(vec![0.1; n], 16000);
        let y = fit_duration(&x, 64000).map_err(|e| e.to_string())?;
        ensure(y.len() == 64000, || format!("{n} samples -> {}", y.len()))?;
        let kept = n.min(64000);
        ensure(y.samples[..kept].iter().all(|&s| s == 0.1), || {
            format!("{n}: prefix altered")
        })?;
        ensure(y.samples[kept..].iter().all(|&s| s == 0.0), || {
            format!("{n}: padding not zero")
        })?;
    }

    let mut worst_bin = 0.0f64;
    let mut worst_db = 0.0f64;
    for source in [48000u32, 44100, 22050] {
        let x = AudioBuffer::new(sine(440.0, source, source as usize, 0.5), source);
        let y = resample(&x, 16000).map_err(|e| e.to_string())?;
        let window = &y.samples[4000..12000];
        let spec = hann_spectrum(window);
        let (bin, mag) = spec
            .iter()
            .enumerate()
            .skip(1)
            .fold((0, 0.0), |best, (i, &m)| if m > best.1 { (i, m) } else { best });
        let hz_per_bin = 16000.0 / window.len() as f64;
        let bin_err = (bin as f64 - 440.0 / hz_per_bin).abs();
        let level = 20.0 * (mag / (0.5 * window.len() as f64 / 4.0)).log10();
        worst_bin = worst_bin.max(bin_err);
        worst_db = worst_db.max(level.abs());
        ensure(bin_err <= 1.0, || format!("{source} Hz: peak {bin_err} bins off"))?;
        ensure(level.abs() <= 0.5, || format!("{source} Hz: level {level:.3} dB"))?;
    }

    let mut r = rng(48000);
    let noise: Vec<f32> = (0..48000).map(|_| r.gen_range(-0.5f32..0.5)).collect();
    let y = resample(&AudioBuffer::new(noise, 48000), 16000).map_err(|e| e.to_string())?;
    let spec = hann_spectrum(&y.samples);
    let hz = 16000.0 / y.len() as f64;
    let band = |lo: f64, hi: f64| -> f64 {
        spec.iter()
            .enumerate()
            .filter(|(i, _)| (lo..=hi).contains(&(*i as f64 * hz)))
            .map(|(_, m)| m * m)
            .sum()
    };
    let ratio = 10.0 * (band(0.0, 6000.0) / band(7600.0, 8000.0)).log10();
    ensure(ratio >= 60.0, || format!("anti-alias only {ratio:.1} dB"))?;
    let took = within(Duration::from_secs(30), started)?;
    Ok(format!(
        "fit 8000/96000 -> 64000; sine peak within {worst_bin} bins, {worst_db:.3} dB; anti-alias {ratio:.1} dB; {took:.1?}"
    ))
}

fn end_to_end() -> Outcome {
    let started = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = tmp.path().join("data");
    let mut sep = CorpusSpec::new("separable", LabelFormat::AsvspoofProtocol);
    sep.n_bonafide = 20;
    sep.n_spoof = 20;
    sep.sample_rate_hz = 44100;
    sep.duration_s = 1.0;
    let mut over = CorpusSpec::new("overlapping", LabelFormat::CsvLabeled);
    over.n_bonafide = 20;
    over.n_spoof = 20;
    over.separability = Separability::Overlapping;
    over.seed = 1;
    over.sample_rate_hz = 48000;
    let mut one = CorpusSpec::new("one_class", LabelFormat::ListingRealOnly);
    one.n_bonafide = 15;
    one.n_spoof = 0;
    one.seed = 2;
    let reg = synth_workspace(&data, &[sep, over, one]);

    let results = tmp.path().join("results");
    let mut files = Vec::new();
    let mut first = None;
    for workers in [1, 4] {
        let _ = std::fs::remove_dir_all(&results);
        let out = run_config(&config_text(&data, &results, "builtin:energy", ""), &reg, workers)
            .map_err(|e| e.to_string())?;
        let mut snap = snapshot(&results);
        snap.remove(RUN_META_FILE);
        files.push(snap);
        first.get_or_insert(out.result);
    }
    ensure(files[0] == files[1], || "outputs differ between 1 and 4 workers".into())?;
    let result = first.expect("ran");
    let s = &result.reports["separable"];
    ensure(s.eer == Some(0.0) && s.auc == Some(1.0), || {
        format!("separable EER {:?} AUC {:?}", s.eer, s.auc)
    })?;
    let took = within(Duration::from_secs(120), started)?;
    Ok(format!(
        "{} files byte-identical at 1 and 4 workers; separable EER {:?} AUC {:?}; {took:.1?}",
        files[0].len(),
        s.eer,
        s.auc
    ))
}

fn config_fidelity() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/example_config.yaml");
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let c = parse_config(&text).map_err(|e| e.to_string())?;
    ensure(c.data.target_sample_rate == 16000, || {
        format!("rate {}", c.data.target_sample_rate)
    })?;
    ensure(c.data.target_length == 64000, || {
        format!("length {}", c.data.target_length)
    })?;
    ensure(c.evaluation.batch_size == 256, || {
        format!("batch {}", c.evaluation.batch_size)
    })?;
    ensure(c.data.group_name == "all", || format!("group {}", c.data.group_name))?;
    ensure(c.evaluation.threshold == 0.5, || {
        format!("threshold {}", c.evaluation.threshold)
    })?;
    Ok("16000 Hz, 64000 samples, batch 256, group all, threshold 0.5".into())
}

fn registry_fidelity() -> Outcome {
    #[rustfmt::skip]
    let rows: [TableRow; 28] = {
        use Category::*;
        use GenerativeMethod::*;
        [
            ("asvspoof5", RealPlusFake, [0, 1], "EN", [0, 0, 0, 1, 0], TtsVc),
            ("asvspoof2019_la", RealPlusFake, [0, 0], "EN", [0, 0, 0, 1, 0], TtsVc),
            ("asvspoof2021_df", RealPlusFake, [0, 1], "EN", [0, 0, 0, 1, 0], TtsVc),
            ("asvspoof2021_la", RealPlusFake, [0, 1], "EN", [0, 0, 0, 1, 0], TtsVc),
            ("codecfake_en", RecodedRealPlusFake, [0, 0], "EN", [0, 0, 0, 0, 1], CodecLLM),
            ("codecfake_ch", RecodedRealPlusFake, [0, 0], "CH", [0, 0, 0, 0, 1], CodecLLM),
            ("ctrsvdd", FakeSingingVoice, [0, 0], "2", [0, 0, 1, 1, 0], SvsSvc),
            ("cvoicefake", VocodedReal, [0, 0], "5", [0, 0, 0, 1, 0], VocodersOnly),
            ("decro", RealPlusFake, [0, 0], "2", [0, 0, 0, 1, 0], TtsVc),
            ("dfadd", RealPlusFake, [0, 0], "EN", [0, 0, 0, 1, 0], DiffFlow),
            ("diffssd", RealPlusFake, [0, 0], "EN", [0, 0, 0, 1, 0], Diffusion),
            ("diffuse_or_confuse", RealPlusFake, [0, 0], "EN", [0, 0, 0, 1, 0], Diffusion),
            ("enhance_speech", EnhancedReal, [1, 0], ">=2", [1, 0, 1, 1, 1], Enhancement),
            ("for_original", RealPlusFake, [0, 0], "EN", [0, 0, 0, 1, 0], TtsVc),
            ("for_2seconds", RealPlusFake, [0, 0], "EN", [0, 0, 0, 1, 0], TtsVc),
            ("for_norm", RealPlusFake, [0, 0], "EN", [0, 0, 0, 1, 0], TtsVc),
            ("for_rerecorded", RealPlusFake, [0, 1], "EN", [0, 0, 0, 1, 0], TtsVc),
            ("habla", RealPlusFake, [0, 0], "EN", [1, 0, 0, 0, 0], TtsVc),
            ("itw", RealPlusFake, [1, 0], "EN", [0, 0, 0, 1, 0], TtsVc),
            ("mlaad_v5", RealPlusFake, [0, 0], "many", [1, 0, 0, 1, 0], TtsVc),
            ("mscenespeech", RealOnly, [0, 0], "2", [0, 0, 1, 0, 0], NotApplicable),
            ("odss", RealPlusFake, [0, 0], "6", [0, 0, 0, 1, 0], TtsVc),
            ("playback_attacks", ReplayedReal, [0, 1], "EN", [0, 0, 0, 0, 0], NotApplicable),
            ("spoofceleb", RealPlusFake, [1, 0], "EN", [0, 0, 0, 1, 0], TtsVc),
            ("jvnv", RealOnly, [0, 0], "JA", [0, 1, 1, 1, 0], NotApplicable),
            ("src4vc", RealPlusFake, [1, 0], "JA", [0, 0, 0, 1, 0], TtsVc),
            ("timit_tts", FakeOnly, [0, 0], "JA", [0, 0, 0, 1, 0], TtsVc),
            ("wavefake", VocodedReal, [0, 0], "EN", [0, 0, 0, 1, 0], VocodersOnly),
        ]
    };
    let reg = Registry::builtin();
    ensure(reg.len() == 28, || format!("{} datasets", reg.len()))?;
    for (id, cat, [wild, pert], lang, [acc, vocal, expr, voc, codec], method) in rows {
        let d = reg.get(id).ok_or_else(|| format!("missing {id}"))?;
        let got = (
            d.category,
            [d.in_the_wild, d.perturbation],
            d.languages.clone(),
            [
                d.accent,
                d.vocal_sounds,
                d.expressivity,
                d.uses_vocoder,
                d.uses_neural_codec,
            ],
            d.generative_method,
        );
        let want = (
            cat,
            [wild == 1, pert == 1],
            vec![lang.to_string()],
            [acc == 1, vocal == 1, expr == 1, voc == 1, codec == 1],
            method,
        );
        ensure(got == want, || format!("{id}: got {got:?}, want {want:?}"))?;
    }
    let mut pert: Vec<&str> = select_group("perturbation", &reg)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|d| d.id.as_str())
        .collect();
    pert.sort();
    let want = [
        "asvspoof2021_df",
        "asvspoof2021_la",
        "asvspoof5",
        "for_rerecorded",
        "playback_attacks",
    ];
    ensure(pert == want, || format!("perturbation group {pert:?}"))?;
    Ok("28 rows match; perturbation group matches".into())
}

fn report_fidelity() -> Outcome {
    let golden = std::fs::read_to_string(golden_path("table.tex")).map_err(|e| e.to_string())?;
    let fixture = fixture_run_result();
    let latex = emit_latex(&fixture);
    ensure(latex == golden, || "LaTeX differs from golden".into())?;
    validate_tabular(&latex)?;

    let accs: Vec<f64> = fixture.reports.values().filter_map(|r| r.accuracy).collect();
    let mut sorted = accs.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    for row in plot_rows(&fixture) {
        let want = row.accuracy.is_some_and(|a| a < median);
        ensure(row.below_median == want, || {
            format!("{}: flag {}", row.dataset_id, row.below_median)
        })?;
    }

    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = tmp.path().join("data");
    let mut a = CorpusSpec::new("a", LabelFormat::Dirtree);
    a.separability = Separability::Overlapping;
    let b = CorpusSpec::new("b", LabelFormat::CsvLabeled);
    let reg = synth_workspace(&data, &[a, b]);
    let results = tmp.path().join("r");
    let out = run_config(&config_text(&data, &results, "builtin:energy", ""), &reg, 2).map_err(|e| e.to_string())?;
    let before = std::fs::read(&out.latex_path).map_err(|e| e.to_string())?;
    let (again, _) = regenerate_report(&results, &reg).map_err(|e| e.to_string())?;
    ensure(emit_latex(&again).as_bytes() == before.as_slice(), || {
        "regenerated LaTeX differs".into()
    })?;
    Ok("golden LaTeX, grammar, below-median flags, regenerated table byte-identical".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("metrics oracle suite", metrics_oracle),
        ("hand-worked case", hand_worked_case),
        ("one-class behavior", one_class),
        ("preprocessing contract", preprocessing),
        ("end-to-end determinism", end_to_end),
        ("config fidelity", config_fidelity),
        ("registry fidelity", registry_fidelity),
        ("report fidelity", report_fidelity),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(msg)
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
