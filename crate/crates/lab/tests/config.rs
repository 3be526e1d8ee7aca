use meanfield_lab::config::*;
use proptest::prelude::*;

const GOLDEN: &str = include_str!("../../../configs/golden.toml");

/// Replaces `key = ...` inside the `occurrence`-th table headed `header`
/// (`""` for the top level), or inserts the line when the key is absent.
fn mutate(text: &str, header: &str, occurrence: usize, key: &str, value: &str) -> (String, usize, usize) {
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut start = 0;
    if !header.is_empty() {
        let mut seen = 0;
        start = lines
            .iter()
            .position(|l| {
                if l.trim() == header {
                    seen += 1;
                    seen > occurrence
                } else {
                    false
                }
            })
            .expect("header present")
            + 1;
    }
    let end = lines[start..]
        .iter()
        .position(|l| l.trim_start().starts_with('['))
        .map_or(lines.len(), |p| start + p);
    let new = format!("{key} = {value}");
    let mut at_end = end;
    let at = match lines[start..end].iter().position(|l| l.split('=').next().map(str::trim) == Some(key)) {
        Some(p) => {
            lines[start + p] = new;
            start + p
        }
        None => {
            lines.insert(end, new);
            at_end += 1;
            end
        }
    };
    let _ = at;
    // 1-based first and last line of the mutated table, header included
    (lines.join("\n") + "\n", start.max(1), at_end)
}

#[test]
fn golden_config_parses_and_round_trips() {
    let cfg = ExperimentConfig::from_toml(GOLDEN).unwrap();
    let text = cfg.to_toml();
    assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    for f in ["minimal.toml", "kuramoto.toml", "neurons.toml"] {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(f);
        let c = ExperimentConfig::from_path(&path).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c, "{f}");
    }
}

#[test]
fn mutation_corpus_is_rejected_with_field_and_line() {
    let cases: &[(&str, usize, &str, &str, &str)] = &[
        ("", 0, "seed", "-1", "seed"),
        ("", 0, "seed", "9.5", "seed"),
        ("", 0, "seed", "\"x\"", "seed"),
        ("", 0, "out", "\"\"", "out"),
        ("", 0, "nu", "-0.1", "nu"),
        ("", 0, "nu", "nan", "nu"),
        ("", 0, "nu", "inf", "nu"),
        ("", 0, "sigma", "-1.0", "sigma"),
        ("", 0, "colour", "1", ""),
        ("[graph]", 0, "generator", "\"ring\"", "graph"),
        ("[graph]", 0, "n_agents", "0", "graph.n_agents"),
        ("[graph]", 0, "n_agents", "-3", "graph"),
        ("[graph]", 0, "class_size", "3", "graph.class_size"),
        ("[graph]", 0, "class_size", "0", "graph.class_size"),
        ("[graph]", 0, "shift", "4", "graph.shift"),
        ("[graph]", 0, "colour", "1", "graph"),
        ("[kernel]", 0, "preset", "\"magnetic\"", "kernel"),
        ("[kernel]", 0, "strength", "nan", "kernel.strength"),
        ("[kernel]", 0, "strength", "\"strong\"", "kernel"),
        ("[kernel]", 0, "slope", "1.0", "kernel"),
        ("[initial]", 0, "spread", "inf", "initial.spread"),
        ("[[initial.fibers]]", 0, "means", "[]", "initial.fibers[0].means"),
        ("[[initial.fibers]]", 0, "stds", "[0.0]", "initial.fibers[0].stds"),
        ("[[initial.fibers]]", 0, "stds", "[-0.5]", "initial.fibers[0].stds"),
        ("[[initial.fibers]]", 0, "weights", "[-1.0]", "initial.fibers[0].weights"),
        ("[[initial.fibers]]", 0, "weights", "[0.0]", "initial.fibers[0].weights"),
        ("[[initial.fibers]]", 0, "means", "[nan]", "initial.fibers[0].means"),
        ("[[initial.fibers]]", 1, "stds", "[0.3]", "initial.fibers[1].stds"),
        ("[[initial.fibers]]", 1, "weights", "[1.0]", "initial.fibers[1].weights"),
        ("[[initial.fibers]]", 1, "sizes", "[1.0]", "initial.fibers"),
        ("[grid]", 0, "x_max", "-6.0", "grid.x_max"),
        ("[grid]", 0, "x_min", "5.0", "grid.x_max"),
        ("[grid]", 0, "x_min", "-inf", "grid.x_min"),
        ("[grid]", 0, "cells", "4", "grid.cells"),
        ("[grid]", 0, "cells", "-1", "grid.cells"),
        ("[grid]", 0, "topology", "\"sphere\"", "grid.topology"),
        ("[time]", 0, "t_end", "-1.0", "time.t_end"),
        ("[time]", 0, "dt", "0.0", "time.dt"),
        ("[time]", 0, "dt", "-0.01", "time.dt"),
        ("[time]", 0, "snapshots", "[0.0, 0.75]", "time.snapshots"),
        ("[time]", 0, "snapshots", "[0.25, 0.0]", "time.snapshots"),
        ("[time]", 0, "snapshots", "[]", "time.snapshots"),
        ("[time]", 0, "method", "\"rk45\"", "time.method"),
        ("[observe]", 0, "n_max", "0", "observe.n_max"),
        ("[observe]", 0, "n_max", "5", "observe.n_max"),
        ("[observe]", 0, "lambda", "0.0", "observe.lambda"),
        ("[observe]", 0, "lambda", "-1.0", "observe.lambda"),
        ("[rearrange]", 0, "funcs", "0", "rearrange.funcs"),
        ("[rearrange]", 0, "funcs", "7", "rearrange.funcs"),
        ("[rearrange]", 0, "cells", "100", "rearrange.cells"),
        ("[rearrange]", 0, "mode", "\"loose\"", "rearrange.mode"),
        ("[rearrange]", 0, "shifts", "[256]", "rearrange.shifts"),
        ("[convergence]", 0, "replicas", "50", "convergence.replicas"),
        ("[convergence]", 0, "bootstrap", "20000", "convergence.bootstrap"),
        ("[[convergence.runs]]", 0, "class_size", "3", "convergence.runs[0].class_size"),
        ("[[convergence.runs]]", 1, "n_agents", "0", "convergence.runs[1].n_agents"),
        ("[output]", 0, "binary_density", "\"yes\"", "output.binary_density"),
    ];
    assert!(cases.len() >= 50);
    for &(header, occ, key, value, field) in cases {
        let (text, first, last) = mutate(GOLDEN, header, occ, key, value);
        let err = ExperimentConfig::from_toml(&text).expect_err(&format!("{header} {key} = {value} accepted"));
        assert!(err.field.starts_with(field), "{key} = {value}: field `{}`, expected `{field}`", err.field);
        let l = err.line.unwrap_or_else(|| panic!("{key} = {value}: no line in {err}"));
        assert!((first..=last).contains(&l), "{key} = {value}: line {l}, table spans {first}..={last}");
        assert!(err.to_string().contains("line"), "{err}");
    }
}

#[test]
fn syntax_errors_carry_line_and_column() {
    let text = GOLDEN.replacen("cells = 32", "cells = = 32", 1);
    let err = ExperimentConfig::from_toml(&text).unwrap_err();
    let expected = text.lines().position(|l| l.contains("= = 32")).unwrap() + 1;
    assert_eq!(err.line, Some(expected));
    assert!(err.column.is_some());
}

#[test]
fn kuramoto_requires_a_circle_grid() {
    let text = GOLDEN.replacen("preset = \"linear_attraction\"\nstrength = 1.0", "preset = \"kuramoto\"\ncoupling = 1.0", 1);
    let err = ExperimentConfig::from_toml(&text).unwrap_err();
    assert_eq!(err.field, "grid.topology");
}

#[test]
fn rearrange_cells_error_suggests_a_count() {
    let (text, _, _) = mutate(GOLDEN, "[rearrange]", 0, "cells", "100");
    let err = ExperimentConfig::from_toml(&text).unwrap_err();
    assert!(err.message.contains("nearest admissible count is 104"), "{}", err.message);
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, Just(0.1), Just(1e-300)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_form_is_lossless(
        seed in 0..=MAX_CONFIG_SEED,
        nu in 0.0..10.0f64,
        means in prop::collection::vec(finite(), 1..4),
        spread in finite(),
        x_min in -100.0..0.0f64,
        width in 0.1..100.0f64,
        cells in 8usize..4096,
        t_end in 0.0..10.0f64,
        dt in 1e-6..1.0f64,
    ) {
        let mut cfg = ExperimentConfig::from_toml(GOLDEN).unwrap();
        cfg.seed = seed;
        cfg.nu = nu;
        cfg.initial.spread = spread;
        let k = means.len();
        cfg.initial.fibers[0] = MixtureSpec { means, stds: vec![0.5; k], weights: vec![1.0; k] };
        cfg.grid.x_min = x_min;
        cfg.grid.x_max = x_min + width;
        cfg.grid.cells = cells;
        cfg.time.t_end = t_end;
        cfg.time.dt = dt;
        cfg.time.snapshots = Some(vec![0.0, t_end / 2.0 + 1e-9].into_iter().filter(|&s| s <= t_end).collect());
        if cfg.time.snapshots.as_ref().unwrap().windows(2).any(|w| w[1] <= w[0]) {
            cfg.time.snapshots = Some(vec![0.0]);
        }
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
