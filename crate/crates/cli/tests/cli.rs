use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_catvis");

fn catvis(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("CATVIS_R")
        .env_remove("CATVIS_ALPHA0")
        .env_remove("CATVIS_PHI")
        .output()
        .expect("binary runs")
}

fn stdout_ok(args: &[&str]) -> String {
    let out = catvis(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

struct Table {
    meta: Vec<(String, String)>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn parse(text: &str) -> Self {
        let meta = text
            .lines()
            .filter_map(|l| l.strip_prefix("# "))
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.to_owned(), v.to_owned()))
            .collect();
        let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let header = rd.headers().unwrap().iter().map(str::to_owned).collect();
        let rows = rd.records().map(|r| r.unwrap().iter().map(str::to_owned).collect()).collect();
        Self { meta, header, rows }
    }

    fn meta(&self, key: &str) -> f64 {
        self.meta.iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("no `{key}`")).1.parse().unwrap()
    }

    fn col(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column `{name}`"))
    }

    fn num(&self, row: usize, name: &str) -> f64 {
        self.rows[row][self.col(name)].parse().unwrap()
    }
}

#[test]
fn visibility_at_zero_reflectivity_is_one() {
    let t = Table::parse(&stdout_ok(&["visibility", "--R", "0", "--alpha0", "2", "--phi", "0.785"]));
    assert_eq!(t.rows.len(), 1);
    assert_eq!(t.num(0, "nu_analytic"), 1.0);
    assert_eq!(t.num(0, "nu_oracle"), 1.0);
}

#[test]
fn visibility_large_cat_contrast() {
    let t = Table::parse(&stdout_ok(&["visibility", "--R", "0.1", "--alpha0", "20", "--phi", "1.5708"]));
    assert!((t.num(0, "nu_analytic") - 3.35463e-4).abs() < 1e-9);
    assert!((t.num(0, "nu_oracle") - 3.35463e-4).abs() < 1e-9);
    assert!((t.num(0, "mean_ratio") - 0.994987).abs() < 1e-6);
}

#[test]
fn visibility_three_routes_agree() {
    let t = Table::parse(&stdout_ok(&[
        "visibility",
        "--R",
        "0.5",
        "--alpha0",
        "1",
        "--phi",
        "1.5708",
        "--brute-force",
        "--q-integral",
    ]));
    let nu = t.num(0, "nu_analytic");
    assert!((t.num(0, "nu_oracle") - nu).abs() <= 1e-6 * nu);
    assert!((t.num(0, "nu_brute") - nu).abs() <= 1e-6 * nu);
    assert!((t.num(0, "nu_integral") - nu).abs() <= 2e-4);
}

#[test]
fn degrees_flag_matches_radians() {
    let rad = stdout_ok(&["visibility", "--R", "0.3", "--phi", &FRAC_PI_4.to_string()]);
    let deg = stdout_ok(&["visibility", "--R", "0.3", "--phi", "45", "--degrees"]);
    let (a, b) = (Table::parse(&rad), Table::parse(&deg));
    assert!((a.num(0, "nu_analytic") - b.num(0, "nu_analytic")).abs() < 1e-11);
}

#[test]
fn vacuum_peak_at_origin() {
    let t = Table::parse(&stdout_ok(&[
        "qfunction",
        "--state",
        "vacuum",
        "--marginal",
        "none",
        "--half-width",
        "3.25",
        "--spacing",
        "0.5",
    ]));
    let q = t.col("q");
    let (best, peak) = t
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r[q].parse::<f64>().unwrap()))
        .fold((0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
    for c in ["re_alpha_p", "im_alpha_p", "re_beta_p", "im_beta_p"] {
        assert_eq!(t.num(best, c), 0.0);
    }
    assert!((peak - 1.0 / (PI * PI)).abs() < 1e-11);
    assert!((t.meta("normalization_integral") - 1.0).abs() < 1e-4);
    assert!(t.meta("min_q") >= -1e-12);
}

#[test]
fn normalization_header_for_each_stage() {
    for stage in ["input", "output", "post-selected"] {
        for marginal in ["a", "b"] {
            let t = Table::parse(&stdout_ok(&["qfunction", "--stage", stage, "--marginal", marginal, "--R", "0.3"]));
            let integral = t.meta("normalization_integral");
            assert!((integral - 1.0).abs() < 1e-4, "{stage}/{marginal}: {integral}");
            assert!(t.meta("min_q") >= -1e-12);
        }
    }
}

#[test]
fn cat_marginal_lobes_sit_at_transmitted_labels() {
    let (r, abs, phi) = (0.3f64, 2.0f64, FRAC_PI_4);
    let t =
        Table::parse(&stdout_ok(&["qfunction", "--stage", "output", "--marginal", "a", "--R", "0.3", "--alpha0", "2"]));
    let trans = (1.0 - r * r).sqrt();
    let alpha0_arg = FRAC_PI_2;
    let centers: Vec<(f64, f64)> = [phi, -phi]
        .iter()
        .map(|s| {
            let a = alpha0_arg + s;
            (trans * abs * a.cos(), trans * abs * a.sin())
        })
        .collect();
    let step = t.meta("spacing");
    for &(cx, cy) in &centers {
        // highest node among those closer to this lobe than to the other
        let mut best = (f64::MIN, 0.0, 0.0);
        for i in 0..t.rows.len() {
            let (x, y, q) = (t.num(i, "re_alpha_p"), t.num(i, "im_alpha_p"), t.num(i, "q"));
            let d = |c: &(f64, f64)| (x - c.0).hypot(y - c.1);
            let mine = d(&(cx, cy));
            if centers.iter().all(|c| mine <= d(c)) && q > best.0 {
                best = (q, x, y);
            }
        }
        assert!((best.1 - cx).abs() <= step && (best.2 - cy).abs() <= step, "peak {best:?} vs ({cx}, {cy})");
    }
}

#[test]
fn full_grid_size_is_capped() {
    let out = catvis(&["qfunction", "--marginal", "none", "--spacing", "0.05"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("limit"));
}

#[test]
fn fringe_footer_matches_closed_form() {
    let cases = [("0.2", "1.5", FRAC_PI_2, 0.835270211411272), ("0.3", "2.0", FRAC_PI_2, (-0.72f64).exp())];
    for (r, a, phi, want) in cases {
        let t = Table::parse(&stdout_ok(&["fringe", "--R", r, "--alpha0", a, "--phi", &phi.to_string()]));
        assert_eq!(t.rows.len(), 16);
        assert!((t.meta("nu") - want).abs() < 2e-4);
        assert!(t.meta("max_residual") < 1e-8 * t.meta("amplitude"));
        assert!((t.meta("period") - 2.0 * PI).abs() < 1e-9);
    }
}

#[test]
fn csv_round_trips_into_json_records() {
    let args = ["sweep", "--r-values", "0.1,0.2", "--alpha0-values", "1,2", "--phi-values", "0.5,1.0"];
    let csv_text = stdout_ok(&args);
    let mut json_args = args.to_vec();
    json_args.extend(["--format", "json"]);
    let json: serde_json::Value = serde_json::from_str(&stdout_ok(&json_args)).unwrap();
    let t = Table::parse(&csv_text);
    let rows = json["rows"].as_array().unwrap();
    assert_eq!(t.rows.len(), 8);
    assert_eq!(rows.len(), t.rows.len());
    for (i, row) in rows.iter().enumerate() {
        for (j, name) in t.header.iter().enumerate() {
            let cell = &t.rows[i][j];
            match &row[name] {
                serde_json::Value::Null => assert!(cell.is_empty()),
                v => assert_eq!(v.as_f64().unwrap(), cell.parse::<f64>().unwrap(), "{name}"),
            }
        }
    }
    // lexicographic over (R, |alpha0|, phi)
    let keys: Vec<(f64, f64, f64)> = (0..8).map(|i| (t.num(i, "R"), t.num(i, "abs_alpha0"), t.num(i, "phi"))).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(keys, sorted);
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.csv");
    let via_stdout = stdout_ok(&["visibility", "--R", "0.2"]);
    stdout_ok(&["visibility", "--R", "0.2", "--output", path.to_str().unwrap()]);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), via_stdout);
}

#[test]
fn environment_overrides_defaults() {
    let out =
        Command::new(BIN).args(["visibility"]).env("CATVIS_R", "0.25").env("CATVIS_ALPHA0", "3").output().unwrap();
    assert!(out.status.success());
    let t = Table::parse(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(t.num(0, "R"), 0.25);
    assert_eq!(t.num(0, "abs_alpha0"), 3.0);
}

#[test]
fn invalid_reflectivity_fails() {
    for r in ["1", "1.5", "-0.1", "nan"] {
        let out = catvis(&["visibility", "--R", r]);
        assert!(!out.status.success(), "R = {r} accepted");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn sweep_row_errors_set_exit_status() {
    let out = catvis(&["sweep", "--r-values", "0.1,1.2", "--alpha0-values", "1", "--phi-values", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let t = Table::parse(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(t.rows.len(), 2);
    assert!(t.rows[0][t.col("error")].is_empty());
    assert!(!t.rows[1][t.col("error")].is_empty());
}
